//! Verify every analytic gradient against central finite differences, layer
//! by layer and through the composed model.
//!
//! ```bash
//! cargo run -p chromaseq --example gradient_check [seed]
//! ```

use chromaseq::gradcheck::{run_gradcheck, GRADCHECK_TOLERANCE};

fn main() -> chromaseq::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);

    println!("finite-difference gradient check, seed {}\n", seed);
    let report = run_gradcheck(seed)?;
    print!("{}", report.to_table());

    assert!(
        report.passed(),
        "a gradient disagreed with its finite-difference estimate beyond {}",
        GRADCHECK_TOLERANCE
    );
    Ok(())
}
