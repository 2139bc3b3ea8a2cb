//! Cross adjectives with the base hues, then drop every candidate the
//! dataset already knows.
//!
//! ```bash
//! cargo run -p chromaseq --example generate_names
//! ```

use chromaseq::data::load_csv;
use chromaseq::namegen::{filter_fresh, generate_names, load_adjectives, BaseColors};

fn main() -> chromaseq::Result<()> {
    let dataset = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/colors.csv"))?;
    let adjectives = load_adjectives(concat!(env!("CARGO_MANIFEST_DIR"), "/data/adjectives.txt"))?;
    let colors = BaseColors::default();

    let names = generate_names(&adjectives, &colors);
    let fresh = filter_fresh(&names, &dataset);

    println!(
        "{} adjectives x {} base colors = {} candidates",
        adjectives.len(),
        colors.len(),
        names.len()
    );
    println!(
        "{} already in the dataset, {} fresh\n",
        names.len() - fresh.len(),
        fresh.len()
    );

    println!("dropped (already known):");
    for name in names.iter().filter(|n| !fresh.contains(n)).take(8) {
        println!("  {}", name);
    }
    println!("\nfirst fresh candidates:");
    for name in fresh.iter().take(8) {
        println!("  {}", name);
    }
    Ok(())
}
