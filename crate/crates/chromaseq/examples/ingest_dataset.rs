//! Load the bundled color CSV, report what survived validation, and show
//! the hex round-trip on a few records.
//!
//! ```bash
//! cargo run -p chromaseq --example ingest_dataset
//! ```

use chromaseq::data::{format_hex, load_csv, parse_hex, Origin};

fn main() -> chromaseq::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/colors.csv");
    let dataset = load_csv(path)?;
    let fp = dataset.fingerprint();

    println!("loaded {} records from {}", dataset.len(), path);
    println!("fingerprint: {} rows, sha256 {}", fp.rows, fp.sha256);
    println!(
        "seed records: {}, generated records: {}",
        dataset.indices_with_origin(Origin::Seed).len(),
        dataset.indices_with_origin(Origin::Generated).len()
    );

    println!("\nfirst records:");
    for rec in dataset.records().iter().take(5) {
        let hex = format_hex(rec.rgb);
        assert_eq!(parse_hex(&hex)?, rec.rgb);
        println!("  {:<20} {}  {:?}", rec.name, hex, rec.rgb);
    }

    let longest = dataset
        .records()
        .iter()
        .max_by_key(|r| r.name.chars().count())
        .unwrap();
    println!(
        "\nlongest name: {:?} ({} chars)",
        longest.name,
        longest.name.chars().count()
    );
    Ok(())
}
