//! Build the character vocabulary from the bundled dataset and walk through
//! tokenization: padding, truncation, and unknown characters.
//!
//! ```bash
//! cargo run -p chromaseq --example encode_names
//! ```

use chromaseq::codec::{decode, encode, max_len_for, Vocabulary, PAD_ID, UNK_ID};
use chromaseq::data::load_csv;

fn main() -> chromaseq::Result<()> {
    let dataset = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/colors.csv"))?;
    let vocab = Vocabulary::build(&dataset)?;
    let max_len = max_len_for(&dataset);

    println!(
        "vocabulary: {} symbols ({} characters + PAD {} + UNK {})",
        vocab.size(),
        vocab.size() - 2,
        PAD_ID,
        UNK_ID
    );
    println!("sequence length: {}\n", max_len);

    for name in ["red", "deep sky blue", "Blue Violet", "café"] {
        let tokens = encode(name, &vocab, max_len)?;
        println!("{:?}", name);
        println!("  ids        {:?}", tokens.ids);
        println!("  true_length {}", tokens.true_length);
        println!("  decoded    {:?}", decode(&tokens, &vocab));
    }

    let truncated = encode("a name far longer than the model window allows here", &vocab, 10)?;
    println!("\ntruncated to 10: {:?}", decode(&truncated, &vocab));
    Ok(())
}
