//! Render model predictions as a self-contained HTML swatch table.
//!
//! ```bash
//! cargo run -p chromaseq --example swatch_page
//! ```

use chromaseq::active::predict_color;
use chromaseq::codec::{max_len_for, Vocabulary};
use chromaseq::data::load_csv;
use chromaseq::nn::ModelConfig;
use chromaseq::swatch::render_swatch_html;
use chromaseq::train::{train, TrainSchedule};

fn main() -> chromaseq::Result<()> {
    let dataset = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/colors.csv"))?
        .limited(96)
        .with_split_seed(13);
    let vocab = Vocabulary::build(&dataset)?;
    let config = ModelConfig {
        vocab_size: vocab.size(),
        max_len: max_len_for(&dataset),
        embed_dim: 8,
        conv_filters: 16,
        conv_kernel: 3,
        lstm_hidden: 16,
        dense_dims: vec![32],
        output_dim: 3,
        mean_pool: false,
    };
    let schedule = TrainSchedule {
        epochs: 60,
        batch_size: 16,
        val_fraction: 0.2,
        seed: 13,
        learning_rate: 2e-3,
    };

    println!("training a small model for the swatch...");
    let (params, _) = train::<f32>(&dataset, &vocab, &config, &schedule)?;

    let words = [
        "red", "crimson", "gold", "forest green", "sky blue", "navy", "plum",
        "dark red", "pale blue", "dusty orange", "deep purple",
    ];
    let mut entries = Vec::new();
    for word in words {
        let (rgb, _) = predict_color(&params, &config, &vocab, word)?;
        entries.push((word.to_string(), rgb));
    }

    let html = render_swatch_html(&entries);
    let path = std::env::temp_dir().join("chromaseq_swatches.html");
    std::fs::write(&path, &html).map_err(|e| chromaseq::Error::io(&path, e))?;
    println!("wrote {} rows to {}", entries.len(), path.display());
    Ok(())
}
