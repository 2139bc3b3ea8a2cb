//! Overfit a tiny model on a handful of strongly hued records, then compare
//! its predictions against the true colors and probe some unseen names.
//!
//! ```bash
//! cargo run -p chromaseq --example predict_colors
//! ```

use chromaseq::active::predict_color;
use chromaseq::codec::{max_len_for, Vocabulary};
use chromaseq::data::{format_hex, ColorRecord, Dataset, Origin};
use chromaseq::nn::ModelConfig;
use chromaseq::train::{train, TrainSchedule};

fn main() -> chromaseq::Result<()> {
    let rows = [
        ("red", "#FF0000"),
        ("crimson", "#DC143C"),
        ("tomato", "#FF6347"),
        ("orange", "#FFA500"),
        ("gold", "#FFD700"),
        ("green", "#008000"),
        ("lime", "#00FF00"),
        ("emerald", "#50C878"),
        ("forest green", "#228B22"),
        ("blue", "#0000FF"),
        ("navy", "#000080"),
        ("royal blue", "#4169E1"),
        ("sky blue", "#87CEEB"),
        ("indigo", "#4B0082"),
        ("violet", "#EE82EE"),
        ("chocolate", "#D2691E"),
    ];
    let dataset = Dataset::from_records(
        rows.iter()
            .map(|(n, h)| {
                let rgb = chromaseq::data::parse_hex(h)?;
                ColorRecord::new(n, rgb, Origin::Seed)
            })
            .collect::<chromaseq::Result<Vec<_>>>()?,
    )
    .with_split_seed(3);

    let vocab = Vocabulary::build(&dataset)?;
    let config = ModelConfig {
        vocab_size: vocab.size(),
        max_len: max_len_for(&dataset),
        embed_dim: 8,
        conv_filters: 12,
        conv_kernel: 3,
        lstm_hidden: 12,
        dense_dims: vec![24],
        output_dim: 3,
        mean_pool: false,
    };
    let schedule = TrainSchedule {
        epochs: 500,
        batch_size: 16,
        val_fraction: 0.2,
        seed: 3,
        learning_rate: 5e-3,
    };

    println!("memorizing {} records...", dataset.len());
    let (params, report) = train::<f32>(&dataset, &vocab, &config, &schedule)?;
    let last = report.final_metrics();
    println!(
        "final train loss {:.6}, train accuracy {:.2}\n",
        last.train_loss, last.train_acc
    );

    let (_, val_idx) = chromaseq::data::split(&dataset, schedule.val_fraction, dataset.split_seed())?;
    println!("{:<14} {:<9} {:<9}", "name", "target", "predicted");
    for (i, (name, hex)) in rows.iter().enumerate().take(10) {
        let (rgb, _) = predict_color(&params, &config, &vocab, name)?;
        let note = if val_idx.contains(&i) { "  (held out)" } else { "" };
        println!("{:<14} {:<9} {:<9}{}", name, hex, format_hex(rgb), note);
    }

    println!("\nunseen names:");
    for name in ["dark red", "pale blue", "deep green", "zzz"] {
        let (rgb, rgb01) = predict_color(&params, &config, &vocab, name)?;
        println!(
            "  {:<12} {}  ({:.2}, {:.2}, {:.2})",
            name,
            format_hex(rgb),
            rgb01[0],
            rgb01[1],
            rgb01[2]
        );
    }
    Ok(())
}
