//! Train a reduced-width model on a slice of the bundled dataset and print
//! the loss curve. Finishes in a few seconds.
//!
//! ```bash
//! cargo run -p chromaseq --example train_model
//! ```

use chromaseq::codec::{max_len_for, Vocabulary};
use chromaseq::data::load_csv;
use chromaseq::nn::ModelConfig;
use chromaseq::train::{train, TrainSchedule};

fn main() -> chromaseq::Result<()> {
    let dataset = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/colors.csv"))?
        .limited(96)
        .with_split_seed(11);
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
        epochs: 80,
        batch_size: 16,
        val_fraction: 0.2,
        seed: 11,
        learning_rate: 2e-3,
    };

    println!(
        "training on {} records, {} parameters\n",
        dataset.len(),
        chromaseq::nn::parameter_count(&config)
    );

    let (_, report) = train::<f32>(&dataset, &vocab, &config, &schedule)?;
    println!("epoch  train_loss  train_acc  val_loss  val_acc");
    for m in report.epochs.iter().step_by(10).chain([report.final_metrics()]) {
        println!(
            "{:>5}  {:>10.6}  {:>9.3}  {:>8.6}  {:>7.3}",
            m.epoch, m.train_loss, m.train_acc, m.val_loss, m.val_acc
        );
    }
    println!(
        "\nfinished in {:.1}s, params fingerprint {}",
        report.wall_time_secs,
        &report.params_fingerprint[..16]
    );
    Ok(())
}
