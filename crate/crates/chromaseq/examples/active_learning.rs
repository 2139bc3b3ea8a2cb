//! A miniature run of the full self-training protocol: stage-1 training,
//! then one round of generate, pseudo-label, append, retrain.
//!
//! ```bash
//! cargo run -p chromaseq --example active_learning
//! ```

use chromaseq::active::{run_experiment, rounds_to_table};
use chromaseq::codec::{max_len_for, Vocabulary};
use chromaseq::data::{load_csv, Origin};
use chromaseq::namegen::{AdjectiveList, BaseColors};
use chromaseq::nn::ModelConfig;
use chromaseq::train::TrainSchedule;

fn main() -> chromaseq::Result<()> {
    let dataset = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/colors.csv"))?
        .limited(96)
        .with_split_seed(5);
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
    let stage1 = TrainSchedule {
        epochs: 50,
        batch_size: 16,
        val_fraction: 0.2,
        seed: 5,
        learning_rate: 2e-3,
    };
    let stage2 = TrainSchedule {
        epochs: 15,
        batch_size: 32,
        val_fraction: 0.2,
        seed: 6,
        learning_rate: 5e-4,
    };
    let adjectives = AdjectiveList::from_words(["dark", "light", "pale", "deep", "dusty"])?;
    let colors = BaseColors::default();

    let result = run_experiment::<f32>(
        &dataset, &config, &vocab, &stage1, &stage2, 1, &adjectives, &colors,
    )?;

    println!(
        "untrained train loss {:.4}, after stage 1 {:.4}",
        result.untrained_train_loss,
        result.stage1.final_metrics().train_loss
    );
    println!(
        "dataset grew {} -> {} records ({} pseudo-labeled)\n",
        dataset.len(),
        result.dataset.len(),
        result.dataset.indices_with_origin(Origin::Generated).len()
    );
    print!("{}", rounds_to_table(&result.rounds));
    Ok(())
}
