//! Save a trained model to the binary checkpoint format, load it back, and
//! confirm the reload predicts bitwise-identically.
//!
//! ```bash
//! cargo run -p chromaseq --example checkpoint_roundtrip
//! ```

use chromaseq::checkpoint::{
    load, params_fingerprint, save, Checkpoint, CheckpointMetadata, ScheduleRecord,
};
use chromaseq::codec::{max_len_for, Vocabulary};
use chromaseq::data::load_csv;
use chromaseq::nn::{Model, ModelConfig};
use chromaseq::train::{train, TrainSchedule};

fn main() -> chromaseq::Result<()> {
    let dataset = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/colors.csv"))?
        .limited(48)
        .with_split_seed(21);
    let vocab = Vocabulary::build(&dataset)?;
    let config = ModelConfig {
        vocab_size: vocab.size(),
        max_len: max_len_for(&dataset),
        embed_dim: 8,
        conv_filters: 12,
        conv_kernel: 3,
        lstm_hidden: 12,
        dense_dims: vec![16],
        output_dim: 3,
        mean_pool: false,
    };
    let schedule = TrainSchedule {
        epochs: 20,
        batch_size: 16,
        val_fraction: 0.25,
        seed: 21,
        learning_rate: 2e-3,
    };

    let (params, report) = train::<f32>(&dataset, &vocab, &config, &schedule)?;
    let model = Model {
        config: config.clone(),
        vocab: vocab.clone(),
        params,
    };

    let metadata = CheckpointMetadata::for_run(
        &dataset.fingerprint(),
        vec![ScheduleRecord::new("stage1", &schedule)],
        schedule.seed,
        None,
    );
    let checkpoint = Checkpoint::new(&model, metadata);

    let dir = std::env::temp_dir().join("chromaseq_checkpoint_example");
    std::fs::create_dir_all(&dir).map_err(|e| chromaseq::Error::io(&dir, e))?;
    let path = dir.join("model.csq");
    save(&checkpoint, &path)?;
    let size = std::fs::metadata(&path).map_err(|e| chromaseq::Error::io(&path, e))?.len();
    println!("saved {} ({} bytes)", path.display(), size);

    let reloaded = load(&path)?.into_model();
    println!(
        "fingerprint before {}...",
        &report.params_fingerprint[..16]
    );
    println!(
        "fingerprint after  {}...",
        &params_fingerprint(&reloaded.params)[..16]
    );
    assert_eq!(
        report.params_fingerprint,
        params_fingerprint(&reloaded.params)
    );

    for name in ["red", "deep sky blue", "wheat"] {
        let a = model.predict01(name)?;
        let b = reloaded.predict01(name)?;
        assert_eq!(a, b, "prediction changed across the round trip");
        println!("{:<14} identical: ({:.4}, {:.4}, {:.4})", name, a[0], a[1], a[2]);
    }
    Ok(())
}
