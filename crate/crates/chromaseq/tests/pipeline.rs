//! Cross-module flow: CSV on disk through training, checkpointing, and
//! prediction, checking the invariants that only hold across module
//! boundaries (origin round-trips, split stability, warm-start continuity).

use tempfile::TempDir;

use chromaseq::active::{predict_color, run_round};
use chromaseq::checkpoint::{load, params_fingerprint, save, Checkpoint, CheckpointMetadata};
use chromaseq::codec::{max_len_for, Vocabulary};
use chromaseq::data::{load_csv, parse_hex, save_csv, ColorRecord, Dataset, Origin};
use chromaseq::namegen::{AdjectiveList, BaseColors};
use chromaseq::nn::{Model, ModelConfig};
use chromaseq::train::{train, TrainSchedule};

fn seed_records() -> Vec<ColorRecord> {
    [
        ("red", "#FF0000"),
        ("green", "#008000"),
        ("blue", "#0000FF"),
        ("yellow", "#FFFF00"),
        ("orange", "#FFA500"),
        ("purple", "#800080"),
        ("pink", "#FFC0CB"),
        ("brown", "#A52A2A"),
        ("cyan", "#00FFFF"),
        ("magenta", "#FF00FF"),
        ("teal", "#008080"),
        ("maroon", "#800000"),
        ("olive", "#808000"),
        ("navy", "#000080"),
        ("gold", "#FFD700"),
        ("coral", "#FF7F50"),
    ]
    .iter()
    .map(|(n, h)| ColorRecord::new(n, parse_hex(h).unwrap(), Origin::Seed).unwrap())
    .collect()
}

fn tiny_config(vocab: &Vocabulary, max_len: usize) -> ModelConfig {
    let mut config = ModelConfig::reference(vocab.size(), max_len);
    config.embed_dim = 6;
    config.conv_filters = 8;
    config.conv_kernel = 3;
    config.lstm_hidden = 8;
    config.dense_dims = vec![12];
    config
}

fn schedule(epochs: usize, seed: u64) -> TrainSchedule {
    TrainSchedule {
        epochs,
        batch_size: 8,
        val_fraction: 0.25,
        seed,
        learning_rate: 2e-3,
    }
}

#[test]
fn csv_to_prediction_flow() {
    let dir = TempDir::new().unwrap();

    // Write, reload, and canonicalize the seed corpus.
    let raw = dir.path().join("raw.csv");
    let mut csv = String::from("name,hex\n");
    for r in seed_records() {
        csv.push_str(&format!("{},{}\n", r.name.to_uppercase(), chromaseq::data::format_hex(r.rgb)));
    }
    std::fs::write(&raw, csv).unwrap();
    let dataset = load_csv(&raw).unwrap().with_split_seed(11);
    assert_eq!(dataset.len(), 16);
    assert!(dataset.contains_name("RED"), "lookup canonicalizes case");

    let vocab = Vocabulary::build(&dataset).unwrap();
    let config = tiny_config(&vocab, max_len_for(&dataset));
    let (params, report) = train::<f32>(&dataset, &vocab, &config, &schedule(40, 11)).unwrap();
    assert_eq!(report.epochs.len(), 40);
    let final_loss = report.final_metrics().train_loss;
    assert!(
        final_loss < report.epochs[0].train_loss,
        "training must reduce the train loss ({final_loss} vs {})",
        report.epochs[0].train_loss
    );

    // Checkpoint, restore, and predict through the restored model.
    let path = dir.path().join("model.csq");
    let metadata = CheckpointMetadata::for_run(&dataset.fingerprint(), Vec::new(), 11, None);
    let fingerprint = params_fingerprint(&params);
    let model = Model { config, vocab, params };
    save(&Checkpoint::new(&model, metadata), &path).unwrap();

    let restored = load(&path).unwrap();
    assert_eq!(restored.metadata.dataset_rows, 16);
    assert_eq!(restored.metadata.seed, 11);
    let restored = restored.into_model();
    assert_eq!(params_fingerprint(&restored.params), fingerprint);

    let (rgb, rgb01) =
        predict_color(&restored.params, &restored.config, &restored.vocab, "red").unwrap();
    for (byte, unit) in rgb.iter().zip(rgb01) {
        assert!((0.0..=1.0).contains(&unit));
        assert_eq!(*byte, (unit * 255.0).round() as u8);
    }
}

#[test]
fn origin_survives_augmentation_and_disk_round_trip() {
    let dir = TempDir::new().unwrap();
    let dataset = Dataset::from_records(seed_records()).with_split_seed(3);
    let vocab = Vocabulary::build(&dataset).unwrap();
    let config = tiny_config(&vocab, max_len_for(&dataset));
    let (params, _) = train::<f32>(&dataset, &vocab, &config, &schedule(10, 3)).unwrap();

    let adjectives = AdjectiveList::from_words(["dusty", "vivid"]).unwrap();
    let (augmented, _, round) = run_round(
        &dataset,
        params,
        &config,
        &vocab,
        &schedule(5, 3),
        &adjectives,
        &BaseColors::default(),
        1,
    )
    .unwrap();
    assert_eq!(round.names_appended, 12, "2 adjectives x 6 base colors, all fresh");
    assert_eq!(augmented.len(), 28);

    // Write out, read back: per-record origins must match exactly.
    let path = dir.path().join("augmented.csv");
    save_csv(&augmented, &path).unwrap();
    let reloaded = load_csv(&path).unwrap();
    assert_eq!(reloaded.len(), augmented.len());
    for (a, b) in augmented.records().iter().zip(reloaded.records()) {
        assert_eq!(a, b, "record changed across the disk round trip");
    }
    assert_eq!(reloaded.indices_with_origin(Origin::Generated).len(), 12);
    assert_eq!(reloaded.indices_with_origin(Origin::Seed).len(), 16);
}

#[test]
fn warm_start_round_preserves_pre_metrics() {
    let dataset = Dataset::from_records(seed_records()).with_split_seed(5);
    let vocab = Vocabulary::build(&dataset).unwrap();
    let config = tiny_config(&vocab, max_len_for(&dataset));
    let stage1 = schedule(25, 5);
    let (params, report) = train::<f32>(&dataset, &vocab, &config, &stage1).unwrap();

    // The round's pre-phase must observe exactly the trained model: same
    // split seed, same val fraction, same parameters, so bitwise-equal
    // metrics.
    let last = report.final_metrics();
    let adjectives = AdjectiveList::from_words(["shining"]).unwrap();
    let (_, _, round) = run_round(
        &dataset,
        params,
        &config,
        &vocab,
        &schedule(5, 5),
        &adjectives,
        &BaseColors::default(),
        1,
    )
    .unwrap();
    assert_eq!(round.pre.train_loss, last.train_loss);
    assert_eq!(round.pre.train_acc, last.train_acc);
    assert_eq!(round.pre.val_loss, last.val_loss);
    assert_eq!(round.pre.val_acc, last.val_acc);
    assert!(round.stage2.is_some(), "fresh names mean a retrain happened");
}
