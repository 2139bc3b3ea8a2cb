//! Self-training loop: the model labels generated names it has never seen,
//! the pseudo-labeled records join the dataset, and training continues from
//! the current weights under the shorter stage-2 schedule.
//!
//! No selection or confidence filtering happens; every fresh generated name
//! is appended with the model's own prediction as its target.

use crate::codec::{encode, Vocabulary};
use crate::data::{denormalize, split, ColorRecord, Dataset, Origin, Rgb};
use crate::error::{Error, Result};
use crate::namegen::{filter_fresh, generate_names, AdjectiveList, BaseColors};
use crate::nn::{init::init_params, model_forward, ModelConfig, ModelParams};
use crate::tensor::Scalar;
use crate::train::{evaluate, train_from, TrainReport, TrainSchedule};

/// Loss and dominant-channel accuracy over both splits of one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseMetrics {
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Loss and accuracy over one index subset, ignoring the split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsetMetrics {
    pub loss: f64,
    pub acc: f64,
}

/// What one augment-retrain round did. `stage2` is `None` when no fresh
/// names existed and no retraining happened.
///
/// Post-round validation records include pseudo-labeled rows, so the
/// `post_seed_only` / `post_all_records` pair separates accuracy against
/// original labels from accuracy that partly measures self-consistency.
#[derive(Clone, Debug)]
pub struct RoundReport {
    pub round: usize,
    pub names_generated: usize,
    pub names_appended: usize,
    pub pre: PhaseMetrics,
    pub post: PhaseMetrics,
    pub post_seed_only: SubsetMetrics,
    pub post_all_records: SubsetMetrics,
    pub stage2: Option<TrainReport>,
}

/// Prediction for one name: denormalized integer channels plus the clamped
/// normalized output they came from.
pub fn predict_color<F: Scalar>(
    params: &ModelParams<F>,
    config: &ModelConfig,
    vocab: &Vocabulary,
    name: &str,
) -> Result<(Rgb, [f64; 3])> {
    let tokens = encode(name, vocab, config.max_len)?;
    let out = model_forward(&tokens, params, config)?;
    let rgb01 = [
        out[0].as_f64().clamp(0.0, 1.0),
        out[1].as_f64().clamp(0.0, 1.0),
        out[2].as_f64().clamp(0.0, 1.0),
    ];
    Ok((denormalize(rgb01), rgb01))
}

fn phase_metrics<F: Scalar>(
    params: &ModelParams<F>,
    config: &ModelConfig,
    vocab: &Vocabulary,
    dataset: &Dataset,
    val_fraction: f64,
) -> Result<PhaseMetrics> {
    let (train_idx, val_idx) = split(dataset, val_fraction, dataset.split_seed())?;
    if val_idx.is_empty() {
        return Err(Error::Data(format!(
            "validation split is empty ({} records at fraction {})",
            dataset.len(),
            val_fraction
        )));
    }
    let (train_loss, train_acc) = evaluate(params, config, vocab, dataset, &train_idx)?;
    let (val_loss, val_acc) = evaluate(params, config, vocab, dataset, &val_idx)?;
    Ok(PhaseMetrics {
        train_loss,
        train_acc,
        val_loss,
        val_acc,
    })
}

fn origin_breakdown<F: Scalar>(
    params: &ModelParams<F>,
    config: &ModelConfig,
    vocab: &Vocabulary,
    dataset: &Dataset,
) -> Result<(SubsetMetrics, SubsetMetrics)> {
    let seed_idx = dataset.indices_with_origin(Origin::Seed);
    if seed_idx.is_empty() {
        return Err(Error::Data("dataset has no seed records".into()));
    }
    let all_idx: Vec<usize> = (0..dataset.len()).collect();
    let (seed_loss, seed_acc) = evaluate(params, config, vocab, dataset, &seed_idx)?;
    let (all_loss, all_acc) = evaluate(params, config, vocab, dataset, &all_idx)?;
    Ok((
        SubsetMetrics {
            loss: seed_loss,
            acc: seed_acc,
        },
        SubsetMetrics {
            loss: all_loss,
            acc: all_acc,
        },
    ))
}

/// One round: generate names, keep the fresh ones, predict their colors,
/// append them as pseudo-labeled records, and retrain from the current
/// parameters under `stage2` with a fresh optimizer.
///
/// Zero fresh names is not an error: the round completes with
/// `names_appended == 0`, no retraining, and `post` equal to `pre`.
#[allow(clippy::too_many_arguments)]
pub fn run_round<F: Scalar>(
    dataset: &Dataset,
    params: ModelParams<F>,
    config: &ModelConfig,
    vocab: &Vocabulary,
    stage2: &TrainSchedule,
    adjectives: &AdjectiveList,
    colors: &BaseColors,
    round: usize,
) -> Result<(Dataset, ModelParams<F>, RoundReport)> {
    config.validate()?;
    stage2.validate()?;
    if config.vocab_size != vocab.size() {
        return Err(Error::Config(format!(
            "config vocab_size {} does not match vocabulary size {}",
            config.vocab_size,
            vocab.size()
        )));
    }

    let pre = phase_metrics(&params, config, vocab, dataset, stage2.val_fraction)?;

    let generated = generate_names(adjectives, colors);
    let fresh = filter_fresh(&generated, dataset);
    let names_generated = generated.len();

    if fresh.is_empty() {
        let (post_seed_only, post_all_records) = origin_breakdown(&params, config, vocab, dataset)?;
        let report = RoundReport {
            round,
            names_generated,
            names_appended: 0,
            pre,
            post: pre,
            post_seed_only,
            post_all_records,
            stage2: None,
        };
        return Ok((dataset.clone(), params, report));
    }

    let mut pseudo = Vec::with_capacity(fresh.len());
    for name in &fresh {
        let (rgb, _) = predict_color(&params, config, vocab, name)?;
        pseudo.push(ColorRecord::new(name, rgb, Origin::Generated)?);
    }
    let (augmented, names_appended) = dataset.append_records(&pseudo);

    let (params, train_report) = train_from(params, &augmented, vocab, config, stage2)?;

    // The final epoch of training already evaluated both splits of the
    // augmented dataset with the final parameters.
    let last = train_report.final_metrics();
    let post = PhaseMetrics {
        train_loss: last.train_loss,
        train_acc: last.train_acc,
        val_loss: last.val_loss,
        val_acc: last.val_acc,
    };
    let (post_seed_only, post_all_records) = origin_breakdown(&params, config, vocab, &augmented)?;

    let report = RoundReport {
        round,
        names_generated,
        names_appended,
        pre,
        post,
        post_seed_only,
        post_all_records,
        stage2: Some(train_report),
    };
    Ok((augmented, params, report))
}

/// Stage-1 training plus `rounds` sequential augment-retrain rounds, with
/// the artifacts needed to continue or inspect the run.
#[derive(Clone, Debug)]
pub struct ExperimentResult<F> {
    pub untrained_train_loss: f64,
    pub stage1: TrainReport,
    pub rounds: Vec<RoundReport>,
    pub dataset: Dataset,
    pub params: ModelParams<F>,
}

/// Full protocol: train from scratch under `stage1`, then run `rounds`
/// augment-retrain rounds under `stage2`, each warm-starting from the
/// previous parameters.
#[allow(clippy::too_many_arguments)]
pub fn run_experiment<F: Scalar>(
    dataset: &Dataset,
    config: &ModelConfig,
    vocab: &Vocabulary,
    stage1: &TrainSchedule,
    stage2: &TrainSchedule,
    rounds: usize,
    adjectives: &AdjectiveList,
    colors: &BaseColors,
) -> Result<ExperimentResult<F>> {
    if rounds == 0 {
        return Err(Error::Config("rounds must be >= 1".into()));
    }
    stage1.validate()?;

    let params: ModelParams<F> = init_params(config, stage1.seed)?;
    let (train_idx, _) = split(dataset, stage1.val_fraction, dataset.split_seed())?;
    let (untrained_train_loss, _) = evaluate(&params, config, vocab, dataset, &train_idx)?;

    let (mut params, stage1_report) = train_from(params, dataset, vocab, config, stage1)?;
    let mut dataset = dataset.clone();
    let mut reports = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let (next_dataset, next_params, report) = run_round(
            &dataset, params, config, vocab, stage2, adjectives, colors, round,
        )?;
        dataset = next_dataset;
        params = next_params;
        reports.push(report);
    }

    Ok(ExperimentResult {
        untrained_train_loss,
        stage1: stage1_report,
        rounds: reports,
        dataset,
        params,
    })
}

/// One CSV row per round covering counts, pre/post split metrics, and the
/// post-round origin breakdown.
pub fn rounds_to_csv(reports: &[RoundReport]) -> String {
    let mut out = String::from(
        "round,names_generated,names_appended,\
         pre_train_loss,pre_train_acc,pre_val_loss,pre_val_acc,\
         post_train_loss,post_train_acc,post_val_loss,post_val_acc,\
         post_seed_loss,post_seed_acc,post_all_loss,post_all_acc\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.round,
            r.names_generated,
            r.names_appended,
            r.pre.train_loss,
            r.pre.train_acc,
            r.pre.val_loss,
            r.pre.val_acc,
            r.post.train_loss,
            r.post.train_acc,
            r.post.val_loss,
            r.post.val_acc,
            r.post_seed_only.loss,
            r.post_seed_only.acc,
            r.post_all_records.loss,
            r.post_all_records.acc,
        ));
    }
    out
}

/// Fixed-width text table: one pre row and one post row per round, then the
/// post-round metrics split into seed-only and all-records subsets.
pub fn rounds_to_table(reports: &[RoundReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>5}  {:>9}  {:>8}  {:<5}  {:>10}  {:>9}  {:>10}  {:>9}\n",
        "round", "generated", "appended", "phase", "train_loss", "train_acc", "val_loss", "val_acc"
    ));
    for r in reports {
        for (phase, m) in [("pre", &r.pre), ("post", &r.post)] {
            out.push_str(&format!(
                "{:>5}  {:>9}  {:>8}  {:<5}  {:>10.6}  {:>9.4}  {:>10.6}  {:>9.4}\n",
                r.round,
                r.names_generated,
                r.names_appended,
                phase,
                m.train_loss,
                m.train_acc,
                m.val_loss,
                m.val_acc,
            ));
        }
    }
    out.push('\n');
    out.push_str("post-round metrics by record origin:\n");
    out.push_str(&format!(
        "{:>5}  {:>14}  {:>13}  {:>10}  {:>9}\n",
        "round", "seed_only_loss", "seed_only_acc", "all_loss", "all_acc"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:>5}  {:>14.6}  {:>13.4}  {:>10.6}  {:>9.4}\n",
            r.round,
            r.post_seed_only.loss,
            r.post_seed_only.acc,
            r.post_all_records.loss,
            r.post_all_records.acc,
        ));
    }
    out
}
