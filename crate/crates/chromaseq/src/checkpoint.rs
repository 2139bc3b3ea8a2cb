//! Bit-exact model persistence: the CSQ1 container.
//!
//! File layout:
//!
//! ```text
//! bytes 0..4   magic "CSQ1" (format name + version digit)
//! bytes 4..8   manifest byte length, u32 little-endian
//! then         UTF-8 JSON manifest
//! then         raw tensor blobs, little-endian f32, in directory order
//! ```
//!
//! The manifest holds the model config, the vocabulary as an ordered
//! character string, a tensor directory (name, shape, byte offset into the
//! blob section, byte length), optional optimizer state bookkeeping, and run
//! metadata. Offsets are contiguous from 0 and must cover the blob section
//! exactly. Tensors are stored as f32 on disk regardless of the in-memory
//! element type.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::Vocabulary;
use crate::data::DatasetFingerprint;
use crate::error::{Error, Result};
use crate::nn::{Model, ModelConfig, ModelParams};
use crate::tensor::{Scalar, Tensor};
use crate::train::{OptimizerState, TrainSchedule};

pub const MAGIC: &[u8; 4] = b"CSQ1";

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
    length: u64,
}

/// One schedule that was run against the checkpointed model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub stage: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl ScheduleRecord {
    pub fn new(stage: &str, schedule: &TrainSchedule) -> ScheduleRecord {
        ScheduleRecord {
            stage: stage.to_string(),
            epochs: schedule.epochs,
            batch_size: schedule.batch_size,
            val_fraction: schedule.val_fraction,
            learning_rate: schedule.learning_rate,
            seed: schedule.seed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Everything about the run that is not a tensor. Deliberately contains no
/// wall-clock fields: two identical runs must write identical bytes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMetadata {
    pub dataset_rows: usize,
    pub dataset_sha256: String,
    pub schedules: Vec<ScheduleRecord>,
    pub seed: u64,
    #[serde(default)]
    pub metrics: Option<MetricsSnapshot>,
}

impl CheckpointMetadata {
    pub fn for_run(
        fingerprint: &DatasetFingerprint,
        schedules: Vec<ScheduleRecord>,
        seed: u64,
        metrics: Option<MetricsSnapshot>,
    ) -> CheckpointMetadata {
        CheckpointMetadata {
            dataset_rows: fingerprint.rows,
            dataset_sha256: fingerprint.sha256.clone(),
            schedules,
            seed,
            metrics,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    config: ModelConfig,
    vocab: String,
    tensors: Vec<TensorEntry>,
    optimizer_step: Option<u64>,
    metadata: CheckpointMetadata,
}

/// In-memory image of a CSQ1 file.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ModelParams<f32>,
    pub optimizer: Option<OptimizerState<f32>>,
    pub metadata: CheckpointMetadata,
}

impl Checkpoint {
    pub fn new(model: &Model<f32>, metadata: CheckpointMetadata) -> Checkpoint {
        Checkpoint {
            config: model.config.clone(),
            vocab: model.vocab.clone(),
            params: model.params.clone(),
            optimizer: None,
            metadata,
        }
    }

    pub fn into_model(self) -> Model<f32> {
        Model {
            config: self.config,
            vocab: self.vocab,
            params: self.params,
        }
    }
}

fn tensor_le_bytes<F: Scalar>(tensor: &Tensor<F>, out: &mut Vec<u8>) {
    for &v in tensor.data() {
        out.extend_from_slice(&v.as_f32().to_le_bytes());
    }
}

/// SHA-256 over the canonical on-disk encoding of the parameters (f32
/// little-endian, canonical tensor order).
pub fn params_fingerprint<F: Scalar>(params: &ModelParams<F>) -> String {
    let mut hasher = Sha256::new();
    for (name, tensor) in params.tensors() {
        hasher.update(name.as_bytes());
        let mut bytes = Vec::with_capacity(tensor.len() * 4);
        tensor_le_bytes(tensor, &mut bytes);
        hasher.update(&bytes);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Serializes a checkpoint to bytes. Refuses non-finite tensor values.
pub fn to_bytes(checkpoint: &Checkpoint) -> Result<Vec<u8>> {
    checkpoint.config.validate()?;
    checkpoint.params.ensure_finite("checkpoint")?;
    if checkpoint.config.vocab_size != checkpoint.vocab.size() {
        return Err(Error::Checkpoint(format!(
            "config vocab_size {} does not match vocabulary size {}",
            checkpoint.config.vocab_size,
            checkpoint.vocab.size()
        )));
    }

    let mut directory = Vec::new();
    let mut blobs = Vec::new();
    {
        let mut push = |name: String, tensor: &Tensor<f32>| {
            let offset = blobs.len() as u64;
            tensor_le_bytes(tensor, &mut blobs);
            directory.push(TensorEntry {
                name,
                shape: tensor.shape().to_vec(),
                offset,
                length: (tensor.len() * 4) as u64,
            });
        };
        for (name, tensor) in checkpoint.params.tensors() {
            push(name, tensor);
        }
        if let Some(opt) = &checkpoint.optimizer {
            for (name, tensor) in opt.m.tensors() {
                push(format!("opt.m.{}", name), tensor);
            }
            for (name, tensor) in opt.v.tensors() {
                push(format!("opt.v.{}", name), tensor);
            }
        }
    }

    let manifest = Manifest {
        format_version: 1,
        config: checkpoint.config.clone(),
        vocab: checkpoint.vocab.chars().iter().collect(),
        tensors: directory,
        optimizer_step: checkpoint.optimizer.as_ref().map(|o| o.step),
        metadata: checkpoint.metadata.clone(),
    };
    let manifest_json = serde_json::to_vec(&manifest)
        .map_err(|e| Error::Checkpoint(format!("manifest serialization: {}", e)))?;

    let mut out = Vec::with_capacity(8 + manifest_json.len() + blobs.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(manifest_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&manifest_json);
    out.extend_from_slice(&blobs);
    Ok(out)
}

pub fn save(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(checkpoint)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Expected tensor names and shapes for a config, in directory order.
fn expected_entries(config: &ModelConfig, with_optimizer: bool) -> Vec<(String, Vec<usize>)> {
    let zeros = ModelParams::<f32>::zeros(config);
    let mut expected: Vec<(String, Vec<usize>)> = zeros
        .tensors()
        .into_iter()
        .map(|(name, t)| (name, t.shape().to_vec()))
        .collect();
    if with_optimizer {
        let base = expected.clone();
        for prefix in ["opt.m", "opt.v"] {
            for (name, shape) in &base {
                expected.push((format!("{}.{}", prefix, name), shape.clone()));
            }
        }
    }
    expected
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 8 || &bytes[0..3] != b"CSQ" {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    if bytes[3] != MAGIC[3] {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {:?}",
            bytes[3] as char
        )));
    }
    let manifest_len = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    if bytes.len() < 8 + manifest_len {
        return Err(Error::Checkpoint("manifest truncated".into()));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[8..8 + manifest_len])
        .map_err(|e| Error::Checkpoint(format!("manifest parse: {}", e)))?;
    if manifest.format_version != 1 {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {}",
            manifest.format_version
        )));
    }
    manifest.config.validate()?;

    let vocab = Vocabulary::from_chars(manifest.vocab.chars());
    if vocab.size() != manifest.config.vocab_size {
        return Err(Error::Checkpoint(format!(
            "manifest vocabulary of size {} does not match config vocab_size {}",
            vocab.size(),
            manifest.config.vocab_size
        )));
    }

    // Validate the entire directory against the config before reading any
    // tensor data.
    let with_optimizer = manifest.optimizer_step.is_some();
    let expected = expected_entries(&manifest.config, with_optimizer);
    if manifest.tensors.len() != expected.len() {
        return Err(Error::Checkpoint(format!(
            "tensor directory has {} entries, config requires {}",
            manifest.tensors.len(),
            expected.len()
        )));
    }
    let mut cursor = 0u64;
    for (entry, (name, shape)) in manifest.tensors.iter().zip(&expected) {
        if &entry.name != name || &entry.shape != shape {
            return Err(Error::Checkpoint(format!(
                "tensor {} has shape {:?}, config requires {} with shape {:?}",
                entry.name, entry.shape, name, shape
            )));
        }
        let elements: usize = shape.iter().product();
        if entry.offset != cursor || entry.length != (elements * 4) as u64 {
            return Err(Error::Checkpoint(format!(
                "tensor {} directory entry is not contiguous",
                entry.name
            )));
        }
        cursor += entry.length;
    }
    let blob = &bytes[8 + manifest_len..];
    if (blob.len() as u64) != cursor {
        return Err(Error::Checkpoint(format!(
            "tensor directory overrun: directory needs {} blob bytes, file has {}",
            cursor,
            blob.len()
        )));
    }

    let read_tensor = |entry: &TensorEntry| -> Result<Tensor<f32>> {
        let start = entry.offset as usize;
        let end = start + entry.length as usize;
        let mut data = Vec::with_capacity(entry.length as usize / 4);
        for chunk in blob[start..end].chunks_exact(4) {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if v.is_nan() {
                return Err(Error::Checkpoint(format!("NaN in tensor {}", entry.name)));
            }
            data.push(v);
        }
        Tensor::from_vec(&entry.shape, data)
    };

    let mut params = ModelParams::<f32>::zeros(&manifest.config);
    let param_count = params.tensors().len();
    for ((_, dst), entry) in params
        .tensors_mut()
        .into_iter()
        .zip(manifest.tensors.iter().take(param_count))
    {
        *dst = read_tensor(entry)?;
    }

    let optimizer = match manifest.optimizer_step {
        None => None,
        Some(step) => {
            let mut state = OptimizerState::<f32>::zeros(&manifest.config);
            state.step = step;
            let mut it = manifest.tensors.iter().skip(param_count);
            for (_, dst) in state.m.tensors_mut() {
                *dst = read_tensor(it.next().expect("directory length validated"))?;
            }
            for (_, dst) in state.v.tensors_mut() {
                *dst = read_tensor(it.next().expect("directory length validated"))?;
            }
            Some(state)
        }
    };

    Ok(Checkpoint {
        config: manifest.config,
        vocab,
        params,
        optimizer,
        metadata: manifest.metadata,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColorRecord, Dataset, Origin};
    use crate::nn::init::init_params;

    fn sample_checkpoint() -> Checkpoint {
        let ds = Dataset::from_records(vec![
            ColorRecord::new("red", [255, 0, 0], Origin::Seed).unwrap(),
            ColorRecord::new("blue", [0, 0, 255], Origin::Seed).unwrap(),
        ]);
        let vocab = Vocabulary::build(&ds).unwrap();
        let config = ModelConfig {
            vocab_size: vocab.size(),
            max_len: 6,
            embed_dim: 4,
            conv_filters: 5,
            conv_kernel: 3,
            lstm_hidden: 4,
            dense_dims: vec![6],
            output_dim: 3,
            mean_pool: false,
        };
        let params = init_params::<f32>(&config, 21).unwrap();
        let metadata = CheckpointMetadata::for_run(
            &ds.fingerprint(),
            vec![ScheduleRecord::new("stage1", &TrainSchedule::stage1(21))],
            21,
            Some(MetricsSnapshot {
                train_loss: 0.01,
                train_acc: 0.9,
                val_loss: 0.02,
                val_acc: 0.8,
            }),
        );
        Checkpoint {
            config,
            vocab,
            params,
            optimizer: None,
            metadata,
        }
    }

    #[test]
    fn round_trip_preserves_everything() {
        let ckpt = sample_checkpoint();
        let bytes = to_bytes(&ckpt).unwrap();
        let loaded = from_bytes(&bytes).unwrap();
        assert_eq!(loaded.config, ckpt.config);
        assert_eq!(loaded.vocab, ckpt.vocab);
        assert_eq!(loaded.params, ckpt.params);
        assert_eq!(loaded.metadata, ckpt.metadata);
        assert!(loaded.optimizer.is_none());
    }

    #[test]
    fn round_trip_keeps_optimizer_state() {
        let mut ckpt = sample_checkpoint();
        let mut state = OptimizerState::<f32>::zeros(&ckpt.config);
        state.step = 17;
        state.m.embedding.data_mut()[3] = 0.25;
        state.v.conv_bias.data_mut()[0] = 0.5;
        ckpt.optimizer = Some(state);

        let loaded = from_bytes(&to_bytes(&ckpt).unwrap()).unwrap();
        let opt = loaded.optimizer.expect("optimizer round-trips");
        assert_eq!(opt.step, 17);
        assert_eq!(opt.m.embedding.data()[3], 0.25);
        assert_eq!(opt.v.conv_bias.data()[0], 0.5);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.csq");
        let ckpt = sample_checkpoint();
        save(&ckpt, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.params, ckpt.params);
    }

    #[test]
    fn wrong_magic_is_not_a_checkpoint() {
        let mut bytes = to_bytes(&sample_checkpoint()).unwrap();
        bytes[0..4].copy_from_slice(b"XXXX");
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("not a checkpoint file"));
    }

    #[test]
    fn future_version_is_rejected_before_tensors() {
        let mut bytes = to_bytes(&sample_checkpoint()).unwrap();
        bytes[3] = b'2';
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("unsupported checkpoint version"));
    }

    #[test]
    fn truncated_blob_reports_directory_overrun() {
        let bytes = to_bytes(&sample_checkpoint()).unwrap();
        let err = from_bytes(&bytes[..bytes.len() - 10]).unwrap_err();
        assert!(
            err.to_string().contains("tensor directory overrun"),
            "got: {}",
            err
        );
    }

    #[test]
    fn shape_inconsistent_with_config_fails_before_tensor_reads() {
        let ckpt = sample_checkpoint();
        let bytes = to_bytes(&ckpt).unwrap();
        // Rewrite the manifest with a tampered embedding shape but leave the
        // blob section alone.
        let manifest_len =
            u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
        let manifest_text = std::str::from_utf8(&bytes[8..8 + manifest_len]).unwrap();
        let tampered_manifest = manifest_text.replacen(
            &format!("[{},{}]", ckpt.config.vocab_size, ckpt.config.embed_dim),
            &format!("[{},{}]", ckpt.config.vocab_size + 1, ckpt.config.embed_dim),
            1,
        );
        assert_ne!(manifest_text, tampered_manifest);
        let mut tampered = Vec::new();
        tampered.extend_from_slice(MAGIC);
        tampered.extend_from_slice(&(tampered_manifest.len() as u32).to_le_bytes());
        tampered.extend_from_slice(tampered_manifest.as_bytes());
        tampered.extend_from_slice(&bytes[8 + manifest_len..]);

        let err = from_bytes(&tampered).unwrap_err();
        assert!(err.to_string().contains("shape"), "got: {}", err);
    }

    #[test]
    fn nan_tensor_refused_on_save_and_detected_on_load() {
        let mut ckpt = sample_checkpoint();
        ckpt.params.conv_bias.data_mut()[1] = f32::NAN;
        assert!(to_bytes(&ckpt).is_err());

        let clean = sample_checkpoint();
        let mut bytes = to_bytes(&clean).unwrap();
        // Overwrite the first blob f32 with NaN.
        let manifest_len =
            u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
        let blob_start = 8 + manifest_len;
        bytes[blob_start..blob_start + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("NaN"), "got: {}", err);
    }

    #[test]
    fn directory_sizes_sum_to_parameter_count() {
        use crate::nn::parameter_count;
        let ckpt = sample_checkpoint();
        let bytes = to_bytes(&ckpt).unwrap();
        let manifest_len =
            u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
        let manifest: Manifest = serde_json::from_slice(&bytes[8..8 + manifest_len]).unwrap();
        let total_elements: u64 = manifest
            .tensors
            .iter()
            .map(|t| t.shape.iter().product::<usize>() as u64)
            .sum();
        assert_eq!(total_elements, parameter_count(&ckpt.config));
    }

    #[test]
    fn manifest_is_readable_json_after_the_header() {
        let bytes = to_bytes(&sample_checkpoint()).unwrap();
        assert_eq!(&bytes[0..4], MAGIC);
        let manifest_len =
            u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
        let text = std::str::from_utf8(&bytes[8..8 + manifest_len]).unwrap();
        assert!(text.contains("\"format_version\":1"));
        assert!(text.contains("\"embedding\""));
    }

    #[test]
    fn fingerprint_is_stable_across_precisions_and_orders() {
        let ckpt = sample_checkpoint();
        let as_f64 = ckpt.params.convert::<f64>();
        assert_eq!(params_fingerprint(&ckpt.params), params_fingerprint(&as_f64));
        let mut other = ckpt.params.clone();
        other.conv_bias.data_mut()[0] += 1.0;
        assert_ne!(params_fingerprint(&ckpt.params), params_fingerprint(&other));
    }
}
