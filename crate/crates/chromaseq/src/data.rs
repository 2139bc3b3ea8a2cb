//! Color dataset handling: hex parsing, CSV ingestion, normalization, and
//! deterministic train/validation splitting.
//!
//! A dataset is an ordered list of `(name, rgb)` records with unique names.
//! Names are canonicalized to lowercase with surrounding whitespace removed;
//! uniqueness is over the canonical form. Record order is load order, which
//! makes dataset fingerprints reproducible.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One RGB color, each channel in 0..=255.
pub type Rgb = [u8; 3];

/// Where a record came from: the original seed CSV or the self-training loop.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Seed,
    Generated,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Seed => "seed",
            Origin::Generated => "generated",
        }
    }

    pub fn parse(s: &str) -> Option<Origin> {
        match s.trim().to_lowercase().as_str() {
            "seed" => Some(Origin::Seed),
            "generated" => Some(Origin::Generated),
            _ => None,
        }
    }
}

/// A named color with its provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorRecord {
    pub name: String,
    pub rgb: Rgb,
    pub origin: Origin,
}

impl ColorRecord {
    /// Canonicalizes the name (trim + lowercase). Empty names are rejected.
    pub fn new(name: &str, rgb: Rgb, origin: Origin) -> Result<ColorRecord> {
        let name = canonical_name(name);
        if name.is_empty() {
            return Err(Error::Data("color record has an empty name".into()));
        }
        Ok(ColorRecord { name, rgb, origin })
    }
}

pub fn canonical_name(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Parses "#RRGGBB" or "RRGGBB" (case-insensitive) into channel values.
pub fn parse_hex(input: &str) -> Result<Rgb> {
    let s = input.trim();
    let digits = s.strip_prefix('#').unwrap_or(s);
    if digits.len() != 6 {
        return Err(Error::HexParse {
            input: input.to_string(),
            reason: format!("expected 6 hex digits, got {}", digits.len()),
        });
    }
    let mut rgb = [0u8; 3];
    for (i, chunk) in [&digits[0..2], &digits[2..4], &digits[4..6]].iter().enumerate() {
        rgb[i] = u8::from_str_radix(chunk, 16).map_err(|_| Error::HexParse {
            input: input.to_string(),
            reason: format!("{:?} is not a hex byte", chunk),
        })?;
    }
    Ok(rgb)
}

/// Formats a color as "#RRGGBB" with uppercase digits.
pub fn format_hex(rgb: Rgb) -> String {
    format!("#{:02X}{:02X}{:02X}", rgb[0], rgb[1], rgb[2])
}

/// RGB scaled into the unit cube: each component is `channel / 255.0`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NormalizedTarget {
    pub rgb01: [f64; 3],
}

pub fn normalize(rgb: Rgb) -> NormalizedTarget {
    NormalizedTarget {
        rgb01: [
            rgb[0] as f64 / 255.0,
            rgb[1] as f64 / 255.0,
            rgb[2] as f64 / 255.0,
        ],
    }
}

/// Inverse of [`normalize`] for arbitrary unit-cube outputs: clamps to
/// [0, 1], scales by 255, rounds half-up.
pub fn denormalize(rgb01: [f64; 3]) -> Rgb {
    let mut rgb = [0u8; 3];
    for (i, &v) in rgb01.iter().enumerate() {
        let clamped = v.clamp(0.0, 1.0);
        // round() is half-away-from-zero; inputs are non-negative here, so
        // this is exactly round-half-up.
        rgb[i] = (clamped * 255.0).round() as u8;
    }
    rgb
}

/// Ordered collection of uniquely named color records.
#[derive(Clone, Debug)]
pub struct Dataset {
    records: Vec<ColorRecord>,
    names: HashSet<String>,
    split_seed: u64,
}

impl Dataset {
    /// Builds a dataset, dropping records whose canonical name repeats an
    /// earlier one (first occurrence wins; drops are logged).
    pub fn from_records(records: Vec<ColorRecord>) -> Dataset {
        let mut names = HashSet::with_capacity(records.len());
        let mut kept = Vec::with_capacity(records.len());
        for rec in records {
            if names.insert(rec.name.clone()) {
                kept.push(rec);
            } else {
                log::warn!("dropping duplicate color name {:?}", rec.name);
            }
        }
        Dataset {
            records: kept,
            names,
            split_seed: 0,
        }
    }

    pub fn records(&self) -> &[ColorRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, index: usize) -> &ColorRecord {
        &self.records[index]
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.names.contains(&canonical_name(name))
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed
    }

    pub fn with_split_seed(mut self, seed: u64) -> Dataset {
        self.split_seed = seed;
        self
    }

    /// New dataset with `new` records appended, skipping any whose name is
    /// already present (or repeats within `new`). Returns the appended count.
    pub fn append_records(&self, new: &[ColorRecord]) -> (Dataset, usize) {
        let mut out = self.clone();
        let mut appended = 0;
        for rec in new {
            if out.names.insert(rec.name.clone()) {
                out.records.push(rec.clone());
                appended += 1;
            }
        }
        (out, appended)
    }

    /// First `n` records in order; the whole dataset if `n >= len`.
    pub fn limited(&self, n: usize) -> Dataset {
        Dataset::from_records(self.records.iter().take(n).cloned().collect())
            .with_split_seed(self.split_seed)
    }

    /// Indices of records with the given origin.
    pub fn indices_with_origin(&self, origin: Origin) -> Vec<usize> {
        (0..self.records.len())
            .filter(|&i| self.records[i].origin == origin)
            .collect()
    }

    /// Row count plus a SHA-256 over the canonical CSV serialization.
    pub fn fingerprint(&self) -> DatasetFingerprint {
        let mut hasher = Sha256::new();
        for rec in &self.records {
            hasher.update(csv_line(rec).as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{:02x}", byte));
        }
        DatasetFingerprint {
            rows: self.records.len(),
            sha256: hex,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub sha256: String,
}

fn csv_line(rec: &ColorRecord) -> String {
    format!("{},{},{}", rec.name, format_hex(rec.rgb), rec.origin.as_str())
}

/// Loads a dataset from CSV with header `name,hex` and an optional third
/// `origin` column (absent or unrecognized values default to seed). Rows that
/// fail to parse are logged and skipped; duplicate names keep the first
/// occurrence. A file with zero valid rows is an error.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
    let header_ok = headers.len() >= 2
        && headers[0].trim().eq_ignore_ascii_case("name")
        && headers[1].trim().eq_ignore_ascii_case("hex");
    if !header_ok {
        return Err(Error::Data(format!(
            "{}: expected CSV header starting with name,hex",
            path.display()
        )));
    }

    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx + 2; // 1-based, after the header
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{}:{}: skipping unreadable row: {}", path.display(), line, e);
                continue;
            }
        };
        if row.len() < 2 {
            log::warn!("{}:{}: skipping row with fewer than 2 fields", path.display(), line);
            continue;
        }
        let rgb = match parse_hex(&row[1]) {
            Ok(rgb) => rgb,
            Err(e) => {
                log::warn!("{}:{}: skipping row: {}", path.display(), line, e);
                continue;
            }
        };
        let origin = row
            .get(2)
            .and_then(Origin::parse)
            .unwrap_or(Origin::Seed);
        match ColorRecord::new(&row[0], rgb, origin) {
            Ok(rec) => records.push(rec),
            Err(e) => log::warn!("{}:{}: skipping row: {}", path.display(), line, e),
        }
    }

    if records.is_empty() {
        return Err(Error::Data(format!(
            "{}: no valid color records",
            path.display()
        )));
    }
    Ok(Dataset::from_records(records))
}

/// Writes `name,hex,origin` CSV, hex uppercase with a leading '#'.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("name,hex,origin\n");
    for rec in dataset.records() {
        out.push_str(&csv_line(rec));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Deterministic index split: `floor(val_fraction * len)` validation indices
/// drawn by seeded shuffle, remainder training. Requires at least 2 records
/// and `val_fraction` in [0, 1).
pub fn split(dataset: &Dataset, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if dataset.len() < 2 {
        return Err(Error::Data(format!(
            "cannot split a dataset of {} record(s)",
            dataset.len()
        )));
    }
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Config(format!(
            "val_fraction must be in [0, 1), got {}",
            val_fraction
        )));
    }
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let val_count = (val_fraction * dataset.len() as f64).floor() as usize;
    let val = indices[..val_count].to_vec();
    let mut train = indices[val_count..].to_vec();
    train.sort_unstable();
    let mut val = val;
    val.sort_unstable();
    Ok((train, val))
}
