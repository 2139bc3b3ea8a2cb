//! Learn the mapping from color names to RGB values with a character-level
//! network built from scratch: embedding, 1-D convolution, bidirectional
//! LSTM, and a dense head, trained by hand-written backpropagation. A
//! self-training loop then grows the dataset with names the model labels
//! itself.
//!
//! Everything is deterministic for a fixed seed, and every gradient is
//! verifiable against finite differences.
//!
//! ## Examples
//!
//! Each capability has a runnable example; start with the data pipeline and
//! work down:
//!
//! - **`ingest_dataset`** - load and validate the bundled name/hex CSV
//! - **`encode_names`** - character vocabulary, padding, unknown symbols
//! - **`gradient_check`** - every layer against finite differences
//! - **`train_model`** - mini-batch Adam training with a loss curve
//! - **`predict_colors`** - memorize a toy set, then predict unseen names
//! - **`generate_names`** - adjective x base-color candidate generation
//! - **`active_learning`** - the full train, pseudo-label, retrain protocol
//! - **`checkpoint_roundtrip`** - binary save/load, bitwise identical
//! - **`swatch_page`** - render predictions as a static HTML table
//!
//! ```bash
//! cargo run -p chromaseq --example ingest_dataset
//! cargo run -p chromaseq --example encode_names
//! cargo run -p chromaseq --example gradient_check
//! cargo run -p chromaseq --example train_model
//! cargo run -p chromaseq --example predict_colors
//! cargo run -p chromaseq --example generate_names
//! cargo run -p chromaseq --example active_learning
//! cargo run -p chromaseq --example checkpoint_roundtrip
//! cargo run -p chromaseq --example swatch_page
//! ```
//!
//! ## Modules
//!
//! - [`data`]: color records, hex parsing, CSV I/O, dataset splits
//! - [`codec`]: character-level tokenization
//! - [`nn`]: the model, its layers, and their backward passes
//! - [`train`]: Adam, schedules, and the training loop
//! - [`gradcheck`]: finite-difference verification of every gradient
//! - [`namegen`]: adjective x color candidate names
//! - [`active`]: the self-training rounds and experiment protocol
//! - [`checkpoint`]: the binary model container
//! - [`swatch`]: HTML rendering of predictions

pub mod active;
pub mod checkpoint;
pub mod codec;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod namegen;
pub mod nn;
pub mod swatch;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
