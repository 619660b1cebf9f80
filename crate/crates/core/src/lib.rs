//! Forearm EMG emotion classification.
//!
//! The pipeline turns raw sensor recordings (integer ADC counts in `0..=999`)
//! into a binary Relaxed / Angry decision:
//!
//! ```text
//! SampleSeries
//!   -> trim_rest_windows (drop the idle head and tail)
//!   -> partition_slots   (10 contiguous time slots)
//!   -> extract_row       (8 time-domain features per slot, slot-major)
//!   -> select_features   (wrapper search for the best k features)
//!   -> train / predict   (RBF-kernel SVM solved with SMO)
//!   -> run_eval          (leave-one-user-out or 80-20 iterations)
//! ```
//!
//! Every randomized step takes an explicit seed, so runs are reproducible.
//! See the crate's `examples/` directory for one runnable program per stage.

pub mod corpus;
pub mod dataio;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod selection;
pub mod signal;
pub mod svm;

mod label;

pub use label::{Condition, Label, ParseLabelError};
