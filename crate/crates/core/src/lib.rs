//! Deodata field predictors for tabular data.
//!
//! `delanga` predicts from the rows that best match the query, breaking ties
//! by falling back to the next-best matching level. `rasturnat` sums a kernel
//! of the matching distance per outcome; with a kernel whose lead is
//! certified (see [`kernels::certify_lead`]) a perfect match outweighs any
//! number of imperfect ones.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod predictors;
pub mod similarity;
pub mod sum;

pub use dataset::{load_table, validate_query, Query, Schema, TrainingTable};
pub use error::{Error, Result};
pub use kernels::{certify_lead, make_kernel, Kernel, KernelChoice, KernelKind};
pub use predictors::{fit, FitOptions, FittedModel, Prediction, PredictorKind};
