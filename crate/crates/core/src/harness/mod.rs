//! Desk-scale simulation of few-shot transfer: a softmax classifier trained
//! on a pivot domain, target pools with a planted transfer gap, and the
//! evaluation statistics used to compare strategies.

pub mod fewshot;
pub mod softmax;
pub mod synthetic;

pub use crate::stats::{paired_ttest, TTest};
pub use fewshot::{aggregate_deltas, run_fewshot, run_units, DeltaReport, FewshotOptions, Unit};
pub use softmax::{model_outputs, train_softmax, Hyper, LabeledSet, ToyModel};
pub use synthetic::{gen_synthetic, SyntheticTask, TaskConfig};
