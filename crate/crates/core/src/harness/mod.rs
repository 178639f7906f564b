//! Synthetic ground truth, the literal reference predictor and convergence
//! experiments.

mod convergence;
mod reference;
mod synthetic;

pub use convergence::{
    evaluate_accuracy, run_convergence, stream_id, summarize, summarize_by_m, write_report, Arm,
    ArmSummary, ConvergenceReportRow, REPORT_HEADER,
};
pub use reference::naive_reference_predict;
pub use synthetic::{
    bayes_optimal, expected_field, generate_synthetic, AttributeDistribution, BayesOracle,
    CompiledSpec, Conditional, SyntheticSpec, TupleMass, SYNTHETIC_SPEC_VERSION,
};
