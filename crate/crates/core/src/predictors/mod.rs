//! Fitted predictors: delanga (proximity with backtrack tie-breaking),
//! rasturnat (kernel field superposition), and the 1-nn baseline.

mod delanga;
mod density;
mod model_file;
mod nearest;
mod rasturnat;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Query, Schema, TrainingTable};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelChoice};
use crate::similarity::Scorer;

pub use delanga::{backtrack_tie_break, predict_delanga};
pub use density::{compute_density_model, DensityModel};
pub use model_file::MODEL_VERSION;
pub use nearest::predict_nearest;
pub use rasturnat::predict_rasturnat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Delanga,
    Rasturnat,
    Nearest,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Delanga => "delanga",
            PredictorKind::Rasturnat => "rasturnat",
            PredictorKind::Nearest => "nearest",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delanga" => Ok(PredictorKind::Delanga),
            "rasturnat" => Ok(PredictorKind::Rasturnat),
            "nearest" => Ok(PredictorKind::Nearest),
            _ => Err(Error::Contract(format!("unknown predictor `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub density: bool,
    /// Include the `i = j` term in each entry's train similarity score.
    pub density_self_term: bool,
    pub mld_override: Option<f64>,
    pub trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            density: false,
            density_self_term: true,
            mld_override: None,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    table: TrainingTable,
    predictor: PredictorKind,
    kernel: Option<Kernel>,
    density: Option<DensityModel>,
    trace: bool,
    scorer: Scorer,
}

/// Fits a lazy learner: stores the table and, for rasturnat, builds the
/// kernel for `M_TEN` rows and (optionally) the density model.
pub fn fit(
    table: TrainingTable,
    predictor: PredictorKind,
    kernel: Option<KernelChoice>,
    options: FitOptions,
) -> Result<FittedModel> {
    let kernel = match (predictor, kernel) {
        (PredictorKind::Rasturnat, Some(choice)) => Some(choice.build(
            table.n_rows(),
            table.schema().total_weight(),
            options.mld_override,
        )?),
        (PredictorKind::Rasturnat, None) => {
            return Err(Error::Contract("rasturnat needs a kernel".into()))
        }
        (_, Some(_)) => return Err(Error::Contract("kernel is a rasturnat parameter".into())),
        (_, None) => None,
    };
    if options.density && predictor != PredictorKind::Rasturnat {
        return Err(Error::Contract(
            "density compensation is a rasturnat option".into(),
        ));
    }
    if options.mld_override.is_some() && predictor != PredictorKind::Rasturnat {
        return Err(Error::Contract("mld is a rasturnat parameter".into()));
    }
    let density = match (&kernel, options.density) {
        (Some(k), true) => Some(compute_density_model(&table, k, options.density_self_term)?),
        _ => None,
    };
    FittedModel::from_parts(table, predictor, kernel, density, options.trace)
}

impl FittedModel {
    pub(crate) fn from_parts(
        table: TrainingTable,
        predictor: PredictorKind,
        kernel: Option<Kernel>,
        density: Option<DensityModel>,
        trace: bool,
    ) -> Result<Self> {
        match (&kernel, predictor) {
            (Some(k), PredictorKind::Rasturnat) if k.m_ten() != table.n_rows() => {
                return Err(Error::Invariant(format!(
                    "kernel built for {} rows but the table has {}",
                    k.m_ten(),
                    table.n_rows()
                )))
            }
            (None, PredictorKind::Rasturnat) => {
                return Err(Error::Contract("rasturnat needs a kernel".into()))
            }
            (Some(_), PredictorKind::Delanga | PredictorKind::Nearest) => {
                return Err(Error::Contract("kernel is a rasturnat parameter".into()))
            }
            _ => {}
        }
        if let Some(d) = &density {
            if predictor != PredictorKind::Rasturnat {
                return Err(Error::Contract(
                    "density compensation is a rasturnat option".into(),
                ));
            }
            if d.dcf.len() != table.n_rows() || d.tss.len() != table.n_rows() {
                return Err(Error::Invariant(
                    "density arrays do not match the table".into(),
                ));
            }
        }
        let scorer = Scorer::new(table.schema());
        Ok(Self {
            table,
            predictor,
            kernel,
            density,
            trace,
            scorer,
        })
    }

    pub fn table(&self) -> &TrainingTable {
        &self.table
    }

    pub fn schema(&self) -> &Schema {
        self.table.schema()
    }

    pub fn predictor(&self) -> PredictorKind {
        self.predictor
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    pub fn density(&self) -> Option<&DensityModel> {
        self.density.as_ref()
    }

    pub fn trace_enabled(&self) -> bool {
        self.trace
    }

    /// Copy of the model with its kernel replaced (same table and options).
    pub fn with_kernel(&self, kernel: Kernel) -> Result<FittedModel> {
        FittedModel::from_parts(
            self.table.clone(),
            self.predictor,
            Some(kernel),
            self.density.clone(),
            self.trace,
        )
    }

    /// Matching distances from the query to every training row.
    pub(crate) fn distances(&self, query: &Query) -> Result<Vec<f64>> {
        self.scorer.check_query(self.table.schema(), query)?;
        Ok(self.scorer.distances(query, &self.table))
    }

    pub fn predict(&self, query: &Query) -> Result<Prediction> {
        match self.predictor {
            PredictorKind::Delanga => predict_delanga(self, query),
            PredictorKind::Rasturnat => predict_rasturnat(self, query),
            PredictorKind::Nearest => predict_nearest(self, query),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionTrace {
    /// Smallest matching distance to the query.
    pub champion_distance: f64,
    /// Rows in the predictive (minimal-distance) set, for delanga and 1-nn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictive_set: Option<Vec<usize>>,
    /// Per-entry transform scores, for rasturnat.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ets: Option<Vec<f64>>,
}

/// Per-outcome scores and likelihoods, indexed in schema label order.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Target outcome scores (rasturnat) or predictive-set counts.
    pub scores: Vec<f64>,
    pub likelihoods: Vec<f64>,
    pub winner: usize,
    pub tie_depth: usize,
    pub trace: Option<PredictionTrace>,
}

impl Prediction {
    pub fn winner_label<'a>(&self, schema: &'a Schema) -> &'a str {
        &schema.outcome_labels[self.winner]
    }
}

/// Index of the maximum, earliest index on ties; also reports whether a tie
/// occurred at the maximum.
pub(crate) fn argmax_first(values: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    let tied = values
        .iter()
        .enumerate()
        .any(|(i, &v)| i != best && v == values[best]);
    (best, tied)
}

/// Relative frequencies of the outcomes among `rows`.
pub(crate) fn frequencies(table: &TrainingTable, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut counts = vec![0.0; table.schema().n_labels()];
    for &i in rows {
        counts[table.outcome(i)] += 1.0;
    }
    let n = rows.len() as f64;
    let likelihoods = counts.iter().map(|c| c / n).collect();
    (counts, likelihoods)
}
