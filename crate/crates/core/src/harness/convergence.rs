//! Empirical convergence experiments on synthetic data.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::{AttributeKind, Query, TrainingTable, Value, UNSEEN_CATEGORY};
use crate::error::{Error, Result};
use crate::kernels::KernelChoice;
use crate::predictors::{fit, FitOptions, FittedModel, PredictorKind};

use super::synthetic::{bayes_from_compiled, SyntheticSpec};

pub const REPORT_HEADER: &str = "m,predictor,kernel,trial,accuracy,bayes_accuracy,regret";

/// One experiment arm: a predictor, its kernel (rasturnat only) and whether
/// density compensation is on.
///
/// Text form: `delanga`, `nearest`, `rasturnat:bridge`,
/// `rasturnat:spliced:pow_e`, `rasturnat:newton+density`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub predictor: PredictorKind,
    pub kernel: Option<KernelChoice>,
    pub density: bool,
}

impl Arm {
    pub fn new(predictor: PredictorKind, kernel: Option<KernelChoice>) -> Self {
        Self {
            predictor,
            kernel,
            density: false,
        }
    }

    pub fn rasturnat(kernel: impl Into<KernelChoice>) -> Self {
        Self::new(PredictorKind::Rasturnat, Some(kernel.into()))
    }

    fn validate(&self) -> Result<()> {
        match (self.predictor, &self.kernel) {
            (PredictorKind::Rasturnat, None) => {
                Err(Error::Contract("arm `rasturnat` needs a kernel".into()))
            }
            (PredictorKind::Rasturnat, Some(_)) => Ok(()),
            (p, Some(k)) => Err(Error::Contract(format!(
                "arm `{p}:{k}`: kernel is a rasturnat parameter"
            ))),
            (p, None) if self.density => Err(Error::Contract(format!(
                "arm `{p}+density`: density compensation is a rasturnat option"
            ))),
            _ => Ok(()),
        }
    }

    /// The report's kernel column.
    pub fn kernel_label(&self) -> String {
        match &self.kernel {
            None => "none".to_string(),
            Some(k) if self.density => format!("{k}+density"),
            Some(k) => k.to_string(),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kernel {
            None => write!(f, "{}", self.predictor),
            Some(_) => write!(f, "{}:{}", self.predictor, self.kernel_label()),
        }
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (body, density) = match s.strip_suffix("+density") {
            Some(body) => (body, true),
            None => (s, false),
        };
        let (predictor, kernel) = match body.split_once(':') {
            Some((p, k)) => (p.parse()?, Some(k.parse()?)),
            None => (body.parse()?, None),
        };
        let arm = Arm {
            predictor,
            kernel,
            density,
        };
        arm.validate()?;
        Ok(arm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReportRow {
    pub m: usize,
    pub predictor: String,
    pub kernel: String,
    pub trial: usize,
    pub accuracy: f64,
    pub bayes_accuracy: f64,
    pub regret: f64,
}

impl fmt::Display for ConvergenceReportRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            self.m,
            self.predictor,
            self.kernel,
            self.trial,
            self.accuracy,
            self.bayes_accuracy,
            self.regret
        )
    }
}

pub fn write_report<W: Write>(rows: &[ConvergenceReportRow], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Mean and standard deviation of regret at one training size for one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub predictor: String,
    pub kernel: String,
    pub m: usize,
    pub trials: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
}

impl fmt::Display for ArmSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} m={} trials={} mean_regret={:.6} std_regret={:.6}",
            self.predictor, self.kernel, self.m, self.trials, self.mean_regret, self.std_regret
        )
    }
}

/// Regret statistics per (arm, m), in report order.
pub fn summarize_by_m(rows: &[ConvergenceReportRow]) -> Vec<ArmSummary> {
    let mut out: Vec<(ArmSummary, Vec<f64>)> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some((s, regrets))
                if s.predictor == row.predictor && s.kernel == row.kernel && s.m == row.m =>
            {
                regrets.push(row.regret)
            }
            _ => out.push((
                ArmSummary {
                    predictor: row.predictor.clone(),
                    kernel: row.kernel.clone(),
                    m: row.m,
                    trials: 0,
                    mean_regret: 0.0,
                    std_regret: 0.0,
                },
                vec![row.regret],
            )),
        }
    }
    out.into_iter()
        .map(|(mut s, regrets)| {
            let n = regrets.len() as f64;
            let mean = crate::sum::exact_sum(regrets.iter().copied()) / n;
            let var = if regrets.len() > 1 {
                crate::sum::exact_sum(regrets.iter().map(|r| (r - mean) * (r - mean))) / (n - 1.0)
            } else {
                0.0
            };
            s.trials = regrets.len();
            s.mean_regret = mean;
            s.std_regret = var.sqrt();
            s
        })
        .collect()
}

/// Regret statistics at the largest training size, one entry per arm.
pub fn summarize(rows: &[ConvergenceReportRow]) -> Vec<ArmSummary> {
    let Some(final_m) = rows.iter().map(|r| r.m).max() else {
        return Vec::new();
    };
    summarize_by_m(rows)
        .into_iter()
        .filter(|s| s.m == final_m)
        .collect()
}

/// Fraction of test rows whose predicted winner equals the recorded outcome.
/// Categorical test values are matched to the model's categories by name;
/// outcome labels likewise.
pub fn evaluate_accuracy(model: &FittedModel, test_rows: &TrainingTable) -> Result<f64> {
    if test_rows.n_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    let schema = model.schema();
    let test_schema = test_rows.schema();
    if !schema.attributes_compatible(test_schema) {
        return Err(Error::SchemaMismatch(
            "test columns differ from the model's in name, order or kind".into(),
        ));
    }
    let label_map = test_schema
        .outcome_labels
        .iter()
        .map(|l| {
            schema.label_index(l).ok_or_else(|| {
                Error::SchemaMismatch(format!("test label `{l}` is unknown to the model"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let category_maps: Vec<Option<Vec<u32>>> = schema
        .attributes
        .iter()
        .zip(&test_schema.attributes)
        .map(|(model_attr, test_attr)| match model_attr.kind {
            AttributeKind::Continuous => None,
            AttributeKind::Categorical => {
                let model_cats = model_attr.categories.as_deref().unwrap_or(&[]);
                let test_cats = test_attr.categories.as_deref().unwrap_or(&[]);
                Some(
                    test_cats
                        .iter()
                        .map(|c| {
                            model_cats
                                .iter()
                                .position(|x| x == c)
                                .map_or(UNSEEN_CATEGORY, |i| i as u32)
                        })
                        .collect(),
                )
            }
        })
        .collect();

    let correct = (0..test_rows.n_rows())
        .into_par_iter()
        .map(|i| {
            let values = test_rows
                .row(i)
                .iter()
                .zip(&category_maps)
                .map(|(&v, map)| match (v, map) {
                    (Value::Category(c), Some(map)) => {
                        Value::Category(map.get(c as usize).copied().unwrap_or(UNSEEN_CATEGORY))
                    }
                    (v, _) => v,
                })
                .collect();
            let p = model.predict(&Query { values })?;
            Ok(usize::from(p.winner == label_map[test_rows.outcome(i)]))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / test_rows.n_rows() as f64)
}

const M_BITS: u32 = 38;
const TRIAL_BITS: u32 = 24;

/// Generator stream for one (m, trial, role) triple; role 0 trains, 1 tests.
pub fn stream_id(m: usize, trial: usize, role: u64) -> u64 {
    ((m as u64) << (TRIAL_BITS + 1)) | ((trial as u64) << 1) | role
}

/// Runs every arm at every training size for `trials` independent draws.
/// For a given (m, trial) all arms see the same training and test tables.
/// Rows come out ordered by (arm, m, trial).
pub fn run_convergence(
    spec: &SyntheticSpec,
    arms: &[Arm],
    schedule: &[usize],
    trials: usize,
    test_size: usize,
) -> Result<Vec<ConvergenceReportRow>> {
    if arms.is_empty() {
        return Err(Error::Contract("no arms".into()));
    }
    for arm in arms {
        arm.validate()?;
    }
    if schedule.is_empty() || schedule[0] == 0 {
        return Err(Error::Contract(
            "schedule must be nonempty with positive sizes".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract(
            "schedule must be strictly increasing".into(),
        ));
    }
    if trials == 0 || test_size == 0 {
        return Err(Error::Contract(
            "trials and test size must be positive".into(),
        ));
    }
    if schedule.iter().any(|&m| m as u64 >= 1 << M_BITS) || trials as u64 >= 1 << TRIAL_BITS {
        return Err(Error::Contract("schedule or trial count too large".into()));
    }
    let compiled = spec.compile()?;
    let bayes = bayes_from_compiled(&compiled).accuracy;

    let cells: Vec<(usize, usize)> = schedule
        .iter()
        .flat_map(|&m| (0..trials).map(move |t| (m, t)))
        .collect();
    // accuracies[cell][arm]
    let accuracies = cells
        .par_iter()
        .map(|&(m, trial)| {
            let train = compiled.generate(m, stream_id(m, trial, 0))?;
            let test = compiled.generate(test_size, stream_id(m, trial, 1))?;
            arms.iter()
                .map(|arm| {
                    let options = FitOptions {
                        density: arm.density,
                        ..FitOptions::default()
                    };
                    let model = fit(train.clone(), arm.predictor, arm.kernel, options)?;
                    evaluate_accuracy(&model, &test)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(arms.len() * cells.len());
    for (a, arm) in arms.iter().enumerate() {
        for (c, &(m, trial)) in cells.iter().enumerate() {
            let accuracy = accuracies[c][a];
            rows.push(ConvergenceReportRow {
                m,
                predictor: arm.predictor.to_string(),
                kernel: arm.kernel_label(),
                trial,
                accuracy,
                bayes_accuracy: bayes,
                regret: bayes - accuracy,
            });
        }
    }
    Ok(rows)
}
