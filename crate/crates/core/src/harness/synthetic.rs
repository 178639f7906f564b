//! Categorical synthetic data with a known generating distribution.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSpec, Schema, TrainingTable, Value};
use crate::error::{Error, Result};
use crate::sum::ExactSum;

pub const SYNTHETIC_SPEC_VERSION: u32 = 1;

const MASS_TOLERANCE: f64 = 1e-12;
const MAX_TUPLES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleMass {
    pub tuple: Vec<usize>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeDistribution {
    /// Every tuple equally likely.
    Uniform,
    /// Independent attributes with the given per-attribute masses.
    Marginals(Vec<Vec<f64>>),
    /// Explicit tuple → mass list; unlisted tuples have mass 0.
    Explicit(Vec<TupleMass>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditional {
    pub tuple: Vec<usize>,
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub cardinalities: Vec<usize>,
    pub attribute_distribution: AttributeDistribution,
    pub conditionals: Vec<Conditional>,
    pub labels: Vec<String>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    version: u32,
    #[serde(flatten)]
    spec: SyntheticSpec,
}

fn check_mass_function(what: &str, masses: &[f64]) -> Result<()> {
    if masses.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidSyntheticSpec(format!(
            "{what} has a negative or non-finite mass"
        )));
    }
    let total = crate::sum::exact_sum(masses.iter().copied());
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidSyntheticSpec(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    Ok(())
}

impl SyntheticSpec {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SpecFile {
            version: SYNTHETIC_SPEC_VERSION,
            spec: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)?;
        if file.version != SYNTHETIC_SPEC_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "synthetic spec",
                found: file.version,
                expected: SYNTHETIC_SPEC_VERSION,
            });
        }
        file.spec.compile()?;
        Ok(file.spec)
    }

    pub fn n_tuples(&self) -> usize {
        self.cardinalities.iter().product()
    }

    /// Mixed-radix index of a tuple, attribute 0 most significant.
    pub fn tuple_index(&self, tuple: &[usize]) -> Option<usize> {
        if tuple.len() != self.cardinalities.len() {
            return None;
        }
        let mut index = 0;
        for (&v, &card) in tuple.iter().zip(&self.cardinalities) {
            if v >= card {
                return None;
            }
            index = index * card + v;
        }
        Some(index)
    }

    pub fn tuple_at(&self, mut index: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.cardinalities.len()];
        for (slot, &card) in tuple.iter_mut().zip(&self.cardinalities).rev() {
            *slot = index % card;
            index /= card;
        }
        tuple
    }

    /// The schema of generated tables: attributes `a0, a1, …` with categories
    /// `"0", "1", …`.
    pub fn schema(&self) -> Result<Schema> {
        let attributes = self
            .cardinalities
            .iter()
            .enumerate()
            .map(|(j, &card)| {
                AttributeSpec::categorical(format!("a{j}"))
                    .with_categories((0..card).map(|v| v.to_string()))
            })
            .collect();
        Schema::new(attributes, self.labels.clone())
    }

    /// Validates the spec and precomputes sampling tables.
    pub fn compile(&self) -> Result<CompiledSpec> {
        if self.cardinalities.is_empty() || self.cardinalities.contains(&0) {
            return Err(Error::InvalidSyntheticSpec(
                "cardinalities must be positive".into(),
            ));
        }
        let n_tuples = self
            .cardinalities
            .iter()
            .try_fold(1usize, |acc, &c| {
                acc.checked_mul(c).filter(|&n| n <= MAX_TUPLES)
            })
            .ok_or_else(|| {
                Error::InvalidSyntheticSpec(format!("more than {MAX_TUPLES} attribute tuples"))
            })?;
        if self.labels.is_empty() {
            return Err(Error::InvalidSyntheticSpec("no labels".into()));
        }
        let mut seen = HashSet::new();
        if self.labels.iter().any(|l| !seen.insert(l)) {
            return Err(Error::InvalidSyntheticSpec("duplicate label".into()));
        }

        let tuple_mass: Vec<f64> = match &self.attribute_distribution {
            AttributeDistribution::Uniform => vec![1.0 / n_tuples as f64; n_tuples],
            AttributeDistribution::Marginals(marginals) => {
                if marginals.len() != self.cardinalities.len() {
                    return Err(Error::InvalidSyntheticSpec(
                        "one marginal per attribute required".into(),
                    ));
                }
                for (j, (m, &card)) in marginals.iter().zip(&self.cardinalities).enumerate() {
                    if m.len() != card {
                        return Err(Error::InvalidSyntheticSpec(format!(
                            "marginal {j} has {} masses for {card} categories",
                            m.len()
                        )));
                    }
                    check_mass_function(&format!("marginal {j}"), m)?;
                }
                (0..n_tuples)
                    .map(|i| {
                        self.tuple_at(i)
                            .iter()
                            .zip(marginals)
                            .map(|(&v, m)| m[v])
                            .product()
                    })
                    .collect()
            }
            AttributeDistribution::Explicit(entries) => {
                let mut masses = vec![0.0; n_tuples];
                let mut listed = vec![false; n_tuples];
                for e in entries {
                    let i = self.tuple_index(&e.tuple).ok_or_else(|| {
                        Error::InvalidSyntheticSpec(format!("invalid tuple {:?}", e.tuple))
                    })?;
                    if std::mem::replace(&mut listed[i], true) {
                        return Err(Error::InvalidSyntheticSpec(format!(
                            "tuple {:?} listed twice",
                            e.tuple
                        )));
                    }
                    masses[i] = e.mass;
                }
                check_mass_function(
                    "attribute distribution",
                    &entries.iter().map(|e| e.mass).collect::<Vec<_>>(),
                )?;
                masses
            }
        };

        let mut conditionals: Vec<Option<Vec<f64>>> = vec![None; n_tuples];
        for c in &self.conditionals {
            let i = self.tuple_index(&c.tuple).ok_or_else(|| {
                Error::InvalidSyntheticSpec(format!("invalid conditional tuple {:?}", c.tuple))
            })?;
            if c.masses.len() != self.labels.len() {
                return Err(Error::InvalidSyntheticSpec(format!(
                    "conditional for {:?} has {} masses for {} labels",
                    c.tuple,
                    c.masses.len(),
                    self.labels.len()
                )));
            }
            check_mass_function(&format!("conditional for {:?}", c.tuple), &c.masses)?;
            if !(tuple_mass[i] > 0.0) {
                return Err(Error::InvalidSyntheticSpec(format!(
                    "conditional tuple {:?} is unreachable",
                    c.tuple
                )));
            }
            if conditionals[i].replace(c.masses.clone()).is_some() {
                return Err(Error::InvalidSyntheticSpec(format!(
                    "tuple {:?} has two conditionals",
                    c.tuple
                )));
            }
        }
        if let Some(i) = (0..n_tuples).find(|&i| tuple_mass[i] > 0.0 && conditionals[i].is_none()) {
            return Err(Error::InvalidSyntheticSpec(format!(
                "reachable tuple {:?} has no conditional",
                self.tuple_at(i)
            )));
        }

        let support: Vec<usize> = (0..n_tuples).filter(|&i| tuple_mass[i] > 0.0).collect();
        let tuple_cdf = cumulative(support.iter().map(|&i| tuple_mass[i]));
        let label_cdf = conditionals
            .iter()
            .map(|c| c.as_ref().map(|m| cumulative(m.iter().copied())))
            .collect();
        Ok(CompiledSpec {
            spec: self.clone(),
            schema: self.schema()?,
            tuple_mass,
            conditionals,
            support,
            tuple_cdf,
            label_cdf,
        })
    }

    /// Three ternary attributes, uniform tuples, two labels; every tuple's
    /// majority label has conditional mass in `[0.7, 1)`, drawn once from a
    /// fixed seed.
    pub fn standard() -> SyntheticSpec {
        let cardinalities = vec![3, 3, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let mut spec = SyntheticSpec {
            cardinalities,
            attribute_distribution: AttributeDistribution::Uniform,
            conditionals: Vec::new(),
            labels: vec!["+".into(), "-".into()],
            seed: 20_240_607,
        };
        spec.conditionals = (0..spec.n_tuples())
            .map(|i| {
                let top: f64 = 0.7 + 0.3 * rng.gen::<f64>();
                let masses = if rng.gen::<bool>() {
                    vec![top, 1.0 - top]
                } else {
                    vec![1.0 - top, top]
                };
                Conditional {
                    tuple: spec.tuple_at(i),
                    masses,
                }
            })
            .collect();
        spec
    }

    /// Three binary attributes with a rare tuple `(0,0,0)` favouring label
    /// `A`, surrounded by Hamming-1 neighbours of three times its mass that
    /// favour `B`. A kernel whose ratio per distance step is only 2 is pulled
    /// towards `B` at `(0,0,0)`; see [`expected_field`].
    pub fn adversarial() -> SyntheticSpec {
        let spec = SyntheticSpec {
            cardinalities: vec![2, 2, 2],
            attribute_distribution: AttributeDistribution::Uniform,
            conditionals: Vec::new(),
            labels: vec!["A".into(), "B".into()],
            seed: 0xad5e_7000,
        };
        let mut explicit = Vec::new();
        let mut conditionals = Vec::new();
        for i in 0..spec.n_tuples() {
            let tuple = spec.tuple_at(i);
            let ones = tuple.iter().sum::<usize>();
            let (mass, p_a) = match ones {
                0 => (0.08, 0.9),
                1 => (0.12, 0.2),
                2 => (0.12, 0.3),
                _ => (0.2, 0.6),
            };
            explicit.push(TupleMass {
                tuple: tuple.clone(),
                mass,
            });
            conditionals.push(Conditional {
                tuple,
                masses: vec![p_a, 1.0 - p_a],
            });
        }
        SyntheticSpec {
            attribute_distribution: AttributeDistribution::Explicit(explicit),
            conditionals,
            ..spec
        }
    }
}

fn cumulative(masses: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = ExactSum::new();
    masses
        .map(|p| {
            acc.add(p);
            acc.value()
        })
        .collect()
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    // Normalise by the last entry to absorb tiny mass-sum deviations.
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// A validated spec with sampling tables.
#[derive(Debug, Clone)]
pub struct CompiledSpec {
    spec: SyntheticSpec,
    schema: Schema,
    tuple_mass: Vec<f64>,
    conditionals: Vec<Option<Vec<f64>>>,
    support: Vec<usize>,
    tuple_cdf: Vec<f64>,
    label_cdf: Vec<Option<Vec<f64>>>,
}

impl CompiledSpec {
    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuple_mass(&self, index: usize) -> f64 {
        self.tuple_mass[index]
    }

    pub fn conditional(&self, index: usize) -> Option<&[f64]> {
        self.conditionals[index].as_deref()
    }

    fn rng(&self, stream_id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(stream_id);
        rng
    }

    /// Two uniforms for row `row` of stream `stream_id`, independent of
    /// every other row.
    fn row_uniforms(rng: &mut ChaCha8Rng, row: usize) -> (f64, f64) {
        rng.set_word_pos(row as u128 * 4);
        (rng.gen::<f64>(), rng.gen::<f64>())
    }

    fn build_table(&self, rows: Vec<Vec<Value>>, outcomes: Vec<usize>) -> Result<TrainingTable> {
        TrainingTable::new(self.schema.clone(), rows, outcomes)
    }

    /// `m` i.i.d. rows from the generating distribution.
    pub fn generate(&self, m: usize, stream_id: u64) -> Result<TrainingTable> {
        if m == 0 {
            return Err(Error::EmptyTable);
        }
        let mut rng = self.rng(stream_id);
        let mut rows = Vec::with_capacity(m);
        let mut outcomes = Vec::with_capacity(m);
        for r in 0..m {
            let (u_tuple, u_label) = Self::row_uniforms(&mut rng, r);
            let t = self.support[sample_index(&self.tuple_cdf, u_tuple)];
            let cdf = self.label_cdf[t]
                .as_ref()
                .expect("reachable tuples have conditionals");
            outcomes.push(sample_index(cdf, u_label));
            rows.push(
                self.spec
                    .tuple_at(t)
                    .into_iter()
                    .map(|v| Value::Category(v as u32))
                    .collect(),
            );
        }
        self.build_table(rows, outcomes)
    }

    /// `n` rows all at `tuple`, with labels drawn from its conditional.
    pub fn generate_at(&self, tuple: &[usize], n: usize, stream_id: u64) -> Result<TrainingTable> {
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        let t = self
            .spec
            .tuple_index(tuple)
            .ok_or_else(|| Error::InvalidSyntheticSpec(format!("invalid tuple {tuple:?}")))?;
        let cdf = self.label_cdf[t].as_ref().ok_or_else(|| {
            Error::InvalidSyntheticSpec(format!("tuple {tuple:?} is unreachable"))
        })?;
        let mut rng = self.rng(stream_id);
        let row: Vec<Value> = tuple.iter().map(|&v| Value::Category(v as u32)).collect();
        let outcomes = (0..n)
            .map(|r| sample_index(cdf, Self::row_uniforms(&mut rng, r).1))
            .collect();
        self.build_table(vec![row; n], outcomes)
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, m: usize, stream_id: u64) -> Result<TrainingTable> {
    spec.compile()?.generate(m, stream_id)
}

/// The Bayes-optimal classifier of a spec and its exact accuracy.
#[derive(Debug, Clone)]
pub struct BayesOracle {
    spec: SyntheticSpec,
    decisions: Vec<Option<usize>>,
    pub accuracy: f64,
}

impl BayesOracle {
    /// Argmax label of the tuple's conditional (earliest label on ties);
    /// `None` for unreachable tuples.
    pub fn classify(&self, tuple: &[usize]) -> Option<usize> {
        self.decisions[self.spec.tuple_index(tuple)?]
    }

    /// Accuracy of the Bayes decision on queries drawn at one tuple.
    pub fn accuracy_at(&self, compiled: &CompiledSpec, tuple: &[usize]) -> Option<f64> {
        let i = self.spec.tuple_index(tuple)?;
        let c = compiled.conditional(i)?;
        Some(c.iter().copied().fold(0.0, f64::max))
    }
}

pub fn bayes_optimal(spec: &SyntheticSpec) -> Result<BayesOracle> {
    let compiled = spec.compile()?;
    Ok(bayes_from_compiled(&compiled))
}

pub(crate) fn bayes_from_compiled(compiled: &CompiledSpec) -> BayesOracle {
    let mut acc = ExactSum::new();
    let decisions = (0..compiled.spec.n_tuples())
        .map(|i| {
            compiled.conditional(i).map(|c| {
                let (best, _) = crate::predictors::argmax_first(c);
                acc.add(compiled.tuple_mass(i) * c[best]);
                best
            })
        })
        .collect();
    BayesOracle {
        spec: compiled.spec.clone(),
        decisions,
        accuracy: acc.value(),
    }
}

/// Expected per-row contribution to each outcome's target score at `tuple`:
/// `Σ_t P(t) · P(k | t) · kernel(hamming(t, tuple))`. Multiplying by `m`
/// gives the expected score for a table of `m` rows.
pub fn expected_field(
    spec: &SyntheticSpec,
    tuple: &[usize],
    kernel: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let compiled = spec.compile()?;
    if spec.tuple_index(tuple).is_none() {
        return Err(Error::InvalidSyntheticSpec(format!(
            "invalid tuple {tuple:?}"
        )));
    }
    let mut field = vec![0.0; spec.labels.len()];
    for i in 0..spec.n_tuples() {
        let Some(c) = compiled.conditional(i) else {
            continue;
        };
        let t = spec.tuple_at(i);
        let d = t.iter().zip(tuple).filter(|(a, b)| a != b).count() as f64;
        let w = compiled.tuple_mass(i) * kernel(d);
        for (f, p) in field.iter_mut().zip(c) {
            *f += w * p;
        }
    }
    Ok(field)
}
