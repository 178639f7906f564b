//! Column match scores, entry match scores and matching distances.
//!
//! Categorical columns score 1 on equality and 0 otherwise; continuous
//! columns use the Gower-style `1 − |q − t| / range_width`, floored at 0. The
//! entry match score is the weighted sum over columns and the matching
//! distance is its complement with respect to the total weight.

use crate::dataset::{AttributeKind, AttributeSpec, Query, Schema, TrainingTable, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MatchScores {
    /// Entry match score, in `[0, total_weight]`.
    pub ems: f64,
    /// Matching distance, `total_weight − ems`.
    pub dm: f64,
    /// Per-column scores, kept only when tracing.
    pub per_column: Option<Vec<f64>>,
}

pub fn column_match_score(query: Value, entry: Value, spec: &AttributeSpec) -> Result<f64> {
    match (spec.kind, query, entry) {
        (AttributeKind::Categorical, Value::Category(q), Value::Category(t)) => {
            Ok(if q == t { 1.0 } else { 0.0 })
        }
        (AttributeKind::Continuous, Value::Number(q), Value::Number(t)) => {
            Ok(continuous_score(q, t, spec.range_width.unwrap_or(0.0)))
        }
        _ => Err(Error::KindMismatch(spec.name.clone())),
    }
}

#[inline]
fn continuous_score(q: f64, t: f64, range_width: f64) -> f64 {
    if range_width > 0.0 {
        (1.0 - (q - t).abs() / range_width).clamp(0.0, 1.0)
    } else if q == t {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
enum ColumnRule {
    Categorical,
    Continuous { range_width: f64 },
}

/// Precomputed per-column weights and rules for scoring many rows.
#[derive(Debug, Clone)]
pub struct Scorer {
    columns: Vec<(f64, ColumnRule)>,
    total_weight: f64,
}

impl Scorer {
    pub fn new(schema: &Schema) -> Self {
        let columns = schema
            .attributes
            .iter()
            .map(|a| {
                let rule = match a.kind {
                    AttributeKind::Categorical => ColumnRule::Categorical,
                    AttributeKind::Continuous => ColumnRule::Continuous {
                        range_width: a.range_width.unwrap_or(0.0),
                    },
                };
                (a.weight, rule)
            })
            .collect();
        Self {
            columns,
            total_weight: schema.total_weight(),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    #[inline]
    fn cell(rule: ColumnRule, q: Value, t: Value) -> f64 {
        match (rule, q, t) {
            (ColumnRule::Categorical, Value::Category(q), Value::Category(t)) => {
                if q == t {
                    1.0
                } else {
                    0.0
                }
            }
            (ColumnRule::Continuous { range_width }, Value::Number(q), Value::Number(t)) => {
                continuous_score(q, t, range_width)
            }
            // Kind mismatches are rejected before scoring starts.
            _ => 0.0,
        }
    }

    /// Checks that every query cell matches its column kind.
    pub fn check_query(&self, schema: &Schema, query: &Query) -> Result<()> {
        if query.len() != self.columns.len() {
            return Err(Error::ArityMismatch {
                expected: self.columns.len(),
                found: query.len(),
            });
        }
        for ((_, rule), (v, attr)) in self
            .columns
            .iter()
            .zip(query.values.iter().zip(&schema.attributes))
        {
            let ok = matches!(
                (rule, v),
                (ColumnRule::Categorical, Value::Category(_))
                    | (ColumnRule::Continuous { .. }, Value::Number(_))
            );
            if !ok {
                return Err(Error::KindMismatch(attr.name.clone()));
            }
            if let Value::Number(x) = v {
                if !x.is_finite() {
                    return Err(Error::InvalidQueryNumber {
                        column: attr.name.clone(),
                        value: x.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Entry match score of one row.
    #[inline]
    pub fn ems(&self, query: &[Value], row: &[Value]) -> f64 {
        let mut ems = 0.0;
        for ((weight, rule), (&q, &t)) in self.columns.iter().zip(query.iter().zip(row)) {
            ems += weight * Self::cell(*rule, q, t);
        }
        ems.clamp(0.0, self.total_weight)
    }

    /// Matching distance of one row.
    #[inline]
    pub fn distance(&self, query: &[Value], row: &[Value]) -> f64 {
        self.total_weight - self.ems(query, row)
    }

    pub fn scores(&self, query: &[Value], row: &[Value], trace: bool) -> MatchScores {
        let ems = self.ems(query, row);
        let per_column = trace.then(|| {
            self.columns
                .iter()
                .zip(query.iter().zip(row))
                .map(|((_, rule), (&q, &t))| Self::cell(*rule, q, t))
                .collect()
        });
        MatchScores {
            ems,
            dm: self.total_weight - ems,
            per_column,
        }
    }

    /// Matching distances from the query to every row, in row order.
    pub fn distances(&self, query: &Query, table: &TrainingTable) -> Vec<f64> {
        table
            .rows()
            .map(|row| self.distance(&query.values, row))
            .collect()
    }
}

pub fn entry_match_score(query: &Query, table: &TrainingTable, row: usize) -> Result<MatchScores> {
    entry_match_score_traced(query, table, row, false)
}

pub fn entry_match_score_traced(
    query: &Query,
    table: &TrainingTable,
    row: usize,
    trace: bool,
) -> Result<MatchScores> {
    if row >= table.n_rows() {
        return Err(Error::RowOutOfBounds {
            index: row,
            rows: table.n_rows(),
        });
    }
    let scorer = Scorer::new(table.schema());
    scorer.check_query(table.schema(), query)?;
    Ok(scorer.scores(&query.values, table.row(row), trace))
}

pub fn all_match_scores(
    query: &Query,
    table: &TrainingTable,
    trace: bool,
) -> Result<Vec<MatchScores>> {
    let scorer = Scorer::new(table.schema());
    scorer.check_query(table.schema(), query)?;
    Ok(table
        .rows()
        .map(|row| scorer.scores(&query.values, row, trace))
        .collect())
}
