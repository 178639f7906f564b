//! The most literal possible rasturnat: column scores, entry scores, entry
//! transform scores and target outcome scores in plain nested loops. Used as
//! an oracle for the optimized predictor.

use crate::dataset::{AttributeKind, Query, TrainingTable, Value};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::predictors::{DensityModel, Prediction};

pub fn naive_reference_predict(
    table: &TrainingTable,
    query: &Query,
    kernel: &Kernel,
    density: Option<&DensityModel>,
) -> Result<Prediction> {
    let schema = table.schema();
    let n_tac = schema.n_attributes();
    if query.values.len() != n_tac {
        return Err(Error::ArityMismatch {
            expected: n_tac,
            found: query.values.len(),
        });
    }
    let mut total_weight = 0.0;
    for attr in &schema.attributes {
        total_weight += attr.weight;
    }

    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); schema.n_labels()];
    for i in 0..table.n_rows() {
        let mut ems = 0.0;
        for j in 0..n_tac {
            let attr = &schema.attributes[j];
            let cms = match (attr.kind, query.values[j], table.row(i)[j]) {
                (AttributeKind::Categorical, Value::Category(q), Value::Category(t)) => {
                    if q == t {
                        1.0
                    } else {
                        0.0
                    }
                }
                (AttributeKind::Continuous, Value::Number(q), Value::Number(t)) => {
                    let width = attr.range_width.unwrap_or(0.0);
                    if width == 0.0 {
                        if q == t {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        let s = 1.0 - (q - t).abs() / width;
                        if s < 0.0 {
                            0.0
                        } else {
                            s
                        }
                    }
                }
                _ => return Err(Error::KindMismatch(attr.name.clone())),
            };
            ems += attr.weight * cms;
        }
        let dm = total_weight - ems;
        let mut ets = kernel.eval_on_distance(dm.max(0.0))?;
        if let Some(d) = density {
            ets *= d.dcf[i];
        }
        terms[table.outcome(i)].push(ets);
    }

    // Ascending-order sums: equal multisets give equal totals.
    let mut tos = Vec::with_capacity(terms.len());
    for mut t in terms {
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s = 0.0;
        for x in t {
            s += x;
        }
        tos.push(s);
    }
    let mut total = 0.0;
    for s in &tos {
        total += s;
    }
    let mut winner = 0;
    for k in 1..tos.len() {
        if tos[k] > tos[winner] {
            winner = k;
        }
    }
    let likelihoods = tos.iter().map(|s| s / total).collect();
    Ok(Prediction {
        scores: tos,
        likelihoods,
        winner,
        tie_depth: 0,
        trace: None,
    })
}
