use crate::dataset::Query;
use crate::error::{Error, Result};
use crate::sum::ExactSum;

use super::{argmax_first, FittedModel, Prediction, PredictionTrace, PredictorKind};

const MEMO_SLOTS: usize = 64;

/// Field superposition: every row contributes `kernel(dm)` (times its
/// density factor, when fitted) to its outcome's target score.
///
/// Per-outcome sums are exactly rounded, so outcomes with the same multiset
/// of contributions tie exactly and the earliest label wins. If every score
/// underflows, likelihoods and the winner are taken from log-domain values
/// shifted by the largest contribution, which only rescales the field.
pub fn predict_rasturnat(model: &FittedModel, query: &Query) -> Result<Prediction> {
    if model.predictor() != PredictorKind::Rasturnat {
        return Err(Error::Contract(format!(
            "predict_rasturnat called on a {} model",
            model.predictor()
        )));
    }
    let kernel = model
        .kernel()
        .ok_or_else(|| Error::Invariant("rasturnat model without a kernel".into()))?;
    let table = model.table();
    let n_labels = table.schema().n_labels();
    let distances = model.distances(query)?;
    let dcf = model.density().map(|d| d.dcf.as_slice());

    let mut sums = vec![ExactSum::new(); n_labels];
    let mut ets_trace = model
        .trace_enabled()
        .then(|| Vec::with_capacity(distances.len()));
    // Kernel values at small integral distances, filled on first use, and
    // how many rows of each outcome sit at each of them.
    let mut memo = [f64::NAN; MEMO_SLOTS];
    let mut counts = vec![[0u64; MEMO_SLOTS]; n_labels];
    for (i, &d) in distances.iter().enumerate() {
        let slot = d as usize;
        let memoized = slot < MEMO_SLOTS && slot as f64 == d;
        let value = if memoized {
            if memo[slot].is_nan() {
                memo[slot] = kernel.value(d);
            }
            memo[slot]
        } else {
            kernel.value(d)
        };
        let ets = match dcf {
            Some(dcf) => value * dcf[i],
            None => value,
        };
        if memoized && dcf.is_none() {
            counts[table.outcome(i)][slot] += 1;
        } else {
            sums[table.outcome(i)].add(ets);
        }
        if let Some(t) = ets_trace.as_mut() {
            t.push(ets);
        }
    }
    // c copies of v sum to exactly c·v = p + e (error-free product), so the
    // rounded totals match row-by-row accumulation bit for bit.
    for (sum, counts) in sums.iter_mut().zip(&counts) {
        for (slot, &c) in counts.iter().enumerate() {
            if c > 0 {
                let (c, v) = (c as f64, memo[slot]);
                let p = c * v;
                sum.add(p);
                sum.add(c.mul_add(v, -p));
            }
        }
    }
    let scores: Vec<f64> = sums.iter().map(ExactSum::value).collect();
    let total = crate::sum::exact_sum(scores.iter().copied());

    let (winner, tied, likelihoods) = if total >= f64::MIN_POSITIVE {
        let (winner, tied) = argmax_first(&scores);
        let likelihoods = scores.iter().map(|s| s / total).collect();
        (winner, tied, likelihoods)
    } else {
        let logs: Vec<f64> = distances
            .iter()
            .enumerate()
            .map(|(i, &d)| kernel.ln_value(d) + dcf.map_or(0.0, |f| f[i].ln()))
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut shifted = vec![ExactSum::new(); n_labels];
        for (i, l) in logs.iter().enumerate() {
            shifted[table.outcome(i)].add((l - top).exp());
        }
        let shifted: Vec<f64> = shifted.iter().map(ExactSum::value).collect();
        let total = crate::sum::exact_sum(shifted.iter().copied());
        let (winner, tied) = argmax_first(&shifted);
        (winner, tied, shifted.iter().map(|s| s / total).collect())
    };

    let trace = ets_trace.map(|ets| PredictionTrace {
        champion_distance: distances.iter().copied().fold(f64::INFINITY, f64::min),
        predictive_set: None,
        ets: Some(ets),
    });
    Ok(Prediction {
        scores,
        likelihoods,
        winner,
        tie_depth: usize::from(tied),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_table, validate_query, AttributeSpec, Schema, TrainingTable, Value};
    use crate::kernels::KernelKind;
    use crate::predictors::{fit, FitOptions};

    fn model(text: &str, kind: KernelKind) -> FittedModel {
        let t = load_table(text.as_bytes(), None).unwrap();
        fit(
            t,
            PredictorKind::Rasturnat,
            Some(kind.into()),
            FitOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn pow_2_example() {
        let m = model("a,b,y\n0,0,A\n0,1,B\n1,1,B\n", KernelKind::Pow2);
        let q = validate_query(&["0", "0"], m.schema()).unwrap();
        let p = predict_rasturnat(&m, &q).unwrap();
        // tos(A) = 2^0, tos(B) = 2^-1 + 2^-2
        assert_eq!(p.scores, vec![1.0, 0.75]);
        assert_eq!(p.winner, 0);
        assert_eq!(p.tie_depth, 0);
        assert!((p.likelihoods[0] - 1.0 / 1.75).abs() < 1e-15);
    }

    #[test]
    fn single_row_always_wins() {
        for kind in KernelKind::ALL
            .into_iter()
            .filter(|k| *k != KernelKind::AdjPow2)
        {
            let m = model("a,b,y\n0,0,B\n", kind);
            for q in [["0", "0"], ["1", "0"], ["5", "6"]] {
                let q = validate_query(&q, m.schema()).unwrap();
                let p = predict_rasturnat(&m, &q).unwrap();
                assert_eq!(p.winner, 0, "{kind}");
                assert_eq!(p.likelihoods, vec![1.0]);
            }
        }
    }

    #[test]
    fn identical_rows_tie_to_earlier_label() {
        let m = model("a,b,y\n0,0,A\n0,0,B\n", KernelKind::PowE);
        for q in [["0", "0"], ["1", "0"], ["1", "1"]] {
            let q = validate_query(&q, m.schema()).unwrap();
            let p = predict_rasturnat(&m, &q).unwrap();
            assert_eq!(p.scores[0], p.scores[1]);
            assert_eq!(p.winner, 0);
            assert_eq!(p.tie_depth, 1);
        }
    }

    #[test]
    fn underflow_falls_back_to_log_domain() {
        // 600 attributes with bridge mld = 4: 4^-600 = 2^-1200 underflows.
        let n = 600;
        let attrs = (0..n)
            .map(|j| AttributeSpec::categorical(format!("c{j}")).with_categories(["x", "y"]))
            .collect();
        let schema = Schema::new(attrs, vec!["A".into(), "B".into()]).unwrap();
        let rows = vec![
            vec![Value::Category(0); n],
            vec![Value::Category(0); n],
            vec![Value::Category(0); n],
            {
                let mut r = vec![Value::Category(0); n];
                r[0] = Value::Category(1);
                r
            },
        ];
        let t = TrainingTable::new(schema, rows, vec![0, 0, 1, 1]).unwrap();
        let m = fit(
            t,
            PredictorKind::Rasturnat,
            Some(KernelKind::Bridge.into()),
            FitOptions::default(),
        )
        .unwrap();
        let q = Query {
            values: vec![Value::Category(1); n],
        };
        let p = predict_rasturnat(&m, &q).unwrap();
        assert_eq!(p.scores, vec![0.0, 0.0]);
        // In units of 4^-600: A = 1 + 1, B = 1 + 4 (row 3 is one step closer).
        assert_eq!(p.winner, 1);
        let expected_b = 5.0 / 7.0;
        assert!(
            (p.likelihoods[1] - expected_b).abs() < 1e-12,
            "{:?}",
            p.likelihoods
        );
    }
}
