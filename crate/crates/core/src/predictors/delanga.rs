use crate::dataset::Query;
use crate::error::{Error, Result};

use super::{frequencies, FittedModel, Prediction, PredictionTrace, PredictorKind};

/// Breaks a count tie at the champion level by descending through the
/// runner-up levels. `level_counts[l][k]` is the number of rows of outcome
/// `k` at the `l`-th smallest distance.
///
/// Only the outcomes tied at level 0 stay in contention. Returns the winner
/// and the number of levels examined beyond level 0; when every level is
/// exhausted without a decision the earliest tied label wins and the depth
/// equals the number of levels.
pub fn backtrack_tie_break(level_counts: &[Vec<usize>]) -> (usize, usize) {
    let Some(first) = level_counts.first() else {
        return (0, 0);
    };
    let best = first.iter().copied().max().unwrap_or(0);
    let mut tied: Vec<usize> = (0..first.len()).filter(|&k| first[k] == best).collect();
    if tied.len() == 1 {
        return (tied[0], 0);
    }
    for (depth, level) in level_counts.iter().enumerate().skip(1) {
        let best = tied.iter().map(|&k| level[k]).max().unwrap_or(0);
        tied.retain(|&k| level[k] == best);
        if tied.len() == 1 {
            return (tied[0], depth);
        }
    }
    (tied[0], level_counts.len())
}

/// Predicts from the set of rows with the largest entry match score, taking
/// the majority outcome and backtracking through runner-up sets on ties.
pub fn predict_delanga(model: &FittedModel, query: &Query) -> Result<Prediction> {
    if model.predictor() != PredictorKind::Delanga {
        return Err(Error::Contract(format!(
            "predict_delanga called on a {} model",
            model.predictor()
        )));
    }
    let table = model.table();
    let distances = model.distances(query)?;
    let champion = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let predictive_set: Vec<usize> = (0..distances.len())
        .filter(|&i| distances[i] == champion)
        .collect();
    let (counts, likelihoods) = frequencies(table, &predictive_set);

    let best = counts.iter().copied().fold(0.0, f64::max);
    let n_tied = counts.iter().filter(|&&c| c == best).count();
    let (winner, tie_depth) = if n_tied == 1 {
        (counts.iter().position(|&c| c == best).unwrap_or(0), 0)
    } else {
        let mut levels: Vec<f64> = distances.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let n_labels = table.schema().n_labels();
        let mut level_counts = vec![vec![0usize; n_labels]; levels.len()];
        for (i, d) in distances.iter().enumerate() {
            let l = levels.partition_point(|x| x < d);
            level_counts[l][table.outcome(i)] += 1;
        }
        backtrack_tie_break(&level_counts)
    };

    let trace = model.trace_enabled().then_some(PredictionTrace {
        champion_distance: champion,
        predictive_set: Some(predictive_set),
        ets: None,
    });
    Ok(Prediction {
        scores: counts,
        likelihoods,
        winner,
        tie_depth,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_table, validate_query};
    use crate::predictors::{fit, FitOptions};

    fn model(text: &str) -> FittedModel {
        let t = load_table(text.as_bytes(), None).unwrap();
        fit(
            t,
            PredictorKind::Delanga,
            None,
            FitOptions {
                trace: true,
                ..FitOptions::default()
            },
        )
        .unwrap()
    }

    /// Exhaustive level construction straight from the definition.
    fn levels_oracle(distances: &[f64], outcomes: &[usize], n_labels: usize) -> Vec<Vec<usize>> {
        let mut ds: Vec<f64> = Vec::new();
        for &d in distances {
            if !ds.contains(&d) {
                ds.push(d);
            }
        }
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ds.iter()
            .map(|&level| {
                (0..n_labels)
                    .map(|k| {
                        distances
                            .iter()
                            .zip(outcomes)
                            .filter(|(&d, &o)| d == level && o == k)
                            .count()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn champion_set_decides() {
        let m = model("a,b,y\n0,0,A\n0,1,B\n1,1,B\n");
        let q = validate_query(&["0", "0"], m.schema()).unwrap();
        let p = predict_delanga(&m, &q).unwrap();
        assert_eq!(p.winner_label(m.schema()), "A");
        assert_eq!(p.likelihoods, vec![1.0, 0.0]);
        assert_eq!(p.tie_depth, 0);
        let tr = p.trace.unwrap();
        assert_eq!(tr.predictive_set, Some(vec![0]));
        assert_eq!(tr.champion_distance, 0.0);

        let levels = levels_oracle(&m.distances(&q).unwrap(), m.table().outcomes(), 2);
        assert_eq!(levels, vec![vec![1, 0], vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn runner_up_breaks_tie() {
        let m = model("a,b,y\n0,0,A\n0,0,B\n0,1,B\n");
        let q = validate_query(&["0", "0"], m.schema()).unwrap();
        let p = predict_delanga(&m, &q).unwrap();
        assert_eq!(p.winner_label(m.schema()), "B");
        assert_eq!(p.tie_depth, 1);
        // Likelihoods come from the champion set only.
        assert_eq!(p.likelihoods, vec![0.5, 0.5]);
    }

    #[test]
    fn unanimous_outcome() {
        let m = model("a,b,y\n0,0,A\n1,0,A\n1,1,A\n");
        for q in [["0", "0"], ["1", "1"], ["7", "9"]] {
            let q = validate_query(&q, m.schema()).unwrap();
            assert_eq!(predict_delanga(&m, &q).unwrap().winner, 0);
        }
    }

    #[test]
    fn tie_break_examples() {
        assert_eq!(backtrack_tie_break(&[vec![2, 1]]), (0, 0));
        assert_eq!(
            backtrack_tie_break(&[vec![1, 1], vec![0, 1], vec![3, 0]]),
            (1, 1)
        );
        assert_eq!(
            backtrack_tie_break(&[vec![1, 1], vec![2, 2], vec![0, 0]]),
            (0, 3)
        );
        // Outcome 2 is out of contention after level 0.
        assert_eq!(backtrack_tie_break(&[vec![2, 2, 1], vec![0, 1, 9]]), (1, 1));
        assert_eq!(
            backtrack_tie_break(&[vec![1, 1, 1], vec![0, 2, 2], vec![0, 1, 0]]),
            (1, 2)
        );
    }

    #[test]
    fn wrong_model_kind() {
        let t = load_table("a,y\n0,A\n".as_bytes(), None).unwrap();
        let m = fit(t, PredictorKind::Nearest, None, FitOptions::default()).unwrap();
        let q = validate_query(&["0"], m.schema()).unwrap();
        assert!(predict_delanga(&m, &q).is_err());
    }
}
