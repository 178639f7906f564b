use crate::dataset::Query;
use crate::error::{Error, Result};

use super::{argmax_first, frequencies, FittedModel, Prediction, PredictionTrace, PredictorKind};

/// 1-nn: the outcome of the closest row. Rows tied at the minimal distance
/// vote; a split vote goes to the earliest label.
pub fn predict_nearest(model: &FittedModel, query: &Query) -> Result<Prediction> {
    if model.predictor() != PredictorKind::Nearest {
        return Err(Error::Contract(format!(
            "predict_nearest called on a {} model",
            model.predictor()
        )));
    }
    let distances = model.distances(query)?;
    let nearest = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let minimal: Vec<usize> = (0..distances.len())
        .filter(|&i| distances[i] == nearest)
        .collect();
    let (counts, likelihoods) = frequencies(model.table(), &minimal);
    let (winner, tied) = argmax_first(&counts);
    let trace = model.trace_enabled().then_some(PredictionTrace {
        champion_distance: nearest,
        predictive_set: Some(minimal),
        ets: None,
    });
    Ok(Prediction {
        scores: counts,
        likelihoods,
        winner,
        tie_depth: usize::from(tied),
        trace,
    })
}
