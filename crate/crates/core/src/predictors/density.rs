use serde::{Deserialize, Serialize};

use crate::dataset::TrainingTable;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::similarity::Scorer;
use crate::sum::ExactSum;

/// Sampling-density compensation. Each entry's train similarity score is its
/// field strength at its own position; rows in dense regions get factors
/// below 1 and isolated rows factors above 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub tss: Vec<f64>,
    pub sts: f64,
    pub stavg: f64,
    pub dcf: Vec<f64>,
}

pub fn compute_density_model(
    table: &TrainingTable,
    kernel: &Kernel,
    include_self: bool,
) -> Result<DensityModel> {
    let m = table.n_rows();
    if !include_self && m < 2 {
        return Err(Error::Contract(
            "density without the self term needs at least two rows".into(),
        ));
    }
    let scorer = Scorer::new(table.schema());
    let tss: Vec<f64> = (0..m)
        .map(|j| {
            let row_j = table.row(j);
            let mut acc = ExactSum::new();
            for (i, row_i) in table.rows().enumerate() {
                if include_self || i != j {
                    acc.add(kernel.value(scorer.distance(row_j, row_i)));
                }
            }
            acc.value()
        })
        .collect();
    if let Some(j) = tss.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Contract(format!(
            "train similarity score of row {j} is {}; density factors undefined",
            tss[j]
        )));
    }
    let mut acc = ExactSum::new();
    acc.extend(tss.iter().copied());
    let sts = acc.value();
    let stavg = acc.mean(m);
    let dcf = tss.iter().map(|&t| stavg / t).collect();
    Ok(DensityModel {
        tss,
        sts,
        stavg,
        dcf,
    })
}
