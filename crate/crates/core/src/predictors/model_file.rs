use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, Schema, TrainingTable, Value};
use crate::error::{Error, Result};
use crate::kernels::Kernel;

use super::{DensityModel, FittedModel, PredictorKind};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Cell {
    Number(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    predictor: PredictorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<Kernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<DensityModel>,
    #[serde(default)]
    trace: bool,
    schema: Schema,
    rows: Vec<Vec<Cell>>,
    outcomes: Vec<usize>,
}

impl FittedModel {
    /// Versioned JSON document holding everything needed to predict.
    pub fn to_json(&self) -> Result<String> {
        let table = self.table();
        let schema = table.schema();
        let rows = table
            .rows()
            .map(|row| {
                row.iter()
                    .zip(&schema.attributes)
                    .map(|(v, attr)| match *v {
                        Value::Number(x) => Cell::Number(x),
                        Value::Category(c) => Cell::Text(
                            attr.categories.as_ref().expect("categories enumerated")[c as usize]
                                .clone(),
                        ),
                    })
                    .collect()
            })
            .collect();
        let file = ModelFile {
            version: MODEL_VERSION,
            predictor: self.predictor(),
            kernel: self.kernel().cloned(),
            density: self.density().cloned(),
            trace: self.trace_enabled(),
            schema: schema.clone(),
            rows,
            outcomes: table.outcomes().to_vec(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<FittedModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "model",
                found: file.version,
                expected: MODEL_VERSION,
            });
        }
        let schema = file.schema;
        schema.validate()?;
        let rows = file
            .rows
            .into_iter()
            .map(|cells| {
                if cells.len() != schema.n_attributes() {
                    return Err(Error::ArityMismatch {
                        expected: schema.n_attributes(),
                        found: cells.len(),
                    });
                }
                cells
                    .into_iter()
                    .zip(&schema.attributes)
                    .map(|(cell, attr)| match (attr.kind, cell) {
                        (AttributeKind::Continuous, Cell::Number(x)) => Ok(Value::Number(x)),
                        (AttributeKind::Categorical, Cell::Text(s)) => attr
                            .categories
                            .as_ref()
                            .and_then(|c| c.iter().position(|x| *x == s))
                            .map(|i| Value::Category(i as u32))
                            .ok_or_else(|| Error::UnknownCategory {
                                line: 0,
                                column: attr.name.clone(),
                                value: s,
                            }),
                        _ => Err(Error::KindMismatch(attr.name.clone())),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let table = TrainingTable::new(schema, rows, file.outcomes)?;
        FittedModel::from_parts(table, file.predictor, file.kernel, file.density, file.trace)
    }
}

#[cfg(test)]
mod tests {
    use crate::dataset::{load_table, validate_query};
    use crate::kernels::{KernelChoice, KernelKind};
    use crate::predictors::{fit, FitOptions, FittedModel, PredictorKind};

    #[test]
    fn round_trip_preserves_predictions() {
        let t = load_table(
            "c,x,y\nred,1.5,A\nblue,0.25,B\nred,3.0,B\nblue,2.0,A\n".as_bytes(),
            None,
        )
        .unwrap();
        let opts = FitOptions {
            density: true,
            ..FitOptions::default()
        };
        let m = fit(
            t,
            PredictorKind::Rasturnat,
            Some(KernelChoice::Spliced(KernelKind::PowE)),
            opts,
        )
        .unwrap();
        let text = m.to_json().unwrap();
        let back = FittedModel::from_json(&text).unwrap();
        assert_eq!(back.table(), m.table());
        assert_eq!(back.kernel(), m.kernel());
        assert_eq!(back.density(), m.density());
        for q in [["red", "1.0"], ["green", "2.5"]] {
            let q = validate_query(&q, m.schema()).unwrap();
            assert_eq!(back.predict(&q).unwrap(), m.predict(&q).unwrap());
        }
    }

    #[test]
    fn version_is_checked() {
        let t = load_table("c,y\nred,A\n".as_bytes(), None).unwrap();
        let m = fit(t, PredictorKind::Delanga, None, FitOptions::default()).unwrap();
        let text = m
            .to_json()
            .unwrap()
            .replace("\"version\":1", "\"version\":2");
        assert!(FittedModel::from_json(&text).is_err());
    }
}
