#![allow(dead_code)]

use deodata::dataset::{AttributeSpec, Query, Schema, TrainingTable, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random categorical instance: table and one query.
pub struct Instance {
    pub table: TrainingTable,
    pub query: Query,
}

/// M_TEN ≤ 30, N_TAC ≤ 5, alphabets ≤ 3, labels ≤ 3.
pub fn categorical_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=30);
    let n = rng.gen_range(1..=5);
    let alphabets: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
    let n_labels = rng.gen_range(1..=3);
    let attributes = alphabets
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            AttributeSpec::categorical(format!("a{j}"))
                .with_categories((0..k).map(|v| format!("v{v}")))
        })
        .collect();
    let labels = (0..n_labels).map(|k| format!("L{k}")).collect();
    let schema = Schema::new(attributes, labels).unwrap();
    let rows = (0..m)
        .map(|_| {
            alphabets
                .iter()
                .map(|&k| Value::Category(rng.gen_range(0..k)))
                .collect()
        })
        .collect();
    let outcomes = (0..m).map(|_| rng.gen_range(0..n_labels)).collect();
    let query = Query {
        values: alphabets
            .iter()
            .map(|&k| Value::Category(rng.gen_range(0..k)))
            .collect(),
    };
    Instance {
        table: TrainingTable::new(schema, rows, outcomes).unwrap(),
        query,
    }
}

/// Random continuous instance with the same size limits.
pub fn continuous_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0_17);
    let m = rng.gen_range(1..=30);
    let n = rng.gen_range(1..=5);
    let n_labels = rng.gen_range(1..=3);
    let attributes = (0..n)
        .map(|j| AttributeSpec::continuous(format!("x{j}")))
        .collect();
    let labels = (0..n_labels).map(|k| format!("L{k}")).collect();
    let schema = Schema::new(attributes, labels).unwrap();
    let rows = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| Value::Number(rng.gen_range(-10.0..10.0)))
                .collect()
        })
        .collect();
    let outcomes = (0..m).map(|_| rng.gen_range(0..n_labels)).collect();
    let query = Query {
        values: (0..n)
            .map(|_| Value::Number(rng.gen_range(-10.0..10.0)))
            .collect(),
    };
    Instance {
        table: TrainingTable::new(schema, rows, outcomes).unwrap(),
        query,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
