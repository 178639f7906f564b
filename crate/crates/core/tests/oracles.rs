//! Independent oracles and randomized properties across modules.

mod common;

use common::{categorical_instance, continuous_instance, rel};
use deodata::dataset::{load_table, AttributeSpec, Schema, TrainingTable, Value};
use deodata::harness::naive_reference_predict;
use deodata::kernels::{KernelChoice, KernelKind};
use deodata::predictors::{compute_density_model, fit, FitOptions, PredictorKind};
use deodata::sum::{exact_sum, ExactSum};
use num_bigint::BigInt;
use proptest::prelude::*;

/// `x · 2^1074` as an integer; every finite double is an integer multiple of
/// the smallest subnormal.
fn scaled_int(x: f64) -> BigInt {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1 << 52) - 1);
    let (mant, shift) = if exp == 0 {
        (frac, 0)
    } else {
        (frac | 1 << 52, exp - 1)
    };
    BigInt::from(sign) * (BigInt::from(mant) << shift as usize)
}

/// Checks that `r` is the round-to-nearest-even value of the exact sum.
fn is_correctly_rounded(values: &[f64], r: f64) -> bool {
    let exact: BigInt = values.iter().map(|&v| scaled_int(v)).sum();
    let dist = |y: f64| (scaled_int(y) - &exact).magnitude().clone();
    let here = dist(r);
    let (up, down) = (dist(r.next_up()), dist(r.next_down()));
    if here > up || here > down {
        return false;
    }
    if here == up || here == down {
        return r.to_bits() & 1 == 0;
    }
    true
}

fn wide_double() -> impl Strategy<Value = f64> {
    (any::<bool>(), 1e-3f64..1e3, -60i32..60).prop_map(|(neg, m, e)| {
        let x = m * 2f64.powi(e);
        if neg {
            -x
        } else {
            x
        }
    })
}

#[test]
fn exact_sum_hand_cases() {
    let cases: [&[f64]; 4] = [
        &[1e100, 1.0, -1e100],
        &[1.0, 1e-16, 1e-16],
        &[0.1; 10],
        &[2f64.powi(53), 1.0, 2f64.powi(-60)],
    ];
    for c in cases {
        assert!(
            is_correctly_rounded(c, exact_sum(c.iter().copied())),
            "{c:?}"
        );
    }
}

proptest! {
    #[test]
    fn exact_sum_is_correctly_rounded(values in prop::collection::vec(wide_double(), 0..40)) {
        prop_assert!(is_correctly_rounded(&values, exact_sum(values.iter().copied())));
    }

    #[test]
    fn exact_sum_ignores_order(values in prop::collection::vec(wide_double(), 0..40), seed in any::<u64>()) {
        let mut shuffled = values.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(
            exact_sum(values.iter().copied()).to_bits(),
            exact_sum(shuffled.iter().copied()).to_bits()
        );
    }

    #[test]
    fn mean_of_copies_is_exact(x in wide_double(), n in 1usize..500) {
        let mut acc = ExactSum::new();
        acc.extend(std::iter::repeat_n(x, n));
        prop_assert_eq!(acc.mean(n), x);
    }

    #[test]
    fn csv_round_trip(
        cats in prop::collection::vec(prop::collection::vec(0u8..4, 3), 1..20),
        nums in prop::collection::vec(-1e6f64..1e6, 20),
        labels in prop::collection::vec(0usize..3, 20),
    ) {
        let m = cats.len();
        let schema = Schema::new(
            vec![
                AttributeSpec::categorical("c0").with_categories(["a", "b", "c", "d"]),
                AttributeSpec::continuous("x"),
                AttributeSpec::categorical("c1").with_categories(["a", "b", "c", "d"]),
            ],
            vec!["p".into(), "q".into(), "r".into()],
        ).unwrap();
        let rows = (0..m)
            .map(|i| vec![
                Value::Category(cats[i][0] as u32),
                Value::Number(nums[i]),
                Value::Category(cats[i][2] as u32),
            ])
            .collect();
        let table = TrainingTable::new(schema, rows, labels[..m].to_vec()).unwrap();
        let mut text = Vec::new();
        table.write_csv(&mut text, "label").unwrap();
        let back = load_table(text.as_slice(), Some(table.schema())).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn rasturnat_matches_reference(seed in any::<u64>(), kind_index in 0usize..10, density in any::<bool>()) {
        let inst = categorical_instance(seed);
        let kind = KernelKind::ALL[kind_index];
        let m = inst.table.n_rows();
        prop_assume!(!(kind == KernelKind::AdjPow2 && m == 1));
        prop_assume!(!(density && m < 2));
        let options = FitOptions { density, ..FitOptions::default() };
        let model = fit(inst.table.clone(), PredictorKind::Rasturnat, Some(kind.into()), options).unwrap();
        let fast = model.predict(&inst.query).unwrap();
        let naive = naive_reference_predict(&inst.table, &inst.query, model.kernel().unwrap(), model.density()).unwrap();
        prop_assert_eq!(fast.winner, naive.winner);
        for (a, b) in fast.scores.iter().zip(&naive.scores) {
            prop_assert!(rel(*a, *b) < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn scores_are_exact_per_outcome_sums(seed in any::<u64>(), kind_index in 0usize..10) {
        let inst = categorical_instance(seed);
        let kind = KernelKind::ALL[kind_index];
        prop_assume!(!(kind == KernelKind::AdjPow2 && inst.table.n_rows() == 1));
        let model = fit(inst.table.clone(), PredictorKind::Rasturnat, Some(kind.into()), FitOptions::default()).unwrap();
        let kernel = model.kernel().unwrap();
        let scores = deodata::similarity::all_match_scores(&inst.query, &inst.table, false).unwrap();
        let p = model.predict(&inst.query).unwrap();
        for (label, got) in p.scores.iter().enumerate() {
            let want = exact_sum(
                scores.iter().enumerate()
                    .filter(|(i, _)| inst.table.outcome(*i) == label)
                    .map(|(_, s)| kernel.value(s.dm)),
            );
            prop_assert_eq!(got.to_bits(), want.to_bits());
        }
    }

    #[test]
    fn density_factors_reweight_to_sts(seed in any::<u64>(), kind_index in 0usize..10) {
        let inst = if seed % 2 == 0 { categorical_instance(seed) } else { continuous_instance(seed) };
        let kind = KernelKind::ALL[kind_index];
        let m = inst.table.n_rows();
        prop_assume!(!(kind == KernelKind::AdjPow2 && m == 1));
        let kernel = KernelChoice::Kind(kind).build(m, inst.table.schema().total_weight(), None).unwrap();
        let d = compute_density_model(&inst.table, &kernel, true).unwrap();
        let reweighted = exact_sum(d.dcf.iter().zip(&d.tss).map(|(f, t)| f * t));
        prop_assert!(rel(reweighted, d.sts) < 1e-9);
        prop_assert!(d.dcf.iter().all(|f| *f > 0.0));
    }

    #[test]
    fn scaling_keeps_winners(seed in any::<u64>(), kind_index in 0usize..10, exp in -6i32..=6) {
        let inst = categorical_instance(seed);
        let kind = KernelKind::ALL[kind_index];
        prop_assume!(!(kind == KernelKind::AdjPow2 && inst.table.n_rows() == 1));
        let model = fit(inst.table, PredictorKind::Rasturnat, Some(kind.into()), FitOptions::default()).unwrap();
        let scaled = model.with_kernel(model.kernel().unwrap().scaled(10f64.powi(exp)).unwrap()).unwrap();
        let (a, b) = (model.predict(&inst.query).unwrap(), scaled.predict(&inst.query).unwrap());
        prop_assert_eq!(a.winner, b.winner);
        for (x, y) in a.likelihoods.iter().zip(&b.likelihoods) {
            prop_assert!(rel(*x, *y) < 1e-9);
        }
    }

    #[test]
    fn continuous_similarity_bounds(seed in any::<u64>()) {
        let inst = continuous_instance(seed);
        let model = fit(inst.table.clone(), PredictorKind::Nearest, None, FitOptions::default()).unwrap();
        let n = inst.table.n_attributes() as f64;
        for s in deodata::similarity::all_match_scores(&inst.query, &inst.table, false).unwrap() {
            prop_assert!((0.0..=n).contains(&s.ems));
            prop_assert_eq!(s.dm, n - s.ems);
        }
        prop_assert!(model.predict(&inst.query).is_ok());
    }
}

#[test]
fn bridge_agrees_with_delanga_on_seeded_family() {
    for seed in 0..300u64 {
        let inst = categorical_instance(seed);
        let bridge = fit(
            inst.table.clone(),
            PredictorKind::Rasturnat,
            Some(KernelKind::Bridge.into()),
            FitOptions::default(),
        )
        .unwrap();
        let delanga = fit(
            inst.table,
            PredictorKind::Delanga,
            None,
            FitOptions::default(),
        )
        .unwrap();
        assert_eq!(
            bridge.predict(&inst.query).unwrap().winner,
            delanga.predict(&inst.query).unwrap().winner,
            "seed {seed}"
        );
    }
}
