use std::collections::BTreeMap;
use std::time::Duration;

use lowrank_core::RngSeed;
use lowrank_harness::config::{parse_config, ExperimentConfig};
use lowrank_harness::phase::reference_line;
use lowrank_harness::records::{parse_records_csv, write_records_csv, TrialRecord};
use proptest::prelude::*;

fn record() -> impl Strategy<Value = TrialRecord> {
    (
        prop::sample::select(vec!["complete", "phase", "svd-project", "clique"]),
        1usize..500,
        1usize..50,
        0.001f64..=1.0,
        any::<u64>(),
        prop::num::f64::POSITIVE | prop::num::f64::ZERO,
        any::<bool>(),
        (0u64..10_000, 0u32..1_000_000_000),
        prop::collection::btree_map("[a-z_]{1,8}", prop::num::f64::NORMAL, 0..4),
    )
        .prop_map(|(e, n, r, p, seed, err, success, (s, ns), extra)| TrialRecord {
            experiment: e.to_string(),
            n,
            r,
            p,
            seed: RngSeed(seed),
            rel_error: err,
            success,
            wall_time: Duration::new(s, ns),
            extra,
        })
}

proptest! {
    #[test]
    fn records_round_trip(records in prop::collection::vec(record(), 0..6)) {
        let text = write_records_csv(&records).unwrap();
        prop_assert_eq!(parse_records_csv(&text).unwrap(), records);
    }

    #[test]
    fn record_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_records_csv(&text);
    }

    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        if let Ok(file) = parse_config(&text) {
            let mut c = ExperimentConfig::default();
            if c.apply(&file).is_ok() {
                let _ = c.validate();
            }
        }
    }

    #[test]
    fn p_grid_is_increasing_and_ends_at_one(step in 0.005f64..=1.0) {
        let c = ExperimentConfig { grid_step: step, ..ExperimentConfig::default() };
        let g = c.p_grid();
        prop_assert_eq!(*g.last().unwrap(), 1.0);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g[0] > 0.0);
    }

    #[test]
    fn reference_line_is_linear_in_rank(r in 1usize..64, n in 2usize..2000, mu0 in 1.0f64..10.0) {
        let one = reference_line(mu0, 1, n);
        prop_assert!((reference_line(mu0, r, n) - r as f64 * one).abs() <= 1e-12 * r as f64 * one);
    }
}

#[test]
fn extra_map_order_does_not_matter() {
    let mut a = BTreeMap::new();
    a.insert("b".to_string(), 1.0);
    a.insert("a".to_string(), 2.0);
    let rec = TrialRecord {
        experiment: "complete".into(),
        n: 4,
        r: 1,
        p: 0.5,
        seed: RngSeed(0),
        rel_error: 0.0,
        success: true,
        wall_time: Duration::ZERO,
        extra: a,
    };
    let text = write_records_csv(std::slice::from_ref(&rec)).unwrap();
    assert!(text.contains("a=2.0;b=1.0"));
}
