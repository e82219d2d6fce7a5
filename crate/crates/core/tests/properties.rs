//! Invariants of FPDs, losses, scaling and splits over random inputs.

use owam_core::fpd::{aggregate_window, fpd_stream, FpdConfig};
use owam_core::loss::{loss, LossKind};
use owam_core::normalize::Normalizer;
use owam_core::series::{split_index, SensorId, SensorSeries};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

#[test]
fn worked_splits() {
    assert_eq!(split_index(100, 0.8).unwrap(), 80);
    assert_eq!(split_index(100, 0.5).unwrap(), 50);
    assert_eq!(split_index(7, 0.8).unwrap(), 5);
}

#[test]
fn fpd_windows_match_hand_slicing() {
    let values: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64).collect();
    let s = SensorSeries::new(SensorId::new("a").unwrap(), 0, 300, values.clone()).unwrap();
    let fpds = fpd_stream(&s, &FpdConfig::default()).unwrap();
    assert_eq!(fpds.len(), 25);
    for (i, f) in fpds.iter().enumerate() {
        assert_eq!(f.window_start, i as i64 * 3600);
        assert_eq!(
            f.probs,
            aggregate_window(&values[i * 12..(i + 1) * 12]).unwrap()
        );
    }
}

proptest! {
    #[test]
    fn fpd_is_a_scale_invariant_distribution(
        values in prop::collection::vec(0.0f64..1000.0, 12),
        c in 0.01f64..100.0,
    ) {
        let p = aggregate_window(&values).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let q = aggregate_window(&scaled).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fpd_count_is_whole_windows(n in 0usize..400) {
        let s = SensorSeries::new(SensorId::new("a").unwrap(), 0, 300, vec![1.0; n.max(1)]).unwrap();
        prop_assert_eq!(fpd_stream(&s, &FpdConfig::default()).unwrap().len(), n.max(1) / 12);
    }

    #[test]
    fn losses_are_symmetric_and_non_negative(d in simplex(12), r in simplex(12)) {
        for kind in [LossKind::Emd, LossKind::Rmse] {
            let a = loss(kind, &d, &r).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - loss(kind, &r, &d).unwrap()).abs() < 1e-12);
            prop_assert!(loss(kind, &d, &d).unwrap() == 0.0);
        }
    }

    #[test]
    fn emd_obeys_the_triangle_inequality(a in simplex(8), b in simplex(8), c in simplex(8)) {
        let ab = loss(LossKind::Emd, &a, &b).unwrap();
        let bc = loss(LossKind::Emd, &b, &c).unwrap();
        let ac = loss(LossKind::Emd, &a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn normalizer_round_trips(
        cols in prop::collection::vec(prop::collection::vec(0.0f64..500.0, 2..50), 1..5),
        w in 0.0f64..1.0,
        probe in -1000.0f64..1000.0,
    ) {
        let len = cols.iter().map(Vec::len).min().unwrap();
        let cols: Vec<&[f64]> = cols.iter().map(|c| &c[..len]).collect();
        let weights = vec![w; cols.len() - 1];
        let n = Normalizer::fit(&cols, &weights).unwrap();
        for j in 0..n.features() {
            let back = n.inverse(j, n.transform(j, probe));
            prop_assert!((back - probe).abs() <= 1e-9 * probe.abs().max(1.0));
        }
    }

    #[test]
    fn split_parts_cover_the_stream(n in 2usize..10_000, f in 0.01f64..0.99) {
        match split_index(n, f) {
            Ok(cut) => {
                prop_assert!(cut > 0 && cut < n);
                prop_assert!(cut as f64 <= f * n as f64 + 1e-9);
                prop_assert!((cut + 1) as f64 > f * n as f64 - 1e-9);
            }
            Err(_) => {
                let c = (f * n as f64 + 1e-9).floor() as usize;
                prop_assert!(c == 0 || c == n);
            }
        }
    }
}
