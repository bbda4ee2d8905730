mod common;

use sequencer_core::metrics::{emd_1d, MetricKind};
use sequencer_core::synth::{generate_pulse_dataset, PulseDatasetSpec};
use sequencer_core::{insert_object, run, run_approx, ApproxConfig, ObjectSet64, SequencerConfig64};

/// Gaussian bumps sliding one pixel per object: a clean one-dimensional trend.
fn bump_path(n_obj: usize, n_pix: usize) -> Vec<Vec<f64>> {
    (0..n_obj)
        .map(|t| {
            let c = 5.0 + t as f64 * (n_pix as f64 - 10.0) / (n_obj - 1) as f64;
            (0..n_pix).map(|i| 0.01 + (-((i as f64 - c).powi(2)) / 4.5).exp()).collect()
        })
        .collect()
}

fn set(rows: &[Vec<f64>]) -> ObjectSet64 {
    sequencer_core::load_object_set(rows, None).unwrap()
}

fn emd_only() -> SequencerConfig64 {
    let mut c = SequencerConfig64::with_metrics([MetricKind::Emd1d.into()]);
    c.max_depth = Some(0);
    c
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

#[test]
fn narrow_pulses_without_background_reduce_to_shifted_deltas() {
    let spec = PulseDatasetSpec {
        n_obj: 20,
        n_pix: 60,
        n_pulses: 1,
        pulse_width: 0.3,
        drift: 19.0,
        background_ratio: 0.0,
        background_baseline: 0.0,
        ..PulseDatasetSpec::default()
    };
    let data = generate_pulse_dataset::<f64>(&spec).unwrap();
    let res = run(&data.objects, &emd_only()).unwrap();
    assert_eq!(res.eta_combined(), 19.0);
    let rho = common::recovery(&res.ordering, &data.true_rank);
    assert_eq!(rho.abs(), 1.0);
}

#[test]
fn approx_with_full_subset_is_the_exact_run() {
    let objects = set(&bump_path(30, 80));
    let config = SequencerConfig64::default();
    let exact = run(&objects, &config).unwrap();
    let approx = run_approx(&objects, &ApproxConfig::new(30, 0.2, 9), &config).unwrap();
    assert_eq!(approx.ordering, exact.ordering);
    assert_eq!(approx.eta_combined(), exact.eta_combined());
}

#[test]
fn approx_places_every_object_once_and_is_repeatable() {
    let objects = set(&bump_path(60, 80));
    let config = SequencerConfig64::default();
    let ac = ApproxConfig::new(20, 0.25, 4);
    let a = run_approx(&objects, &ac, &config).unwrap();
    let b = run_approx(&objects, &ac, &config).unwrap();
    assert_eq!(a.ordering, b.ordering);
    let mut seen = a.ordering.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..60).collect::<Vec<_>>());
    let truth: Vec<usize> = (0..60).collect();
    assert!(common::recovery(&a.ordering, &truth).abs() > 0.99);
}

#[test]
fn approx_places_duplicate_of_a_placed_object_beside_it() {
    // a subset of all but one object: whichever of the pair is left out is
    // inserted against a sequence that already holds the other
    let mut rows = bump_path(20, 60);
    for twin in [0usize, 7, 13, 19] {
        rows.truncate(20);
        rows.push(rows[twin].clone());
        let objects = set(&rows);
        for seed in 0..8 {
            let res = run_approx(&objects, &ApproxConfig::new(20, 0.2, seed), &SequencerConfig64::default()).unwrap();
            let pos = res.positions();
            assert_eq!(pos[20].abs_diff(pos[twin]), 1, "twin {twin} seed {seed}: {:?}", res.ordering);
        }
    }
}

#[test]
fn insertion_matches_exhaustive_slot_search() {
    let n_pix = 10;
    let objects = set(&[one_hot(n_pix, 3), one_hot(n_pix, 0), one_hot(n_pix, 7)]);
    let config = emd_only();
    let res = run(&objects, &config).unwrap();
    for k in 0..n_pix {
        let x = one_hot(n_pix, k);
        let got = insert_object(&res, &objects, &x, &config).unwrap();
        let slot = got.iter().position(|&j| j == 3).unwrap();

        let mut rows: Vec<Vec<f64>> = objects.rows().map(<[f64]>::to_vec).collect();
        rows.push(x.clone());
        let length = |order: &[usize]| -> f64 {
            order.windows(2).map(|w| emd_1d(&rows[w[0]], &rows[w[1]]).unwrap()).sum()
        };
        let costs: Vec<f64> = (0..=3)
            .map(|s| {
                let mut o = res.ordering.clone();
                o.insert(s, 3);
                length(&o)
            })
            .collect();
        let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(costs[slot], best, "k = {k}, slot {slot}, costs {costs:?}");
    }
}

#[test]
fn insertion_of_duplicate_lands_beside_twin() {
    let objects = set(&bump_path(25, 60));
    let config = SequencerConfig64::default();
    let res = run(&objects, &config).unwrap();
    for twin in 0..25 {
        let out = insert_object(&res, &objects, objects.row(twin), &config).unwrap();
        let t = res.positions()[twin];
        let p = out.iter().position(|&j| j == 25).unwrap();
        assert!(p == t || p == t + 1, "twin {twin}");
    }
}

#[test]
fn disjoint_object_goes_to_an_end() {
    let n_pix = 20;
    let rows: Vec<Vec<f64>> = (0..6).map(|k| one_hot(n_pix, k)).collect();
    let objects = set(&rows);
    let config = emd_only();
    let res = run(&objects, &config).unwrap();
    let out = insert_object(&res, &objects, &one_hot(n_pix, 19), &config).unwrap();
    let p = out.iter().position(|&j| j == 6).unwrap();
    assert!(p == 0 || p == 6, "{out:?}");
    assert!(insert_object(&res, &objects, &one_hot(5, 1), &config).is_err());
}
