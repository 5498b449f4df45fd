use proptest::prelude::*;
use xlmimo_core::spectral::{angle_time_map, range_angle_map, range_antenna_map, View};
use xlmimo_core::synth::{exact_equivalent_amplitude, residual_quadratic_phase, unit_noise};
use xlmimo_core::{
    detect_clusters, freq_distance, peaks_to_signatures, synth_exact, synth_narrowband, synth_wideband,
    RadarParams, Scenario, Target, C64, DEFAULT_REL_THRESHOLD,
};

fn single(m: usize, n: usize, alpha: f64, w: f64, r: f64) -> Scenario {
    Scenario::new(
        RadarParams::normalized(m, n, alpha),
        vec![Target::normalized(w, r, C64::new(1.0, 0.0))],
    )
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn beam_squint_and_range_migration_traces(
        alpha in 0.05f64..0.3,
        w in 0.05f64..0.5,
        r in 0.0f64..1.0,
        size in prop::sample::select(vec![32usize, 64, 128]),
    ) {
        let (m, n) = (size, size);
        let y = synth_wideband(&single(m, n, alpha, w, r)).unwrap();
        let at = angle_time_map(&y.data);
        for (t, p) in at.column_peaks().into_iter().enumerate() {
            let law = frac(w * (1.0 + alpha * t as f64 / n as f64));
            prop_assert!(freq_distance(p as f64 / m as f64, law) <= 1.0 / m as f64);
        }
        let ra = range_antenna_map(&y.data);
        for (a, q) in ra.row_peaks().into_iter().enumerate() {
            let law = frac(r + alpha * w * a as f64 / n as f64);
            prop_assert!(freq_distance(q as f64 / n as f64, law) <= 1.0 / n as f64);
        }
    }

    #[test]
    fn clusters_nest_as_threshold_rises(
        targets in prop::collection::vec((-0.5f64..0.5, 0.0f64..1.0, 0.2f64..1.0), 1..5),
        alpha in 0.0f64..0.3,
    ) {
        let s = Scenario::new(
            RadarParams::normalized(32, 32, alpha),
            targets.iter().map(|&(w, r, a)| Target::normalized(w, r, C64::new(a, 0.0))).collect(),
        );
        let map = range_angle_map(&synth_wideband(&s).unwrap().data);
        let mut coarse = detect_clusters(&map, 0.05).unwrap();
        for k in 2..20 {
            let fine = detect_clusters(&map, k as f64 * 0.05).unwrap();
            for cl in &fine {
                prop_assert!(cl.members.contains(&cl.peak));
                // Every surviving cluster sits inside exactly one lower-level cluster.
                let parents = coarse
                    .iter()
                    .filter(|p| cl.members.iter().all(|b| p.members.contains(b)))
                    .count();
                prop_assert_eq!(parents, 1);
            }
            // Every lower-level cluster holding the global peak survives.
            prop_assert!(!fine.is_empty());
            coarse = fine;
        }
    }
}

#[test]
fn raising_the_threshold_can_split_a_cluster() {
    use xlmimo_core::spectral::{AxisKind, MapGrid};
    // Two peaks joined by a weak bridge.
    let map = MapGrid {
        rows: 1,
        cols: 3,
        data: vec![1.0, 0.4, 1.0],
        row_axis: AxisKind::AngleBin,
        col_axis: AxisKind::RangeBin,
    };
    assert_eq!(detect_clusters(&map, 0.3).unwrap().len(), 1);
    assert_eq!(detect_clusters(&map, 0.5).unwrap().len(), 2);
}

#[test]
fn narrowband_views_have_no_migration() {
    let y = synth_narrowband(&single(32, 32, 0.3, 0.375, 0.25)).unwrap();
    assert!(angle_time_map(&y.data).column_peaks().iter().all(|&p| p == 12));
    assert!(range_antenna_map(&y.data).row_peaks().iter().all(|&q| q == 8));
    let map = View::RangeAngle.compute(&y.data);
    let top = map.max();
    assert_eq!(map.data.iter().filter(|&&v| v >= 0.99 * top).count(), 1);
}

#[test]
fn wideband_peak_leaves_its_bin() {
    let (m, n) = (64, 64);
    let (w, r) = (0.5, 0.25);
    let y = synth_wideband(&single(m, n, 0.2, w, r)).unwrap();
    let map = range_angle_map(&y.data);
    let clusters = detect_clusters(&map, DEFAULT_REL_THRESHOLD).unwrap();
    let sig = &peaks_to_signatures(&clusters[..1], &map).unwrap()[0];
    let off_angle = freq_distance(sig.omega_theta, w) * m as f64;
    let off_range = freq_distance(sig.omega_r, r) * n as f64;
    assert!(off_angle > 1.0 || off_range > 1.0, "{off_angle} {off_range}");
}

#[test]
fn separated_on_grid_targets_cluster_at_truth() {
    let truth = [(3usize, 4usize), (10, 20), (22, 9), (28, 28)];
    let s = Scenario::new(
        RadarParams::normalized(32, 32, 0.0),
        truth
            .iter()
            .map(|&(p, q)| Target::normalized(p as f64 / 32.0, q as f64 / 32.0, C64::new(1.0, 0.0)))
            .collect(),
    );
    let map = range_angle_map(&synth_narrowband(&s).unwrap().data);
    let clusters = detect_clusters(&map, 0.5).unwrap();
    assert_eq!(clusters.len(), truth.len());
    for c in &clusters {
        let hit = truth
            .iter()
            .any(|&(p, q)| (c.centroid.0 - p as f64).abs() <= 0.5 && (c.centroid.1 - q as f64).abs() <= 0.5);
        assert!(hit, "{:?}", c.centroid);
    }
}

fn overlap_scene(range2: f64) -> Scenario {
    let p = RadarParams::new(77e9, 0.1, 50e-6, 256.0 / 50e-6, 256)
        .unwrap()
        .with_light_speed(3e8);
    let targets = [(1.45, 35.0), (range2, 82.0), (2.25, 85.0)]
        .iter()
        .map(|&(r, th)| Target::physical(&p, r, th, C64::new(1.0, 0.0)).unwrap())
        .collect();
    Scenario::new(p, targets)
}

#[test]
fn overlap_merges_two_clusters() {
    let count = |s: &Scenario| {
        let y = synth_wideband(s).unwrap();
        detect_clusters(&range_angle_map(&y.data), DEFAULT_REL_THRESHOLD).unwrap().len()
    };
    assert_eq!(count(&overlap_scene(1.85)), 3);
    assert_eq!(count(&overlap_scene(2.10)), 2);
}

/// IF phase of one echo delayed by `tau`, written out from the chirp:
/// `f_c tau + gamma tau t - gamma tau^2 / 2`, in cycles.
fn if_cycles(p: &RadarParams, tau: f64, t: f64) -> f64 {
    let gamma = p.alpha * p.carrier_hz / p.chirp_s;
    p.carrier_hz * tau + gamma * tau * t - 0.5 * gamma * tau * tau
}

#[test]
fn exact_model_follows_per_element_delays() {
    let p = RadarParams::new(77e9, 0.2, 40e-6, 2e6, 16).unwrap();
    let targets = vec![
        Target::physical(&p, 0.3, 20.0, C64::new(0.5, 0.5)).unwrap(),
        Target::physical(&p, 0.62, -48.0, C64::new(1.0, 0.0)).unwrap(),
    ];
    let y = synth_exact(&Scenario::new(p.clone(), targets.clone())).unwrap();
    let c = p.light_speed;
    for m in 0..p.elements {
        for n in 0..p.samples {
            let want: C64 = targets
                .iter()
                .map(|t| {
                    let tau = 2.0 * t.range_m.unwrap() / c
                        + m as f64 * p.spacing_m * t.theta_deg.unwrap().to_radians().sin() / c;
                    let phi = 2.0 * std::f64::consts::PI * if_cycles(&p, tau, n as f64 / p.sample_rate_hz);
                    t.amplitude.conj() * C64::from_polar(1.0, phi)
                })
                .sum();
            assert!((y.data.get(m, n) - want).norm() < 1e-6, "({m}, {n})");
        }
    }
}

#[test]
fn exact_model_is_wideband_up_to_residual_phases() {
    let p = RadarParams::new(77e9, 0.1, 50e-6, 5.12e6, 128).unwrap();
    let t = Target::physical(&p, 4.0, 60.0, C64::new(0.8, -0.3)).unwrap();
    let exact = synth_exact(&Scenario::new(p.clone(), vec![t.clone()])).unwrap();
    let equiv = Target {
        amplitude: exact_equivalent_amplitude(&p, &t).unwrap(),
        ..t.clone()
    };
    let wide = synth_wideband(&Scenario::new(p.clone(), vec![equiv])).unwrap();
    for m in [0usize, 1, 64, 127] {
        let (a, b) = residual_quadratic_phase(&p, &t, m).unwrap();
        for n in [0usize, 7, 200, 255] {
            let ratio = exact.data.get(m, n) / wide.data.get(m, n);
            let want = C64::from_polar(1.0, -(a + b));
            assert!((ratio - want).norm() < 1e-6, "({m}, {n})");
        }
    }
}

#[test]
fn noise_samples_are_uncorrelated_across_cells() {
    let n = 20000;
    let mut lag_row = C64::new(0.0, 0.0);
    let mut lag_col = C64::new(0.0, 0.0);
    let mut mean = C64::new(0.0, 0.0);
    for i in 0..n {
        let z = unit_noise(42, i % 100, i / 100);
        mean += z;
        lag_row += z * unit_noise(42, i % 100 + 1, i / 100).conj();
        lag_col += z * unit_noise(42, i % 100, i / 100 + 1).conj();
    }
    let tol = 5.0 / (n as f64).sqrt();
    assert!((mean / n as f64).norm() < tol);
    assert!((lag_row / n as f64).norm() < tol);
    assert!((lag_col / n as f64).norm() < tol);
}
