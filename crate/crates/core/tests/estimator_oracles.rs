use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlmimo_core::estimate::Diagnostic;
use xlmimo_core::{
    cis_cycles, compensate_swe, estimate_narrowband, estimate_wideband, freq_distance, match_signatures,
    synth_narrowband, synth_wideband, CMatrix, EstimatorConfig, Projection, RadarParams, Scenario,
    SignatureEstimate, Target, C64,
};

fn unit(t: f64, r: f64) -> Target {
    Target::normalized(t, r, C64::new(1.0, 0.0))
}

fn scenario(m: usize, n: usize, alpha: f64, targets: Vec<Target>) -> Scenario {
    Scenario::new(RadarParams::normalized(m, n, alpha), targets)
}

fn pairs(sig: &[SignatureEstimate]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = sig.iter().map(|s| (s.omega_theta, s.omega_r)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

/// Greedy 2D matched-filter search over the full Kronecker grid, with a
/// joint least-squares refit after every pick.
fn grid_search_2d(y: &CMatrix, oversampling: usize, k: usize) -> Vec<(f64, f64)> {
    let (rows, cols) = (y.rows(), y.cols());
    let ga = oversampling * rows;
    let gr = oversampling * cols;
    let angle = |g: usize| -0.5 + g as f64 * (1.0 / ga as f64);
    let range = |g: usize| g as f64 * (1.0 / gr as f64);
    let atom = |a: usize, r: usize| -> Vec<C64> {
        let (t, f) = (angle(a), range(r));
        (0..rows * cols)
            .map(|i| cis_cycles(t * (i / cols) as f64) * cis_cycles(f * (i % cols) as f64))
            .collect()
    };
    let target = y.as_slice().to_vec();
    let mut residual = target.clone();
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for _ in 0..k {
        // Correlate along antennas, then along time.
        let mut partial = vec![C64::new(0.0, 0.0); ga * cols];
        for a in 0..ga {
            for m in 0..rows {
                let w = cis_cycles(-angle(a) * m as f64);
                for n in 0..cols {
                    partial[a * cols + n] += w * residual[m * cols + n];
                }
            }
        }
        let mut best = (0, 0, -1.0);
        for a in 0..ga {
            for r in 0..gr {
                if picked.contains(&(a, r)) {
                    continue;
                }
                let c: C64 = (0..cols).map(|n| partial[a * cols + n] * cis_cycles(-range(r) * n as f64)).sum();
                if c.norm_sqr() > best.2 {
                    best = (a, r, c.norm_sqr());
                }
            }
        }
        picked.push((best.0, best.1));
        let atoms: Vec<Vec<C64>> = picked.iter().map(|&(a, r)| atom(a, r)).collect();
        let coef = gram_solve(&atoms, &target);
        residual = target.clone();
        for (v, c) in atoms.iter().zip(&coef) {
            for (z, a) in residual.iter_mut().zip(v) {
                *z -= c * a;
            }
        }
    }
    let mut out: Vec<(f64, f64)> = picked.iter().map(|&(a, r)| (angle(a), range(r))).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out
}

fn gram_solve(cols: &[Vec<C64>], y: &[C64]) -> Vec<C64> {
    let k = cols.len();
    let mut a = vec![vec![C64::new(0.0, 0.0); k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = cols[i].iter().zip(&cols[j]).map(|(u, v)| u.conj() * v).sum();
        }
        a[i][k] = cols[i].iter().zip(y).map(|(u, v)| u.conj() * v).sum();
    }
    for c in 0..k {
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    let v = a[c][j];
                    a[r][j] -= f * v;
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

/// `k` distinct grid indices, circularly at least `gap` apart.
fn spaced(rng: &mut ChaCha8Rng, size: usize, gap: usize, k: usize) -> Vec<usize> {
    loop {
        let mut v: Vec<usize> = (0..k).map(|_| rng.random_range(0..size)).collect();
        v.sort();
        let ok = (0..k).all(|i| {
            let next = if i + 1 < k { v[i + 1] } else { v[0] + size };
            k == 1 || next - v[i] >= gap
        });
        if ok {
            return v;
        }
    }
}

#[test]
fn narrowband_matches_2d_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (m, n, ovs) = (32, 32, 4);
    for trial in 0..50 {
        let k = rng.random_range(1..=3);
        let ia = spaced(&mut rng, ovs * m, 2 * ovs, k);
        let ir = spaced(&mut rng, ovs * n, 2 * ovs, k);
        let targets: Vec<Target> = (0..k)
            .map(|i| {
                let phase = rng.random::<f64>();
                Target::normalized(
                    -0.5 + ia[i] as f64 * (1.0 / (ovs * m) as f64),
                    ir[i] as f64 * (1.0 / (ovs * n) as f64),
                    cis_cycles(phase),
                )
            })
            .collect();
        let y = synth_narrowband(&scenario(m, n, 0.0, targets)).unwrap();
        let cfg = EstimatorConfig {
            oversampling: ovs,
            ..EstimatorConfig::with_known_sparsity(k)
        };
        let est = estimate_narrowband(&y, &cfg).unwrap();
        let got = pairs(&est.signatures);
        let want = grid_search_2d(&y.data, ovs, k);
        assert_eq!(got.len(), want.len(), "trial {trial}");
        for (g, w) in got.iter().zip(&want) {
            assert!(freq_distance(g.0, w.0) < 1e-12 && freq_distance(g.1, w.1) < 1e-12, "trial {trial}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn same_range_pair_agrees_with_grid_search() {
    let y = synth_narrowband(&scenario(32, 32, 0.0, vec![unit(-0.1875, 0.25), unit(0.3125, 0.25)])).unwrap();
    let cfg = EstimatorConfig {
        oversampling: 4,
        ..EstimatorConfig::with_known_sparsity(2)
    };
    let est = estimate_narrowband(&y, &cfg).unwrap();
    assert_eq!(est.groups, 1);
    assert_eq!(pairs(&est.signatures), grid_search_2d(&y.data, 4, 2));
}

#[test]
fn three_targets_two_range_bins() {
    let (m, n) = (64.0, 64.0);
    let truth = vec![
        unit(15.15 / m, 20.25 / n),
        unit(25.45 / m, 45.15 / n),
        unit(55.45 / m, 45.50 / n),
    ];
    let y = synth_narrowband(&scenario(64, 64, 0.0, truth.clone())).unwrap();
    let est = estimate_narrowband(&y, &EstimatorConfig::with_known_sparsity(3)).unwrap();
    assert_eq!(est.groups, 2);
    assert_eq!(est.signatures.len(), 3);
    let tol = 1.0 / (2.0 * 16.0 * 64.0);
    let rep = match_signatures(&truth, &est.signatures, tol, tol);
    assert_eq!(rep.matched(), 3);
    // The two targets sharing a range bin land in one group.
    let shared: Vec<usize> = rep.pairs.iter().filter(|p| p.truth > 0).map(|p| est.signatures[p.estimate].group_id).collect();
    assert_eq!(shared[0], shared[1]);
}

#[test]
fn reported_pairs_match_within_tolerance() {
    let truth = vec![unit(0.2868, 0.2908), unit(0.4924, 0.4211), unit(0.4981, 0.4512)];
    let y = synth_wideband(&scenario(256, 256, 0.1, truth.clone())).unwrap();
    let est = estimate_wideband(&y, &EstimatorConfig::with_known_sparsity(3)).unwrap();
    let rep = match_signatures(&truth, &est.signatures, 0.01, 0.01);
    assert_eq!(rep.matched(), 3);
    assert!(rep.false_alarms.is_empty());
}

#[test]
fn reported_detection_table_matches() {
    let truth = vec![unit(0.2868, 0.2908), unit(0.4924, 0.4211), unit(0.4981, 0.4512)];
    let detected = [(0.2870, 0.2905), (0.4925, 0.4310), (0.4980, 0.4515)];
    let est: Vec<SignatureEstimate> = detected
        .iter()
        .map(|&(t, r)| SignatureEstimate {
            omega_theta: t,
            omega_r: r,
            amplitude: C64::new(1.0, 0.0),
            group_id: 0,
        })
        .collect();
    let rep = match_signatures(&truth, &est, 0.01, 0.01);
    assert_eq!(rep.matched(), 3);
    let want = [(2e-4, 3e-4), (1e-4, 9.9e-3), (1e-4, 3e-4)];
    for (p, w) in rep.pairs.iter().zip(want) {
        assert_eq!(p.truth, p.estimate);
        assert!((p.error_theta - w.0).abs() < 1e-9 && (p.error_r - w.1).abs() < 1e-9);
    }
}

#[test]
fn wideband_reduces_to_narrowband_without_squint() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let k = rng.random_range(1..=3);
        let ia = spaced(&mut rng, 4 * 32, 8, k);
        let ir = spaced(&mut rng, 4 * 32, 8, k);
        let targets: Vec<Target> = (0..k)
            .map(|i| Target::normalized(-0.5 + ia[i] as f64 / 128.0, ir[i] as f64 / 128.0, cis_cycles(0.1 * i as f64)))
            .collect();
        let y = synth_wideband(&scenario(32, 32, 0.0, targets)).unwrap();
        let cfg = EstimatorConfig {
            oversampling: 4,
            ..EstimatorConfig::with_known_sparsity(k)
        };
        let a = estimate_narrowband(&y, &cfg).unwrap();
        let b = estimate_wideband(&y, &cfg).unwrap();
        assert_eq!(pairs(&a.signatures), pairs(&b.signatures));
        for s in &a.signatures {
            let t = b.signatures.iter().find(|t| t.omega_theta == s.omega_theta && t.omega_r == s.omega_r).unwrap();
            assert!((s.amplitude - t.amplitude).norm() < 1e-9);
        }
    }
}

#[test]
fn pairing_is_total_and_grouped() {
    let y = synth_wideband(&scenario(64, 64, 0.15, vec![unit(0.25, 0.3), unit(0.25, 0.6), unit(-0.3, 0.45)])).unwrap();
    let est = estimate_wideband(&y, &EstimatorConfig::with_known_sparsity(3)).unwrap();
    assert_eq!(est.signatures.len(), 3);
    assert_eq!(est.groups, 2);
    for s in &est.signatures {
        assert!(s.omega_theta.is_finite() && s.omega_r.is_finite());
        assert!(s.group_id < est.groups);
    }
    let ids: Vec<usize> = est.signatures.iter().map(|s| s.group_id).collect();
    assert_eq!(ids, vec![0, 1, 1]);
}

#[test]
fn nearest_bin_and_matched_agree_on_grid() {
    let targets = vec![unit(0.125, 0.25), unit(-0.25, 0.5)];
    for wide in [false, true] {
        let y = if wide {
            synth_wideband(&scenario(32, 32, 0.1, targets.clone())).unwrap()
        } else {
            synth_narrowband(&scenario(32, 32, 0.0, targets.clone())).unwrap()
        };
        let matched = EstimatorConfig::with_known_sparsity(2);
        let nearest = EstimatorConfig {
            projection: Projection::NearestBin,
            ..matched.clone()
        };
        let run = |c: &EstimatorConfig| if wide { estimate_wideband(&y, c) } else { estimate_narrowband(&y, c) }.unwrap();
        assert_eq!(pairs(&run(&matched).signatures), pairs(&run(&nearest).signatures));
    }
}

#[test]
fn pure_noise_with_noise_floor_gives_nothing() {
    let s = scenario(32, 32, 0.1, vec![]).with_noise(0.5, 3);
    let y = synth_wideband(&s).unwrap();
    let cfg = EstimatorConfig::with_noise_floor(0.5);
    for est in [estimate_narrowband(&y, &cfg).unwrap(), estimate_wideband(&y, &cfg).unwrap()] {
        assert!(est.signatures.is_empty());
        assert_eq!(est.diagnostics, vec![Diagnostic::EmptyFirstStage]);
    }
}

#[test]
fn noisy_targets_survive_noise_floor_rule() {
    let truth = vec![unit(0.2, 0.3), unit(-0.35, 0.7)];
    let s = scenario(64, 64, 0.1, truth.clone()).with_noise(0.3, 9);
    let y = synth_wideband(&s).unwrap();
    let est = estimate_wideband(&y, &EstimatorConfig::with_noise_floor(0.3)).unwrap();
    let rep = match_signatures(&truth, &est.signatures, 0.01, 0.01);
    assert_eq!(rep.matched(), 2);
}

#[test]
fn compensation_with_offset_leaves_bounded_phase() {
    let (m, n, alpha, w, eps) = (32, 48, 0.2, 0.37, 1e-3);
    let y = synth_wideband(&scenario(m, n, alpha, vec![unit(w, 0.1)])).unwrap();
    let nb = synth_narrowband(&scenario(m, n, alpha, vec![unit(w, 0.1)])).unwrap();
    let comp = compensate_swe(&y, w + eps, alpha);
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..n {
            let expect = -2.0 * std::f64::consts::PI * alpha / n as f64 * eps * (i * j) as f64;
            let got = (comp.data.get(i, j) / nb.data.get(i, j)).arg();
            assert!((got - expect).abs() < 1e-9);
            worst = worst.max(got.abs());
        }
    }
    let bound = 2.0 * std::f64::consts::PI * eps * alpha * (m * n) as f64 / n as f64;
    assert!(worst <= bound);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compensation_recovers_narrowband(
        w in -0.5f64..0.5,
        r in 0.0f64..1.0,
        alpha in 0.0f64..0.5,
        m in 1usize..40,
        n in 1usize..40,
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let t = Target::normalized(w, r, C64::new(re, im));
        let wide = synth_wideband(&scenario(m, n, alpha, vec![t.clone()])).unwrap();
        let narrow = synth_narrowband(&scenario(m, n, alpha, vec![t])).unwrap();
        prop_assert!(compensate_swe(&wide, w, alpha).data.max_abs_diff(&narrow.data) < 1e-12);
    }

    #[test]
    fn single_target_amplitude_is_recovered(
        ia in 0usize..128,
        ir in 0usize..128,
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
        alpha in 0.0f64..0.3,
    ) {
        let amp = C64::new(re, im);
        prop_assume!(amp.norm() > 0.05);
        let t = Target::normalized(-0.5 + ia as f64 / 128.0, ir as f64 / 128.0, amp);
        let cfg = EstimatorConfig { oversampling: 4, ..EstimatorConfig::with_known_sparsity(1) };
        let nb = synth_narrowband(&scenario(32, 32, 0.0, vec![t.clone()])).unwrap();
        let wb = synth_wideband(&scenario(32, 32, alpha, vec![t])).unwrap();
        let a = estimate_narrowband(&nb, &cfg).unwrap();
        let b = estimate_wideband(&wb, &cfg).unwrap();
        prop_assert_eq!(a.signatures.len(), 1);
        prop_assert_eq!(b.signatures.len(), 1);
        prop_assert!((a.signatures[0].amplitude.norm() - amp.norm()).abs() < 1e-6);
        prop_assert!((b.signatures[0].amplitude.norm() - amp.norm()).abs() < 1e-6);
    }
}
