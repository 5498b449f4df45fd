//! Decoupled signature estimation and signature matching.
//!
//! The narrowband estimator resolves range first from a single antenna,
//! then angle per range group. The wideband estimator resolves angle first
//! from fast-time index 0, where the coupled space-time term is exactly one,
//! then range per angle group after removing that term. In both cases every
//! second-stage atom is tied to the first-stage group it came from, so the
//! output is already paired.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::linalg::{dot, lstsq, IncrementalQr};
use crate::matrix::CMatrix;
use crate::model::Target;
use crate::sparse::{omp_multi, Atom, Dictionary, SparseError, StopReason, StopRule};
use crate::synth::{sw_factor, IfMatrix};
use crate::{cis_cycles, freq_distance, wrap_signed, wrap_unit, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("IF matrix is empty ({0} x {1})")]
    EmptyMatrix(usize, usize),
    #[error("merge tolerance must be finite and >= 0, got {0}")]
    MergeTolerance(f64),
    #[error("relative amplitude floor must lie in [0, 1), got {0}")]
    AmplitudeFloor(f64),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// How the second stage collapses the matrix onto one first-stage group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// Least-squares fit onto the steering vectors at the estimated
    /// frequencies of all groups.
    Matched,
    /// DFT coefficient at the bin nearest to the group frequency.
    NearestBin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    /// Dictionary oversampling `O_f`.
    pub oversampling: usize,
    pub stage1_stop: StopRule,
    /// Applied to the projected vectors; a noise-floor rule is rescaled to
    /// the projection's noise level.
    pub stage2_stop: StopRule,
    /// Group merge tolerance; `None` uses half a resolution bin of the
    /// axis being merged.
    pub merge_tol: Option<f64>,
    /// Number of leading first-stage indices combined noncoherently.
    pub snapshots: usize,
    pub projection: Projection,
    /// Narrowband only: re-pick each pair's range against the signal
    /// projected onto its own angle.
    pub refine_pairs: bool,
    /// Keep at most this many signatures, strongest first.
    pub max_signatures: Option<usize>,
    /// Drop components weaker than this fraction of the strongest.
    pub min_relative_amplitude: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            oversampling: 16,
            stage1_stop: StopRule::noise_floor(0.0),
            stage2_stop: StopRule::noise_floor(0.0),
            merge_tol: None,
            snapshots: 1,
            projection: Projection::Matched,
            refine_pairs: true,
            max_signatures: None,
            min_relative_amplitude: 0.05,
        }
    }
}

impl EstimatorConfig {
    /// Both stages stop after `k` atoms and at most `k` signatures are kept.
    pub fn with_known_sparsity(k: usize) -> Self {
        Self {
            stage1_stop: StopRule::sparsity(k),
            stage2_stop: StopRule::sparsity(k),
            max_signatures: Some(k),
            ..Self::default()
        }
    }

    /// Noise-floor stop rules for per-sample noise level `sigma`.
    pub fn with_noise_floor(sigma: f64) -> Self {
        Self {
            stage1_stop: StopRule::noise_floor(sigma),
            stage2_stop: StopRule::noise_floor(sigma),
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), EstimateError> {
        if let Some(d) = self.merge_tol {
            if !(d.is_finite() && d >= 0.0) {
                return Err(EstimateError::MergeTolerance(d));
            }
        }
        let a = self.min_relative_amplitude;
        if !(0.0..1.0).contains(&a) {
            return Err(EstimateError::AmplitudeFloor(a));
        }
        Ok(())
    }

    fn tol(&self, len: usize) -> f64 {
        self.merge_tol.unwrap_or(0.5 / len as f64)
    }
}

/// One paired target estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureEstimate {
    pub omega_theta: f64,
    pub omega_r: f64,
    pub amplitude: C64,
    /// First-stage group the pair was found under.
    pub group_id: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    /// The first stage found nothing above its stop rule.
    EmptyFirstStage,
    /// The first stage stopped on an ill-conditioned atom set.
    FirstStageIllConditioned,
    /// A group's steering vector was dependent on earlier groups and was
    /// dropped before the second stage.
    GroupDropped { group: usize },
    /// A group's second stage found no atoms.
    EmptyGroup { group: usize },
    /// A group's second stage stopped on an ill-conditioned atom set.
    GroupIllConditioned { group: usize },
    /// Pair refinement skipped because the angle steering vectors were
    /// dependent.
    RefinementSkipped,
    /// Joint amplitude refit skipped because the signature atoms were
    /// dependent; second-stage amplitudes are reported instead.
    RefitSkipped,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Estimate {
    /// Sorted by group frequency, then by the second-axis frequency.
    pub signatures: Vec<SignatureEstimate>,
    /// Number of first-stage groups that own at least one signature.
    pub groups: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// A merged first-stage component.
#[derive(Clone, Debug)]
struct Group {
    frequency: f64,
    /// Frequency of the earliest-selected member.
    first: f64,
    members: Vec<f64>,
    strength: f64,
}

/// Chain-merges atoms whose frequencies lie within `tol` of a neighbour,
/// circularly. Group frequency is the magnitude-weighted circular mean.
fn merge_atoms(atoms: &[Atom], tol: f64) -> Vec<Group> {
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| {
        wrap_unit(atoms[a].frequency)
            .total_cmp(&wrap_unit(atoms[b].frequency))
            .then(a.cmp(&b))
    });
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match chains.last_mut() {
            Some(c) if freq_distance(atoms[*c.last().unwrap()].frequency, atoms[i].frequency) <= tol => {
                c.push(i)
            }
            _ => chains.push(vec![i]),
        }
    }
    if chains.len() > 1 {
        let head = chains[0][0];
        let tail = *chains.last().unwrap().last().unwrap();
        if freq_distance(atoms[head].frequency, atoms[tail].frequency) <= tol {
            let mut last = chains.pop().unwrap();
            last.extend_from_slice(&chains[0]);
            chains[0] = last;
        }
    }
    chains
        .into_iter()
        .map(|c| {
            let reference = atoms[c[0]].frequency;
            let mut wsum = 0.0;
            let mut acc = 0.0;
            for &i in &c {
                let w = atoms[i].power.sqrt();
                wsum += w;
                acc += w * wrap_signed(atoms[i].frequency - reference);
            }
            let offset = if wsum > 0.0 { acc / wsum } else { 0.0 };
            let first = c.iter().min_by_key(|&&i| atoms[i].order).map(|&i| atoms[i].frequency).unwrap();
            Group {
                frequency: reference + offset,
                first,
                members: c.iter().map(|&i| atoms[i].frequency).collect(),
                strength: c.iter().map(|&i| atoms[i].power.sqrt()).fold(0.0, f64::max),
            }
        })
        .collect()
}

fn keep_strong(groups: Vec<Group>, floor: f64) -> Vec<Group> {
    let top = groups.iter().map(|g| g.strength).fold(0.0, f64::max);
    groups.into_iter().filter(|g| g.strength >= floor * top).collect()
}

fn steering(len: usize, f: f64) -> Vec<C64> {
    (0..len).map(|l| cis_cycles(f * l as f64)).collect()
}

/// Mean of `y[l] e^{-j2pi k l / L}` at the bin `k` nearest to `f`.
fn nearest_bin(y: &[C64], f: f64) -> C64 {
    let len = y.len();
    let k = (f * len as f64).round();
    let acc: C64 = y
        .iter()
        .enumerate()
        .map(|(l, v)| v * cis_cycles(-k * l as f64 / len as f64))
        .sum();
    acc / len as f64
}

/// Candidate signature before the final refit.
struct Pair {
    group: usize,
    theta: f64,
    range: f64,
    amplitude: C64,
}

/// Removes near-duplicate pairs, keeping the stronger one.
fn dedupe(mut pairs: Vec<Pair>, tol_theta: f64, tol_r: f64) -> Vec<Pair> {
    pairs.sort_by(|a, b| b.amplitude.norm().total_cmp(&a.amplitude.norm()));
    let mut kept: Vec<Pair> = Vec::new();
    for p in pairs {
        let dup = kept.iter().any(|k| {
            freq_distance(k.theta, p.theta) <= tol_theta && freq_distance(k.range, p.range) <= tol_r
        });
        if !dup {
            kept.push(p);
        }
    }
    kept
}

/// Joint least-squares amplitudes of all pairs on the full matrix.
fn refit(y: &CMatrix, pairs: &[Pair], alpha: f64) -> Option<Vec<C64>> {
    let (rows, cols) = (y.rows(), y.cols());
    let atoms: Vec<Vec<C64>> = pairs
        .iter()
        .map(|p| {
            let b = steering(rows, p.theta);
            let a = steering(cols, p.range);
            let mut v = Vec::with_capacity(rows * cols);
            for m in 0..rows {
                for n in 0..cols {
                    let mut z = b[m] * a[n];
                    if alpha != 0.0 {
                        z *= sw_factor(alpha, cols, p.theta, m, n);
                    }
                    v.push(z);
                }
            }
            v
        })
        .collect();
    lstsq(&atoms, y.as_slice())
}

/// Dedupe, joint refit, weak-component prune and sparsity cap.
fn finish(
    y: &CMatrix,
    pairs: Vec<Pair>,
    alpha: f64,
    cfg: &EstimatorConfig,
    diagnostics: &mut Vec<Diagnostic>,
) -> Vec<Pair> {
    let mut pairs = dedupe(pairs, cfg.tol(y.rows()), cfg.tol(y.cols()));
    let mut refit_pass = |pairs: &mut Vec<Pair>| match refit(y, pairs, alpha) {
        Some(amps) => {
            for (p, a) in pairs.iter_mut().zip(amps) {
                p.amplitude = a;
            }
        }
        None => {
            if !diagnostics.contains(&Diagnostic::RefitSkipped) {
                diagnostics.push(Diagnostic::RefitSkipped);
            }
        }
    };
    refit_pass(&mut pairs);
    let before = pairs.len();
    let top = pairs.iter().map(|p| p.amplitude.norm()).fold(0.0, f64::max);
    pairs.retain(|p| p.amplitude.norm() >= cfg.min_relative_amplitude * top);
    pairs.sort_by(|a, b| b.amplitude.norm().total_cmp(&a.amplitude.norm()));
    if let Some(k) = cfg.max_signatures {
        pairs.truncate(k);
    }
    if pairs.len() != before {
        refit_pass(&mut pairs);
    }
    pairs
}

/// Numbers the surviving groups in frequency order and sorts the output.
fn assemble(
    pairs: Vec<Pair>,
    group_freq: &[f64],
    angle_first: bool,
    diagnostics: Vec<Diagnostic>,
) -> Estimate {
    let key = |f: f64| if angle_first { wrap_signed(f) } else { wrap_unit(f) };
    let second = |p: &Pair| if angle_first { wrap_unit(p.range) } else { wrap_signed(p.theta) };
    let mut used: Vec<usize> = pairs.iter().map(|p| p.group).collect();
    used.sort_by(|&a, &b| key(group_freq[a]).total_cmp(&key(group_freq[b])).then(a.cmp(&b)));
    used.dedup();
    let mut signatures: Vec<(f64, SignatureEstimate)> = pairs
        .iter()
        .map(|p| {
            let id = used.iter().position(|&g| g == p.group).unwrap();
            (
                second(p),
                SignatureEstimate {
                    omega_theta: wrap_signed(p.theta),
                    omega_r: wrap_unit(p.range),
                    amplitude: p.amplitude,
                    group_id: id,
                },
            )
        })
        .collect();
    signatures.sort_by(|a, b| a.1.group_id.cmp(&b.1.group_id).then(a.0.total_cmp(&b.0)));
    Estimate {
        groups: used.len(),
        signatures: signatures.into_iter().map(|(_, s)| s).collect(),
        diagnostics,
    }
}

fn stage_one(
    snapshots: &[Vec<C64>],
    dict: &Dictionary,
    cfg: &EstimatorConfig,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<Vec<Group>, EstimateError> {
    let views: Vec<&[C64]> = snapshots.iter().map(|s| s.as_slice()).collect();
    let sol = omp_multi(&views, dict, &cfg.stage1_stop)?;
    if sol.stop == StopReason::IllConditioned {
        diagnostics.push(Diagnostic::FirstStageIllConditioned);
    }
    if sol.atoms.is_empty() {
        diagnostics.push(Diagnostic::EmptyFirstStage);
        return Ok(Vec::new());
    }
    let groups = merge_atoms(&sol.atoms, cfg.tol(dict.signal_len()));
    Ok(keep_strong(groups, cfg.min_relative_amplitude))
}

/// Second-stage OMP for one group; returns `(frequency, coefficient)` per
/// merged component.
fn stage_two(
    x: &[C64],
    group: usize,
    dict: &Dictionary,
    stop: &StopRule,
    cfg: &EstimatorConfig,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<Vec<(f64, C64)>, EstimateError> {
    let sol = omp_multi(&[x], dict, stop)?;
    if sol.stop == StopReason::IllConditioned {
        diagnostics.push(Diagnostic::GroupIllConditioned { group });
    }
    if sol.atoms.is_empty() {
        diagnostics.push(Diagnostic::EmptyGroup { group });
        return Ok(Vec::new());
    }
    let merged = keep_strong(
        merge_atoms(&sol.atoms, cfg.tol(dict.signal_len())),
        cfg.min_relative_amplitude,
    );
    Ok(merged
        .into_iter()
        .map(|g| {
            let coef = sol
                .atoms
                .iter()
                .find(|a| a.frequency == g.first)
                .map(|a| a.coefficient)
                .unwrap_or_default();
            (g.first, coef)
        })
        .collect())
}

fn check_input(y: &IfMatrix, cfg: &EstimatorConfig) -> Result<(usize, usize), EstimateError> {
    cfg.check()?;
    let (rows, cols) = (y.data.rows(), y.data.cols());
    if rows == 0 || cols == 0 {
        return Err(EstimateError::EmptyMatrix(rows, cols));
    }
    Ok((rows, cols))
}

/// Range-first decoupled estimator for narrowband data.
pub fn estimate_narrowband(y: &IfMatrix, cfg: &EstimatorConfig) -> Result<Estimate, EstimateError> {
    let (rows, cols) = check_input(y, cfg)?;
    let data = &y.data;
    let mut diagnostics = Vec::new();
    let range_dict = Dictionary::build(cols, 0.0, 1.0, cfg.oversampling)?;
    let angle_dict = Dictionary::build(rows, -0.5, 0.5, cfg.oversampling)?;

    let snaps: Vec<Vec<C64>> = (0..cfg.snapshots.clamp(1, rows)).map(|m| data.row(m).to_vec()).collect();
    let mut groups = stage_one(&snaps, &range_dict, cfg, &mut diagnostics)?;

    // Spatial vector per group: x_r[m].
    let spatial: Vec<Vec<C64>> = match cfg.projection {
        Projection::Matched => {
            let mut qr = IncrementalQr::new(cols);
            let mut kept = Vec::new();
            for (i, g) in groups.iter().enumerate() {
                if qr.push(&steering(cols, g.frequency)).is_some() {
                    kept.push(i);
                } else {
                    diagnostics.push(Diagnostic::GroupDropped { group: i });
                }
            }
            groups = kept.into_iter().map(|i| groups[i].clone()).collect();
            let mut out = vec![vec![C64::new(0.0, 0.0); rows]; groups.len()];
            for m in 0..rows {
                for (r, c) in qr.solve(data.row(m)).into_iter().enumerate() {
                    out[r][m] = c;
                }
            }
            out
        }
        Projection::NearestBin => groups
            .iter()
            .map(|g| (0..rows).map(|m| nearest_bin(data.row(m), g.frequency)).collect())
            .collect(),
    };

    let stop2 = cfg.stage2_stop.scale_noise(1.0 / (cols as f64).sqrt());
    let mut pairs = Vec::new();
    for (r, x) in spatial.iter().enumerate() {
        for (theta, amp) in stage_two(x, r, &angle_dict, &stop2, cfg, &mut diagnostics)? {
            pairs.push(Pair {
                group: r,
                theta,
                range: groups[r].frequency,
                amplitude: amp,
            });
        }
    }

    if cfg.refine_pairs && cfg.projection == Projection::Matched && !pairs.is_empty() {
        refine_ranges(data, &mut pairs, &groups, &range_dict, cfg, &mut diagnostics);
    }

    let pairs = finish(data, pairs, 0.0, cfg, &mut diagnostics);
    let freqs: Vec<f64> = groups.iter().map(|g| g.frequency).collect();
    Ok(assemble(pairs, &freqs, false, diagnostics))
}

/// Re-picks each pair's range from the signal projected onto its own angle,
/// searching only near the members of its range group.
fn refine_ranges(
    data: &CMatrix,
    pairs: &mut [Pair],
    groups: &[Group],
    range_dict: &Dictionary,
    cfg: &EstimatorConfig,
    diagnostics: &mut Vec<Diagnostic>,
) {
    let (rows, cols) = (data.rows(), data.cols());
    let mut angles: Vec<f64> = pairs.iter().map(|p| p.theta).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    let mut qr = IncrementalQr::new(rows);
    for &t in &angles {
        if qr.push(&steering(rows, t)).is_none() {
            diagnostics.push(Diagnostic::RefinementSkipped);
            return;
        }
    }
    // temporal[u][n]: component of column n along angle u.
    let mut temporal = vec![vec![C64::new(0.0, 0.0); cols]; angles.len()];
    for n in 0..cols {
        for (u, c) in qr.solve(&data.column(n)).into_iter().enumerate() {
            temporal[u][n] = c;
        }
    }
    let pad = cfg.tol(cols);
    for p in pairs.iter_mut() {
        let g = &groups[p.group];
        // Window spanning the group's members, measured around its first one.
        let offsets = g.members.iter().map(|&f| wrap_signed(f - g.members[0]));
        let (lo, hi) = offsets.fold((0.0f64, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let centre = g.members[0] + 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) + pad;
        let u = angles.iter().position(|&t| t == p.theta).unwrap();
        if let Some(best) = range_dict.best_atom_where(&temporal[u], |f| freq_distance(f, centre) <= half) {
            p.range = range_dict.grid().frequency(best);
        }
    }
}

/// Removes the coupled space-time term for one angle:
/// `Y[m, n] e^{-j2pi (alpha/N) w m n}`.
pub fn compensate_swe(y: &IfMatrix, omega_theta_hat: f64, alpha: f64) -> IfMatrix {
    let cols = y.data.cols();
    let data = CMatrix::from_fn(y.data.rows(), cols, |m, n| {
        y.data.get(m, n) * sw_factor(alpha, cols, omega_theta_hat, m, n).conj()
    });
    IfMatrix {
        params: y.params.clone(),
        data,
    }
}

/// Angle-first decoupled estimator with squint compensation. `alpha` is
/// taken from the matrix parameters.
pub fn estimate_wideband(y: &IfMatrix, cfg: &EstimatorConfig) -> Result<Estimate, EstimateError> {
    let (rows, cols) = check_input(y, cfg)?;
    let data = &y.data;
    let alpha = y.params.alpha;
    let mut diagnostics = Vec::new();
    let range_dict = Dictionary::build(cols, 0.0, 1.0, cfg.oversampling)?;
    let angle_dict = Dictionary::build(rows, -0.5, 0.5, cfg.oversampling)?;

    // Keep the squint drift over the snapshots below pi/4 at |w| = 0.5.
    let mut snapshots = cfg.snapshots.clamp(1, cols);
    if alpha != 0.0 {
        let bound = 0.25 * cols as f64 / (alpha.abs() * rows as f64);
        while snapshots > 1 && snapshots as f64 >= bound {
            snapshots -= 1;
        }
    }
    let snaps: Vec<Vec<C64>> = (0..snapshots).map(|n| data.column(n)).collect();
    let mut groups = stage_one(&snaps, &angle_dict, cfg, &mut diagnostics)?;

    // Fast-time vector per group: x_s[n].
    let temporal: Vec<Vec<C64>> = match cfg.projection {
        Projection::Matched => {
            let mut qr = IncrementalQr::new(rows);
            let mut kept = Vec::new();
            for (i, g) in groups.iter().enumerate() {
                if qr.push(&steering(rows, g.frequency)).is_some() {
                    kept.push(i);
                } else {
                    diagnostics.push(Diagnostic::GroupDropped { group: i });
                }
            }
            groups = kept.into_iter().map(|i| groups[i].clone()).collect();
            let mut out = vec![vec![C64::new(0.0, 0.0); cols]; groups.len()];
            for n in 0..cols {
                let atoms: Vec<Vec<C64>> = groups
                    .iter()
                    .map(|g| {
                        (0..rows)
                            .map(|m| cis_cycles(g.frequency * m as f64) * sw_factor(alpha, cols, g.frequency, m, n))
                            .collect()
                    })
                    .collect();
                let column = data.column(n);
                match lstsq(&atoms, &column) {
                    Some(c) => {
                        for (s, v) in c.into_iter().enumerate() {
                            out[s][n] = v;
                        }
                    }
                    None => {
                        for (s, a) in atoms.iter().enumerate() {
                            out[s][n] = dot(a, &column) / rows as f64;
                        }
                    }
                }
            }
            out
        }
        Projection::NearestBin => groups
            .iter()
            .map(|g| {
                let comp = compensate_swe(y, g.frequency, alpha);
                (0..cols).map(|n| nearest_bin(&comp.data.column(n), g.frequency)).collect()
            })
            .collect(),
    };

    let stop2 = cfg.stage2_stop.scale_noise(1.0 / (rows as f64).sqrt());
    let mut pairs = Vec::new();
    for (s, x) in temporal.iter().enumerate() {
        for (range, amp) in stage_two(x, s, &range_dict, &stop2, cfg, &mut diagnostics)? {
            pairs.push(Pair {
                group: s,
                theta: groups[s].frequency,
                range,
                amplitude: amp,
            });
        }
    }

    let pairs = finish(data, pairs, alpha, cfg, &mut diagnostics);
    let freqs: Vec<f64> = groups.iter().map(|g| g.frequency).collect();
    Ok(assemble(pairs, &freqs, true, diagnostics))
}

/// One truth-estimate pair with absolute circular errors per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchedPair {
    pub truth: usize,
    pub estimate: usize,
    pub error_theta: f64,
    pub error_r: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchReport {
    pub pairs: Vec<MatchedPair>,
    /// Unmatched truth indices.
    pub misses: Vec<usize>,
    /// Unmatched estimate indices.
    pub false_alarms: Vec<usize>,
    /// `None` when nothing matched.
    pub rmse_theta: Option<f64>,
    pub rmse_r: Option<f64>,
}

impl MatchReport {
    pub fn matched(&self) -> usize {
        self.pairs.len()
    }
}

fn scaled(err: f64, tol: f64) -> f64 {
    if tol > 0.0 {
        err / tol
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Greedy matching on the larger of the tolerance-scaled axis errors. A
/// pair is eligible only when both errors are within tolerance.
pub fn match_signatures(
    truth: &[Target],
    estimates: &[SignatureEstimate],
    tol_theta: f64,
    tol_r: f64,
) -> MatchReport {
    let mut candidates: Vec<(f64, usize, usize, f64, f64)> = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, e) in estimates.iter().enumerate() {
            let et = freq_distance(t.omega_theta, e.omega_theta);
            let er = freq_distance(t.omega_r, e.omega_r);
            if et <= tol_theta && er <= tol_r {
                candidates.push((scaled(et, tol_theta).max(scaled(er, tol_r)), i, j, et, er));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut truth_used = vec![false; truth.len()];
    let mut est_used = vec![false; estimates.len()];
    let mut pairs = Vec::new();
    for (_, i, j, et, er) in candidates {
        if truth_used[i] || est_used[j] {
            continue;
        }
        truth_used[i] = true;
        est_used[j] = true;
        pairs.push(MatchedPair {
            truth: i,
            estimate: j,
            error_theta: et,
            error_r: er,
        });
    }
    pairs.sort_by_key(|p| p.truth);
    let rmse = |f: fn(&MatchedPair) -> f64| {
        (!pairs.is_empty())
            .then(|| (pairs.iter().map(|p| f(p).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt())
    };
    MatchReport {
        rmse_theta: rmse(|p| p.error_theta),
        rmse_r: rmse(|p| p.error_r),
        misses: (0..truth.len()).filter(|&i| !truth_used[i]).collect(),
        false_alarms: (0..estimates.len()).filter(|&j| !est_used[j]).collect(),
        pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RadarParams, Scenario};
    use crate::synth::{synth_narrowband, synth_wideband};

    fn scenario(m: usize, n: usize, alpha: f64, targets: &[(f64, f64)]) -> Scenario {
        Scenario::new(
            RadarParams::normalized(m, n, alpha),
            targets
                .iter()
                .map(|&(t, r)| Target::normalized(t, r, C64::new(1.0, 0.0)))
                .collect(),
        )
    }

    #[test]
    fn single_on_grid_target_amplitude() {
        let mut s = scenario(32, 32, 0.0, &[(5.0 / 32.0, 9.0 / 32.0)]);
        s.targets[0].amplitude = C64::new(0.6, -0.8);
        let y = synth_narrowband(&s).unwrap();
        let est = estimate_narrowband(&y, &EstimatorConfig::with_known_sparsity(1)).unwrap();
        assert_eq!(est.groups, 1);
        assert_eq!(est.signatures.len(), 1);
        assert!((est.signatures[0].amplitude - C64::new(0.6, -0.8)).norm() < 1e-6);
    }

    #[test]
    fn shared_range_gives_one_group_two_angles() {
        let s = scenario(32, 32, 0.0, &[(-0.25, 0.5), (0.125, 0.5)]);
        let y = synth_narrowband(&s).unwrap();
        let est = estimate_narrowband(&y, &EstimatorConfig::with_known_sparsity(2)).unwrap();
        assert_eq!(est.groups, 1);
        let th: Vec<f64> = est.signatures.iter().map(|s| s.omega_theta).collect();
        assert_eq!(th, vec![-0.25, 0.125]);
        assert!(est.signatures.iter().all(|s| s.omega_r == 0.5 && s.group_id == 0));
    }

    #[test]
    fn zero_matrix_is_empty_with_diagnostic() {
        let y = synth_narrowband(&scenario(16, 16, 0.0, &[])).unwrap();
        for est in [
            estimate_narrowband(&y, &EstimatorConfig::default()).unwrap(),
            estimate_wideband(&y, &EstimatorConfig::default()).unwrap(),
        ] {
            assert!(est.signatures.is_empty());
            assert_eq!(est.diagnostics, vec![Diagnostic::EmptyFirstStage]);
        }
    }

    #[test]
    fn config_checks() {
        let y = synth_narrowband(&scenario(8, 8, 0.0, &[(0.0, 0.0)])).unwrap();
        let cfg = EstimatorConfig {
            merge_tol: Some(-1.0),
            ..EstimatorConfig::default()
        };
        assert!(matches!(estimate_narrowband(&y, &cfg), Err(EstimateError::MergeTolerance(_))));
        let cfg = EstimatorConfig {
            oversampling: 0,
            ..EstimatorConfig::default()
        };
        assert!(estimate_wideband(&y, &cfg).is_err());
    }

    #[test]
    fn compensation_with_zero_angle_is_identity() {
        let y = synth_wideband(&scenario(8, 12, 0.2, &[(0.3, 0.1)])).unwrap();
        assert_eq!(compensate_swe(&y, 0.0, 0.2).data, y.data);
    }

    #[test]
    fn wideband_boresight_matches_narrowband() {
        let y = synth_wideband(&scenario(32, 32, 0.2, &[(0.0, 0.3125)])).unwrap();
        let cfg = EstimatorConfig::with_known_sparsity(1);
        let a = estimate_narrowband(&y, &cfg).unwrap();
        let b = estimate_wideband(&y, &cfg).unwrap();
        assert_eq!(a.signatures, b.signatures);
    }

    #[test]
    fn wideband_recovers_squinted_pair() {
        let y = synth_wideband(&scenario(64, 64, 0.2, &[(0.4375, 0.25), (-0.125, 0.625)])).unwrap();
        let est = estimate_wideband(&y, &EstimatorConfig::with_known_sparsity(2)).unwrap();
        assert_eq!(est.signatures.len(), 2);
        assert_eq!(est.signatures[0].omega_theta, -0.125);
        assert_eq!(est.signatures[0].omega_r, 0.625);
        assert_eq!(est.signatures[1].omega_theta, 0.4375);
        assert_eq!(est.signatures[1].omega_r, 0.25);
    }

    #[test]
    fn nearest_bin_projection_on_grid() {
        let y = synth_narrowband(&scenario(32, 32, 0.0, &[(0.25, 0.125), (-0.375, 0.75)])).unwrap();
        let cfg = EstimatorConfig {
            projection: Projection::NearestBin,
            ..EstimatorConfig::with_known_sparsity(2)
        };
        let est = estimate_narrowband(&y, &cfg).unwrap();
        assert_eq!(est.signatures.len(), 2);
        assert!(est.signatures.iter().all(|s| (s.amplitude.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn merge_wraps_around_the_circle() {
        let atom = |f: f64, order: usize| Atom {
            index: 0,
            frequency: f,
            coefficient: C64::new(1.0, 0.0),
            power: 1.0,
            order,
        };
        let groups = merge_atoms(&[atom(0.999, 0), atom(0.001, 1), atom(0.5, 2)], 0.01);
        assert_eq!(groups.len(), 2);
        let wrapped = groups.iter().find(|g| g.members.len() == 2).unwrap();
        assert!(freq_distance(wrapped.frequency, 0.0) < 1e-12);
        assert_eq!(wrapped.first, 0.999);
    }

    #[test]
    fn matching_basics() {
        let truth = [
            Target::normalized(0.1, 0.2, C64::new(1.0, 0.0)),
            Target::normalized(-0.3, 0.7, C64::new(1.0, 0.0)),
        ];
        let est: Vec<SignatureEstimate> = truth
            .iter()
            .map(|t| SignatureEstimate {
                omega_theta: t.omega_theta,
                omega_r: t.omega_r,
                amplitude: t.amplitude,
                group_id: 0,
            })
            .collect();
        let rep = match_signatures(&truth, &est, 0.01, 0.01);
        assert_eq!(rep.matched(), 2);
        assert_eq!(rep.rmse_theta, Some(0.0));
        let rep = match_signatures(&truth, &[], 0.01, 0.01);
        assert_eq!(rep.misses, vec![0, 1]);
        assert_eq!(rep.rmse_r, None);
    }

    #[test]
    fn matching_is_one_to_one() {
        let truth = [Target::normalized(0.1, 0.2, C64::new(1.0, 0.0))];
        let e = |t| SignatureEstimate {
            omega_theta: t,
            omega_r: 0.2,
            amplitude: C64::new(1.0, 0.0),
            group_id: 0,
        };
        let rep = match_signatures(&truth, &[e(0.105), e(0.101)], 0.01, 0.01);
        assert_eq!(rep.pairs[0].estimate, 1);
        assert_eq!(rep.false_alarms, vec![0]);
    }
}
