//! Overcomplete steering dictionaries and orthogonal matching pursuit.
//!
//! A dictionary of length `L` over `[f_lo, f_hi)` holds `G` steering vectors
//! `a(w) = [1, e^{j2pi w}, ..., e^{j2pi w (L-1)}]` on a uniform grid.
//! [`omp`] greedily selects the atom most correlated with the residual,
//! refits all selected atoms by least squares and repeats.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::linalg::{dot, norm, IncrementalQr};
use crate::{cis_cycles, C64};

/// Default upper bound on the number of grid points.
pub const DEFAULT_GRID_CAP: usize = 1 << 20;

/// Relative residual at which a signal counts as fully explained.
const EXHAUSTED_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("dictionary needs L >= 2, got {0}")]
    ShortSignal(usize),
    #[error("oversampling must be >= 1")]
    Oversampling,
    #[error("empty frequency interval [{0}, {1})")]
    EmptyInterval(f64, f64),
    #[error("grid of {size} points exceeds the cap of {cap}")]
    GridTooLarge { size: usize, cap: usize },
    #[error("empty measurement vector")]
    EmptySignal,
    #[error("measurement length {got} does not match dictionary length {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Uniform frequency grid `w_g = lo + g (hi - lo) / G`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqGrid {
    pub lo: f64,
    pub hi: f64,
    pub len: usize,
    pub oversampling: usize,
}

impl FreqGrid {
    #[inline]
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.len as f64
    }

    #[inline]
    pub fn frequency(&self, g: usize) -> f64 {
        self.lo + g as f64 * self.step()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|g| self.frequency(g))
    }
}

/// Unit-norm steering vectors on a [`FreqGrid`], stored column by column.
#[derive(Clone, Debug)]
pub struct Dictionary {
    signal_len: usize,
    grid: FreqGrid,
    columns: Vec<C64>,
}

impl Dictionary {
    /// `G = ceil(O_f L (hi - lo))` atoms over `[lo, hi)`.
    pub fn build(signal_len: usize, lo: f64, hi: f64, oversampling: usize) -> Result<Self, SparseError> {
        Self::build_capped(signal_len, lo, hi, oversampling, DEFAULT_GRID_CAP)
    }

    pub fn build_capped(
        signal_len: usize,
        lo: f64,
        hi: f64,
        oversampling: usize,
        cap: usize,
    ) -> Result<Self, SparseError> {
        if signal_len < 2 {
            return Err(SparseError::ShortSignal(signal_len));
        }
        if oversampling == 0 {
            return Err(SparseError::Oversampling);
        }
        if !(lo < hi) {
            return Err(SparseError::EmptyInterval(lo, hi));
        }
        let exact = oversampling as f64 * signal_len as f64 * (hi - lo);
        if !(exact <= cap as f64) {
            return Err(SparseError::GridTooLarge {
                size: if exact.is_finite() { exact as usize } else { usize::MAX },
                cap,
            });
        }
        let size = (exact * (1.0 - 1e-12)).ceil() as usize;
        let grid = FreqGrid {
            lo,
            hi,
            len: size,
            oversampling,
        };
        let scale = 1.0 / (signal_len as f64).sqrt();
        let mut columns = Vec::with_capacity(size * signal_len);
        for g in 0..size {
            let w = grid.frequency(g);
            columns.extend((0..signal_len).map(|l| cis_cycles(w * l as f64) * scale));
        }
        Ok(Self {
            signal_len,
            grid,
            columns,
        })
    }

    #[inline]
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    #[inline]
    pub fn grid(&self) -> &FreqGrid {
        &self.grid
    }

    #[inline]
    pub fn atoms(&self) -> usize {
        self.grid.len
    }

    /// Unit-norm column `g`.
    #[inline]
    pub fn column(&self, g: usize) -> &[C64] {
        &self.columns[g * self.signal_len..(g + 1) * self.signal_len]
    }

    /// Steering vector for atom `g`, norm `sqrt(L)`.
    pub fn raw_column(&self, g: usize) -> Vec<C64> {
        let s = (self.signal_len as f64).sqrt();
        self.column(g).iter().map(|z| z * s).collect()
    }

    /// `<a_g, y>` for every atom (unit-norm columns).
    pub fn correlate(&self, y: &[C64]) -> Vec<C64> {
        (0..self.grid.len).map(|g| dot(self.column(g), y)).collect()
    }

    /// Grid index with the largest `|<a_g, y>|` among atoms accepted by
    /// `keep`; lowest index wins ties.
    pub fn best_atom_where(&self, y: &[C64], keep: impl Fn(f64) -> bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for g in 0..self.grid.len {
            if !keep(self.grid.frequency(g)) {
                continue;
            }
            let v = dot(self.column(g), y).norm_sqr();
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        best.map(|(g, _)| g)
    }
}

/// Residual-based stopping threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResidualTol {
    /// Stop once `||r|| <= eps ||y||`.
    Relative(f64),
    /// Noise-floor heuristic `eps = 3 sigma sqrt(L) / ||y||`, with `sigma`
    /// the per-sample noise level of the vector passed to OMP.
    NoiseFloor { sigma: f64 },
}

/// When to stop adding atoms; whichever limit triggers first wins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub max_atoms: Option<usize>,
    pub residual: Option<ResidualTol>,
}

impl StopRule {
    pub fn sparsity(k: usize) -> Self {
        Self {
            max_atoms: Some(k),
            residual: None,
        }
    }

    pub fn relative(eps: f64) -> Self {
        Self {
            max_atoms: None,
            residual: Some(ResidualTol::Relative(eps)),
        }
    }

    /// Noise-floor rule with the default cap of 16 atoms.
    pub fn noise_floor(sigma: f64) -> Self {
        Self {
            max_atoms: Some(16),
            residual: Some(ResidualTol::NoiseFloor { sigma }),
        }
    }

    /// Same rule with the noise level rescaled, for vectors whose noise
    /// differs from the raw measurement.
    pub fn scale_noise(self, factor: f64) -> Self {
        let residual = match self.residual {
            Some(ResidualTol::NoiseFloor { sigma }) => Some(ResidualTol::NoiseFloor {
                sigma: sigma * factor,
            }),
            r => r,
        };
        Self { residual, ..self }
    }

    fn threshold(&self, y_norm: f64, samples: usize) -> f64 {
        let floor = EXHAUSTED_TOL * y_norm;
        match self.residual {
            None => floor,
            Some(ResidualTol::Relative(eps)) => floor.max(eps * y_norm),
            Some(ResidualTol::NoiseFloor { sigma }) => floor.max(3.0 * sigma * (samples as f64).sqrt()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    ZeroSignal,
    MaxAtoms,
    Residual,
    /// The next atom would have made the selected set numerically dependent.
    IllConditioned,
    /// Every atom (or `L` atoms) is already selected.
    Exhausted,
}

/// One selected atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub index: usize,
    pub frequency: f64,
    /// Least-squares coefficient against the raw steering vector, for the
    /// first snapshot.
    pub coefficient: C64,
    /// Mean `|coefficient|^2` over all snapshots.
    pub power: f64,
    /// Iteration in which the atom was selected, from 0.
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseSolution {
    /// Selected atoms, strongest first.
    pub atoms: Vec<Atom>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Residual norm before the first iteration and after each one.
    pub residual_history: Vec<f64>,
    pub stop: StopReason,
}

impl SparseSolution {
    /// Atoms in the order OMP selected them.
    pub fn selection_order(&self) -> Vec<usize> {
        let mut a: Vec<&Atom> = self.atoms.iter().collect();
        a.sort_by_key(|a| a.order);
        a.into_iter().map(|a| a.index).collect()
    }
}

/// Single-vector OMP.
pub fn omp(y: &[C64], dict: &Dictionary, stop: &StopRule) -> Result<SparseSolution, SparseError> {
    omp_multi(&[y], dict, stop)
}

/// OMP over several snapshots sharing one support. Atoms are scored by the
/// summed correlation power across snapshots; with one snapshot this is
/// plain OMP.
pub fn omp_multi(
    snapshots: &[&[C64]],
    dict: &Dictionary,
    stop: &StopRule,
) -> Result<SparseSolution, SparseError> {
    let len = dict.signal_len();
    if snapshots.is_empty() || snapshots.iter().any(|s| s.is_empty()) {
        return Err(SparseError::EmptySignal);
    }
    if let Some(bad) = snapshots.iter().find(|s| s.len() != len) {
        return Err(SparseError::LengthMismatch {
            got: bad.len(),
            want: len,
        });
    }
    let y_norm = snapshots.iter().map(|s| norm(s).powi(2)).sum::<f64>().sqrt();
    let mut history = vec![y_norm];
    if y_norm == 0.0 {
        return Ok(SparseSolution {
            atoms: Vec::new(),
            residual_norm: 0.0,
            iterations: 0,
            residual_history: history,
            stop: StopReason::ZeroSignal,
        });
    }
    let threshold = stop.threshold(y_norm, len * snapshots.len());
    let cap = stop
        .max_atoms
        .unwrap_or(usize::MAX)
        .min(len)
        .min(dict.atoms());

    let mut residuals: Vec<Vec<C64>> = snapshots.iter().map(|s| s.to_vec()).collect();
    let mut selected: Vec<usize> = Vec::new();
    let mut taken = vec![false; dict.atoms()];
    let mut qr = IncrementalQr::new(len);
    let mut res_norm = y_norm;
    let reason = loop {
        if res_norm <= threshold {
            break StopReason::Residual;
        }
        if selected.len() >= cap {
            break if cap == stop.max_atoms.unwrap_or(usize::MAX) {
                StopReason::MaxAtoms
            } else {
                StopReason::Exhausted
            };
        }
        let mut best: Option<(usize, f64)> = None;
        for g in 0..dict.atoms() {
            if taken[g] {
                continue;
            }
            let col = dict.column(g);
            let score: f64 = residuals.iter().map(|r| dot(col, r).norm_sqr()).sum();
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((g, score));
            }
        }
        let Some((g, _)) = best else {
            break StopReason::Exhausted;
        };
        let Some(q) = qr.push(&dict.raw_column(g)) else {
            break StopReason::IllConditioned;
        };
        for r in residuals.iter_mut() {
            let c = dot(q, r);
            for (rk, qk) in r.iter_mut().zip(q) {
                *rk -= c * qk;
            }
        }
        taken[g] = true;
        selected.push(g);
        // Residual of the LS fit, recomputed from the projection so rounding
        // cannot make it grow.
        let fresh = residuals.iter().map(|r| norm(r).powi(2)).sum::<f64>().sqrt();
        res_norm = fresh.min(res_norm);
        history.push(res_norm);
    };

    let coeffs: Vec<Vec<C64>> = snapshots.iter().map(|s| qr.solve(s)).collect();
    let grid = dict.grid();
    let mut atoms: Vec<Atom> = selected
        .iter()
        .enumerate()
        .map(|(k, &g)| Atom {
            index: g,
            frequency: grid.frequency(g),
            coefficient: coeffs[0][k],
            power: coeffs.iter().map(|c| c[k].norm_sqr()).sum::<f64>() / coeffs.len() as f64,
            order: k,
        })
        .collect();
    atoms.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.order.cmp(&b.order)));
    Ok(SparseSolution {
        atoms,
        residual_norm: res_norm,
        iterations: selected.len(),
        residual_history: history,
        stop: reason,
    })
}
