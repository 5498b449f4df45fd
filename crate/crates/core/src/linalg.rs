//! Incremental thin QR for small complex least-squares problems.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::C64;

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    // conj(a) . b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Column-by-column Gram-Schmidt with one reorthogonalization pass.
pub(crate) struct IncrementalQr {
    len: usize,
    q: Vec<Vec<C64>>,
    /// Upper-triangular factor stored by column: `r[j][i]` for `i <= j`.
    r: Vec<Vec<C64>>,
}

impl IncrementalQr {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    /// Appends a column. Returns `None`, leaving the factorization untouched,
    /// when the column is numerically dependent on the existing ones
    /// (`|r_kk| <= 1e-8 * max |r_ii|`, i.e. condition above 1e8).
    pub fn push(&mut self, col: &[C64]) -> Option<&[C64]> {
        debug_assert_eq!(col.len(), self.len);
        let mut v = col.to_vec();
        let mut coeffs = vec![C64::new(0.0, 0.0); self.q.len() + 1];
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = dot(qi, &v);
                coeffs[i] += c;
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= c * qk;
                }
            }
        }
        let diag = norm(&v);
        let scale = self
            .r
            .iter()
            .enumerate()
            .map(|(j, rj)| rj[j].norm())
            .fold(norm(col), f64::max);
        if !(diag > 1e-8 * scale) || diag == 0.0 {
            return None;
        }
        for vk in v.iter_mut() {
            *vk /= diag;
        }
        coeffs[self.q.len()] = C64::new(diag, 0.0);
        self.q.push(v);
        self.r.push(coeffs);
        self.q.last().map(|q| q.as_slice())
    }

    /// Least-squares coefficients for `y` on the pushed columns.
    pub fn solve(&self, y: &[C64]) -> Vec<C64> {
        let k = self.q.len();
        let qty: Vec<C64> = self.q.iter().map(|q| dot(q, y)).collect();
        let mut x = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut acc = qty[i];
            for j in i + 1..k {
                acc -= self.r[j][i] * x[j];
            }
            x[i] = acc / self.r[i][i];
        }
        x
    }
}

/// Least squares `min ||A x - y||` for `A` given by columns. Returns `None`
/// if the columns are numerically dependent.
pub(crate) fn lstsq(columns: &[Vec<C64>], y: &[C64]) -> Option<Vec<C64>> {
    let mut qr = IncrementalQr::new(y.len());
    for c in columns {
        qr.push(c)?;
    }
    Some(qr.solve(y))
}
