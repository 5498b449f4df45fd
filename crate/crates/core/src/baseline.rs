//! Comparison pipeline: threshold a range-angle magnitude map and group the
//! surviving bins into 8-connected clusters.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::estimate::SignatureEstimate;
use crate::spectral::{AxisKind, MapGrid};
use crate::C64;

/// Calibrated relative threshold for [`detect_clusters`].
pub const DEFAULT_REL_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("relative threshold must lie in (0, 1), got {0}")]
    Threshold(f64),
    #[error("map needs one angle axis and one range axis")]
    NotRangeAngle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Member bins as `(row, col)`, in scan order.
    pub members: Vec<(usize, usize)>,
    pub peak: (usize, usize),
    pub peak_magnitude: f64,
    /// Magnitude-weighted centroid in fractional `(row, col)` bins.
    pub centroid: (f64, f64),
}

/// Bins at or above `rel_threshold * max` grouped by 8-connectivity (no
/// wrap at the map edges), strongest peak first.
pub fn detect_clusters(map: &MapGrid, rel_threshold: f64) -> Result<Vec<Cluster>, BaselineError> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(BaselineError::Threshold(rel_threshold));
    }
    let top = map.max();
    if !(top > 0.0) {
        return Ok(Vec::new());
    }
    let level = rel_threshold * top;
    let (rows, cols) = (map.rows, map.cols);
    let mut label = vec![usize::MAX; rows * cols];
    let mut clusters = Vec::new();
    let mut stack = Vec::new();
    for start in 0..rows * cols {
        if label[start] != usize::MAX || map.data[start] < level {
            continue;
        }
        let id = clusters.len();
        label[start] = id;
        stack.push(start);
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            let (r, c) = (i / cols, i % cols);
            members.push((r, c));
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                        continue;
                    }
                    let j = nr as usize * cols + nc as usize;
                    if label[j] == usize::MAX && map.data[j] >= level {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(summarize(map, members));
    }
    clusters.sort_by(|a, b| {
        b.peak_magnitude
            .total_cmp(&a.peak_magnitude)
            .then(a.peak.cmp(&b.peak))
    });
    Ok(clusters)
}

fn summarize(map: &MapGrid, members: Vec<(usize, usize)>) -> Cluster {
    let mut peak = members[0];
    let mut peak_magnitude = f64::NEG_INFINITY;
    let (mut w, mut sr, mut sc) = (0.0, 0.0, 0.0);
    for &(r, c) in &members {
        let v = map.get(r, c);
        if v > peak_magnitude {
            peak = (r, c);
            peak_magnitude = v;
        }
        w += v;
        sr += v * r as f64;
        sc += v * c as f64;
    }
    Cluster {
        members,
        peak,
        peak_magnitude,
        centroid: (sr / w, sc / w),
    }
}

/// Reads each cluster's peak bin as a signature, with no squint correction.
/// Amplitude is the peak DFT magnitude scaled to amplitude units.
pub fn peaks_to_signatures(
    clusters: &[Cluster],
    map: &MapGrid,
) -> Result<Vec<SignatureEstimate>, BaselineError> {
    let angle_on_rows = match (map.row_axis, map.col_axis) {
        (AxisKind::AngleBin, AxisKind::RangeBin) => true,
        (AxisKind::RangeBin, AxisKind::AngleBin) => false,
        _ => return Err(BaselineError::NotRangeAngle),
    };
    let scale = ((map.rows * map.cols) as f64).sqrt();
    Ok(clusters
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (r, q) = (map.row_value(c.peak.0 as f64), map.col_value(c.peak.1 as f64));
            let (omega_theta, omega_r) = if angle_on_rows { (r, q) } else { (q, r) };
            SignatureEstimate {
                omega_theta,
                omega_r,
                amplitude: C64::new(c.peak_magnitude / scale, 0.0),
                group_id: i,
            }
        })
        .collect())
}
