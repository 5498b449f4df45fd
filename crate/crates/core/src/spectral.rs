//! Unitary DFTs, the Dirichlet kernel and the distortion views.
//!
//! The analysis kernel is `e^{-j2pi l q / L} / sqrt(L)`, so a tone
//! `e^{+j2pi f l}` peaks at bin `round(f L) mod L`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::matrix::CMatrix;
use crate::{cis_cycles, wrap_signed, C64};

/// `(1/sqrt(L)) sum_{l<L} e^{j2pi l x}`, evaluated in closed form.
pub fn dirichlet(len: usize, x: f64) -> C64 {
    assert!(len >= 1, "dirichlet kernel needs L >= 1");
    let l = len as f64;
    let f = x - x.round();
    let den = (core::f64::consts::PI * f).sin();
    if den.abs() < 1e-15 {
        return C64::new(l.sqrt(), 0.0);
    }
    let num = (core::f64::consts::PI * l * f).sin();
    cis_cycles(0.5 * f * (l - 1.0)) * (num / (den * l.sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Transform each column, i.e. along the antenna index `m`.
    Rows,
    /// Transform each row, i.e. along the fast-time index `n`.
    Cols,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Kernel `e^{-j2pi lq/L}`.
    Analysis,
    /// Kernel `e^{+j2pi lq/L}`; inverse of [`Direction::Analysis`].
    Synthesis,
}

/// Unitary DFT of one vector with a precomputed twiddle table.
struct Dft {
    twiddle: Vec<C64>,
    scale: f64,
}

impl Dft {
    fn new(len: usize, dir: Direction) -> Self {
        let sign = match dir {
            Direction::Analysis => -1.0,
            Direction::Synthesis => 1.0,
        };
        let twiddle = (0..len)
            .map(|k| cis_cycles(sign * k as f64 / len as f64))
            .collect();
        Self {
            twiddle,
            scale: 1.0 / (len as f64).sqrt(),
        }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        let len = self.twiddle.len();
        for (q, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            let mut k = 0usize;
            for v in x {
                acc += v * self.twiddle[k];
                k += q;
                if k >= len {
                    k -= len;
                }
            }
            *o = acc * self.scale;
        }
    }
}

/// Unitary DFT along one axis.
pub fn dft_axis_dir(y: &CMatrix, axis: Axis, dir: Direction) -> CMatrix {
    let (rows, cols) = (y.rows(), y.cols());
    let mut out = CMatrix::zeros(rows, cols);
    match axis {
        Axis::Cols => {
            if cols == 0 {
                return out;
            }
            let dft = Dft::new(cols, dir);
            let mut buf = vec![C64::new(0.0, 0.0); cols];
            for r in 0..rows {
                dft.apply(y.row(r), &mut buf);
                for (c, v) in buf.iter().enumerate() {
                    out.set(r, c, *v);
                }
            }
        }
        Axis::Rows => {
            if rows == 0 {
                return out;
            }
            let dft = Dft::new(rows, dir);
            let mut buf = vec![C64::new(0.0, 0.0); rows];
            for c in 0..cols {
                dft.apply(&y.column(c), &mut buf);
                for (r, v) in buf.iter().enumerate() {
                    out.set(r, c, *v);
                }
            }
        }
    }
    out
}

/// Unitary analysis DFT along one axis.
pub fn dft_axis(y: &CMatrix, axis: Axis) -> CMatrix {
    dft_axis_dir(y, axis, Direction::Analysis)
}

/// Unitary 2D analysis DFT.
pub fn dft_2d(y: &CMatrix) -> CMatrix {
    dft_axis(&dft_axis(y, Axis::Rows), Axis::Cols)
}

/// What one axis of a [`MapGrid`] indexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    AngleBin,
    RangeBin,
    AntennaIndex,
    TimeIndex,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::AngleBin => "angle_bin",
            AxisKind::RangeBin => "range_bin",
            AxisKind::AntennaIndex => "antenna_index",
            AxisKind::TimeIndex => "time_index",
        }
    }

    pub fn is_frequency(self) -> bool {
        matches!(self, AxisKind::AngleBin | AxisKind::RangeBin)
    }

    /// Normalized frequency of a bin: angle bins map into `[-0.5, 0.5)`,
    /// range bins into `[0, 1)`. Index axes return the index itself.
    pub fn value(self, bin: f64, len: usize) -> f64 {
        match self {
            AxisKind::AngleBin => wrap_signed(bin / len as f64),
            AxisKind::RangeBin => crate::wrap_unit(bin / len as f64),
            AxisKind::AntennaIndex | AxisKind::TimeIndex => bin,
        }
    }
}

/// Which distortion view a map shows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    AngleTime,
    RangeAntenna,
    RangeAngle,
}

impl View {
    pub fn name(self) -> &'static str {
        match self {
            View::AngleTime => "angle_time",
            View::RangeAntenna => "range_antenna",
            View::RangeAngle => "range_angle",
        }
    }

    pub fn compute(self, y: &CMatrix) -> MapGrid {
        match self {
            View::AngleTime => angle_time_map(y),
            View::RangeAntenna => range_antenna_map(y),
            View::RangeAngle => range_angle_map(y),
        }
    }
}

impl core::str::FromStr for View {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "angle_time" => Ok(View::AngleTime),
            "range_antenna" => Ok(View::RangeAntenna),
            "range_angle" => Ok(View::RangeAngle),
            _ => Err(()),
        }
    }
}

/// Real magnitude map, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MapGrid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub row_axis: AxisKind,
    pub col_axis: AxisKind,
}

impl MapGrid {
    fn magnitude(y: &CMatrix, row_axis: AxisKind, col_axis: AxisKind) -> Self {
        Self {
            rows: y.rows(),
            cols: y.cols(),
            data: y.as_slice().iter().map(|z| z.norm()).collect(),
            row_axis,
            col_axis,
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Frequency (or index) per bin along the rows.
    pub fn row_value(&self, bin: f64) -> f64 {
        self.row_axis.value(bin, self.rows)
    }

    pub fn col_value(&self, bin: f64) -> f64 {
        self.col_axis.value(bin, self.cols)
    }

    /// For every column, the row holding the largest value (lowest index on
    /// ties).
    pub fn column_peaks(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|c| argmax((0..self.rows).map(|r| self.get(r, c))))
            .collect()
    }

    /// For every row, the column holding the largest value.
    pub fn row_peaks(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| argmax(self.data[r * self.cols..(r + 1) * self.cols].iter().copied()))
            .collect()
    }

    /// `(row, col)` of the global maximum.
    pub fn peak(&self) -> (usize, usize) {
        let i = argmax(self.data.iter().copied());
        (i / self.cols.max(1), i % self.cols.max(1))
    }
}

/// Strict argmax, lowest index wins ties.
pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// DFT over the antenna axis: rows are angle bins `p`, columns time `n`.
pub fn angle_time_map(y: &CMatrix) -> MapGrid {
    MapGrid::magnitude(&dft_axis(y, Axis::Rows), AxisKind::AngleBin, AxisKind::TimeIndex)
}

/// DFT over the fast-time axis: rows are antennas `m`, columns range bins `q`.
pub fn range_antenna_map(y: &CMatrix) -> MapGrid {
    MapGrid::magnitude(&dft_axis(y, Axis::Cols), AxisKind::AntennaIndex, AxisKind::RangeBin)
}

/// 2D DFT: rows are angle bins `p`, columns range bins `q`.
pub fn range_angle_map(y: &CMatrix) -> MapGrid {
    MapGrid::magnitude(&dft_2d(y), AxisKind::AngleBin, AxisKind::RangeBin)
}
