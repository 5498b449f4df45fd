//! Signal-level simulation and decoupled signature estimation for MIMO-FMCW
//! radar with extremely large virtual arrays.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`model`]: radar parameters, targets and scenarios, plus conversions
//!   between physical units and normalized frequencies.
//! * [`synth`]: IF matrix synthesis under the spatial-narrowband model, the
//!   spatial-wideband model (with the coupled space-time term) and the exact
//!   full-delay model.
//! * [`spectral`]: unitary DFTs, the Dirichlet kernel and the three
//!   distortion views (angle-time, range-antenna, range-angle).
//! * [`sparse`]: overcomplete steering dictionaries and OMP.
//! * [`estimate`]: the range-first narrowband estimator, the angle-first
//!   low-index wideband estimator with squint compensation, and signature
//!   matching.
//! * [`baseline`]: 2D-FFT map thresholding with connected-component
//!   clustering, the comparison pipeline.
//!
//! Matrices are indexed `[m, n]` with `m` the virtual antenna (row) and `n`
//! the fast-time sample (column).

#![no_std]
// `Float` is redundant whenever std's inherent float methods are linked in.
#![allow(unused_imports)]

extern crate alloc;

pub mod baseline;
pub mod estimate;
mod linalg;
pub mod matrix;
pub mod model;
pub mod sparse;
pub mod spectral;
pub mod synth;

pub use num_complex::Complex64 as C64;

pub use baseline::{detect_clusters, peaks_to_signatures, Cluster, DEFAULT_REL_THRESHOLD};
pub use estimate::{
    compensate_swe, estimate_narrowband, estimate_wideband, match_signatures, Estimate,
    EstimatorConfig, MatchReport, Projection, SignatureEstimate,
};
pub use matrix::CMatrix;
pub use model::{from_normalized, to_normalized, validate, RadarParams, Scenario, Target, Violation};
pub use sparse::{omp, Dictionary, FreqGrid, SparseSolution, StopRule};
pub use spectral::{dft_axis, dirichlet, Axis, MapGrid};
pub use synth::{add_noise, synth_exact, synth_narrowband, synth_wideband, IfMatrix, Model};

/// `exp(j 2 pi x)` with `x` reduced to its fractional part first.
#[inline]
pub fn cis_cycles(x: f64) -> C64 {
    use num_traits::Float;
    let f = x - x.round();
    let (s, c) = (core::f64::consts::TAU * f).sin_cos();
    C64::new(c, s)
}

/// Circular distance between two normalized frequencies, in `[0, 0.5]`.
#[inline]
pub fn freq_distance(a: f64, b: f64) -> f64 {
    use num_traits::Float;
    let d = a - b;
    (d - d.round()).abs()
}

/// Wraps a normalized frequency into `[-0.5, 0.5)`.
#[inline]
pub fn wrap_signed(x: f64) -> f64 {
    use num_traits::Float;
    let f = x - x.floor();
    if f >= 0.5 {
        f - 1.0
    } else {
        f
    }
}

/// Wraps a normalized frequency into `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    use num_traits::Float;
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}
