//! IF matrix synthesis.
//!
//! Three models are available:
//!
//! * narrowband: `Y[m,n] = sum_k a_k e^{j2pi W_r n} e^{j2pi W_t m}`
//! * wideband: the narrowband tone times the space-time coupling term
//!   `e^{j2pi (alpha/N) W_t m n}`
//! * exact: the sampled dechirped signal with the full delay
//!   `tau_m = 2R/c + m d sin(theta)/c`, no approximation applied.
//!
//! Noise is circular complex Gaussian and keyed by `(seed, m, n)`, so two
//! models synthesized from the same scenario share one noise realization.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matrix::CMatrix;
use crate::model::{validate, RadarParams, Scenario, Target, Violation};
use crate::{cis_cycles, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Invalid(Violation),
    #[error("target {0} has no physical range/angle; the exact model needs both")]
    MissingPhysical(usize),
    #[error("noise sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
}

/// Which signal model to synthesize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    Narrowband,
    Wideband,
    Exact,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Narrowband => "narrowband",
            Model::Wideband => "wideband",
            Model::Exact => "exact",
        }
    }

    pub fn synthesize(self, scenario: &Scenario) -> Result<IfMatrix, SynthError> {
        match self {
            Model::Narrowband => synth_narrowband(scenario),
            Model::Wideband => synth_wideband(scenario),
            Model::Exact => synth_exact(scenario),
        }
    }
}

impl core::str::FromStr for Model {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "narrowband" => Ok(Model::Narrowband),
            "wideband" => Ok(Model::Wideband),
            "exact" => Ok(Model::Exact),
            _ => Err(()),
        }
    }
}

/// An `M x N` IF measurement matrix with the parameters it was made under.
#[derive(Clone, Debug, PartialEq)]
pub struct IfMatrix {
    pub params: RadarParams,
    pub data: CMatrix,
}

impl IfMatrix {
    pub fn elements(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }
}

/// The coupled space-time phase `e^{j2pi (alpha/N) W_t m n}`.
///
/// Shared by the wideband synthesizer and the squint compensator so the two
/// cancel to rounding.
#[inline]
pub fn sw_factor(alpha: f64, samples: usize, omega_theta: f64, m: usize, n: usize) -> C64 {
    cis_cycles(alpha * omega_theta * ((m * n) as f64) / samples as f64)
}

/// Narrowband 2D tone `e^{j2pi W_r n} e^{j2pi W_t m}`.
#[inline]
fn tone(target: &Target, m: usize, n: usize) -> C64 {
    cis_cycles(target.omega_r * n as f64) * cis_cycles(target.omega_theta * m as f64)
}

fn check(scenario: &Scenario) -> Result<(), SynthError> {
    match validate(scenario).into_iter().next() {
        Some(v) => Err(SynthError::Invalid(v)),
        None => Ok(()),
    }
}

fn finish(scenario: &Scenario, data: CMatrix) -> Result<IfMatrix, SynthError> {
    let noisy = add_noise_matrix(data, scenario.noise_sigma, scenario.seed)?;
    Ok(IfMatrix {
        params: scenario.params.clone(),
        data: noisy,
    })
}

pub fn synth_narrowband(scenario: &Scenario) -> Result<IfMatrix, SynthError> {
    check(scenario)?;
    let p = &scenario.params;
    let data = CMatrix::from_fn(p.elements, p.samples, |m, n| {
        scenario
            .targets
            .iter()
            .map(|t| t.amplitude * tone(t, m, n))
            .sum()
    });
    finish(scenario, data)
}

pub fn synth_wideband(scenario: &Scenario) -> Result<IfMatrix, SynthError> {
    check(scenario)?;
    let p = &scenario.params;
    let data = CMatrix::from_fn(p.elements, p.samples, |m, n| {
        scenario
            .targets
            .iter()
            .map(|t| {
                t.amplitude * tone(t, m, n) * sw_factor(p.alpha, p.samples, t.omega_theta, m, n)
            })
            .sum()
    });
    finish(scenario, data)
}

/// Full-delay model. Each target's `amplitude` is used as the physical
/// amplitude `a_k`, entering conjugated.
pub fn synth_exact(scenario: &Scenario) -> Result<IfMatrix, SynthError> {
    check(scenario)?;
    let p = &scenario.params;
    let geom: Vec<(f64, f64, C64)> = scenario
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| match (t.range_m, t.theta_deg) {
            (Some(r), Some(th)) => Ok((r, th.to_radians().sin(), t.amplitude.conj())),
            _ => Err(SynthError::MissingPhysical(i)),
        })
        .collect::<Result<_, _>>()?;
    let gamma = p.chirp_rate();
    let c = p.light_speed;
    let data = CMatrix::from_fn(p.elements, p.samples, |m, n| {
        geom.iter()
            .map(|&(r, s, a)| {
                let tau = 2.0 * r / c + m as f64 * p.spacing_m * s / c;
                let beat = gamma * tau * n as f64 / p.sample_rate_hz;
                let quad = -0.5 * gamma * tau * tau;
                let carrier = p.carrier_hz * tau;
                a * cis_cycles(beat) * cis_cycles(quad) * cis_cycles(carrier)
            })
            .sum()
    });
    finish(scenario, data)
}

/// Normalized amplitude `a~` that makes the wideband model match
/// [`synth_exact`] for a physically specified target, up to the two residual
/// quadratic-delay phases (see [`residual_quadratic_phase`]).
pub fn exact_equivalent_amplitude(params: &RadarParams, target: &Target) -> Option<C64> {
    let r = target.range_m?;
    let tau_r = 2.0 * r / params.light_speed;
    let quad = -0.5 * params.chirp_rate() * tau_r * tau_r;
    let carrier = params.carrier_hz * tau_r;
    Some(target.amplitude.conj() * cis_cycles(quad) * cis_cycles(carrier))
}

/// The two antenna-dependent quadratic-delay phases the wideband model drops,
/// in radians: `(pi g m^2 d^2 sin^2 / c^2, 2 pi g 2 R m d sin / c^2)`.
pub fn residual_quadratic_phase(params: &RadarParams, target: &Target, m: usize) -> Option<(f64, f64)> {
    let r = target.range_m?;
    let s = target.theta_deg?.to_radians().sin();
    let gamma = params.chirp_rate();
    let c2 = params.light_speed * params.light_speed;
    let md = m as f64 * params.spacing_m * s;
    let pi = core::f64::consts::PI;
    Some((pi * gamma * md * md / c2, 2.0 * pi * gamma * 2.0 * r * md / c2))
}

/// One circular complex Gaussian sample with unit variance for cell `(m, n)`.
///
/// Each antenna row is its own ChaCha8 stream and each sample takes four
/// 32-bit words of it, so the value depends only on `(seed, m, n)`.
pub fn unit_noise(seed: u64, m: usize, n: usize) -> C64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64);
    rng.set_word_pos(4 * n as u128);
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let radius = (-u1.ln()).sqrt();
    radius * cis_cycles(u2)
}

fn add_noise_matrix(mut data: CMatrix, sigma: f64, seed: u64) -> Result<CMatrix, SynthError> {
    if !(sigma >= 0.0) {
        return Err(SynthError::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(data);
    }
    let cols = data.cols();
    for (i, z) in data.as_mut_slice().iter_mut().enumerate() {
        *z += unit_noise(seed, i / cols, i % cols) * sigma;
    }
    Ok(data)
}

/// Adds `CN(0, sigma^2)` noise keyed by `(seed, m, n)`. `sigma = 0` returns
/// the input unchanged.
pub fn add_noise(y: &IfMatrix, sigma: f64, seed: u64) -> Result<IfMatrix, SynthError> {
    Ok(IfMatrix {
        params: y.params.clone(),
        data: add_noise_matrix(y.data.clone(), sigma, seed)?,
    })
}
