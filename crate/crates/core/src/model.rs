//! Radar configuration, targets and scenarios.
//!
//! Targets carry their normalized frequencies directly: the range (beat)
//! frequency `omega_r` in cycles per fast-time sample and the spatial
//! frequency `omega_theta` in cycles per array element. Physical range and
//! angle are optional and only needed by the exact synthesis model.

use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use thiserror::Error;

use crate::C64;

/// Propagation speed used unless a scenario overrides it, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.9979e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("angle {0} deg outside (-90, 90)")]
    AngleOutOfRange(f64),
    #[error("negative range {0} m")]
    NegativeRange(f64),
    #[error("aliased range frequency {0} (must be < 1)")]
    AliasedRange(f64),
    #[error("spatial frequency {0} exceeds d/lambda")]
    SpatialFrequencyOutOfRange(f64),
    #[error("invalid radar parameters: {0}")]
    InvalidParams(Violation),
}

/// Physical radar configuration.
///
/// Chirp rate, bandwidth and wavelength are derived on demand so they always
/// satisfy `gamma = alpha * f_c / T_ch` and `lambda = c / f_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadarParams {
    /// Carrier frequency `f_c`, Hz.
    pub carrier_hz: f64,
    /// Bandwidth selection parameter, `BW = alpha * f_c`.
    pub alpha: f64,
    /// Chirp duration `T_ch`, s.
    pub chirp_s: f64,
    /// Fast-time sampling frequency `f_s`, Hz.
    pub sample_rate_hz: f64,
    /// Fast-time samples per chirp `N`.
    pub samples: usize,
    /// Virtual array elements `M`.
    pub elements: usize,
    /// Inter-element spacing `d`, m.
    pub spacing_m: f64,
    /// Propagation speed `c`, m/s.
    pub light_speed: f64,
}

impl RadarParams {
    /// Builds a parameter set with `N = ceil(f_s * T_ch)` and half-wavelength
    /// spacing.
    pub fn new(
        carrier_hz: f64,
        alpha: f64,
        chirp_s: f64,
        sample_rate_hz: f64,
        elements: usize,
    ) -> Result<Self, ModelError> {
        let p = Self {
            carrier_hz,
            alpha,
            chirp_s,
            sample_rate_hz,
            samples: sample_count(sample_rate_hz, chirp_s),
            elements,
            spacing_m: 0.5 * SPEED_OF_LIGHT / carrier_hz,
            light_speed: SPEED_OF_LIGHT,
        };
        match p.violations().into_iter().next() {
            Some(v) => Err(ModelError::InvalidParams(v)),
            None => Ok(p),
        }
    }

    /// A 77 GHz, 50 us chirp configuration with `f_s = N / T_ch` and
    /// `d = lambda / 2`. Useful when targets are given only in normalized
    /// units and the physical constants do not matter.
    pub fn normalized(elements: usize, samples: usize, alpha: f64) -> Self {
        let carrier_hz = 77e9;
        let chirp_s = 50e-6;
        Self {
            carrier_hz,
            alpha,
            chirp_s,
            sample_rate_hz: samples as f64 / chirp_s,
            samples,
            elements,
            spacing_m: 0.5 * SPEED_OF_LIGHT / carrier_hz,
            light_speed: SPEED_OF_LIGHT,
        }
    }

    /// Sets the element spacing as a fraction of the wavelength.
    pub fn with_spacing_ratio(mut self, d_over_lambda: f64) -> Self {
        self.spacing_m = d_over_lambda * self.wavelength();
        self
    }

    /// Overrides the propagation speed, keeping `d / lambda` fixed.
    pub fn with_light_speed(mut self, c: f64) -> Self {
        let ratio = self.spacing_ratio();
        self.light_speed = c;
        self.spacing_m = ratio * self.wavelength();
        self
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.alpha * self.carrier_hz
    }

    /// Chirp rate `gamma`, Hz/s.
    pub fn chirp_rate(&self) -> f64 {
        self.alpha * self.carrier_hz / self.chirp_s
    }

    pub fn wavelength(&self) -> f64 {
        self.light_speed / self.carrier_hz
    }

    /// `d / lambda`.
    pub fn spacing_ratio(&self) -> f64 {
        self.spacing_m / self.wavelength()
    }

    /// Largest unaliased range, m.
    pub fn max_range_m(&self) -> f64 {
        self.light_speed * self.sample_rate_hz / (2.0 * self.chirp_rate())
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let positive = [
            ("carrier frequency", self.carrier_hz),
            ("chirp duration", self.chirp_s),
            ("sampling frequency", self.sample_rate_hz),
            ("element spacing", self.spacing_m),
            ("propagation speed", self.light_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::NonPositive(name));
            }
        }
        if !(0.0..1.0).contains(&self.alpha) {
            out.push(Violation::BandwidthRatio(self.alpha));
        }
        if self.elements == 0 {
            out.push(Violation::EmptyArray);
        }
        if self.samples == 0 {
            out.push(Violation::NoSamples);
        }
        out
    }
}

/// `ceil(f_s * T_ch)`, tolerant of the rounding in products like
/// `5.12e6 * 50e-6`.
pub fn sample_count(sample_rate_hz: f64, chirp_s: f64) -> usize {
    let x = sample_rate_hz * chirp_s;
    if !(x.is_finite() && x > 0.0) {
        return 0;
    }
    (x * (1.0 - 1e-12)).ceil() as usize
}

/// One point scatterer.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    /// Normalized range frequency, cycles/sample, in `[0, 1)`.
    pub omega_r: f64,
    /// Normalized spatial frequency, cycles/element.
    pub omega_theta: f64,
    /// Complex amplitude with the antenna-invariant phase terms absorbed.
    pub amplitude: C64,
    pub range_m: Option<f64>,
    pub theta_deg: Option<f64>,
}

impl Target {
    pub fn normalized(omega_theta: f64, omega_r: f64, amplitude: C64) -> Self {
        Self {
            omega_r,
            omega_theta,
            amplitude,
            range_m: None,
            theta_deg: None,
        }
    }

    pub fn physical(
        params: &RadarParams,
        range_m: f64,
        theta_deg: f64,
        amplitude: C64,
    ) -> Result<Self, ModelError> {
        let (omega_r, omega_theta) = to_normalized(params, range_m, theta_deg)?;
        Ok(Self {
            omega_r,
            omega_theta,
            amplitude,
            range_m: Some(range_m),
            theta_deg: Some(theta_deg),
        })
    }

    /// Drops the physical fields, keeping the normalized frequencies.
    pub fn into_normalized(self) -> Self {
        Self {
            range_m: None,
            theta_deg: None,
            ..self
        }
    }
}

/// A radar configuration with its target scene and noise settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub params: RadarParams,
    pub targets: Vec<Target>,
    /// Per-sample noise standard deviation.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(params: RadarParams, targets: Vec<Target>) -> Self {
        Self {
            params,
            targets,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }
}

/// One broken scenario invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonPositive(&'static str),
    BandwidthRatio(f64),
    EmptyArray,
    NoSamples,
    NegativeNoise(f64),
    AliasedRange { target: usize, omega_r: f64 },
    SpatialFrequency { target: usize, omega_theta: f64 },
    NonFinite { target: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositive(name) => write!(f, "{name} must be positive"),
            Violation::BandwidthRatio(a) => write!(f, "bandwidth ratio alpha {a} outside [0, 1)"),
            Violation::EmptyArray => f.write_str("empty array (M = 0)"),
            Violation::NoSamples => f.write_str("no fast-time samples (N = 0)"),
            Violation::NegativeNoise(s) => write!(f, "negative noise sigma {s}"),
            Violation::AliasedRange { target, omega_r } => {
                write!(f, "target {target}: aliased range frequency {omega_r}")
            }
            Violation::SpatialFrequency {
                target,
                omega_theta,
            } => write!(f, "target {target}: spatial frequency {omega_theta} outside [-d/lambda, 1)"),
            Violation::NonFinite { target } => write!(f, "target {target}: non-finite value"),
        }
    }
}

/// Collects every invariant violation of a scenario; empty means valid.
pub fn validate(scenario: &Scenario) -> Vec<Violation> {
    let mut out = scenario.params.violations();
    if !(scenario.noise_sigma >= 0.0) {
        out.push(Violation::NegativeNoise(scenario.noise_sigma));
    }
    let ratio = scenario.params.spacing_ratio();
    for (i, t) in scenario.targets.iter().enumerate() {
        let finite = t.omega_r.is_finite()
            && t.omega_theta.is_finite()
            && t.amplitude.re.is_finite()
            && t.amplitude.im.is_finite();
        if !finite {
            out.push(Violation::NonFinite { target: i });
            continue;
        }
        if !(0.0..1.0).contains(&t.omega_r) {
            out.push(Violation::AliasedRange {
                target: i,
                omega_r: t.omega_r,
            });
        }
        // Either the signed convention or the DFT-bin convention `[0, 1)`.
        let limit = ratio.max(0.5) + 1e-12;
        if !(t.omega_theta >= -limit && (t.omega_theta <= limit || t.omega_theta < 1.0)) {
            out.push(Violation::SpatialFrequency {
                target: i,
                omega_theta: t.omega_theta,
            });
        }
    }
    out
}

/// Converts range (m) and angle (deg) into `(omega_r, omega_theta)`.
pub fn to_normalized(
    params: &RadarParams,
    range_m: f64,
    theta_deg: f64,
) -> Result<(f64, f64), ModelError> {
    if !(theta_deg.abs() < 90.0) {
        return Err(ModelError::AngleOutOfRange(theta_deg));
    }
    if !(range_m >= 0.0) {
        return Err(ModelError::NegativeRange(range_m));
    }
    let omega_r =
        2.0 * params.chirp_rate() * range_m / (params.light_speed * params.sample_rate_hz);
    if omega_r >= 1.0 {
        return Err(ModelError::AliasedRange(omega_r));
    }
    let omega_theta = params.spacing_m * theta_deg.to_radians().sin() / params.wavelength();
    Ok((omega_r, omega_theta))
}

/// Left inverse of [`to_normalized`]: `(omega_r, omega_theta)` to
/// `(range_m, theta_deg)`.
pub fn from_normalized(
    params: &RadarParams,
    omega_r: f64,
    omega_theta: f64,
) -> Result<(f64, f64), ModelError> {
    if !(0.0..1.0).contains(&omega_r) {
        return Err(ModelError::AliasedRange(omega_r));
    }
    let s = omega_theta * params.wavelength() / params.spacing_m;
    if !(s.abs() < 1.0) {
        return Err(ModelError::SpatialFrequencyOutOfRange(omega_theta));
    }
    let range_m = omega_r * params.light_speed * params.sample_rate_hz / (2.0 * params.chirp_rate());
    Ok((range_m, s.asin().to_degrees()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params() -> RadarParams {
        RadarParams::normalized(64, 64, 0.05)
    }

    #[test]
    fn zero_range_boresight_is_origin() {
        let (r, t) = to_normalized(&params(), 0.0, 0.0).unwrap();
        assert_eq!((r, t), (0.0, 0.0));
    }

    #[test]
    fn half_wavelength_spacing_angle_frequencies() {
        let p = params();
        let (_, t30) = to_normalized(&p, 0.0, 30.0).unwrap();
        assert!((t30 - 0.25).abs() < 1e-12);
        let (_, t35) = to_normalized(&p, 0.0, 35.0).unwrap();
        assert!((t35 - 0.2868).abs() < 5e-5, "{t35}");
    }

    #[test]
    fn rejects_bad_angles_and_aliased_ranges() {
        let p = params();
        assert!(matches!(
            to_normalized(&p, 1.0, 90.0),
            Err(ModelError::AngleOutOfRange(_))
        ));
        let too_far = 1.5 * p.max_range_m();
        assert!(matches!(
            to_normalized(&p, too_far, 0.0),
            Err(ModelError::AliasedRange(_))
        ));
        assert!(to_normalized(&p, -1.0, 0.0).is_err());
    }

    #[test]
    fn sample_count_tolerates_rounding() {
        assert_eq!(sample_count(5.12e6, 50e-6), 256);
        assert_eq!(sample_count(5.1e6, 50e-6), 255);
        assert_eq!(sample_count(5.13e6, 50e-6), 257);
    }

    #[test]
    fn derived_quantities() {
        let p = RadarParams::new(77e9, 0.1, 50e-6, 5.12e6, 256).unwrap();
        assert_eq!(p.samples, 256);
        assert_eq!(p.chirp_rate(), 0.1 * 77e9 / 50e-6);
        assert_eq!(p.wavelength(), SPEED_OF_LIGHT / 77e9);
        assert!((p.spacing_ratio() - 0.5).abs() < 1e-15);
        let q = p.clone().with_light_speed(3e8);
        assert!((q.spacing_ratio() - 0.5).abs() < 1e-15);
        assert!(RadarParams::new(77e9, 1.0, 50e-6, 5.12e6, 256).is_err());
    }

    #[test]
    fn validate_reports_violations() {
        let mut s = Scenario::new(
            params(),
            vec![Target::normalized(0.1, 0.2, C64::new(1.0, 0.0))],
        );
        assert!(validate(&s).is_empty());
        s.targets[0].omega_r = 1.2;
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert!(alloc::format!("{}", v[0]).contains("aliased range frequency"));
        s.targets[0].omega_r = 0.2;
        s.params.elements = 0;
        let v = validate(&s);
        assert!(alloc::format!("{}", v[0]).contains("empty array"));
        s.params.elements = 4;
        s.noise_sigma = -1.0;
        s.targets[0].omega_theta = -0.7;
        assert_eq!(validate(&s).len(), 2);
        s.targets[0].omega_theta = 0.7;
        assert_eq!(validate(&s).len(), 1);
    }
}
