//! JSON run report for `estimate`.

use serde::Serialize;
use xlmimo_core::sparse::{ResidualTol, StopRule};
use xlmimo_core::{EstimatorConfig, MatchReport, Projection, SignatureEstimate};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignatureRow {
    pub group_id: usize,
    pub omega_theta: f64,
    pub omega_r: f64,
    pub amp_re: f64,
    pub amp_im: f64,
}

impl From<&SignatureEstimate> for SignatureRow {
    fn from(s: &SignatureEstimate) -> Self {
        Self {
            group_id: s.group_id,
            omega_theta: s.omega_theta,
            omega_r: s.omega_r,
            amp_re: s.amplitude.re,
            amp_im: s.amplitude.im,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRow {
    pub truth: usize,
    pub estimate: usize,
    pub error_theta: f64,
    pub error_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchSummary {
    pub tol_theta: f64,
    pub tol_r: f64,
    pub matched: usize,
    pub misses: usize,
    pub false_alarms: usize,
    pub rmse_theta: Option<f64>,
    pub rmse_r: Option<f64>,
    pub pairs: Vec<PairRow>,
}

impl MatchSummary {
    pub fn new(report: &MatchReport, tol_theta: f64, tol_r: f64) -> Self {
        Self {
            tol_theta,
            tol_r,
            matched: report.matched(),
            misses: report.misses.len(),
            false_alarms: report.false_alarms.len(),
            rmse_theta: report.rmse_theta,
            rmse_r: report.rmse_r,
            pairs: report
                .pairs
                .iter()
                .map(|p| PairRow {
                    truth: p.truth,
                    estimate: p.estimate,
                    error_theta: p.error_theta,
                    error_r: p.error_r,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub synth_ms: f64,
    pub estimate_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StopEcho {
    pub max_atoms: Option<usize>,
    pub residual_relative: Option<f64>,
    pub residual_noise_sigma: Option<f64>,
}

impl From<&StopRule> for StopEcho {
    fn from(s: &StopRule) -> Self {
        let (rel, sigma) = match s.residual {
            Some(ResidualTol::Relative(e)) => (Some(e), None),
            Some(ResidualTol::NoiseFloor { sigma }) => (None, Some(sigma)),
            None => (None, None),
        };
        Self {
            max_atoms: s.max_atoms,
            residual_relative: rel,
            residual_noise_sigma: sigma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorEcho {
    pub oversampling: usize,
    pub stage1_stop: StopEcho,
    pub stage2_stop: StopEcho,
    pub merge_tol: Option<f64>,
    pub snapshots: usize,
    pub projection: &'static str,
    pub refine_pairs: bool,
    pub max_signatures: Option<usize>,
    pub min_relative_amplitude: f64,
}

impl From<&EstimatorConfig> for EstimatorEcho {
    fn from(c: &EstimatorConfig) -> Self {
        Self {
            oversampling: c.oversampling,
            stage1_stop: (&c.stage1_stop).into(),
            stage2_stop: (&c.stage2_stop).into(),
            merge_tol: c.merge_tol,
            snapshots: c.snapshots,
            projection: match c.projection {
                Projection::Matched => "matched",
                Projection::NearestBin => "nearest_bin",
            },
            refine_pairs: c.refine_pairs,
            max_signatures: c.max_signatures,
            min_relative_amplitude: c.min_relative_amplitude,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub method: &'static str,
    pub model: &'static str,
    /// Decoupled method only.
    pub estimator: Option<EstimatorEcho>,
    /// Baseline method only.
    pub rel_threshold: Option<f64>,
    /// The scenario as parsed, in canonical text form.
    pub scenario: String,
}

/// Field order is fixed by declaration order, so serialization is stable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub signatures: Vec<SignatureRow>,
    pub groups: usize,
    pub diagnostics: Vec<String>,
    pub match_report: Option<MatchSummary>,
    /// Present only when timing was requested, so default output is
    /// reproducible byte for byte.
    pub timings: Option<Timings>,
    pub config: ConfigEcho,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serializable");
        s.push('\n');
        s
    }
}
