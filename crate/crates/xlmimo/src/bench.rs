//! Monte-Carlo sweeps over one scenario parameter.
//!
//! ```text
//! [sweep]
//! base = wideband.scn        # relative to the sweep file
//! axis = sigma           # sigma | alpha | M | separation
//! values = 0, 0.05, 0.1
//! trials = 20
//! method = decoupled     # decoupled | baseline
//! master_seed = 1
//! ```
//!
//! Each trial draws its noise seed from `(master_seed, value index, trial)`,
//! so results do not depend on thread count or scheduling.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use xlmimo_core::{match_signatures, wrap_unit};

use crate::commands::{estimate_with, synthesize, Method};
use crate::files;
use crate::scenario_file::{parse_f64, parse_u64, parse_usize, require, Document, Section};
use crate::{CliError, ScenarioFile};

const SWEEP_KEYS: &[&str] = &["base", "axis", "values", "trials", "method", "master_seed", "tol_theta", "tol_r"];
pub const SWEEP_SCHEMA: &[(&str, &[&str])] = &[("sweep", SWEEP_KEYS)];

pub const BENCH_HEADER: [&str; 8] = [
    "axis_value",
    "trial",
    "detections",
    "misses",
    "false_alarms",
    "rmse_theta",
    "rmse_r",
    "runtime_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Sigma,
    Alpha,
    /// Number of antennas.
    Elements,
    /// Range offset of target 2 from target 1, in range bins `1/N`.
    Separation,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Sigma => "sigma",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Elements => "M",
            SweepAxis::Separation => "separation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub base: ScenarioFile,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub method: Method,
    pub master_seed: u64,
    pub tol_theta: f64,
    pub tol_r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub value_index: usize,
    pub axis_value: f64,
    pub trial: usize,
    pub detections: usize,
    pub misses: usize,
    pub false_alarms: usize,
    pub rmse_theta: Option<f64>,
    pub rmse_r: Option<f64>,
    pub runtime_ms: f64,
}

fn err_at(path: &Path, s: &Section, key: &str, message: String) -> CliError {
    let line = s.get(key).and_then(|e| e.line);
    CliError::parse(path, line, message)
}

impl Sweep {
    /// Parses a sweep file; `base` is resolved against the file's directory.
    pub fn load<I, K, V>(path: &Path, env: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (K, V)> + Clone,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let text = files::read_text(path)?;
        let wrap = |err| CliError::Parse {
            path: path.to_path_buf(),
            err,
        };
        let mut doc = Document::parse(&text).map_err(wrap)?;
        doc.check_schema(SWEEP_SCHEMA).map_err(wrap)?;
        doc.apply_env(env.clone(), SWEEP_SCHEMA).map_err(wrap)?;
        let s = doc
            .single("sweep")
            .map_err(wrap)?
            .ok_or_else(|| CliError::parse(path, None, "missing [sweep] section"))?;

        let base_rel = PathBuf::from(&require(s, "base").map_err(wrap)?.value);
        let base_path = match path.parent() {
            Some(dir) if base_rel.is_relative() => dir.join(base_rel),
            _ => base_rel,
        };
        let base_text = files::read_text(&base_path)?;
        let base = ScenarioFile::parse_with_env(&base_text, env).map_err(|err| CliError::Parse {
            path: base_path.clone(),
            err,
        })?;

        let axis = match require(s, "axis").map_err(wrap)?.value.as_str() {
            "sigma" => SweepAxis::Sigma,
            "alpha" => SweepAxis::Alpha,
            "M" => SweepAxis::Elements,
            "separation" => SweepAxis::Separation,
            other => {
                return Err(err_at(path, s, "axis", format!("`axis` must be sigma|alpha|M|separation, got `{other}`")))
            }
        };
        let values_entry = require(s, "values").map_err(wrap)?;
        let values = values_entry
            .value
            .split(',')
            .map(|v| {
                let mut e = values_entry.clone();
                e.value = v.trim().to_string();
                parse_f64(&e)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(wrap)?;
        let trials = parse_usize(require(s, "trials").map_err(wrap)?).map_err(wrap)?;
        if trials == 0 {
            return Err(err_at(path, s, "trials", "`trials` must be >= 1".into()));
        }
        let method = match s.get("method").map(|e| e.value.as_str()).unwrap_or("decoupled") {
            "decoupled" => Method::Decoupled,
            "baseline" => Method::Baseline,
            other => return Err(err_at(path, s, "method", format!("`method` must be decoupled|baseline, got `{other}`"))),
        };
        let master_seed = s.get("master_seed").map(parse_u64).transpose().map_err(wrap)?.unwrap_or(0);
        let tol_theta = s.get("tol_theta").map(parse_f64).transpose().map_err(wrap)?.unwrap_or(base.estimator.tol_theta);
        let tol_r = s.get("tol_r").map(parse_f64).transpose().map_err(wrap)?.unwrap_or(base.estimator.tol_r);

        let sweep = Self {
            base,
            axis,
            values,
            trials,
            method,
            master_seed,
            tol_theta,
            tol_r,
        };
        for &v in &sweep.values {
            sweep.point(v).map_err(|m| err_at(path, s, "values", m))?;
        }
        Ok(sweep)
    }

    /// The base scenario with the swept parameter set to `value`.
    pub fn point(&self, value: f64) -> Result<ScenarioFile, String> {
        let mut f = self.base.clone();
        let s = &mut f.scenario;
        match self.axis {
            SweepAxis::Sigma => {
                if value < 0.0 {
                    return Err(format!("sigma {value} is negative"));
                }
                s.noise_sigma = value;
            }
            SweepAxis::Alpha => {
                // Hold the normalized frequencies fixed while alpha moves.
                s.params.alpha = value;
                s.targets = s.targets.drain(..).map(|t| t.into_normalized()).collect();
            }
            SweepAxis::Elements => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(format!("M = {value} is not a positive integer"));
                }
                s.params.elements = value as usize;
                s.targets = s.targets.drain(..).map(|t| t.into_normalized()).collect();
            }
            SweepAxis::Separation => {
                if s.targets.len() < 2 {
                    return Err("separation sweeps need at least two targets".into());
                }
                let n = s.params.samples as f64;
                let first = s.targets[0].omega_r;
                let t = s.targets[1].clone().into_normalized();
                s.targets[1] = xlmimo_core::Target {
                    omega_r: wrap_unit(first + value / n),
                    ..t
                };
            }
        }
        match xlmimo_core::validate(s).into_iter().next() {
            Some(v) => Err(format!("{} = {value}: {v}", self.axis.name())),
            None => Ok(f),
        }
    }
}

/// Noise seed for one trial, drawn from a ChaCha stream keyed by the
/// master seed and the value index.
pub fn trial_seed(master_seed: u64, value_index: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(value_index as u64);
    rng.set_word_pos(2 * trial as u128);
    rng.next_u64()
}

/// Runs every trial; rows come back sorted by value index, then trial.
/// `threads = 0` uses rayon's default pool size.
pub fn run(sweep: &Sweep, threads: usize, timings: bool) -> Result<Vec<BenchRow>, CliError> {
    let jobs: Vec<(usize, usize)> = (0..sweep.values.len())
        .flat_map(|v| (0..sweep.trials).map(move |t| (v, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let mut rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(vi, trial)| run_trial(sweep, vi, trial, timings))
            .collect::<Result<Vec<_>, _>>()
    })?;
    rows.sort_by_key(|r| (r.value_index, r.trial));
    Ok(rows)
}

fn run_trial(sweep: &Sweep, vi: usize, trial: usize, timings: bool) -> Result<BenchRow, CliError> {
    let value = sweep.values[vi];
    let mut point = sweep.point(value).map_err(CliError::Config)?;
    point.scenario.seed = trial_seed(sweep.master_seed, vi, trial);
    let start = Instant::now();
    let model = point.estimator.model_for(&point.scenario.params);
    let y = synthesize(&point.scenario, model)?;
    let outcome = estimate_with(&point, &y, sweep.method, model)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let rep = match_signatures(&point.scenario.targets, &outcome.signatures, sweep.tol_theta, sweep.tol_r);
    Ok(BenchRow {
        value_index: vi,
        axis_value: value,
        trial,
        detections: outcome.signatures.len(),
        misses: rep.misses.len(),
        false_alarms: rep.false_alarms.len(),
        rmse_theta: rep.rmse_theta,
        rmse_r: rep.rmse_r,
        runtime_ms: if timings { elapsed } else { 0.0 },
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rows(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut text = BENCH_HEADER.join(",");
    text.push('\n');
    for r in rows {
        let fields = [
            r.axis_value.to_string(),
            r.trial.to_string(),
            r.detections.to_string(),
            r.misses.to_string(),
            r.false_alarms.to_string(),
            opt(r.rmse_theta),
            opt(r.rmse_r),
            r.runtime_ms.to_string(),
        ];
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    files::write_text(path, &text)
}
