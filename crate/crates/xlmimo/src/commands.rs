//! The `synth`, `map`, `estimate` and `bench` subcommands.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use xlmimo_core::spectral::{range_angle_map, View};
use xlmimo_core::{
    detect_clusters, estimate_narrowband, estimate_wideband, match_signatures, peaks_to_signatures, IfMatrix, Model,
    Scenario, SignatureEstimate,
};

use crate::bench::{self, Sweep};
use crate::files;
use crate::report::{ConfigEcho, MatchSummary, RunReport, SignatureRow, Timings};
use crate::{CliError, ScenarioFile};

pub type Env = Vec<(String, String)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Two-stage sparse estimator.
    Decoupled,
    /// Thresholded range-angle map with connected components.
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Decoupled => "decoupled",
            Method::Baseline => "baseline",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "decoupled" => Ok(Method::Decoupled),
            "baseline" => Ok(Method::Baseline),
            _ => Err(format!("unknown method `{s}` (expected decoupled|baseline)")),
        }
    }
}

/// Reads a scenario file with environment overrides; `seed` replaces the
/// noise seed.
pub fn load_scenario(path: &Path, env: &Env, seed: Option<u64>) -> Result<ScenarioFile, CliError> {
    let text = files::read_text(path)?;
    let mut file = ScenarioFile::parse_with_env(&text, env.iter().cloned()).map_err(|err| CliError::Parse {
        path: path.to_path_buf(),
        err,
    })?;
    if let Some(s) = seed {
        file.scenario.seed = s;
    }
    Ok(file)
}

pub fn synthesize(scenario: &Scenario, model: Model) -> Result<IfMatrix, CliError> {
    model
        .synthesize(scenario)
        .map_err(|e| CliError::Config(format!("{} model: {e}", model.name())))
}

/// Result of running one method on one measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub signatures: Vec<SignatureEstimate>,
    pub groups: usize,
    pub diagnostics: Vec<String>,
    pub config: ConfigEcho,
}

/// Runs `method` on `y`. For the decoupled method a narrowband `model`
/// selects the narrowband estimator; anything else the wideband one.
pub fn estimate_with(file: &ScenarioFile, y: &IfMatrix, method: Method, model: Model) -> Result<Outcome, CliError> {
    match method {
        Method::Decoupled => {
            let cfg = file.estimator.config(&file.scenario);
            let est = match model {
                Model::Narrowband => estimate_narrowband(y, &cfg),
                Model::Wideband | Model::Exact => estimate_wideband(y, &cfg),
            }
            .map_err(|e| CliError::Config(format!("estimator: {e}")))?;
            Ok(Outcome {
                signatures: est.signatures,
                groups: est.groups,
                diagnostics: est.diagnostics.iter().map(|d| format!("{d:?}")).collect(),
                config: ConfigEcho {
                    method: method.name(),
                    model: model.name(),
                    estimator: Some((&cfg).into()),
                    rel_threshold: None,
                    scenario: file.to_text(),
                },
            })
        }
        Method::Baseline => {
            let rel = file.estimator.rel_threshold;
            let map = range_angle_map(&y.data);
            let clusters = detect_clusters(&map, rel).map_err(|e| CliError::Config(format!("baseline: {e}")))?;
            let signatures =
                peaks_to_signatures(&clusters, &map).map_err(|e| CliError::Config(format!("baseline: {e}")))?;
            Ok(Outcome {
                groups: signatures.len(),
                signatures,
                diagnostics: Vec::new(),
                config: ConfigEcho {
                    method: method.name(),
                    model: model.name(),
                    estimator: None,
                    rel_threshold: Some(rel),
                    scenario: file.to_text(),
                },
            })
        }
    }
}

/// Loads an `m,n,re,im` file as a measurement under `file`'s parameters.
pub fn load_matrix(path: &Path, file: &ScenarioFile) -> Result<IfMatrix, CliError> {
    let data = files::read_matrix(path)?;
    let p = &file.scenario.params;
    if (data.rows(), data.cols()) != (p.elements, p.samples) {
        return Err(CliError::Config(format!(
            "{}: matrix is {}x{} but the scenario expects {}x{}",
            path.display(),
            data.rows(),
            data.cols(),
            p.elements,
            p.samples
        )));
    }
    Ok(IfMatrix { params: p.clone(), data })
}

#[derive(Clone, Debug)]
pub struct SynthArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub model: Option<Model>,
    pub seed: Option<u64>,
}

/// Writes the matrix and a `.meta` sidecar with the canonical scenario.
pub fn synth(args: &SynthArgs, env: &Env) -> Result<String, CliError> {
    let mut file = load_scenario(&args.scenario, env, args.seed)?;
    let model = args.model.unwrap_or_else(|| file.estimator.model_for(&file.scenario.params));
    let y = synthesize(&file.scenario, model)?;
    files::write_matrix(&args.out, &y.data)?;
    file.estimator.model = Some(model);
    let meta = files::sidecar(&args.out, "meta");
    files::write_text(&meta, &file.to_text())?;
    Ok(format!(
        "wrote {}x{} {} matrix to {}",
        y.elements(),
        y.samples(),
        model.name(),
        args.out.display()
    ))
}

#[derive(Clone, Debug)]
pub struct MapArgs {
    pub scenario: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub view: View,
    pub out: PathBuf,
    pub model: Option<Model>,
    pub seed: Option<u64>,
}

pub fn map(args: &MapArgs, env: &Env) -> Result<String, CliError> {
    let data = match (&args.matrix, &args.scenario) {
        (Some(m), _) => files::read_matrix(m)?,
        (None, Some(s)) => {
            let file = load_scenario(s, env, args.seed)?;
            let model = args.model.unwrap_or_else(|| file.estimator.model_for(&file.scenario.params));
            synthesize(&file.scenario, model)?.data
        }
        (None, None) => return Err(CliError::Config("map needs --scenario or --matrix".into())),
    };
    let grid = args.view.compute(&data);
    files::write_map(&args.out, &grid, args.view)?;
    Ok(format!(
        "wrote {}x{} {} map to {}",
        grid.rows,
        grid.cols,
        args.view.name(),
        args.out.display()
    ))
}

#[derive(Clone, Debug)]
pub struct EstimateArgs {
    pub scenario: PathBuf,
    pub matrix: Option<PathBuf>,
    pub method: Method,
    pub model: Option<Model>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub timings: bool,
}

/// Writes the signature CSV to `out` and the run report to
/// `out.report.json`.
pub fn estimate(args: &EstimateArgs, env: &Env) -> Result<String, CliError> {
    let file = load_scenario(&args.scenario, env, args.seed)?;
    let model = args.model.unwrap_or_else(|| file.estimator.model_for(&file.scenario.params));
    let start = Instant::now();
    let y = match &args.matrix {
        Some(path) => load_matrix(path, &file)?,
        None => synthesize(&file.scenario, model)?,
    };
    let synth_ms = start.elapsed().as_secs_f64() * 1e3;
    let start = Instant::now();
    let outcome = estimate_with(&file, &y, args.method, model)?;
    let estimate_ms = start.elapsed().as_secs_f64() * 1e3;

    files::write_signatures(&args.out, &outcome.signatures)?;
    let targets = &file.scenario.targets;
    let (tol_theta, tol_r) = (file.estimator.tol_theta, file.estimator.tol_r);
    let match_report = (!targets.is_empty()).then(|| {
        MatchSummary::new(
            &match_signatures(targets, &outcome.signatures, tol_theta, tol_r),
            tol_theta,
            tol_r,
        )
    });
    let summary = match &match_report {
        Some(m) => format!(
            "{} signatures ({} matched, {} missed, {} false alarms) written to {}",
            outcome.signatures.len(),
            m.matched,
            m.misses,
            m.false_alarms,
            args.out.display()
        ),
        None => format!("{} signatures written to {}", outcome.signatures.len(), args.out.display()),
    };
    let report = RunReport {
        signatures: outcome.signatures.iter().map(SignatureRow::from).collect(),
        groups: outcome.groups,
        diagnostics: outcome.diagnostics,
        match_report,
        timings: args.timings.then_some(Timings { synth_ms, estimate_ms }),
        config: outcome.config,
    };
    files::write_text(&files::sidecar(&args.out, "report.json"), &report.to_json())?;
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct BenchArgs {
    pub sweep: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: usize,
    pub timings: bool,
}

pub fn bench(args: &BenchArgs, env: &Env) -> Result<String, CliError> {
    let mut sweep = Sweep::load(&args.sweep, env.iter().cloned())?;
    if let Some(s) = args.seed {
        sweep.master_seed = s;
    }
    let rows = bench::run(&sweep, args.threads, args.timings)?;
    bench::write_rows(&args.out, &rows)?;
    Ok(format!(
        "{} trials over {} values of {} written to {}",
        rows.len(),
        sweep.values.len(),
        sweep.axis.name(),
        args.out.display()
    ))
}
