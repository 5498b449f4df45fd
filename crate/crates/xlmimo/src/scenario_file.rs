//! Plain-text scenario files.
//!
//! ```text
//! # comment
//! [radar]
//! f_c = 77e9
//! alpha = 0.1
//! T_ch = 50e-6
//! M = 256
//! N = 256
//!
//! [target]
//! omega_theta = 0.2868
//! omega_r = 0.2908
//! ```
//!
//! Sections `[radar]`, `[noise]` and `[estimator]` appear at most once;
//! `[target]` repeats. Any key can be overridden from the environment as
//! `XLMIMO_<SECTION>_<KEY>` (upper case), with targets addressed as
//! `XLMIMO_TARGET<k>_<KEY>`, `k` counting from 1.

use std::fmt::{self, Write as _};

use thiserror::Error;
use xlmimo_core::sparse::ResidualTol;
use xlmimo_core::{EstimatorConfig, Model, Projection, RadarParams, Scenario, StopRule, Target, C64};

pub const ENV_PREFIX: &str = "XLMIMO_";

/// Every section any file kind accepts; overrides aimed at a section the
/// current schema lacks belong to another file and are skipped.
const ENV_SECTIONS: &[&str] = &["radar", "noise", "target", "estimator", "sweep"];

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{message}", location(.line, .source_name))]
pub struct ParseError {
    pub line: Option<usize>,
    /// Environment variable the bad value came from, if any.
    pub source_name: Option<String>,
    pub message: String,
}

fn location(line: &Option<usize>, source_name: &Option<String>) -> String {
    match (line, source_name) {
        (_, Some(var)) => format!("environment variable {var}: "),
        (Some(l), None) => format!("line {l}: "),
        (None, None) => String::new(),
    }
}

impl ParseError {
    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            line,
            source_name: None,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    /// `None` for values injected from the environment.
    pub line: Option<usize>,
    pub env: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    fn set(&mut self, key: &str, value: String, env: String) {
        self.entries.push(Entry {
            key: key.to_string(),
            value,
            line: None,
            env: Some(env),
        });
    }
}

/// Sectioned `key = value` document, before interpretation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ParseError::at(Some(line), format!("malformed section header `{content}`")))?
                    .trim();
                if name.is_empty() {
                    return Err(ParseError::at(Some(line), "empty section name"));
                }
                sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ParseError::at(Some(line), format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ParseError::at(Some(line), "missing key before `=`"));
            }
            let section = sections
                .last_mut()
                .ok_or_else(|| ParseError::at(Some(line), format!("key `{key}` outside any section")))?;
            if section.entries.iter().any(|e| e.key == key) {
                return Err(ParseError::at(
                    Some(line),
                    format!("duplicate key `{key}` in [{}]", section.name),
                ));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line: Some(line),
                env: None,
            });
        }
        Ok(Self { sections })
    }

    pub fn sections<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    /// The only section called `name`, if present.
    pub fn single<'a>(&'a self, name: &'a str) -> Result<Option<&'a Section>, ParseError> {
        let mut it = self.sections(name);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(ParseError::at(Some(dup.line), format!("section [{name}] given twice")));
        }
        Ok(first)
    }

    /// Checks section names and keys against `schema`, a list of
    /// `(section, keys)`.
    pub fn check_schema(&self, schema: &[(&str, &[&str])]) -> Result<(), ParseError> {
        for s in &self.sections {
            let Some((_, keys)) = schema.iter().find(|(n, _)| *n == s.name) else {
                return Err(ParseError::at(Some(s.line), format!("unknown section [{}]", s.name)));
            };
            for e in &s.entries {
                if !keys.contains(&e.key.as_str()) {
                    return Err(ParseError {
                        line: e.line,
                        source_name: e.env.clone(),
                        message: format!("unknown key `{}` in [{}]", e.key, s.name),
                    });
                }
            }
        }
        Ok(())
    }

    /// Applies `XLMIMO_<SECTION>_<KEY>` overrides. Variables without the
    /// prefix are ignored; ones with it must name a known key.
    pub fn apply_env<I, K, V>(&mut self, vars: I, schema: &[(&str, &[&str])]) -> Result<(), ParseError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut vars: Vec<(String, String)> = vars
            .into_iter()
            .filter(|(k, _)| k.as_ref().starts_with(ENV_PREFIX))
            .map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string()))
            .collect();
        vars.sort();
        for (var, value) in vars {
            let err = |message: String| ParseError {
                line: None,
                source_name: Some(var.clone()),
                message,
            };
            let rest = &var[ENV_PREFIX.len()..];
            let foreign = ENV_SECTIONS
                .iter()
                .filter(|n| !schema.iter().any(|(s, _)| s == *n))
                .any(|n| rest.starts_with(&n.to_uppercase()));
            if foreign {
                continue;
            }
            let mut resolved = None;
            for (section, keys) in schema {
                let upper = section.to_uppercase();
                let Some(tail) = rest.strip_prefix(upper.as_str()) else {
                    continue;
                };
                // Repeated sections carry a 1-based index before the key.
                let digits = tail.bytes().take_while(u8::is_ascii_digit).count();
                let Some(key) = tail[digits..].strip_prefix('_') else {
                    continue;
                };
                let Some(&k) = keys.iter().find(|k| k.to_uppercase() == key) else {
                    continue;
                };
                let index = if digits > 0 {
                    let i: usize = tail[..digits].parse().map_err(|_| err("bad section index".into()))?;
                    Some(i)
                } else {
                    None
                };
                resolved = Some((*section, k, index));
                break;
            }
            let Some((section, key, index)) = resolved else {
                return Err(err("does not name a known scenario key".into()));
            };
            let target = match index {
                None => {
                    let mut hits = self.sections.iter().filter(|s| s.name == section).count();
                    if hits == 0 {
                        self.sections.push(Section {
                            name: section.to_string(),
                            line: 0,
                            entries: Vec::new(),
                        });
                        hits = 1;
                    }
                    if hits > 1 {
                        return Err(err(format!("[{section}] repeats; add an index, e.g. {ENV_PREFIX}{}1_...", section.to_uppercase())));
                    }
                    self.sections.iter_mut().find(|s| s.name == section)
                }
                Some(i) => {
                    if i == 0 {
                        return Err(err("section indices count from 1".into()));
                    }
                    self.sections.iter_mut().filter(|s| s.name == section).nth(i - 1)
                }
            };
            let Some(target) = target else {
                return Err(err(format!("no [{section}] number {}", index.unwrap_or(1))));
            };
            target.set(key, value, var.clone());
        }
        Ok(())
    }
}

fn value_error(e: &Entry, message: String) -> ParseError {
    ParseError {
        line: e.line,
        source_name: e.env.clone(),
        message,
    }
}

pub fn parse_f64(e: &Entry) -> Result<f64, ParseError> {
    match e.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(value_error(e, format!("`{}` needs a finite number, got `{}`", e.key, e.value))),
    }
}

pub fn parse_usize(e: &Entry) -> Result<usize, ParseError> {
    e.value
        .parse::<usize>()
        .map_err(|_| value_error(e, format!("`{}` needs a non-negative integer, got `{}`", e.key, e.value)))
}

pub fn parse_u64(e: &Entry) -> Result<u64, ParseError> {
    e.value
        .parse::<u64>()
        .map_err(|_| value_error(e, format!("`{}` needs a non-negative integer, got `{}`", e.key, e.value)))
}

fn parse_bool(e: &Entry) -> Result<bool, ParseError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(value_error(e, format!("`{}` needs true or false, got `{}`", e.key, e.value))),
    }
}

fn parse_choice<T>(e: &Entry, choices: &[(&str, T)]) -> Result<T, ParseError>
where
    T: Copy,
{
    choices.iter().find(|(n, _)| *n == e.value).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = choices.iter().map(|(n, _)| *n).collect();
        value_error(e, format!("`{}` must be one of {}, got `{}`", e.key, names.join("|"), e.value))
    })
}

pub fn require<'a>(s: &'a Section, key: &str) -> Result<&'a Entry, ParseError> {
    s.get(key)
        .ok_or_else(|| ParseError::at(Some(s.line).filter(|&l| l > 0), format!("[{}] is missing `{key}`", s.name)))
}

const RADAR_KEYS: &[&str] = &["f_c", "alpha", "T_ch", "f_s", "M", "N", "d_over_lambda", "c"];
const NOISE_KEYS: &[&str] = &["sigma", "seed"];
const TARGET_KEYS: &[&str] = &["omega_theta", "omega_r", "range_m", "theta_deg", "amplitude_re", "amplitude_im"];
const ESTIMATOR_KEYS: &[&str] = &[
    "O_f",
    "delta",
    "stop",
    "max_atoms",
    "residual_tol",
    "model",
    "snapshots",
    "projection",
    "refine",
    "min_relative_amplitude",
    "rel_threshold",
    "tol_theta",
    "tol_r",
];

pub const SCHEMA: &[(&str, &[&str])] = &[
    ("radar", RADAR_KEYS),
    ("noise", NOISE_KEYS),
    ("target", TARGET_KEYS),
    ("estimator", ESTIMATOR_KEYS),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopKind {
    /// Stop after as many atoms as there are truth targets.
    Known,
    /// Residual threshold: `residual_tol` if set, else the noise floor.
    Residual,
}

const MODELS: &[(&str, Model)] = &[
    ("narrowband", Model::Narrowband),
    ("wideband", Model::Wideband),
    ("exact", Model::Exact),
];
const PROJECTIONS: &[(&str, Projection)] = &[("matched", Projection::Matched), ("nearest_bin", Projection::NearestBin)];
const STOPS: &[(&str, StopKind)] = &[("known", StopKind::Known), ("residual", StopKind::Residual)];

/// Estimator and reporting settings from `[estimator]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSettings {
    pub oversampling: usize,
    pub delta: Option<f64>,
    pub stop: Option<StopKind>,
    pub max_atoms: Option<usize>,
    pub residual_tol: Option<f64>,
    pub model: Option<Model>,
    pub snapshots: usize,
    pub projection: Projection,
    pub refine: bool,
    pub min_relative_amplitude: f64,
    pub rel_threshold: f64,
    pub tol_theta: f64,
    pub tol_r: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        let cfg = EstimatorConfig::default();
        Self {
            oversampling: cfg.oversampling,
            delta: None,
            stop: None,
            max_atoms: None,
            residual_tol: None,
            model: None,
            snapshots: cfg.snapshots,
            projection: cfg.projection,
            refine: cfg.refine_pairs,
            min_relative_amplitude: cfg.min_relative_amplitude,
            rel_threshold: xlmimo_core::DEFAULT_REL_THRESHOLD,
            tol_theta: 0.01,
            tol_r: 0.01,
        }
    }
}

impl EstimatorSettings {
    /// The signal model: explicit setting, else narrowband when `alpha = 0`
    /// and wideband otherwise.
    pub fn model_for(&self, params: &RadarParams) -> Model {
        self.model.unwrap_or(if params.alpha == 0.0 {
            Model::Narrowband
        } else {
            Model::Wideband
        })
    }

    pub fn stop_kind(&self, scenario: &Scenario) -> StopKind {
        self.stop.unwrap_or(if scenario.targets.is_empty() {
            StopKind::Residual
        } else {
            StopKind::Known
        })
    }

    pub fn config(&self, scenario: &Scenario) -> EstimatorConfig {
        let k = scenario.targets.len();
        let (stop, max_signatures) = match self.stop_kind(scenario) {
            StopKind::Known if k > 0 => (StopRule::sparsity(self.max_atoms.unwrap_or(k)), Some(k)),
            _ => {
                let residual = match self.residual_tol {
                    Some(eps) => ResidualTol::Relative(eps),
                    None => ResidualTol::NoiseFloor {
                        sigma: scenario.noise_sigma,
                    },
                };
                let rule = StopRule {
                    max_atoms: Some(self.max_atoms.unwrap_or(16)),
                    residual: Some(residual),
                };
                (rule, None)
            }
        };
        EstimatorConfig {
            oversampling: self.oversampling,
            stage1_stop: stop,
            stage2_stop: stop,
            merge_tol: self.delta,
            snapshots: self.snapshots,
            projection: self.projection,
            refine_pairs: self.refine,
            max_signatures,
            min_relative_amplitude: self.min_relative_amplitude,
        }
    }

    fn parse(s: &Section) -> Result<Self, ParseError> {
        let mut out = Self::default();
        for e in &s.entries {
            match e.key.as_str() {
                "O_f" => {
                    out.oversampling = parse_usize(e)?;
                    if out.oversampling == 0 {
                        return Err(value_error(e, "`O_f` must be >= 1".into()));
                    }
                }
                "delta" => {
                    let d = parse_f64(e)?;
                    if d < 0.0 {
                        return Err(value_error(e, "`delta` must be >= 0".into()));
                    }
                    out.delta = Some(d);
                }
                "stop" => out.stop = Some(parse_choice(e, STOPS)?),
                "max_atoms" => out.max_atoms = Some(parse_usize(e)?),
                "residual_tol" => out.residual_tol = Some(parse_f64(e)?),
                "model" => out.model = Some(parse_choice(e, MODELS)?),
                "snapshots" => out.snapshots = parse_usize(e)?.max(1),
                "projection" => out.projection = parse_choice(e, PROJECTIONS)?,
                "refine" => out.refine = parse_bool(e)?,
                "min_relative_amplitude" => {
                    out.min_relative_amplitude = parse_f64(e)?;
                    if !(0.0..1.0).contains(&out.min_relative_amplitude) {
                        return Err(value_error(e, "`min_relative_amplitude` must lie in [0, 1)".into()));
                    }
                }
                "rel_threshold" => {
                    out.rel_threshold = parse_f64(e)?;
                    if !(out.rel_threshold > 0.0 && out.rel_threshold < 1.0) {
                        return Err(value_error(e, "`rel_threshold` must lie in (0, 1)".into()));
                    }
                }
                "tol_theta" => out.tol_theta = parse_f64(e)?,
                "tol_r" => out.tol_r = parse_f64(e)?,
                _ => unreachable!("schema checked"),
            }
        }
        Ok(out)
    }
}

/// A parsed scenario file.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub estimator: EstimatorSettings,
}

impl ScenarioFile {
    /// Parses `text`, applying environment overrides from `env`.
    pub fn parse_with_env<I, K, V>(text: &str, env: I) -> Result<Self, ParseError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut doc = Document::parse(text)?;
        doc.check_schema(SCHEMA)?;
        doc.apply_env(env, SCHEMA)?;
        Self::from_document(&doc)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Self::parse_with_env(text, std::iter::empty::<(&str, &str)>())
    }

    pub fn from_document(doc: &Document) -> Result<Self, ParseError> {
        let radar = doc
            .single("radar")?
            .ok_or_else(|| ParseError::at(None, "missing [radar] section"))?;
        let params = parse_radar(radar)?;

        let (mut sigma, mut seed) = (0.0, 0);
        if let Some(noise) = doc.single("noise")? {
            if let Some(e) = noise.get("sigma") {
                sigma = parse_f64(e)?;
                if sigma < 0.0 {
                    return Err(value_error(e, "`sigma` must be >= 0".into()));
                }
            }
            if let Some(e) = noise.get("seed") {
                seed = parse_u64(e)?;
            }
        }

        let targets = doc
            .sections("target")
            .map(|s| parse_target(s, &params))
            .collect::<Result<Vec<_>, _>>()?;

        let estimator = match doc.single("estimator")? {
            Some(s) => EstimatorSettings::parse(s)?,
            None => EstimatorSettings::default(),
        };

        let scenario = Scenario::new(params, targets).with_noise(sigma, seed);
        if let Some(v) = xlmimo_core::validate(&scenario).into_iter().next() {
            return Err(ParseError::at(None, format!("invalid scenario: {v}")));
        }
        Ok(Self { scenario, estimator })
    }

    /// Canonical text form. Numbers use the shortest representation that
    /// parses back to the same value, so `parse(to_text())` is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out).expect("writing to a String");
        out
    }

    fn write_text(&self, out: &mut String) -> fmt::Result {
        let p = &self.scenario.params;
        writeln!(out, "[radar]")?;
        writeln!(out, "f_c = {}", p.carrier_hz)?;
        writeln!(out, "alpha = {}", p.alpha)?;
        writeln!(out, "T_ch = {}", p.chirp_s)?;
        writeln!(out, "f_s = {}", p.sample_rate_hz)?;
        writeln!(out, "M = {}", p.elements)?;
        writeln!(out, "N = {}", p.samples)?;
        writeln!(out, "d_over_lambda = {}", p.spacing_ratio())?;
        writeln!(out, "c = {}", p.light_speed)?;
        writeln!(out)?;
        writeln!(out, "[noise]")?;
        writeln!(out, "sigma = {}", self.scenario.noise_sigma)?;
        writeln!(out, "seed = {}", self.scenario.seed)?;
        for t in &self.scenario.targets {
            writeln!(out)?;
            writeln!(out, "[target]")?;
            writeln!(out, "omega_theta = {}", t.omega_theta)?;
            writeln!(out, "omega_r = {}", t.omega_r)?;
            if let (Some(r), Some(th)) = (t.range_m, t.theta_deg) {
                writeln!(out, "range_m = {r}")?;
                writeln!(out, "theta_deg = {th}")?;
            }
            writeln!(out, "amplitude_re = {}", t.amplitude.re)?;
            writeln!(out, "amplitude_im = {}", t.amplitude.im)?;
        }
        let e = &self.estimator;
        writeln!(out)?;
        writeln!(out, "[estimator]")?;
        writeln!(out, "O_f = {}", e.oversampling)?;
        if let Some(d) = e.delta {
            writeln!(out, "delta = {d}")?;
        }
        if let Some(s) = e.stop {
            let name = STOPS.iter().find(|(_, v)| *v == s).unwrap().0;
            writeln!(out, "stop = {name}")?;
        }
        if let Some(k) = e.max_atoms {
            writeln!(out, "max_atoms = {k}")?;
        }
        if let Some(t) = e.residual_tol {
            writeln!(out, "residual_tol = {t}")?;
        }
        if let Some(m) = e.model {
            writeln!(out, "model = {}", m.name())?;
        }
        writeln!(out, "snapshots = {}", e.snapshots)?;
        let proj = PROJECTIONS.iter().find(|(_, v)| *v == e.projection).unwrap().0;
        writeln!(out, "projection = {proj}")?;
        writeln!(out, "refine = {}", e.refine)?;
        writeln!(out, "min_relative_amplitude = {}", e.min_relative_amplitude)?;
        writeln!(out, "rel_threshold = {}", e.rel_threshold)?;
        writeln!(out, "tol_theta = {}", e.tol_theta)?;
        writeln!(out, "tol_r = {}", e.tol_r)?;
        Ok(())
    }
}

fn parse_radar(s: &Section) -> Result<RadarParams, ParseError> {
    let f_c = parse_f64(require(s, "f_c")?)?;
    let alpha = parse_f64(require(s, "alpha")?)?;
    let t_ch = parse_f64(require(s, "T_ch")?)?;
    let m = parse_usize(require(s, "M")?)?;
    let n = s.get("N").map(parse_usize).transpose()?;
    let f_s = s.get("f_s").map(parse_f64).transpose()?;
    let f_s = match (f_s, n) {
        (Some(fs), Some(n)) => {
            let derived = xlmimo_core::model::sample_count(fs, t_ch);
            if derived != n {
                let e = s.get("N").unwrap();
                return Err(value_error(e, format!("`N = {n}` disagrees with ceil(f_s * T_ch) = {derived}")));
            }
            fs
        }
        (Some(fs), None) => fs,
        (None, Some(n)) => n as f64 / t_ch,
        (None, None) => return Err(ParseError::at(Some(s.line), "[radar] needs `N` or `f_s`")),
    };
    let mut p = RadarParams::new(f_c, alpha, t_ch, f_s, m)
        .map_err(|e| ParseError::at(Some(s.line).filter(|&l| l > 0), format!("invalid [radar]: {e}")))?;
    if let Some(e) = s.get("c") {
        let c = parse_f64(e)?;
        if !(c > 0.0) {
            return Err(value_error(e, "`c` must be > 0".into()));
        }
        p = p.with_light_speed(c);
    }
    if let Some(e) = s.get("d_over_lambda") {
        let d = parse_f64(e)?;
        if !(d > 0.0) {
            return Err(value_error(e, "`d_over_lambda` must be > 0".into()));
        }
        p = p.with_spacing_ratio(d);
    }
    Ok(p)
}

fn parse_target(s: &Section, params: &RadarParams) -> Result<Target, ParseError> {
    let get = |k: &str| s.get(k).map(parse_f64).transpose();
    let amplitude = C64::new(get("amplitude_re")?.unwrap_or(1.0), get("amplitude_im")?.unwrap_or(0.0));
    let (ot, or) = (get("omega_theta")?, get("omega_r")?);
    let (r, th) = (get("range_m")?, get("theta_deg")?);
    let line = Some(s.line).filter(|&l| l > 0);
    match (ot, or, r, th) {
        (Some(ot), Some(or), r, th) => Ok(Target {
            omega_theta: ot,
            omega_r: or,
            amplitude,
            range_m: r.filter(|_| th.is_some()),
            theta_deg: th.filter(|_| r.is_some()),
        }),
        (None, None, Some(r), Some(th)) => Target::physical(params, r, th, amplitude)
            .map_err(|e| ParseError::at(line, format!("invalid [target]: {e}"))),
        _ => Err(ParseError::at(
            line,
            "[target] needs omega_theta and omega_r, or range_m and theta_deg",
        )),
    }
}
