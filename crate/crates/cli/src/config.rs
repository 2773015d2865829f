//! Run configuration: a plain-text `key = value` grammar with `[section]`
//! headers.
//!
//! ```text
//! # comments start with '#'
//! backend = ci
//! mode = evolve
//! g_bi = 0.2
//!
//! [driving]
//! mode = continuous
//! omega_d = 1.5
//!
//! [sweep]
//! omega_d = 0.075, 0.3, 1.15, 1.5
//! ```
//!
//! Inside `[section]` a key `k` is read as `section.k`; dotted keys work
//! anywhere. Several assignments may share a line when separated by commas,
//! and list values are comma separated (optionally bracketed). Keys under
//! `[model]` are the same as the top-level model keys. The `[results]` and
//! `[build]` sections are informational (they appear in manifests) and are
//! skipped. Anything else that is not a known key is rejected.

use std::fmt::Write as _;
use std::path::PathBuf;

use bosemix_core::analysis::DrivenResponse;
use bosemix_core::{DampedParams, DrivingMode, DrivingProtocol, GridSpec, MixtureModel, SpeciesParams};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    MeanField,
    FewBody,
    Ci,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::MeanField => "meanfield",
            Backend::FewBody => "fewbody",
            Backend::Ci => "ci",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "meanfield" | "mf" => Some(Backend::MeanField),
            "fewbody" | "exact" => Some(Backend::FewBody),
            "ci" => Some(Backend::Ci),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    GroundState,
    Evolve,
    Sweep,
    Fit,
    Converge,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::GroundState => "groundstate",
            RunMode::Evolve => "evolve",
            RunMode::Sweep => "sweep",
            RunMode::Fit => "fit",
            RunMode::Converge => "converge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "groundstate" => Some(RunMode::GroundState),
            "evolve" => Some(RunMode::Evolve),
            "sweep" => Some(RunMode::Sweep),
            "fit" => Some(RunMode::Fit),
            "converge" => Some(RunMode::Converge),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub dt: f64,
    /// Record every this many steps.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub response: DrivenResponse,
    pub guess: DampedParams,
    /// Transient cut; one driving period when absent.
    pub skip: Option<f64>,
    /// Fit an existing `series.csv` instead of running the model.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: MixtureModel,
    pub backend: Backend,
    pub mode: RunMode,
    pub time: TimeGrid,
    pub sweep: Vec<f64>,
    pub d_b: usize,
    pub d_i: usize,
    /// `(d_B, d_I)` pairs for convergence runs, smallest first.
    pub ladder: Vec<(usize, usize)>,
    pub fewbody_points: usize,
    pub double_trap: bool,
    pub gs_tolerance: f64,
    pub snapshot_every: Option<usize>,
    pub correlations: bool,
    pub tf_threshold: f64,
    pub fit: FitSettings,
    pub repulsive_guard: bool,
    pub output_dir: Option<PathBuf>,
}

const MODEL_KEYS: &[&str] = &[
    "n_b", "n_i", "m_b", "m_i", "omega", "omega_b", "omega_i", "g_bb", "g_ii", "g_bi",
];

const KEYS: &[&str] = &[
    "backend",
    "mode",
    "grid.x_min",
    "grid.x_max",
    "grid.points",
    "driving.mode",
    "driving.amplitude",
    "driving.omega_d",
    "driving.periods",
    "time.t_end",
    "time.dt",
    "time.stride",
    "sweep.omega_d",
    "basis.d_b",
    "basis.d_i",
    "converge.d_b",
    "converge.d_i",
    "fewbody.points",
    "fewbody.double_trap",
    "groundstate.tolerance",
    "output.dir",
    "output.snapshot_every",
    "output.correlations",
    "analysis.tf_threshold",
    "fit.response",
    "fit.lambda",
    "fit.omega_eff",
    "fit.delta",
    "fit.skip",
    "fit.input",
    "guard.repulsive",
];

const INFORMATIONAL: &[&str] = &["results", "build"];

struct Entry {
    key: String,
    value: String,
    line: usize,
    column: usize,
}

fn split_assignments(body: &str, line: usize, offset: usize) -> Result<Vec<Entry>, ConfigError> {
    // a comma starts a new assignment only if the next piece has its own '='
    let mut pieces: Vec<(usize, String)> = Vec::new();
    let mut start = 0;
    for (i, ch) in body.char_indices() {
        if ch == ',' {
            pieces.push((start, body[start..i].to_string()));
            start = i + 1;
        }
    }
    pieces.push((start, body[start..].to_string()));
    let mut merged: Vec<(usize, String)> = Vec::new();
    for (pos, p) in pieces {
        match merged.last_mut() {
            Some(last) if !p.contains('=') => {
                last.1.push(',');
                last.1.push_str(&p);
            }
            _ => merged.push((pos, p)),
        }
    }
    merged
        .into_iter()
        .map(|(pos, text)| {
            let column = offset + pos + text.len() - text.trim_start().len() + 1;
            let Some(eq) = text.find('=') else {
                return Err(ConfigError::Parse {
                    line,
                    column,
                    message: format!("expected `key = value`, found `{}`", text.trim()),
                });
            };
            let key = text[..eq].trim();
            let value = text[eq + 1..].trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(ConfigError::Parse {
                    line,
                    column,
                    message: format!("malformed key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    column: offset + pos + eq + 2,
                    message: format!("missing value for `{key}`"),
                });
            }
            Ok(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
                column,
            })
        })
        .collect()
}

fn tokenize(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = content.len() - content.trim_start().len();
        if trimmed.starts_with('[') && !trimmed.contains('=') {
            let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) else {
                return Err(ConfigError::Parse {
                    line,
                    column: lead + 1,
                    message: "unterminated section header".into(),
                });
            };
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::Parse {
                    line,
                    column: lead + 2,
                    message: format!("bad section name `{name}`"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        if section.as_deref().is_some_and(|s| INFORMATIONAL.contains(&s)) {
            continue;
        }
        for mut e in split_assignments(content, line, 0)? {
            if let Some(s) = &section {
                e.key = format!("{s}.{}", e.key);
            }
            if let Some(rest) = e.key.strip_prefix("model.") {
                e.key = rest.to_string();
            }
            out.push(e);
        }
    }
    Ok(out)
}

struct Values {
    entries: Vec<Entry>,
}

impl Values {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| invalid(key, format!("cannot parse `{}`", e.value))),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.parse::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(invalid(key, "must be finite"));
        }
        Ok(v)
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parse::<usize>(key)?.unwrap_or(default))
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key).map(|e| e.value.as_str()) {
            None => Ok(default),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(v) => Err(invalid(key, format!("expected true or false, got `{v}`"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let body = e.value.trim();
        let body = body
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .unwrap_or(body);
        body.split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|_| invalid(key, format!("cannot parse list item `{s}`"))))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, None)
}

/// Parses `text`; `backend` overrides the `backend` key, which matters
/// because backend-specific defaults (bath size) depend on it.
pub fn parse_config_with(text: &str, backend: Option<Backend>) -> Result<RunConfig, ConfigError> {
    let entries = tokenize(text)?;
    for (i, e) in entries.iter().enumerate() {
        if !KEYS.contains(&e.key.as_str()) && !MODEL_KEYS.contains(&e.key.as_str()) {
            return Err(ConfigError::Parse {
                line: e.line,
                column: e.column,
                message: format!("unknown key `{}`", e.key),
            });
        }
        if entries[..i].iter().any(|p| p.key == e.key) {
            return Err(ConfigError::Parse {
                line: e.line,
                column: e.column,
                message: format!("duplicate key `{}`", e.key),
            });
        }
    }
    let v = Values { entries };

    let backend = match backend {
        Some(b) => b,
        None => match v.get("backend") {
            None => Backend::MeanField,
            Some(e) => Backend::parse(&e.value)
                .ok_or_else(|| invalid("backend", format!("unknown backend `{}`", e.value)))?,
        },
    };
    let mode = match v.get("mode") {
        None => RunMode::GroundState,
        Some(e) => RunMode::parse(&e.value).ok_or_else(|| invalid("mode", format!("unknown mode `{}`", e.value)))?,
    };

    let default_bath = match backend {
        Backend::MeanField => 100,
        Backend::Ci => 10,
        Backend::FewBody => 0,
    };
    let omega = v.f64("omega", 0.3)?;
    let mut bath = SpeciesParams::bath(v.usize("n_b", default_bath)?, v.f64("g_bb", 0.5)?);
    bath.mass = v.f64("m_b", 1.0)?;
    bath.trap_freq = v.f64("omega_b", omega)?;
    let mut imp = SpeciesParams::impurity(v.usize("n_i", 2)?, v.f64("g_ii", 0.4)?);
    imp.mass = v.f64("m_i", 1.0)?;
    imp.trap_freq = v.f64("omega_i", omega)?;
    if backend == Backend::FewBody && imp.count != 2 {
        return Err(invalid("n_i", "the fewbody backend handles exactly two impurities"));
    }

    let grid = GridSpec::new(
        v.f64("grid.x_min", -50.0)?,
        v.f64("grid.x_max", 50.0)?,
        v.usize("grid.points", 500)?,
    )
    .map_err(|e| invalid("grid", e.to_string()))?;

    let amplitude = v.f64("driving.amplitude", 20.0)?;
    let omega_d = v.f64("driving.omega_d", 0.3)?;
    let periods = v.parse::<u32>("driving.periods")?.unwrap_or(2);
    let driving = match v.get("driving.mode").map(|e| e.value.as_str()).unwrap_or("pulse") {
        "none" => DrivingProtocol::none(),
        "pulse" => DrivingProtocol {
            amplitude,
            frequency: omega_d,
            mode: DrivingMode::Pulse { periods },
        },
        "continuous" => DrivingProtocol::continuous(amplitude, omega_d),
        other => return Err(invalid("driving.mode", format!("unknown driving mode `{other}`"))),
    };

    let model = MixtureModel {
        bath,
        impurity: imp,
        g_bi: v.f64("g_bi", 0.2)?,
        grid,
        driving,
    };
    model.validate().map_err(|e| match e {
        bosemix_core::Error::InvalidParameter { name, reason } => invalid(name, reason),
        other => invalid("model", other.to_string()),
    })?;

    let repulsive_guard = v.bool("guard.repulsive", true)?;
    if repulsive_guard {
        for (key, g) in [("g_bb", model.bath.g_intra), ("g_ii", model.impurity.g_intra), ("g_bi", model.g_bi)] {
            if g < 0.0 {
                return Err(invalid(
                    key,
                    format!("attractive coupling {g} rejected while guard.repulsive = true"),
                ));
            }
        }
    }

    let time = TimeGrid {
        t_end: v.f64("time.t_end", 100.0)?,
        dt: v.f64("time.dt", 1e-3)?,
        stride: v.usize("time.stride", 100)?,
    };
    if !(time.dt > 0.0) {
        return Err(invalid("time.dt", "must be positive"));
    }
    if time.t_end < 0.0 {
        return Err(invalid("time.t_end", "must be non-negative"));
    }
    if time.stride == 0 {
        return Err(invalid("time.stride", "must be at least 1"));
    }

    let sweep = v.list::<f64>("sweep.omega_d")?.unwrap_or_else(|| vec![0.075, 0.3, 1.15, 1.5]);
    if sweep.iter().any(|w| !(*w > 0.0)) {
        return Err(invalid("sweep.omega_d", "driving frequencies must be positive"));
    }

    let d_b = v.usize("basis.d_b", 3)?;
    let d_i = v.usize("basis.d_i", 6)?;
    if d_b == 0 || d_i == 0 {
        return Err(invalid("basis", "orbital counts must be positive"));
    }
    let ladder_i = v.list::<usize>("converge.d_i")?.unwrap_or_else(|| vec![4, 6, 8]);
    let ladder_b = v.list::<usize>("converge.d_b")?.unwrap_or_else(|| vec![d_b]);
    let ladder: Vec<(usize, usize)> = match ladder_b.len() {
        1 => ladder_i.iter().map(|&i| (ladder_b[0], i)).collect(),
        n if n == ladder_i.len() => ladder_b.iter().copied().zip(ladder_i.iter().copied()).collect(),
        _ => return Err(invalid("converge.d_b", "give one value or one per converge.d_i entry")),
    };
    if ladder.len() < 2 || ladder.iter().any(|&(b, i)| b == 0 || i == 0) {
        return Err(invalid("converge.d_i", "need at least two positive basis sizes"));
    }

    let fewbody_points = v.usize("fewbody.points", 255)?;
    if fewbody_points < 8 {
        return Err(invalid("fewbody.points", "need at least 8 points"));
    }
    let tf_threshold = v.f64("analysis.tf_threshold", 1e-2)?;
    if !(tf_threshold > 0.0 && tf_threshold < 1.0) {
        return Err(invalid("analysis.tf_threshold", "must lie in (0, 1)"));
    }
    let gs_tolerance = v.f64("groundstate.tolerance", 1e-10)?;
    if !(gs_tolerance > 0.0) {
        return Err(invalid("groundstate.tolerance", "must be positive"));
    }

    let response = match v.get("fit.response").map(|e| e.value.as_str()).unwrap_or("printed") {
        "printed" => DrivenResponse::Printed,
        "textbook" => DrivenResponse::Textbook,
        other => return Err(invalid("fit.response", format!("unknown response form `{other}`"))),
    };
    let fit = FitSettings {
        response,
        guess: DampedParams {
            lambda: v.f64("fit.lambda", 0.05)?,
            omega_eff: v.f64("fit.omega_eff", model.impurity.trap_freq)?,
            delta: v.f64("fit.delta", 0.0)?,
        },
        skip: v.parse::<f64>("fit.skip")?,
        input: v.get("fit.input").map(|e| PathBuf::from(&e.value)),
    };

    let snapshot_every = match v.usize("output.snapshot_every", 0)? {
        0 => None,
        k => Some(k),
    };

    Ok(RunConfig {
        model,
        backend,
        mode,
        time,
        sweep,
        d_b,
        d_i,
        ladder,
        fewbody_points,
        double_trap: v.bool("fewbody.double_trap", false)?,
        gs_tolerance,
        snapshot_every,
        correlations: v.bool("output.correlations", true)?,
        tf_threshold,
        fit,
        repulsive_guard,
        output_dir: v.get("output.dir").map(|e| PathBuf::from(&e.value)),
    })
}

fn list_text<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Fully resolved configuration in the input grammar; parsing it gives
    /// back the same configuration.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let _ = writeln!(s, "backend = {}", self.backend.name());
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "n_b = {}", m.bath.count);
        let _ = writeln!(s, "n_i = {}", m.impurity.count);
        let _ = writeln!(s, "m_b = {:?}", m.bath.mass);
        let _ = writeln!(s, "m_i = {:?}", m.impurity.mass);
        let _ = writeln!(s, "omega_b = {:?}", m.bath.trap_freq);
        let _ = writeln!(s, "omega_i = {:?}", m.impurity.trap_freq);
        let _ = writeln!(s, "g_bb = {:?}", m.bath.g_intra);
        let _ = writeln!(s, "g_ii = {:?}", m.impurity.g_intra);
        let _ = writeln!(s, "g_bi = {:?}", m.g_bi);
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "x_min = {:?}", m.grid.x_min());
        let _ = writeln!(s, "x_max = {:?}", m.grid.x_max());
        let _ = writeln!(s, "points = {}", m.grid.len());
        let _ = writeln!(s, "\n[driving]");
        match m.driving.mode {
            DrivingMode::None => {
                let _ = writeln!(s, "mode = none");
            }
            DrivingMode::Pulse { periods } => {
                let _ = writeln!(s, "mode = pulse");
                let _ = writeln!(s, "periods = {periods}");
            }
            DrivingMode::Continuous => {
                let _ = writeln!(s, "mode = continuous");
            }
        }
        let _ = writeln!(s, "amplitude = {:?}", m.driving.amplitude);
        let _ = writeln!(s, "omega_d = {:?}", m.driving.frequency);
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "t_end = {:?}", self.time.t_end);
        let _ = writeln!(s, "dt = {:?}", self.time.dt);
        let _ = writeln!(s, "stride = {}", self.time.stride);
        let _ = writeln!(s, "\n[sweep]");
        let _ = writeln!(
            s,
            "omega_d = {}",
            list_text(&self.sweep.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>())
        );
        let _ = writeln!(s, "\n[basis]");
        let _ = writeln!(s, "d_b = {}", self.d_b);
        let _ = writeln!(s, "d_i = {}", self.d_i);
        let _ = writeln!(s, "\n[converge]");
        let _ = writeln!(s, "d_b = {}", list_text(&self.ladder.iter().map(|l| l.0).collect::<Vec<_>>()));
        let _ = writeln!(s, "d_i = {}", list_text(&self.ladder.iter().map(|l| l.1).collect::<Vec<_>>()));
        let _ = writeln!(s, "\n[fewbody]");
        let _ = writeln!(s, "points = {}", self.fewbody_points);
        let _ = writeln!(s, "double_trap = {}", self.double_trap);
        let _ = writeln!(s, "\n[groundstate]");
        let _ = writeln!(s, "tolerance = {:?}", self.gs_tolerance);
        let _ = writeln!(s, "\n[output]");
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "dir = {}", dir.display());
        }
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every.unwrap_or(0));
        let _ = writeln!(s, "correlations = {}", self.correlations);
        let _ = writeln!(s, "\n[analysis]");
        let _ = writeln!(s, "tf_threshold = {:?}", self.tf_threshold);
        let _ = writeln!(s, "\n[fit]");
        let _ = writeln!(
            s,
            "response = {}",
            match self.fit.response {
                DrivenResponse::Printed => "printed",
                DrivenResponse::Textbook => "textbook",
            }
        );
        let _ = writeln!(s, "lambda = {:?}", self.fit.guess.lambda);
        let _ = writeln!(s, "omega_eff = {:?}", self.fit.guess.omega_eff);
        let _ = writeln!(s, "delta = {:?}", self.fit.guess.delta);
        if let Some(skip) = self.fit.skip {
            let _ = writeln!(s, "skip = {skip:?}");
        }
        if let Some(input) = &self.fit.input {
            let _ = writeln!(s, "input = {}", input.display());
        }
        let _ = writeln!(s, "\n[guard]");
        let _ = writeln!(s, "repulsive = {}", self.repulsive_guard);
        s
    }

    /// Copy with the driving frequency replaced (used by sweeps).
    pub fn with_omega_d(&self, omega_d: f64) -> Self {
        let mut c = self.clone();
        c.model.driving.frequency = omega_d;
        if c.model.driving.mode == DrivingMode::None {
            c.model.driving.mode = DrivingMode::Continuous;
        }
        c
    }
}
