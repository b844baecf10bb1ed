//! Flat `key=value` experiment configuration.
//!
//! A config source is either a plain file of `key=value` lines (`#` starts a comment)
//! or any output file written by this tool, whose `# config key=value` header lines
//! carry the resolved configuration. Command-line flags override file values.

use std::path::PathBuf;

use martensite::Axis;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Constant,
    Laminate,
    CrossingTwin,
    Branching,
    Counterexample,
    Random,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Constant => "constant",
            Kind::Laminate => "laminate",
            Kind::CrossingTwin => "crossing-twin",
            Kind::Branching => "branching",
            Kind::Counterexample => "counterexample",
            Kind::Random => "random",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "constant" => Kind::Constant,
            "laminate" => Kind::Laminate,
            "crossing-twin" => Kind::CrossingTwin,
            "branching" => Kind::Branching,
            "counterexample" => Kind::Counterexample,
            "random" => Kind::Random,
            _ => return Err(CliError::Usage(format!("unknown generator kind '{s}'"))),
        })
    }
}

/// Fully resolved experiment parameters. `out` is where files go and is the only
/// field left out of output headers, so replays into another directory match byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub grid: usize,
    /// Rows; `None` means square.
    pub n2: Option<usize>,
    pub eta: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    /// Field file read by `energy` and `report`.
    pub input: Option<PathBuf>,
    pub phase: u8,
    pub mu: f64,
    pub lambda: f64,
    pub beta: f64,
    /// Both `None` selects the auto-tuned branching parameters.
    pub n_gen: Option<u32>,
    pub w1: Option<f64>,
    pub axis: Axis,
    pub periods: usize,
    pub fraction: f64,
    pub inner_periods: usize,
    pub inner_fraction: f64,
    pub phase_a: u8,
    pub phase_b: u8,
    pub k: Vec<u32>,
    pub feature_scale: f64,
    pub perturb: f64,
    pub flip_rows: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: Kind::Constant,
            grid: 64,
            n2: None,
            eta: vec![1.0],
            seed: 0,
            out: PathBuf::from("out"),
            input: None,
            phase: 1,
            mu: 0.25,
            lambda: 0.25,
            beta: 1.5,
            n_gen: None,
            w1: None,
            axis: Axis::Y1,
            periods: 2,
            fraction: 0.5,
            inner_periods: 2,
            inner_fraction: 0.5,
            phase_a: 1,
            phase_b: 2,
            k: vec![2],
            feature_scale: 0.0625,
            perturb: 0.0,
            flip_rows: vec![0],
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Usage(format!("bad value '{v}' for key '{key}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| num(key, x)).collect()
}

fn auto<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>, CliError> {
    if v.trim() == "auto" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn show_auto<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl ExperimentConfig {
    pub fn n2(&self) -> usize {
        self.n2.unwrap_or(self.grid)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "kind" => self.kind = Kind::parse(v)?,
            "grid" => self.grid = num(key, v)?,
            "n2" => self.n2 = auto(key, v)?,
            "eta" => self.eta = list(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "input" => self.input = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "phase" => self.phase = num(key, v)?,
            "mu" => self.mu = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "n_gen" => self.n_gen = auto(key, v)?,
            "w1" => self.w1 = auto(key, v)?,
            "axis" => self.axis = v.parse().map_err(|e: martensite::Error| CliError::Usage(e.to_string()))?,
            "periods" => self.periods = num(key, v)?,
            "fraction" => self.fraction = num(key, v)?,
            "inner_periods" => self.inner_periods = num(key, v)?,
            "inner_fraction" => self.inner_fraction = num(key, v)?,
            "phase_a" => self.phase_a = num(key, v)?,
            "phase_b" => self.phase_b = num(key, v)?,
            "k" => self.k = list(key, v)?,
            "feature_scale" => self.feature_scale = num(key, v)?,
            "perturb" => self.perturb = num(key, v)?,
            "flip_rows" => self.flip_rows = list(key, v)?,
            _ => return Err(CliError::Usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Every key except `out`, in a fixed order, values in round-trip formatting.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("kind", self.kind.name().to_string()),
            ("grid", self.grid.to_string()),
            ("n2", self.n2().to_string()),
            ("eta", join(&self.eta)),
            ("seed", self.seed.to_string()),
            ("input", self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("phase", self.phase.to_string()),
            ("mu", self.mu.to_string()),
            ("lambda", self.lambda.to_string()),
            ("beta", self.beta.to_string()),
            ("n_gen", show_auto(&self.n_gen)),
            ("w1", show_auto(&self.w1)),
            ("axis", self.axis.to_string()),
            ("periods", self.periods.to_string()),
            ("fraction", self.fraction.to_string()),
            ("inner_periods", self.inner_periods.to_string()),
            ("inner_fraction", self.inner_fraction.to_string()),
            ("phase_a", self.phase_a.to_string()),
            ("phase_b", self.phase_b.to_string()),
            ("k", join(&self.k)),
            ("feature_scale", self.feature_scale.to_string()),
            ("perturb", self.perturb.to_string()),
            ("flip_rows", join(&self.flip_rows)),
        ]
    }

    /// Header block: tool line, then one `config key=value` line per entry.
    pub fn header(&self, command: &str) -> Vec<String> {
        let mut h = vec![format!("martlab {} {command}", crate::VERSION)];
        h.extend(self.entries().into_iter().map(|(k, v)| format!("config {k}={v}")));
        h
    }

    /// Parses a config source, dispatching on its shape.
    pub fn apply_source(&mut self, bytes: &[u8]) -> Result<(), CliError> {
        let text = String::from_utf8_lossy(bytes);
        if text.trim_start().starts_with('{') {
            return self.apply_json(&text);
        }
        let from_output = text.lines().any(|l| l.starts_with("# martlab "));
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let entry = if let Some(c) = line.strip_prefix('#') {
                match c.trim_start().strip_prefix("config ") {
                    Some(e) => e,
                    None => continue,
                }
            } else if from_output || line.is_empty() {
                continue;
            } else {
                line
            };
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    fn apply_json(&mut self, text: &str) -> Result<(), CliError> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("bad JSON config: {e}")))?;
        let obj = v
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::Usage("JSON source has no 'config' object".into()))?;
        for (k, val) in obj {
            let s = val.as_str().ok_or_else(|| CliError::Usage(format!("config value for '{k}' must be a string")))?;
            self.set(k, s)?;
        }
        Ok(())
    }

    pub fn config_json(&self) -> serde_json::Map<String, serde_json::Value> {
        self.entries().into_iter().map(|(k, v)| (k.to_string(), serde_json::Value::String(v))).collect()
    }
}
