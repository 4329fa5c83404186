//! Run configuration: a flat `key = value` file, overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Result, SchroError};
use crate::mesh::MIN_NODES;

/// Every setting a command can take. `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Settings {
    pub dim: Option<usize>,
    pub radius: Option<f64>,
    pub nodes: Option<usize>,
    pub kappa: Option<f64>,
    pub beta: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub j: Option<usize>,
    pub jmax: Option<usize>,
    pub count: Option<usize>,
    pub step: Option<f64>,
    pub max_points: Option<usize>,
    pub cutoff: Option<bool>,
    pub grid: Option<(usize, usize)>,
    pub out: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub fast: Option<bool>,
    pub kappa_hi: Option<f64>,
    pub kappa_min: Option<f64>,
    pub kappa_max: Option<f64>,
    pub switch_amplitude: Option<f64>,
    pub max_iter: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| SchroError::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(SchroError::Config(format!("cannot parse {key} = {value:?} as a boolean"))),
    }
}

/// `AxB`, e.g. `200x200`.
pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| SchroError::Config(format!("grid must look like 200x200, got {s:?}")))?;
    let (a, b): (usize, usize) = (parse("grid", a)?, parse("grid", b)?);
    if a < 2 || b < 2 {
        return Err(SchroError::Config(format!("grid needs at least 2 points per axis, got {s}")));
    }
    Ok((a, b))
}

/// `name=value` for `--tol`.
pub fn parse_tolerance(s: &str) -> Result<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| SchroError::Config(format!("tolerance must look like name=value, got {s:?}")))?;
    Ok((name.trim().to_string(), parse(name, value)?))
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        if let Some(name) = key.strip_prefix("tol.") {
            self.tolerances.insert(name.to_string(), parse(&key, value)?);
            return Ok(());
        }
        match key.as_str() {
            "dim" => self.dim = Some(parse(&key, value)?),
            "radius" => self.radius = Some(parse(&key, value)?),
            "nodes" => self.nodes = Some(parse(&key, value)?),
            "kappa" => self.kappa = Some(parse(&key, value)?),
            "beta" => self.beta = Some(parse(&key, value)?),
            "mu1" => self.mu1 = Some(parse(&key, value)?),
            "mu2" => self.mu2 = Some(parse(&key, value)?),
            "j" => self.j = Some(parse(&key, value)?),
            "jmax" => self.jmax = Some(parse(&key, value)?),
            "count" => self.count = Some(parse(&key, value)?),
            "step" => self.step = Some(parse(&key, value)?),
            "max_points" => self.max_points = Some(parse(&key, value)?),
            "cutoff" => self.cutoff = Some(parse_bool(&key, value)?),
            "grid" => self.grid = Some(parse_grid(value.trim())?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "output_dir" => self.output_dir = Some(PathBuf::from(value.trim())),
            "seed" => self.seed = Some(parse(&key, value)?),
            "fast" => self.fast = Some(parse_bool(&key, value)?),
            "kappa_hi" => self.kappa_hi = Some(parse(&key, value)?),
            "kappa_min" => self.kappa_min = Some(parse(&key, value)?),
            "kappa_max" => self.kappa_max = Some(parse(&key, value)?),
            "switch_amplitude" => self.switch_amplitude = Some(parse(&key, value)?),
            "max_iter" => self.max_iter = Some(parse(&key, value)?),
            _ => return Err(SchroError::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment, `[section]` lines are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SchroError::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            s.set(k, v)?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| SchroError::Io { path: path.to_path_buf(), source })?;
        Self::from_text(&text)
    }

    /// Values from `over` win.
    pub fn overlay(mut self, over: Settings) -> Settings {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            dim,
            radius,
            nodes,
            kappa,
            beta,
            mu1,
            mu2,
            j,
            jmax,
            count,
            step,
            max_points,
            cutoff,
            grid,
            out,
            output_dir,
            seed,
            fast,
            kappa_hi,
            kappa_min,
            kappa_max,
            switch_amplitude,
            max_iter
        );
        self.tolerances.extend(over.tolerances);
        self
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dim: Option<usize>,
    pub radius: f64,
    pub nodes: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    pub kappa: f64,
    pub beta: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub j: usize,
    pub jmax: usize,
    pub count: usize,
    pub step: f64,
    pub max_points: usize,
    pub cutoff: bool,
    pub grid: (usize, usize),
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub fast: bool,
    pub kappa_hi: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub switch_amplitude: f64,
    pub max_iter: usize,
}

pub const DEFAULT_TOLERANCES: [(&str, f64); 3] = [("ground_state", 1e-10), ("nehari", 1e-6), ("newton", 1e-10)];

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<Self> {
        let mut tolerances: BTreeMap<String, f64> =
            DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        tolerances.extend(s.tolerances);
        let cfg = RunConfig {
            dim: s.dim,
            radius: s.radius.unwrap_or(30.0),
            nodes: s.nodes.unwrap_or(3001),
            tolerances,
            output_dir: s.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            kappa: s.kappa.unwrap_or(0.0),
            beta: s.beta.unwrap_or(0.0),
            mu1: s.mu1.unwrap_or(1.0),
            mu2: s.mu2.unwrap_or(1.0),
            j: s.j.unwrap_or(1),
            jmax: s.jmax.unwrap_or(4),
            count: s.count.unwrap_or(4),
            step: s.step.unwrap_or(0.01),
            max_points: s.max_points.unwrap_or(200),
            cutoff: s.cutoff.unwrap_or(false),
            grid: s.grid.unwrap_or((200, 200)),
            out: s.out,
            seed: s.seed.unwrap_or(crate::verify::DEFAULT_SEED),
            fast: s.fast.unwrap_or(false),
            kappa_hi: s.kappa_hi.unwrap_or(2.0),
            kappa_min: s.kappa_min.unwrap_or(-1.0 + 1e-6),
            kappa_max: s.kappa_max.unwrap_or(10.0),
            switch_amplitude: s.switch_amplitude.unwrap_or(0.05),
            max_iter: s.max_iter.unwrap_or(20_000),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < MIN_NODES {
            return Err(SchroError::Config(format!("nodes must be at least {MIN_NODES}, got {}", self.nodes)));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(SchroError::Config(format!("tolerance {k} must be positive, got {v}")));
        }
        if !(self.radius > 0.0) {
            return Err(SchroError::Config(format!("radius must be positive, got {}", self.radius)));
        }
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn require_dim(&self) -> Result<usize> {
        self.dim.ok_or_else(|| SchroError::Config("--dim is required for this command".into()))
    }

    /// `out` (or `default`) resolved against the output directory.
    pub fn output_path(&self, default: &str) -> PathBuf {
        let p = self.out.clone().unwrap_or_else(|| PathBuf::from(default));
        if p.is_absolute() {
            p
        } else {
            self.output_dir.join(p)
        }
    }
}
