//! The `schro` command line.
//!
//! Every command resolves a [`RunConfig`] (config file first, flags on top),
//! builds its artifacts in memory, writes them, and appends one JSON line to
//! `runs.log` in the output directory.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::branches::{classify_region, find_bifurcation_kappas, Params};
use crate::config::{parse_grid, parse_tolerance, RunConfig, Settings};
use crate::continuation::{trace_branch, ContinuationOptions};
use crate::error::{Result, SchroError};
use crate::ground_state::{solve_ground_state, GroundState};
use crate::mesh::build_grid;
use crate::nehari::minimize_ground_state;
use crate::spectrum::eigen_lambda;
use crate::verify::run_all;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "schro",
    version,
    about = "Ground states, spectra and bifurcation branches of a coupled Schrödinger system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Scalar ground state ω on a radial grid.
    GroundState,
    /// Weighted eigenvalues λ_j(κ).
    Spectrum,
    /// Bifurcation points κ_j(β) along the synchronized branch.
    Bifurcations,
    /// Existence verdicts over (κ, β) ∈ [−2, 2]².
    RegionMap,
    /// Vector ground state by Nehari minimization.
    Ground,
    /// Continue the branch bifurcating at κ_j(β).
    Branch,
    /// Run the acceptance checks.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::Spectrum => "spectrum",
            Command::Bifurcations => "bifurcations",
            Command::RegionMap => "region-map",
            Command::Ground => "ground",
            Command::Branch => "branch",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub mu1: Option<f64>,
    #[arg(long, global = true)]
    pub mu2: Option<f64>,
    #[arg(long, global = true)]
    pub j: Option<usize>,
    #[arg(long, global = true)]
    pub jmax: Option<usize>,
    #[arg(long, global = true)]
    pub count: Option<usize>,
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[arg(long, global = true)]
    pub max_points: Option<usize>,
    /// Solve the system with positive parts (u⁺)³, (v⁺)³.
    #[arg(long, global = true)]
    pub cutoff: bool,
    /// Sample counts `AxB` along κ and β.
    #[arg(long, global = true, value_name = "AxB")]
    pub grid: Option<String>,
    /// Named tolerance, repeatable: ground_state, newton, nehari.
    #[arg(long = "tol", global = true, value_name = "name=value")]
    pub tol: Vec<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory for outputs and `runs.log`.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// `key = value` file; flags win over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub fast: bool,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa_hi: Option<f64>,
}

impl Flags {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings {
            dim: self.dim,
            radius: self.radius,
            nodes: self.nodes,
            kappa: self.kappa,
            beta: self.beta,
            mu1: self.mu1,
            mu2: self.mu2,
            j: self.j,
            jmax: self.jmax,
            count: self.count,
            step: self.step,
            max_points: self.max_points,
            cutoff: self.cutoff.then_some(true),
            grid: self.grid.as_deref().map(parse_grid).transpose()?,
            out: self.out.clone(),
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            fast: self.fast.then_some(true),
            kappa_hi: self.kappa_hi,
            ..Settings::default()
        };
        for t in &self.tol {
            let (name, value) = parse_tolerance(t)?;
            s.tolerances.insert(name, value);
        }
        Ok(s)
    }

    /// Config file (if any) overlaid with these flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        RunConfig::resolve(base.overlay(self.settings()?))
    }
}

/// Files produced by one command, plus what it prints.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub stdout: String,
    /// The command ran but its result is a failure (exit 1).
    pub failed: bool,
}

impl Artifacts {
    fn file(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    fn json(&mut self, path: PathBuf, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| SchroError::Numerical(e.to_string()))?;
        bytes.push(b'\n');
        self.file(path, bytes);
        Ok(())
    }

    /// sha256 over every file (path, then contents) and the printed text.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (path, bytes) in &self.files {
            h.update(path.to_string_lossy().as_bytes());
            h.update([0]);
            h.update(bytes);
        }
        h.update(self.stdout.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn write(&self) -> Result<()> {
        for (path, bytes) in &self.files {
            let io = |source| SchroError::Io { path: path.clone(), source };
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(io)?;
            }
            std::fs::write(path, bytes).map_err(io)?;
        }
        Ok(())
    }
}

fn ground_state(cfg: &RunConfig) -> Result<GroundState> {
    let grid = build_grid(cfg.require_dim()?, cfg.radius, cfg.nodes)?;
    solve_ground_state(&grid, cfg.tol("ground_state"))
}

fn profile_csv(p: &crate::mesh::Profile) -> Vec<u8> {
    let mut buf = Vec::new();
    p.write_csv_to(&mut buf).expect("writing to memory");
    buf
}

/// `dir/stem.ext` becomes `dir/stem{suffix}`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Bifurcation theory here is for μ₁ = μ₂ = 1.
fn require_unit_mu(cfg: &RunConfig) -> Result<()> {
    if cfg.mu1 != 1.0 || cfg.mu2 != 1.0 {
        return Err(SchroError::domain(format!(
            "bifurcation analysis needs μ₁ = μ₂ = 1, got μ₁ = {}, μ₂ = {}",
            cfg.mu1, cfg.mu2
        )));
    }
    Ok(())
}

pub fn cmd_ground_state(cfg: &RunConfig) -> Result<Artifacts> {
    let gs = ground_state(cfg)?;
    let path = cfg.output_path("omega.csv");
    let sidecar = if path.extension().is_some_and(|e| e == "json") {
        sibling(&path, ".meta.json")
    } else {
        path.with_extension("json")
    };
    let mut out = Artifacts::default();
    out.file(path, profile_csv(gs.omega()));
    out.json(
        sidecar,
        &json!({
            "dim": gs.dim(),
            "center_value": gs.center_value(),
            "residual_norm": gs.residual_norm(),
            "h": gs.grid().spacing(),
            "R": gs.grid().radius(),
        }),
    )?;
    Ok(out)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Artifacts> {
    let gs = ground_state(cfg)?;
    let pairs = eigen_lambda(&gs, cfg.kappa, cfg.count)?;
    let rows: Vec<_> = pairs
        .iter()
        .map(|e| json!({"j": e.index, "kappa": e.kappa, "lambda": e.lambda, "residual": e.residual}))
        .collect();
    let mut out = Artifacts::default();
    out.json(cfg.output_path("spectrum.json"), &rows)?;
    Ok(out)
}

pub fn cmd_bifurcations(cfg: &RunConfig) -> Result<Artifacts> {
    require_unit_mu(cfg)?;
    let gs = ground_state(cfg)?;
    let points = find_bifurcation_kappas(&gs, cfg.beta, cfg.jmax, cfg.kappa_hi)?;
    let rows: Vec<_> = points
        .iter()
        .map(|b| {
            json!({
                "j": b.j,
                "kappa": b.kappa_j,
                "l2_norm_u": b.l2_norm_u,
                "lambda": b.lambda,
                "in_unit_interval": b.in_unit_interval,
            })
        })
        .collect();
    let mut out = Artifacts::default();
    out.json(cfg.output_path("bif.json"), &rows)?;
    Ok(out)
}

fn axis(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| -2.0 + 4.0 * i as f64 / (count - 1) as f64)
}

pub fn cmd_region_map(cfg: &RunConfig) -> Result<Artifacts> {
    let (a, b) = cfg.grid;
    let dim = cfg.dim.unwrap_or(1);
    let mut csv = String::from("kappa,beta,verdict\n");
    for kappa in axis(a) {
        for beta in axis(b) {
            let v = classify_region(&Params::new(kappa, beta, cfg.mu1, cfg.mu2, dim)?)?;
            csv.push_str(&format!("{kappa:?},{beta:?},{}\n", v.as_str()));
        }
    }
    let mut out = Artifacts::default();
    out.file(cfg.output_path("region.csv"), csv.into_bytes());
    Ok(out)
}

pub fn cmd_ground(cfg: &RunConfig) -> Result<Artifacts> {
    let gs = ground_state(cfg)?;
    let p = Params::new(cfg.kappa, cfg.beta, cfg.mu1, cfg.mu2, gs.dim())?;
    let w = gs.omega();
    let st = minimize_ground_state(&p, (w, w), cfg.tol("nehari"), cfg.max_iter)?;
    if !st.converged {
        return Err(SchroError::Numerical(format!(
            "Nehari minimization stopped after {} iterations with gradient norm {:e}",
            st.iterations, st.residual
        )));
    }
    let path = cfg.output_path("gs.json");
    let mut out = Artifacts::default();
    out.json(
        path.clone(),
        &json!({
            "energy": st.energy,
            "residual": st.residual,
            "l2_u": st.pair.0.l2_norm(),
            "l2_v": st.pair.1.l2_norm(),
            "positive": st.positive,
        }),
    )?;
    out.file(sibling(&path, "_u.csv"), profile_csv(&st.pair.0));
    out.file(sibling(&path, "_v.csv"), profile_csv(&st.pair.1));
    Ok(out)
}

pub fn cmd_branch(cfg: &RunConfig) -> Result<Artifacts> {
    require_unit_mu(cfg)?;
    let gs = ground_state(cfg)?;
    let points = find_bifurcation_kappas(&gs, cfg.beta, cfg.j, cfg.kappa_hi)?;
    let bp = points
        .iter()
        .find(|b| b.j == cfg.j)
        .ok_or_else(|| SchroError::Numerical(format!("no κ_{} found below κ = {}", cfg.j, cfg.kappa_hi)))?;
    let p = Params::symmetric(bp.kappa_j, cfg.beta, gs.dim())?;
    let mut opts = ContinuationOptions::new(cfg.step, cfg.max_points, cfg.cutoff)?;
    opts.kappa_window = (cfg.kappa_min, cfg.kappa_max);
    opts.tol = cfg.tol("newton");
    let seg = trace_branch(&p, bp, cfg.switch_amplitude, &opts)?;
    let mut csv = String::from("arclength,kappa,l2_u,l2_v,asymmetry,energy,positive,residual\n");
    for q in &seg.points {
        csv.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{},{:?}\n",
            q.arclength, q.kappa, q.l2_u, q.l2_v, q.asymmetry, q.energy, q.positive, q.residual
        ));
    }
    let mut out = Artifacts::default();
    out.file(cfg.output_path("branch.csv"), csv.into_bytes());
    out.stdout = format!("{} points, terminated: {:?}\n", seg.points.len(), seg.termination);
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Artifacts> {
    let reports = run_all(cfg.dim, cfg.fast, cfg.seed);
    let mut out = Artifacts::default();
    for r in &reports {
        out.stdout.push_str(&r.line());
        out.stdout.push('\n');
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    out.stdout.push_str(&format!("{passed}/{} criteria passed\n", reports.len()));
    out.failed = passed != reports.len();
    if cfg.out.is_some() {
        out.json(cfg.output_path("verify.json"), &reports)?;
    }
    Ok(out)
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<Artifacts> {
    match command {
        Command::GroundState => cmd_ground_state(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Bifurcations => cmd_bifurcations(cfg),
        Command::RegionMap => cmd_region_map(cfg),
        Command::Ground => cmd_ground(cfg),
        Command::Branch => cmd_branch(cfg),
        Command::Verify => cmd_verify(cfg),
    }
}

fn append_log(cfg: &RunConfig, entry: &serde_json::Value) -> Result<()> {
    let path = cfg.output_dir.join("runs.log");
    let io = |source| SchroError::Io { path: path.clone(), source };
    std::fs::create_dir_all(&cfg.output_dir).map_err(io)?;
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
    writeln!(f, "{entry}").map_err(io)
}

fn usage(command: Option<Command>) -> clap::builder::StyledStr {
    let mut cmd = Cli::command();
    cmd.build();
    match command.and_then(|c| cmd.find_subcommand_mut(c.name())) {
        Some(sub) => sub.render_usage(),
        None => cmd.render_usage(),
    }
}

/// Runs one resolved command and returns its exit code.
pub fn execute(command: Command, cfg: &RunConfig) -> i32 {
    let start = Instant::now();
    let result = dispatch(command, cfg).and_then(|a| a.write().map(|_| a));
    let seconds = start.elapsed().as_secs_f64();
    let (code, digest, outputs, error) = match &result {
        Ok(a) => {
            print!("{}", a.stdout);
            let files: Vec<String> = a.files.iter().map(|(p, _)| p.display().to_string()).collect();
            (if a.failed { EXIT_FAILURE } else { EXIT_OK }, Some(a.digest()), files, None)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (if e.is_usage() { EXIT_USAGE } else { EXIT_FAILURE }, None, Vec::new(), Some(e.to_string()))
        }
    };
    if code == EXIT_USAGE {
        eprintln!("{}", usage(Some(command)));
    }
    let entry = json!({
        "command": command.name(),
        "params": cfg,
        "wall_seconds": seconds,
        "exit_code": code,
        "outputs": outputs,
        "digest": digest,
        "error": error,
    });
    if let Err(e) = append_log(cfg, &entry) {
        eprintln!("error: {e}");
        return code.max(EXIT_FAILURE);
    }
    code
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match cli.flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                eprintln!("{}", usage(Some(cli.command)));
                return EXIT_USAGE;
            }
            return EXIT_FAILURE;
        }
    };
    execute(cli.command, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "dim = 2\nnodes = 500\nkappa = 0.3\n").unwrap();
        let cli = Cli::try_parse_from([
            "schro",
            "spectrum",
            "--config",
            file.to_str().unwrap(),
            "--kappa",
            "-0.25",
            "--tol",
            "newton=1e-9",
            "--grid",
            "20x30",
        ])
        .unwrap();
        let cfg = cli.flags.resolve().unwrap();
        assert_eq!(cli.command, Command::Spectrum);
        assert_eq!((cfg.dim, cfg.nodes, cfg.kappa), (Some(2), 500, -0.25));
        assert_eq!(cfg.tol("newton"), 1e-9);
        assert_eq!(cfg.grid, (20, 30));
    }

    #[test]
    fn usage_errors() {
        assert!(Cli::try_parse_from(["schro", "spectrum", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["schro"]).is_err());
        let cli = Cli::try_parse_from(["schro", "ground", "--tol", "newton"]).unwrap();
        assert!(cli.flags.resolve().unwrap_err().is_usage());
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/gs.json"), "_u.csv"), PathBuf::from("out/gs_u.csv"));
    }
}
