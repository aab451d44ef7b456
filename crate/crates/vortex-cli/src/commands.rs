//! Subcommands. Each prints a JSON summary on stdout and writes its data files
//! under the output directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use vortex_spectral::dft::{forward, inverse};
use vortex_spectral::eigen::{eigenfunction, EigenTable};
use vortex_spectral::evolve::{evolve, fit_decay, log_times, orthogonality, project_resonance, Backend, EvolutionResult, PhasePolicy};
use vortex_spectral::field::RadialField;
use vortex_spectral::flat::flat_evolve;
use vortex_spectral::odesys::SpectralPoint;

use crate::cache::{load_profile, load_table, read_table, LoadedProfile};
use crate::config::{Overrides, RunConfig};
use crate::io::{read_density, read_field, table_csv, write_density, write_field, write_json};
use crate::verify::{self, flat_generic, flat_project, vortex_generic};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "vortex", version, about = "Spectral theory of the linearized vortex operator")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub r_max: Option<f64>,
    /// radial step of the uniform part of the grid
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true)]
    pub xi_min: Option<f64>,
    #[arg(long, global = true)]
    pub xi_max: Option<f64>,
    #[arg(long, global = true)]
    pub dtau: Option<f64>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// output directory
    #[arg(long = "out", global = true)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve (or load) the vortex profile and write it on the radial grid
    Profile,
    /// Build (or load) the eigenfunction table
    Table,
    /// One generalized eigenfunction
    Eigen {
        #[arg(long, allow_hyphen_values = true)]
        xi: f64,
    },
    /// Write a preset initial field on the configured grid
    Field {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Distorted Fourier transform
    Dft {
        #[arg(value_enum)]
        direction: Direction,
        #[arg(long = "in")]
        input: PathBuf,
        /// table file; defaults to the cached table for the configuration
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Linear evolution through the spectral representation
    Evolve(EvolveArgs),
    /// The constant-coefficient model
    Flat {
        #[command(subcommand)]
        command: FlatCommand,
    },
    /// Run the acceptance checks and write a JSON report
    Verify {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// r e^{−r²/2} (1, 0)
    Gaussian,
    /// generic vortex datum with a nonzero (ρ, ρ) pairing
    Generic,
    /// the generic datum with that pairing removed
    Projected,
    /// generic flat datum
    FlatGeneric,
    /// flat datum with vanishing ∫(u + v) r dr
    FlatProjected,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub t0: f64,
    #[arg(long)]
    pub t1: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub spacing: Spacing,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// compute eigenfunctions one ξ at a time instead of loading a table
    #[arg(long)]
    pub stream: bool,
    /// with --stream: refine the ξ-grid instead of refusing unresolved times
    #[arg(long, requires = "stream")]
    pub refine: bool,
    /// write the field at every sample time
    #[arg(long)]
    pub fields: bool,
}

#[derive(Debug, Subcommand)]
pub enum FlatCommand {
    /// Evolve a field under the flat group
    Evolve(EvolveArgs),
    /// The flat-case checks
    Check {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn num(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn load_config(g: &Global) -> Result<RunConfig, CliError> {
    let base = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Overrides {
        r_max: g.r_max,
        h: g.h,
        xi_min: g.xi_min,
        xi_max: g.xi_max,
        dtau: g.dtau,
        cache_dir: g.cache_dir.clone(),
        output_dir: g.output_dir.clone(),
    }
    .apply(base)
}

fn out_path(cfg: &RunConfig, given: &Option<PathBuf>, default: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| cfg.paths.output_dir.join(default))
}

fn profile(cfg: &RunConfig) -> Result<LoadedProfile, CliError> {
    load_profile(cfg, Arc::new(cfg.radial_grid()?))
}

fn table(cfg: &RunConfig, given: &Option<PathBuf>) -> Result<(EigenTable, Value), CliError> {
    match given {
        Some(p) => Ok((read_table(p)?, json!({ "path": p }))),
        None => {
            let t = load_table(cfg, &profile(cfg)?)?;
            let info = json!({ "path": t.path, "cache": t.status, "key": t.key });
            Ok((t.table, info))
        }
    }
}

/// Run one command and return its JSON summary.
pub fn run(cli: &Cli) -> Result<Value, CliError> {
    let cfg = load_config(&cli.global)?;
    match &cli.command {
        Command::Profile => cmd_profile(&cfg),
        Command::Table => cmd_table(&cfg),
        Command::Eigen { xi } => cmd_eigen(&cfg, *xi),
        Command::Field { preset, output } => cmd_field(&cfg, *preset, output),
        Command::Dft { direction, input, table: t, output } => cmd_dft(&cfg, *direction, input, t, output),
        Command::Evolve(a) => cmd_evolve(&cfg, a, false),
        Command::Flat { command: FlatCommand::Evolve(a) } => cmd_evolve(&cfg, a, true),
        Command::Flat { command: FlatCommand::Check { report } } => cmd_flat_check(&cfg, report),
        Command::Verify { report } => cmd_verify(&cfg, report),
    }
}

fn cmd_profile(cfg: &RunConfig) -> Result<Value, CliError> {
    let lp = profile(cfg)?;
    let p = &lp.profile;
    let path = cfg.paths.output_dir.join("profile.csv");
    let rows = p.grid.nodes.iter().zip(p.rho.iter().zip(&p.drho)).map(|(&r, (&a, &b))| vec![r, a, b]);
    crate::cache::write_atomic(&path, &table_csv(&["r", "rho", "drho"], rows))?;
    Ok(json!({
        "cache": lp.status,
        "cache_path": lp.path,
        "profile_hash": lp.hash,
        "slope_a": p.slope_a,
        "ode_residual": p.ode_residual(1e-3),
        "one_minus_rho_at_10": 1.0 - p.rho_at(10.0),
        "output": path,
    }))
}

fn cmd_table(cfg: &RunConfig) -> Result<Value, CliError> {
    let lt = load_table(cfg, &profile(cfg)?)?;
    let t = &lt.table;
    let dir = &cfg.paths.output_dir;
    let rows = t.eigenfunctions.iter().map(|e| {
        vec![e.sp.xi, e.gamma.0, e.gamma.1, e.coeffs.gap, e.diagnostics.wronskian_spread, e.diagnostics.two_radius_dev]
    });
    let header = ["xi", "gamma1", "gamma2", "gap", "wronskian_spread", "two_radius_dev"];
    crate::cache::write_atomic(&dir.join("table.csv"), &table_csv(&header, rows))?;
    let zl = t.grid.nodes.iter().zip(&t.zero_limit).map(|(&r, [u, v])| vec![r, *u, *v]);
    crate::cache::write_atomic(&dir.join("zero_limit.csv"), &table_csv(&["r", "u", "v"], zl))?;
    Ok(json!({
        "cache": lt.status,
        "key": lt.key,
        "path": lt.path,
        "nodes": t.len(),
        "min_gap": t.eigenfunctions.iter().map(|e| e.coeffs.gap).fold(f64::INFINITY, f64::min),
    }))
}

fn cmd_eigen(cfg: &RunConfig, xi: f64) -> Result<Value, CliError> {
    if xi == 0.0 {
        return Err(CliError::ExcludedNode(
            "ξ = 0 is not a node: its continuous extension √(π/4)·(ρ, −ρ) is stored as zero_limit \
             in the table cache (`vortex table` writes it to zero_limit.csv)"
                .into(),
        ));
    }
    if !xi.is_finite() {
        return Err(CliError::Input(format!("ξ = {xi}")));
    }
    let lp = profile(cfg)?;
    let e = eigenfunction(&SpectralPoint::from_xi(xi.abs()), &lp.profile, &cfg.eigen).map_err(num)?;
    let e = if xi < 0.0 { e.mirrored() } else { e };
    let path = cfg.paths.output_dir.join(format!("eigen_xi{xi}.csv"));
    let rows = e.grid.nodes.iter().zip(e.samples.iter().zip(&e.derivs)).map(|(&r, (s, d))| vec![r, s[0], s[1], d[0], d[1]]);
    crate::cache::write_atomic(&path, &table_csv(&["r", "u", "v", "du", "dv"], rows))?;
    Ok(json!({
        "xi": xi,
        "gamma": [e.gamma.0, e.gamma.1],
        "r_match": e.r_match,
        "coefficients": e.coeffs,
        "diagnostics": e.diagnostics,
        "output": path,
    }))
}

fn cmd_field(cfg: &RunConfig, preset: Preset, output: &Option<PathBuf>) -> Result<Value, CliError> {
    let grid = Arc::new(cfg.radial_grid()?);
    let f = match preset {
        Preset::Gaussian => RadialField::from_real(grid, |r| [r * (-r * r / 2.0).exp(), 0.0]),
        Preset::Generic => vortex_generic(&grid),
        Preset::Projected => project_resonance(&vortex_generic(&grid), &profile(cfg)?.profile),
        Preset::FlatGeneric => flat_generic(&grid),
        Preset::FlatProjected => flat_project(&flat_generic(&grid)),
    };
    let path = out_path(cfg, output, "field.csv");
    write_field(&path, &f)?;
    Ok(json!({ "preset": preset.to_possible_value().expect("no skipped variants").get_name(), "nodes": f.len(), "output": path }))
}

fn cmd_dft(cfg: &RunConfig, dir: Direction, input: &Path, t: &Option<PathBuf>, output: &Option<PathBuf>) -> Result<Value, CliError> {
    let (table, info) = table(cfg, t)?;
    match dir {
        Direction::Forward => {
            let f = read_field(input, &table.grid)?;
            let z = forward(&f, &table).map_err(num)?;
            let path = out_path(cfg, output, "forward.csv");
            write_density(&path, &z)?;
            let (l2, excluded) = z.l2_tilde();
            Ok(json!({ "table": info, "field_l2": f.l2_norm(), "density_l2_tilde": l2, "excluded": excluded, "output": path }))
        }
        Direction::Inverse => {
            let z = read_density(input, &Arc::new(table.xi.clone()))?;
            let f = inverse(&z, &table).map_err(num)?;
            let path = out_path(cfg, output, "inverse.csv");
            write_field(&path, &f)?;
            Ok(json!({ "table": info, "field_l2": f.l2_norm(), "output": path }))
        }
    }
}

#[derive(Serialize)]
struct EvolveReport {
    schema_version: u32,
    code_version: &'static str,
    config_hash: String,
    model: &'static str,
    times: Vec<f64>,
    sup_norm: Vec<f64>,
    l2_norm: Vec<f64>,
    argmax_r: Vec<f64>,
    /// least-squares exponent of sup-norm against t, when the times span a decade
    sup_exponent: Option<f64>,
    l2_exponent: Option<f64>,
    /// pairings with (ρ, ρ) and (rρ′+ρ, −rρ′−ρ) (vortex) or ∫(u ± v) r dr (flat)
    orthogonality: [[f64; 2]; 2],
}

fn sample_times(a: &EvolveArgs) -> Result<Vec<f64>, CliError> {
    if a.steps < 1 || !(a.t1 > a.t0) || a.t0 < 0.0 {
        return Err(CliError::Usage(format!("need 0 ≤ t0 < t1 and steps ≥ 1, got t0 = {}, t1 = {}, steps = {}", a.t0, a.t1, a.steps)));
    }
    Ok(match a.spacing {
        Spacing::Log if a.t0 > 0.0 => log_times(a.t0, a.t1, a.steps + 1),
        Spacing::Log => return Err(CliError::Usage("log spacing needs t0 > 0".into())),
        Spacing::Linear => (0..=a.steps).map(|k| a.t0 + (a.t1 - a.t0) * k as f64 / a.steps as f64).collect(),
    })
}

fn cx(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn cmd_evolve(cfg: &RunConfig, a: &EvolveArgs, flat: bool) -> Result<Value, CliError> {
    let times = sample_times(a)?;
    let (runs, pairing, info): (Vec<EvolutionResult>, [[f64; 2]; 2], Value) = if flat {
        let grid = Arc::new(cfg.radial_grid()?);
        let f = read_field(&a.input, &grid)?;
        let s = |sign: f64| {
            let w: Vec<f64> = f.values.iter().map(|v| (v[0] + v[1] * sign).re).collect();
            let wi: Vec<f64> = f.values.iter().map(|v| (v[0] + v[1] * sign).im).collect();
            [grid.integrate(&w), grid.integrate(&wi)]
        };
        let runs = flat_evolve(std::slice::from_ref(&f), &times, &cfg.xi_grid()?).map_err(num)?;
        (runs.into_iter().next().expect("one field"), [s(1.0), s(-1.0)], json!(null))
    } else if a.stream {
        let lp = profile(cfg)?;
        let f = read_field(&a.input, &lp.profile.grid)?;
        let xi = cfg.xi_grid()?;
        let policy = if a.refine { PhasePolicy::Refine } else { PhasePolicy::Refuse };
        let backend = Backend::Stream { profile: &lp.profile, xi: &xi, cfg: &cfg.eigen, policy };
        let runs = evolve(std::slice::from_ref(&f), &times, backend).map_err(num)?;
        let (p0, p1) = orthogonality(&f, &lp.profile);
        (runs.into_iter().next().expect("one field"), [cx(p0), cx(p1)], json!({ "stream": true }))
    } else {
        let (table, info) = table(cfg, &a.table)?;
        let lp = profile(cfg)?;
        let f = read_field(&a.input, &table.grid)?;
        let runs = evolve(std::slice::from_ref(&f), &times, Backend::Table(&table)).map_err(num)?;
        let (p0, p1) = orthogonality(&f, &lp.profile);
        (runs.into_iter().next().expect("one field"), [cx(p0), cx(p1)], info)
    };
    let prefix = if flat { "flat_evolve" } else { "evolve" };
    if a.fields {
        for (k, r) in runs.iter().enumerate() {
            write_field(&cfg.paths.output_dir.join(format!("{prefix}_{k:03}.csv")), &r.field)?;
        }
    }
    let sup: Vec<f64> = runs.iter().map(|r| r.sup_norm).collect();
    let l2: Vec<f64> = runs.iter().map(|r| r.l2_norm).collect();
    let report = EvolveReport {
        schema_version: verify::REPORT_SCHEMA,
        code_version: crate::CODE_VERSION,
        config_hash: cfg.hash(),
        model: if flat { "flat" } else { "vortex" },
        sup_exponent: fit_decay(&times, &sup).ok().map(|f| f.exponent),
        l2_exponent: fit_decay(&times, &l2).ok().map(|f| f.exponent),
        argmax_r: runs.iter().map(|r| r.argmax_r).collect(),
        sup_norm: sup,
        l2_norm: l2,
        times,
        orthogonality: pairing,
    };
    let path = out_path(cfg, &a.report, &format!("{prefix}_report.json"));
    write_json(&path, &report)?;
    Ok(json!({ "table": info, "report": path, "sup_exponent": report.sup_exponent, "l2_exponent": report.l2_exponent }))
}

fn report_line(c: &verify::Criterion) -> String {
    let status = if c.passed { "PASS" } else { "FAIL" };
    let failed: Vec<&str> = c.failed_checks().map(|k| k.name.as_str()).collect();
    if failed.is_empty() {
        format!("{status} {:>2} {}", c.id, c.title)
    } else {
        format!("{status} {:>2} {} (failed: {})", c.id, c.title, failed.join("; "))
    }
}

fn cmd_flat_check(cfg: &RunConfig, report: &Option<PathBuf>) -> Result<Value, CliError> {
    let lp = profile(cfg)?;
    let c = verify::flat_oracle(&lp.profile, &cfg.eigen)?;
    eprintln!("{}", report_line(&c));
    let path = out_path(cfg, report, "flat_check.json");
    write_json(&path, &c)?;
    Ok(json!({ "passed": c.passed, "report": path }))
}

fn cmd_verify(cfg: &RunConfig, report: &Option<PathBuf>) -> Result<Value, CliError> {
    let r = verify::run_all(cfg, |c, dt| eprintln!("{} [{:.0} s]", report_line(c), dt.as_secs_f64()))?;
    let path = out_path(cfg, report, "verify.json");
    write_json(&path, &r)?;
    Ok(json!({ "passed": r.passed, "report": path }))
}
