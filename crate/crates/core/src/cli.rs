//! The `jetvar` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::checks;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{cosymplectic_axioms_check, point_tensors, AxiomReport};
use crate::integrator::{
    convergence_study, doubled_energy_series, energy_series, to_json17, write_diagnostics, write_trajectory,
    Diagnostics, GridSpec, Run,
};
use crate::jet::{parse_point, point_map, JetPoint};
use crate::lagrangian::regularity;

/// Crate version and output-format revision.
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format 1)");

#[derive(Debug, Parser)]
#[command(name = "jetvar", version = VERSION, about = "Field-theory Lagrangians: residuals, geometry and variational integration")]
pub struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set grid.nt=400`.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    pub set: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tensors, energy, regularity and axioms at one jet point (JSON).
    Derive {
        /// `name=value` pairs such as `q1=0.5,q1_1=2`; overrides `point`.
        #[arg(long)]
        point: Option<String>,
    },
    /// Residuals of the initial-data section at the configured points (JSON).
    Residual,
    /// March the field equation; trajectory CSV plus diagnostics JSON.
    Simulate,
    /// March the doubled `(q, v)` system; trajectory CSV plus diagnostics JSON.
    Cosim,
    /// Error table against the closed-form solution (CSV).
    Convergence,
    /// Run every invariant suite with the configured seed.
    Check,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?
        }
        None => "{}".to_string(),
    };
    RunConfig::parse(&text, overrides)
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(cli.config.as_deref(), &cli.set)?;
    match &cli.command {
        Command::Derive { point } => derive(&cfg, point.as_deref(), out),
        Command::Residual => residual(&cfg, out),
        Command::Simulate => simulate(&cfg, false, out, err),
        Command::Cosim => simulate(&cfg, true, out, err),
        Command::Convergence => convergence(&cfg, out),
        Command::Check => check(&cfg, out),
    }
}

fn sink<'a>(path: Option<&Path>, fallback: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(fallback),
    })
}

fn coordinate_names(n: usize, k: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=k).map(|m| format!("x{m}")).collect();
    names.extend((1..=n).map(|i| format!("q{i}")));
    for i in 1..=n {
        names.extend((1..=k).map(|m| format!("q{i}_{m}")));
    }
    names
}

#[derive(Serialize)]
struct OmegaEntry {
    i: String,
    j: String,
    value: f64,
}

#[derive(Serialize)]
struct DeriveReport {
    theta: Vec<BTreeMap<String, f64>>,
    omega: Vec<Vec<OmegaEntry>>,
    energy: f64,
    #[serde(rename = "dE")]
    d_energy: BTreeMap<String, f64>,
    regular: bool,
    axioms: AxiomReport,
}

fn derive(cfg: &RunConfig, point: Option<&str>, out: &mut dyn Write) -> Result<i32> {
    let model = cfg.model.model();
    let (n, k) = (model.fields(), model.base_dim());
    let text = point.or(cfg.point.as_deref()).unwrap_or("");
    let p: JetPoint = parse_point(text, n, k)?.project();
    let l = &model.lagrangian;
    let t = point_tensors(l, &p)?;
    let names = coordinate_names(n, k);
    let named = |v: Vec<f64>| -> BTreeMap<String, f64> { names.iter().cloned().zip(v).collect() };
    let report = DeriveReport {
        theta: t.theta.iter().map(|c| named(c.to_flat())).collect(),
        omega: t
            .omega
            .iter()
            .map(|w| {
                w.nonzero_entries()
                    .into_iter()
                    .map(|(a, b, value)| OmegaEntry { i: names[a].clone(), j: names[b].clone(), value })
                    .collect()
            })
            .collect(),
        energy: t.energy,
        d_energy: named(t.d_energy.to_flat()),
        regular: regularity(l, &p).is_regular,
        axioms: cosymplectic_axioms_check(l, &p)?,
    };
    writeln!(out, "{}", to_json17(&report)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct ResidualRecord {
    point: BTreeMap<String, f64>,
    residual: Vec<f64>,
}

fn residual(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    cfg.require_plane("residual")?;
    let defaults = ["x1=0,x2=0.5".to_string(), "x1=1,x2=2".to_string(), "x1=2.5,x2=4".to_string()];
    let points: &[String] = if cfg.residual.points.is_empty() { &defaults } else { &cfg.residual.points };
    let mut records = Vec::with_capacity(points.len());
    for text in points {
        let p = parse_point(text, 1, 2)?;
        let residual = cfg.residual_at(&p.x)?;
        let point = point_map(&p).into_iter().filter(|(k, _)| k.starts_with('x')).collect();
        records.push(ResidualRecord { point, residual });
    }
    writeln!(out, "{}", to_json17(&records)?)?;
    Ok(0)
}

fn simulate(cfg: &RunConfig, doubled: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let run: Run = cfg.march(doubled)?;
    let model = cfg.model.model();
    let (l, f) = (&model.lagrangian, &model.force);
    let energy = if doubled { doubled_energy_series(l, f, &run.state)? } else { energy_series(l, &run.state) };
    {
        let mut w = sink(cfg.output.path.as_deref(), out)?;
        write_trajectory(&mut w, &run.state, cfg.output.every)?;
        w.flush()?;
    }
    let diag =
        Diagnostics { energy_series: energy, newton_iters: run.newton_iters.clone(), observed_cfl: run.observed_cfl };
    {
        let mut w = sink(cfg.output.diagnostics.as_deref(), err)?;
        write_diagnostics(&mut w, &diag)?;
        w.flush()?;
    }
    if let Some(e) = cfg.final_error(&run) {
        writeln!(err, "final-time L2 error vs closed form: {}", crate::integrator::fmt17(e))?;
    }
    Ok(0)
}

fn convergence(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    cfg.require_plane("convergence")?;
    let exact = cfg.ic.exact(&cfg.model, false).ok_or_else(|| {
        Error::Config("convergence needs a closed-form solution: use ic standing_mode (wave, damped_wave) or traveling_wave (wave)".into())
    })?;
    let model = cfg.model.model();
    let base = GridSpec { ..cfg.grid };
    let table = convergence_study(
        &model.lagrangian,
        &model.force,
        base,
        &cfg.levels(),
        cfg.bc.boundary(),
        cfg.scheme,
        &exact,
        &exact,
    )?;
    let mut w = sink(cfg.output.path.as_deref(), out)?;
    write!(w, "{}", table.to_csv())?;
    w.flush()?;
    Ok(0)
}

fn check(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let results = checks::run_all(cfg.seed);
    let mut failed = 0;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!r.passed);
        if r.detail.is_empty() {
            writeln!(out, "[{tag}] {}: {}", r.suite, r.name)?;
        } else {
            writeln!(out, "[{tag}] {}: {} ({})", r.suite, r.name, r.detail)?;
        }
    }
    writeln!(out, "{} of {} checks passed (seed {})", results.len() - failed, results.len(), cfg.seed)?;
    Ok(if failed == 0 { 0 } else { 4 })
}
