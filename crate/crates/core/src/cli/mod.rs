//! Command-line front end: `constants | landscape | critical | build | verify`.
//!
//! Every command reads a [`RunConfig`] (defaults, then `--config`, then `--override`s, then
//! `--seed`) and writes its outputs into `--out`. Reports carry the SHA-256 of the effective
//! configuration; wall-clock data goes to `metadata.json` only, so reports are reproducible
//! byte for byte.

mod config;

pub use config::{apply_override, BuildConfig, LandscapeConfig, RunConfig};

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::bubble::{constants_for, gamma_half, orthogonality_integral};
use crate::constructor::{
    asymptotic_ansatz, assemble, concentration_report, plane_grid, refine, sample_field, MembershipConfig,
};
use crate::domain::{BallDomain, Domain, GreenDomain};
use crate::lab::{run_study, summary_markdown, Status};
use crate::reduced::{find_critical_points, ftilde, matrix_m, SpikePattern};
use crate::{Dimension, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "multispike", version, about = "Multispike ansatz construction and expansion checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// `key.path=value`, repeatable.
    #[arg(long = "override", global = true, value_name = "K=V")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Universal constants with closed-form cross-checks.
    Constants,
    /// F̃ and ρ along the symmetry axis.
    Landscape,
    /// Critical points of F̃ with their certificates.
    Critical,
    /// Ansatz at the configured ε: refine, sample, concentration report.
    Build,
    /// Ladder studies; exits non-zero when one fails.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Landscape => "landscape",
            Command::Critical => "critical",
            Command::Build => "build",
            Command::Verify => "verify",
        }
    }
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let started = unix_now();
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides, cli.seed)?;
    fs::create_dir_all(&cli.out)?;
    let hash = cfg.hash();
    write_json(&cli.out.join("config.json"), &cfg)?;
    let (code, outputs) = match cli.command {
        Command::Constants => (0, cmd_constants(&cfg, &hash, &cli.out)?),
        Command::Landscape => (0, cmd_landscape(&cfg, &hash, &cli.out)?),
        Command::Critical => (0, cmd_critical(&cfg, &hash, &cli.out)?),
        Command::Build => (0, cmd_build(&cfg, &hash, &cli.out)?),
        Command::Verify => cmd_verify(&cfg, &hash, &cli.out)?,
    };
    let meta = json!({
        "command": cli.command.name(),
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
        "started_unix": started,
        "finished_unix": unix_now(),
        "outputs": outputs,
        "exit_code": code,
    });
    write_json(&cli.out.join("metadata.json"), &meta)?;
    Ok(code)
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn domain(cfg: &RunConfig) -> Result<Domain> {
    Ok(BallDomain::new(vec![0.0; cfg.n], cfg.radius)?.into())
}

fn cmd_constants(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<String>> {
    let dim = Dimension::new(cfg.n)?;
    let c = constants_for(dim)?;
    let nf = dim.nf();
    // ∫(1+|x|²)^{-s} = π^{n/2} Γ(s - n/2)/Γ(s)
    let pi_half = std::f64::consts::PI.powf(nf / 2.0);
    let cp1 = dim.c0().powf(dim.p() + 1.0);
    let sn_closed = cp1 * pi_half * gamma_half(cfg.n) / gamma_half(2 * cfg.n);
    let cbar1_closed = cp1 * pi_half / gamma_half(cfg.n + 2);
    let orth = orthogonality_integral(dim)?;
    let report = json!({
        "config_hash": hash,
        "n": cfg.n,
        "constants": c,
        "closed_form": { "sn_pow": sn_closed, "cbar1": cbar1_closed },
        "rel_error": {
            "sn_pow": (c.sn_pow / sn_closed - 1.0).abs(),
            "cbar1": (c.cbar1 / cbar1_closed - 1.0).abs(),
        },
        "gamma2_over_gamma3": c.gamma2 / c.gamma3,
        "orthogonality": orth,
    });
    write_json(&out.join("constants.json"), &report)?;
    Ok(vec!["constants.json".into()])
}

/// Configurations along the first axis: `t e₁` for one spike, `(t e₁, -t e₁)` for two.
fn axis_configuration(cfg: &RunConfig, t: f64) -> Vec<Vec<f64>> {
    let at = |s: f64| {
        let mut v = vec![0.0; cfg.n];
        v[0] = s * cfg.radius;
        v
    };
    if cfg.gamma.len() == 1 {
        vec![at(t)]
    } else {
        vec![at(t), at(-t)]
    }
}

fn cmd_landscape(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<String>> {
    let m = cfg.gamma.len();
    if m > 2 {
        return Err(Error::Configuration("landscape scans one or two spikes".into()));
    }
    let dom = domain(cfg)?;
    let pattern = SpikePattern::new(cfg.gamma.clone())?;
    let l = &cfg.landscape;
    let lo = if m == 1 { -l.t_max } else { 0.0 };
    let mut text = format!("# config_hash={hash}\nt,ftilde,rho\n");
    for i in 0..l.samples {
        let mut t = lo + (l.t_max - lo) * i as f64 / (l.samples - 1) as f64;
        if m == 2 && t == 0.0 {
            // coincident centers
            t = 1e-3 * l.t_max;
        }
        let x = axis_configuration(cfg, t);
        let rho = matrix_m(&x, &pattern, &dom).map(|mm| mm.rho);
        let f = ftilde(&x, &pattern, &dom).ok();
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
        text.push_str(&format!("{:.16e},{},{}\n", t, cell(f), cell(rho.ok())));
    }
    fs::write(out.join("landscape.csv"), text)?;
    Ok(vec!["landscape.csv".into()])
}

fn cmd_critical(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<String>> {
    let dom = domain(cfg)?;
    let pattern = SpikePattern::new(cfg.gamma.clone())?;
    let points = find_critical_points(&pattern, &dom, &cfg.search)?;
    let report = json!({
        "config_hash": hash,
        "gamma": cfg.gamma,
        "certified": points.iter().filter(|p| p.certified()).count(),
        "points": points,
    });
    write_json(&out.join("critical.json"), &report)?;
    Ok(vec!["critical.json".into()])
}

fn cmd_build(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<String>> {
    let dom = domain(cfg)?;
    let dim = dom.dim();
    let consts = constants_for(dim)?;
    let pattern = SpikePattern::new(cfg.gamma.clone())?;
    let certified: Vec<_> = find_critical_points(&pattern, &dom, &cfg.search)?
        .into_iter()
        .filter(|p| p.certified())
        .collect();
    let cp = certified.get(cfg.build.critical_index).cloned().ok_or_else(|| {
        Error::Configuration(format!(
            "no certified critical point with index {} ({} found)",
            cfg.build.critical_index,
            certified.len()
        ))
    })?;
    let seed = asymptotic_ansatz(cfg.eps, &pattern, &cp, &consts)?;
    let refined = refine(&seed, &cp, &dom, &consts, &cfg.refine)?;
    let field = assemble(&refined.ansatz, &dom)?;
    let table = sample_field(&field, &plane_grid(&dom, cfg.build.grid_per_side));
    let u_col = dim.n();
    let (umin, umax) = table
        .rows
        .iter()
        .map(|r| r[u_col])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let radii: Vec<f64> = cfg.build.radii.iter().map(|r| r * cfg.radius).collect();
    let conc = concentration_report(&refined.ansatz, &dom, &cp, &radii, &cfg.build.plan)?;
    let flags = refined.ansatz.membership(&dom, &MembershipConfig::default());
    let report = json!({
        "config_hash": hash,
        "eps": cfg.eps,
        "critical_point": cp,
        "asymptotic": seed,
        "refine": refined,
        "membership": flags,
        "field_range": { "min": umin, "max": umax, "samples": table.rows.len() },
        "concentration": conc,
    });
    write_json(&out.join("build.json"), &report)?;
    let mut f = fs::File::create(out.join("field.csv"))?;
    writeln!(f, "# config_hash={hash}")?;
    table.write_csv(&mut f)?;
    Ok(vec!["build.json".into(), "field.csv".into()])
}

fn cmd_verify(cfg: &RunConfig, hash: &str, out: &Path) -> Result<(i32, Vec<String>)> {
    let studies = cfg
        .studies()
        .iter()
        .map(run_study)
        .collect::<Result<Vec<_>>>()?;
    let failed: Vec<String> =
        studies.iter().filter(|s| s.status == Status::Fail).map(|s| s.study_id.to_string()).collect();
    let report = json!({
        "config_hash": hash,
        "failed": failed,
        "studies": studies,
    });
    write_json(&out.join("verify.json"), &report)?;
    let mut md = format!("# Expansion checks\n\nconfig_hash: `{hash}`\n\n");
    if !studies.is_empty() {
        md.push_str(&summary_markdown(&studies));
    }
    fs::write(out.join("summary.md"), md)?;
    Ok((if failed.is_empty() { 0 } else { 1 }, vec!["verify.json".into(), "summary.md".into()]))
}
