//! Command-line front end: `simulate`, `classify`, `boundary` and `verify`.
//!
//! Data goes to standard output (or `--out`), diagnostics to standard error.
//! Every subcommand accepts `--config <path>`, a flat `key = value` file whose
//! keys are flag names; flags given on the command line take precedence.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{classify, stability_chart, write_chart_csv};
use crate::error::{Error, Result};
use crate::history::HistorySpec;
use crate::integrator::export::{write_csv, Sidecar};
use crate::integrator::{integrate, ratio_sign_changes, SolverConfig, Status};
use crate::model::Params;
use crate::scenarios::{run_suite, Suite, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "logistic-dde", version, about = "Delay logistic equation laboratory")]
pub struct Cli {
    /// Flat key=value file mirroring the flags of the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and export it as CSV.
    Simulate(SimulateArgs),
    /// Print the region classification of (alpha, r) as JSON.
    Classify(ClassifyArgs),
    /// Export the stability chart as CSV.
    Boundary(BoundaryArgs),
    /// Run verification suites and print the JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "alpha_exp")]
    pub alpha: Option<f64>,
    /// Set alpha = exp(-r).
    #[arg(long, conflicts_with = "alpha")]
    pub alpha_exp: bool,
    /// History spec, e.g. `const:v=1`, `stepramp:q=4`, `thm2:c=1,delta=0.5`.
    #[arg(long, value_parser = parse_history)]
    pub history: HistorySpec,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub x_switch: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub dt_out: f64,
    /// Anchor of `c e^{r t}`; adds a `z` column on the exponential locus.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sidecar path; defaults to `<out>.json`, or standard error without `--out`.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_max: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// thm1-blowup, exponential, thm2-thm3, regions, boundary or all.
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_history(s: &str) -> std::result::Result<HistorySpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// An `--alpha` this close to `e^{-r}` is taken to mean the exponential locus,
/// i.e. nine printed decimals.
pub const LOCUS_SNAP: f64 = 5e-10;

/// Exit code for a run that aborted before reaching `t_end`.
pub const EXIT_ABORTED: i32 = 2;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a, stdout, stderr),
        Command::Classify(a) => cmd_classify(a, stdout),
        Command::Boundary(a) => boundary(a, stdout),
        Command::Verify(a) => verify(a, stdout, stderr),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

/// Appends `--key value` for every config entry whose flag is not already
/// on the command line.
fn expand_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| Error::Parse { token: "--config".into(), message: "missing path".into() })?,
    };
    let text = fs::read_to_string(&path)?;
    let present = |args: &[String], key: &str| {
        let flag = format!("--{key}");
        args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse { token: line.into(), message: format!("expected key = value in {path}") });
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let group = match key.as_str() {
            "alpha" | "alpha-exp" => vec!["alpha", "alpha-exp"],
            k => vec![k],
        };
        if group.iter().any(|k| present(&args, k)) {
            continue;
        }
        if key == "alpha-exp" {
            match value {
                "true" => extra.push("--alpha-exp".to_string()),
                "false" => {}
                other => {
                    return Err(Error::Parse { token: other.into(), message: "alpha-exp must be true or false".into() })
                }
            }
            continue;
        }
        extra.push(format!("--{key}={value}"));
    }
    args.extend(extra);
    Ok(args)
}

fn open_out(path: Option<&Path>, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            f(stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let alpha = match (a.alpha, a.alpha_exp) {
        (_, true) => (-a.r).exp(),
        (Some(alpha), false) if alpha != (-a.r).exp() && (alpha - (-a.r).exp()).abs() <= LOCUS_SNAP => {
            writeln!(stderr, "note: alpha = {alpha} taken as exp(-r) = {}", (-a.r).exp())?;
            (-a.r).exp()
        }
        (Some(alpha), false) => alpha,
        (None, false) => return Err(Error::InvalidParams("one of --alpha or --alpha-exp is required".into())),
    };
    let p = Params::new(a.r, alpha)?;
    let mut cfg = SolverConfig::with_t_end(a.t_end);
    if let Some(v) = a.rtol {
        cfg.rtol = v;
    }
    if let Some(v) = a.atol {
        cfg.atol = v;
    }
    if let Some(v) = a.x_switch {
        cfg.x_switch = v;
    }
    if let Some(v) = a.max_steps {
        cfg.max_steps = v;
    }
    cfg.validate()?;
    if !(a.dt_out.is_finite() && a.dt_out > 0.0) {
        return Err(Error::Config(format!("dt-out must be positive, got {}", a.dt_out)));
    }
    let phi = a.history.build(a.r)?;
    let tr = integrate(&p, &phi, &cfg)?;

    let anchor = a.c.or_else(|| a.history.anchor());
    let z_anchor = anchor.filter(|_| p.is_exponential_locus(1e-12)).map(|c| (c, a.r));
    open_out(a.out.as_deref(), stdout, |w| write_csv(&tr, a.dt_out, z_anchor, w))?;

    let mut side = Sidecar::new(&tr);
    if let Some(c) = anchor {
        side.ratio_sign_changes = Some(ratio_sign_changes(&tr, c, a.r, a.dt_out));
    }
    let json = serde_json::to_string(&side)?;
    let meta = a.meta.clone().or_else(|| a.out.as_ref().map(|o| {
        let mut s = o.clone().into_os_string();
        s.push(".json");
        PathBuf::from(s)
    }));
    match meta {
        Some(path) => fs::write(path, format!("{json}\n"))?,
        None => writeln!(stderr, "{json}")?,
    }
    Ok(match tr.status() {
        Status::Aborted { reason, .. } => {
            writeln!(stderr, "aborted: {reason}")?;
            EXIT_ABORTED
        }
        _ => 0,
    })
}

fn cmd_classify(a: &ClassifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let p = Params::new(a.r, a.alpha)?;
    writeln!(stdout, "{}", serde_json::to_string(&classify(&p))?)?;
    Ok(0)
}

fn boundary(a: &BoundaryArgs, stdout: &mut dyn Write) -> Result<i32> {
    let rows = stability_chart(a.alpha_min, a.alpha_max, a.n)?;
    open_out(a.out.as_deref(), stdout, |w| write_chart_csv(&rows, w))?;
    Ok(0)
}

fn verify(a: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let suites = Suite::parse_list(&a.suite)?;
    let reports: Vec<_> = suites.iter().map(|&s| run_suite(s, a.seed)).collect();
    for rep in &reports {
        let failed = rep.failures().count();
        writeln!(
            stderr,
            "{}: {} ({} cases, {failed} failed)",
            rep.suite,
            if rep.overall_pass { "pass" } else { "FAIL" },
            rep.cases.len()
        )?;
        for case in rep.failures() {
            writeln!(stderr, "  failed: {}", case.id)?;
        }
    }
    let json = if a.suite == "all" {
        serde_json::to_string_pretty(&reports)?
    } else {
        serde_json::to_string_pretty(&reports[0])?
    };
    open_out(a.out.as_deref(), stdout, |w| {
        writeln!(w, "{json}")?;
        Ok(())
    })?;
    Ok(if reports.iter().all(|r| r.overall_pass) { 0 } else { 1 })
}
