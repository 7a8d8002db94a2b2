//! The `dyadic` command line.
//!
//! ```text
//! dyadic simulate   [--spec FILE] [flags] [--out DIR] [--format csv|jsonl]
//! dyadic compare    [--spec FILE] [flags] ...
//! dyadic experiment NAME [--spec FILE] [flags] ...
//! dyadic check      FILE [--drift-max X] ...
//! ```
//!
//! Exit status: 0 all checks pass, 1 a check failed, 2 usage error,
//! 3 integration failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::experiments::{
    invariant_criteria, run, ExperimentName, ExperimentResult, ExperimentSpec, Status,
};
use crate::integrate::Trajectory;
use crate::io::{
    build_spec, emit_report, parse_spec_file, parse_value, read_trajectory, write_trajectory,
    Emit, FlatConfig, Format, Provenance,
};

#[derive(Debug, Parser)]
#[command(name = "dyadic", version, about = "Inviscid dyadic shell model laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and run the invariant checks on it.
    Simulate(RunArgs),
    /// Integrate a pair at two tolerances and certify their difference.
    Compare(RunArgs),
    /// Run a named experiment.
    Experiment {
        /// uniqueness_pair, truncation_convergence, h1_growth,
        /// finite_negative_class_k or invariant_suite.
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the invariant checks on an existing trajectory file.
    Check {
        file: PathBuf,
        /// Largest relative energy drift accepted.
        #[arg(long)]
        drift_max: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Spec file (flat TOML keys); flags below take precedence.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n_shells: Option<i64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Initial data, e.g. `unit_shell(1)` or `signed(2, geometric(0.5, 8))`.
    #[arg(long)]
    pub ic: Option<String>,
    /// adaptive_rk, positivity_voc or stiff_rosenbrock.
    #[arg(long)]
    pub stepper: Option<String>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<i64>,
    #[arg(long)]
    pub sample_every: Option<f64>,
    /// Any spec key, e.g. `--set tol2.rel=1e-12`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

impl RunArgs {
    /// The flag layer as dotted keys.
    pub fn flags(&self) -> Result<FlatConfig> {
        let mut flags = FlatConfig::new();
        if let Some(v) = self.n_shells {
            flags.insert("n_shells".into(), toml::Value::Integer(v));
        }
        if let Some(v) = self.t_end {
            flags.insert("t_end".into(), toml::Value::Float(v));
        }
        if let Some(v) = &self.ic {
            flags.insert("ic.family".into(), toml::Value::String(v.clone()));
        }
        if let Some(v) = &self.stepper {
            flags.insert("stepper".into(), toml::Value::String(v.clone()));
        }
        if let Some(v) = self.abs_tol {
            flags.insert("tol.abs".into(), toml::Value::Float(v));
        }
        if let Some(v) = self.rel_tol {
            flags.insert("tol.rel".into(), toml::Value::Float(v));
        }
        if let Some(v) = self.seed {
            flags.insert("seed".into(), toml::Value::Integer(v));
        }
        if let Some(v) = self.sample_every {
            flags.insert("sample_every".into(), toml::Value::Float(v));
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::usage("set", format!("expected KEY=VALUE, got `{item}`")))?;
            flags.insert(k.trim().into(), parse_value(v.trim()));
        }
        Ok(flags)
    }

    /// Spec file and flags layered over `defaults`.
    pub fn spec(&self, defaults: ExperimentSpec) -> Result<(ExperimentSpec, Vec<String>)> {
        let file = self.spec.as_deref().map(parse_spec_file).transpose()?;
        build_spec(defaults, file.as_ref(), &self.flags()?)
    }
}

/// Where results go.
struct Output {
    dir: PathBuf,
    format: Format,
    provenance: Provenance,
}

impl Output {
    fn new(args: &OutArgs, provenance: Provenance) -> Result<Self> {
        let format: Format = args.format.parse()?;
        fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
        Ok(Self {
            dir: args.out.clone(),
            format,
            provenance,
        })
    }

    fn path(&self, stem: &str) -> PathBuf {
        self.dir.join(format!("{stem}.{}", self.format.extension()))
    }

    fn trajectory(&self, stem: &str, traj: &Trajectory) -> Result<String> {
        let path = self.path(stem);
        write_trajectory(traj, &path, self.format, &self.provenance)?;
        Ok(display(&path))
    }

    fn report<T: Emit>(&self, stem: &str, obj: &T) -> Result<String> {
        let path = self.path(stem);
        emit_report(obj, &path, self.format, &self.provenance)?;
        Ok(display(&path))
    }

    /// Writes every artifact of `res`, then the result itself.
    fn result(&self, res: &mut ExperimentResult) -> Result<()> {
        let artifacts = std::mem::take(&mut res.artifacts);
        for (label, traj) in &artifacts.trajectories {
            res.files.push(self.trajectory(label, traj)?);
        }
        if let Some(cert) = &artifacts.certificate {
            res.files.push(self.report("certificate", cert)?);
        }
        if let Some(report) = &artifacts.report {
            res.files.push(self.report("report", report)?);
        }
        let path = self.report("result", res)?;
        res.files.push(path);
        res.artifacts = artifacts;
        Ok(())
    }
}

/// File name only, so results do not depend on where they were written.
fn display(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}

fn print_result(res: &ExperimentResult) {
    for c in &res.criteria {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Degenerate => "degenerate",
        };
        println!("{:<28} {status:<10} {}", c.name, c.detail);
    }
    for note in &res.notes {
        println!("note: {note}");
    }
}

/// Runs a parsed command line. `Ok(true)` when every check passed.
pub fn execute(cli: &Cli) -> Result<bool> {
    let mut res = match &cli.command {
        Command::Simulate(args) => {
            let (spec, overrides) = args.spec(ExperimentSpec::canned(ExperimentName::InvariantSuite))?;
            let out = Output::new(&args.out, Provenance::for_spec(&spec, "simulate", overrides)?)?;
            let traj = with_partial(&out, spec.simulate())?;
            let report = DiagnosticsReport::from_trajectory(&traj)?;
            let mut res = invariant_criteria(&report, spec.drift_max);
            res.artifacts.trajectories.push(("trajectory".into(), traj));
            res.artifacts.report = Some(report);
            out.result(&mut res)?;
            res
        }
        Command::Compare(args) => {
            let (spec, overrides) = args.spec(ExperimentSpec::canned(ExperimentName::UniquenessPair))?;
            if spec.name != ExperimentName::UniquenessPair {
                return Err(Error::usage("name", "compare runs uniqueness_pair specs only"));
            }
            let out = Output::new(&args.out, Provenance::for_spec(&spec, "compare", overrides)?)?;
            let mut res = with_partial(&out, run(&spec))?;
            out.result(&mut res)?;
            res
        }
        Command::Experiment { name, run: args } => {
            let name: ExperimentName = name
                .parse()
                .map_err(|e: Error| Error::usage("name", e.to_string()))?;
            let (spec, overrides) = args.spec(ExperimentSpec::canned(name))?;
            if spec.name != name {
                return Err(Error::usage(
                    "name",
                    format!("spec file is for `{}`, command line asks for `{name}`", spec.name),
                ));
            }
            let command = format!("experiment {name}");
            let out = Output::new(&args.out, Provenance::for_spec(&spec, &command, overrides)?)?;
            let mut res = with_partial(&out, run(&spec))?;
            out.result(&mut res)?;
            res
        }
        Command::Check { file, drift_max, out } => {
            let loaded = read_trajectory(file)?;
            for w in &loaded.warnings {
                eprintln!("warning: {w}");
            }
            let provenance = Provenance {
                command: format!("check {}", file.display()),
                ..loaded.header.provenance.clone()
            };
            let out = Output::new(out, provenance)?;
            let drift_max = drift_max
                .unwrap_or(ExperimentSpec::canned(ExperimentName::InvariantSuite).drift_max);
            if !(drift_max.is_finite() && drift_max > 0.0) {
                return Err(Error::usage("drift_max", format!("must be positive, got {drift_max}")));
            }
            let report = DiagnosticsReport::from_trajectory(&loaded.trajectory)?;
            let mut res = invariant_criteria(&report, drift_max);
            res.artifacts.report = Some(report);
            out.result(&mut res)?;
            res
        }
    };
    res.artifacts = Default::default();
    print_result(&res);
    for f in &res.files {
        println!("wrote {}", out_dir(cli).join(f).display());
    }
    Ok(res.passed())
}

fn out_dir(cli: &Cli) -> &Path {
    match &cli.command {
        Command::Simulate(a) | Command::Compare(a) | Command::Experiment { run: a, .. } => &a.out.out,
        Command::Check { out, .. } => &out.out,
    }
}

/// Saves the partial trajectory of a failed integration before passing the error on.
fn with_partial<T>(out: &Output, r: Result<T>) -> Result<T> {
    if let Err(Error::Integration(e)) = &r {
        match out.trajectory("partial", &e.partial) {
            Ok(path) => eprintln!("wrote partial trajectory {path}"),
            Err(w) => eprintln!("could not write partial trajectory: {w}"),
        }
    }
    r
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Integration(_) => 3,
        _ => 2,
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
