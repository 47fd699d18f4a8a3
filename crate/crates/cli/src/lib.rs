//! Command-line front end for `sfslab-core`.
//!
//! Every run reads a flat key-value configuration, performs one computation
//! and writes CSV curves, a JSON summary and optionally an SVG figure. Output
//! is a pure function of the configuration, so repeated runs are
//! byte-identical.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::RunConfig;
use error::{CliError, CliResult};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "sfslab", version, about = "Superradiant forward scattering laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate a pulse through a Lorentzian absorber.
    Simulate(RunArgs),
    /// Fit the decay of the forward-scattered pulse.
    Fit(RunArgs),
    /// Decay time, x and efficiency over a range of optical depths.
    Sweep(RunArgs),
    /// Superradiant loss of a single atomic-frequency-comb peak.
    Afc(RunArgs),
    /// Group delay and polarization split through a spectral pit.
    Slowlight(RunArgs),
    /// Check a configuration without running anything.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Si,
    T2,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key (repeatable); wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Also write an SVG figure.
    #[arg(long)]
    pub svg: bool,
    /// Report times in seconds or in units of T2.
    #[arg(long, value_enum, default_value_t = Units::Si)]
    pub units: Units,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Subcommand whose schema the configuration is checked against.
    #[arg(value_parser = ["simulate", "fit", "sweep", "afc", "slowlight"])]
    pub target: String,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

pub fn load_config(command: &str, args: &ConfigArgs) -> CliResult<RunConfig> {
    let schema = config::schema(command)?;
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
            config::parse_pairs(&text)?
        }
        None => Vec::new(),
    };
    let overrides = args
        .set
        .iter()
        .map(|s| {
            config::parse_assignment(s).ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE, got `{s}`")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let cfg = RunConfig::resolve(schema, file, overrides)?;
    commands::check_cross_keys(&cfg)?;
    Ok(cfg)
}

/// Where and how a run writes its files.
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub svg: bool,
    pub units: Units,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(args: &RunArgs) -> CliResult<Self> {
        std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(args.out.display(), e))?;
        Ok(Self {
            dir: args.out.clone(),
            format: args.format,
            svg: args.svg,
            units: args.units,
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn csv(&mut self, name: &str, doc: &output::CurveDocument, cfg: &RunConfig) -> CliResult<()> {
        if self.format == Format::Json {
            return Ok(());
        }
        let p = self.path(name);
        doc.write(&p, cfg)
    }

    pub fn json(&mut self, name: &str, summary: &output::Summary) -> CliResult<()> {
        if self.format == Format::Csv {
            return Ok(());
        }
        let p = self.path(name);
        summary.write(&p)
    }

    pub fn figure(&mut self, name: &str, panels: &[svg::Panel]) -> CliResult<()> {
        if !self.svg {
            return Ok(());
        }
        let p = self.path(name);
        std::fs::write(&p, svg::render(panels)).map_err(|e| CliError::io(p.display(), e))
    }
}

/// Runs one parsed command line; returns the files written.
pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let (name, args) = match &cli.command {
        Command::Validate(v) => {
            let cfg = load_config(&v.target, &v.cfg)?;
            println!("ok command={} config_sha256={}", cfg.command, cfg.sha256());
            return Ok(Vec::new());
        }
        Command::Simulate(a) => ("simulate", a),
        Command::Fit(a) => ("fit", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Afc(a) => ("afc", a),
        Command::Slowlight(a) => ("slowlight", a),
    };
    let cfg = load_config(name, &args.cfg)?;
    let mut sink = Sink::new(args)?;
    match name {
        "simulate" => commands::simulate(&cfg, &mut sink)?,
        "fit" => commands::fit(&cfg, &mut sink)?,
        "sweep" => commands::sweep(&cfg, &mut sink)?,
        "afc" => commands::afc(&cfg, &mut sink)?,
        _ => commands::slowlight(&cfg, &mut sink)?,
    }
    Ok(sink.written)
}
