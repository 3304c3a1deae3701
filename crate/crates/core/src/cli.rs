//! Command-line front end. The worker count comes from `DTVW_THREADS`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Method, RunConfig};
use crate::dgp::{self, Design, SimSpec};
use crate::error::{Error, Result};
use crate::experiment::{self, eval_window};
use crate::io;
use crate::metrics::EvalWindow;
use crate::report::comparison_table;

pub const THREADS_ENV: &str = "DTVW_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dtvw", version, about = "Diversity-driven time-varying forecast combination")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate observations and a predictor panel from a simulation design.
    Simulate(SimulateArgs),
    /// Run every configured method and write scores, weights and forecasts.
    Run(RunArgs),
    /// Search initial coefficients of the diversity-driven filter.
    Gridsearch(GridArgs),
    /// Score forecast files against observations.
    Score(ScoreArgs),
    /// Merge score files into one comparison table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// complete_ar, nonlinear_incomplete or pseudo_empirical.
    #[arg(long, default_value = "complete_ar")]
    pub design: String,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Innovation sd; the design's default when omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub draws: usize,
    #[arg(long, default_value_t = 1)]
    pub horizons: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving observations.csv and panel.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Flags that override fields of the configuration file.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub observations: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Comma-separated combiners.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Comma-separated horizons to score.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub ess_threshold: Option<f64>,
    #[arg(long)]
    pub sigma_x: Option<f64>,
    #[arg(long)]
    pub sigma_alpha: Option<f64>,
    /// Rolling BMA window.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub eval_start: Option<usize>,
    #[arg(long)]
    pub eval_end: Option<usize>,
    #[arg(long)]
    pub dm_baseline: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = &self.$field { $target = v.clone(); })*
            };
        }
        set!(
            observations => cfg.observations,
            panel => cfg.panel,
            output => cfg.output,
            seed => cfg.seed,
            particles => cfg.filter.particles,
            ess_threshold => cfg.filter.ess_threshold,
            sigma_x => cfg.filter.sigma_x,
            sigma_alpha => cfg.filter.sigma_alpha,
            window => cfg.bma_roll.window,
        );
        if let Some(m) = &self.methods {
            cfg.methods = m.iter().map(|s| Method::parse(s.trim())).collect::<Result<_>>()?;
        }
        if let Some(h) = &self.horizons {
            cfg.horizons = Some(h.clone());
        }
        if let Some(v) = self.eval_start {
            cfg.eval_start = Some(v);
        }
        if let Some(v) = self.eval_end {
            cfg.eval_end = Some(v);
        }
        if let Some(v) = &self.dm_baseline {
            cfg.dm_baseline = Some(v.clone());
        }
        cfg.validate()
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct GridArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub coarse_step: Option<f64>,
    /// Refinement step; 0 disables the second stage.
    #[arg(long)]
    pub fine_step: Option<f64>,
    /// Surface CSV path; defaults into the output directory.
    #[arg(long)]
    pub surface: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long)]
    pub forecasts: PathBuf,
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub observations: PathBuf,
    #[arg(long, default_value = "scores.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long)]
    pub eval_start: Option<usize>,
    #[arg(long)]
    pub eval_end: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Score files to merge, in column order.
    #[arg(required = true)]
    pub scores: Vec<PathBuf>,
    /// Also write the table as long CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(path: &PathBuf, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let design = Design::parse(&a.design)?;
    let spec = SimSpec {
        sigma: a.sigma.unwrap_or(design.default_sigma()),
        n_draws: a.draws,
        horizons: a.horizons,
        ..SimSpec::new(design, a.steps, a.seed)
    };
    let (obs, panel) = dgp::simulate(&spec)?;
    io::write_observations(a.out.join("observations.csv"), &obs)?;
    io::write_panel(a.out.join("panel.csv"), &panel)?;
    println!("wrote {} steps, {} models to {}", obs.len(), panel.n_models(), a.out.display());
    Ok(())
}

fn run(a: &RunArgs) -> Result<()> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let out = experiment::run_experiment(&cfg)?;
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn gridsearch(a: &GridArgs) -> Result<()> {
    let mut cfg = load_config(&a.config, &a.overrides)?;
    let g = &mut cfg.gridsearch;
    for (flag, field) in [(a.lo, &mut g.lo), (a.hi, &mut g.hi), (a.coarse_step, &mut g.coarse_step), (a.fine_step, &mut g.fine_step)] {
        if let Some(v) = flag {
            *field = v;
        }
    }
    let res = experiment::run_gridsearch(&cfg, a.surface.as_deref())?;
    println!(
        "best alpha1={} alpha2={} crps={} ({} points, {} failed)",
        res.best[0],
        res.best[1],
        res.best_value,
        res.surface.len(),
        res.failures.len()
    );
    Ok(())
}

fn score(a: &ScoreArgs) -> Result<()> {
    let obs = io::load_observations(&a.observations)?;
    let mut cfg = RunConfig::new(&a.observations, "");
    cfg.eval_start = a.eval_start;
    cfg.eval_end = a.eval_end;
    cfg.validate()?;
    let window: EvalWindow = eval_window(&cfg, obs.len())?;
    let report = experiment::score_files(&a.forecasts, &a.draws, &obs, a.horizons.as_deref(), window, a.baseline.as_deref())?;
    io::write_scores(&a.out, &report)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let reports = a
        .scores
        .iter()
        .map(|p| {
            let label = p
                .parent()
                .and_then(|d| d.file_name())
                .or_else(|| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((label, io::load_scores(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = comparison_table(&reports)?;
    print!("{}", table.to_text());
    if let Some(out) = &a.out {
        table.write_csv(out)?;
    }
    Ok(())
}

/// Configures the global pool from `DTVW_THREADS`, if set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot configure threads: {e}")))
}

pub fn execute(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Run(a) => run(a),
        Command::Gridsearch(a) => gridsearch(a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
