//! End-to-end runs: load inputs, fit every configured method, score, and
//! write the output files.

use std::path::{Path, PathBuf};

use crate::combine::{BmaCombiner, CombinerResult, Combiner, EqualCombiner, FilterCombiner, IndividualModel, MethodKind};
use crate::config::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::io::{self, CumulativeRow};
use crate::latent::LatentMode;
use crate::metrics::{evaluate, EvalWindow, MethodForecasts, ScoreReport};
use crate::tune::{filter_crps_objective, grid_search, GridResult};
use crate::types::{ObservationSeries, PredictorPanel};

pub const SCORES_FILE: &str = "scores.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const ALPHAS_FILE: &str = "alphas.csv";
pub const CUMLS_FILE: &str = "cumls.csv";
pub const FORECAST_FILE: &str = "forecast.csv";
pub const DRAWS_FILE: &str = "draws.csv";

/// Loads observations and panel and checks they describe the same variables.
pub fn load_inputs(cfg: &RunConfig) -> Result<(ObservationSeries, PredictorPanel)> {
    let obs = io::load_observations(&cfg.observations)?;
    let panel = io::load_panel(&cfg.panel)?;
    if obs.variable_names() != panel.variable_names() {
        return Err(Error::Validation {
            path: cfg.panel.clone(),
            msg: format!(
                "panel variables {:?} differ from observation variables {:?}",
                panel.variable_names(),
                obs.variable_names()
            ),
        });
    }
    if panel.n_steps() < obs.len() {
        return Err(Error::Validation {
            path: cfg.panel.clone(),
            msg: format!("panel covers {} steps, observations {}", panel.n_steps(), obs.len()),
        });
    }
    Ok((obs, panel))
}

/// 0-based evaluation window from the 1-based configured bounds.
pub fn eval_window(cfg: &RunConfig, n_obs: usize) -> Result<EvalWindow> {
    let start = cfg.eval_start.unwrap_or(1);
    let end = cfg.eval_end.unwrap_or(n_obs).min(n_obs);
    if start > end {
        return Err(Error::Config(format!("evaluation window {start}..={end} is empty for T={n_obs}")));
    }
    Ok(EvalWindow {
        start: start - 1,
        end: end - 1,
    })
}

pub fn scored_horizons(cfg: &RunConfig, panel: &PredictorPanel) -> Result<Vec<usize>> {
    let hs = cfg.horizons.clone().unwrap_or_else(|| (1..=panel.horizons()).collect());
    if let Some(h) = hs.iter().find(|&&h| h > panel.horizons()) {
        return Err(Error::Config(format!("horizon {h} exceeds the panel's {}", panel.horizons())));
    }
    Ok(hs)
}

/// Fits one combination method.
pub fn run_method(cfg: &RunConfig, method: Method, obs: &ObservationSeries, panel: &PredictorPanel) -> Result<CombinerResult> {
    match method {
        Method::Equal => EqualCombiner {
            fallback_sd: cfg.fallback_sd,
        }
        .combine(obs, panel),
        Method::Bma => BmaCombiner {
            window: None,
            fallback_sd: cfg.fallback_sd,
            predictive_draws: cfg.bma.predictive_draws,
            seed: cfg.seed,
        }
        .combine(obs, panel),
        Method::BmaRoll => BmaCombiner {
            window: Some(cfg.bma_roll.window),
            fallback_sd: cfg.fallback_sd,
            predictive_draws: cfg.bma_roll.predictive_draws,
            seed: cfg.seed,
        }
        .combine(obs, panel),
        Method::Tvw | Method::AdaptiveTvw | Method::Dtvw => {
            let mode = method.latent_mode().expect("filter method");
            FilterCombiner {
                config: cfg.filter_config(mode),
            }
            .combine(obs, panel)
        }
    }
}

/// Individual models (when enabled) followed by the configured combiners.
pub fn run_methods(cfg: &RunConfig, obs: &ObservationSeries, panel: &PredictorPanel) -> Result<Vec<CombinerResult>> {
    let mut out = if cfg.include_models {
        IndividualModel::all(obs, panel, cfg.fallback_sd)?
    } else {
        Vec::new()
    };
    for &m in &cfg.methods {
        out.push(run_method(cfg, m, obs, panel)?);
    }
    Ok(out)
}

fn resolve_baseline(cfg: &RunConfig, results: &[CombinerResult]) -> Option<String> {
    let named = cfg.cumls_baseline.clone().or_else(|| cfg.dm_baseline.clone());
    named
        .or_else(|| results.iter().find(|r| r.method == "equal").map(|r| r.method.clone()))
        .or_else(|| results.iter().find(|r| r.kind == MethodKind::Combiner).map(|r| r.method.clone()))
}

/// Running sums of `log p_method - log p_baseline` over the evaluation
/// targets, for every method other than the baseline.
pub fn cumulative_log_scores(
    results: &[CombinerResult],
    baseline: &str,
    horizons: &[usize],
    window: EvalWindow,
) -> Result<Vec<CumulativeRow>> {
    let base = results
        .iter()
        .find(|r| r.method == baseline)
        .ok_or_else(|| Error::Config(format!("cumulative baseline `{baseline}` was not run")))?;
    let series = |r: &CombinerResult, h: usize| -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = r
            .rows
            .iter()
            .flat_map(|row| &row.forecasts)
            .filter(|f| f.horizon == h && f.target >= window.start && f.target <= window.end)
            .filter_map(|f| {
                let lp = f.log_predictive.or_else(|| f.log_predictive_marginal.as_ref().map(|m| m.iter().sum()))?;
                Some((f.target, lp))
            })
            .collect();
        v.sort_by_key(|p| p.0);
        v
    };
    let mut out = Vec::new();
    for r in results.iter().filter(|r| r.method != baseline) {
        for &h in horizons {
            let b = series(base, h);
            let m = series(r, h);
            if b.iter().map(|p| p.0).ne(m.iter().map(|p| p.0)) {
                return Err(Error::Dimension(format!("{} and {baseline} score different targets at h={h}", r.method)));
            }
            let mut acc = 0.0;
            for ((target, lm), (_, lb)) in m.into_iter().zip(b) {
                acc += lm - lb;
                out.push(CumulativeRow {
                    method: r.method.clone(),
                    baseline: baseline.to_owned(),
                    horizon: h,
                    target,
                    value: acc,
                });
            }
        }
    }
    Ok(out)
}

/// Everything a run produced, kept in memory for callers.
pub struct ExperimentOutput {
    pub results: Vec<CombinerResult>,
    pub report: ScoreReport,
    pub files: Vec<PathBuf>,
}

/// Runs every configured method, scores them and writes the output files
/// into `cfg.output`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (obs, panel) = load_inputs(cfg)?;
    let horizons = scored_horizons(cfg, &panel)?;
    let window = eval_window(cfg, obs.len())?;
    let results = run_methods(cfg, &obs, &panel)?;
    let methods: Vec<MethodForecasts> = results.iter().map(MethodForecasts::from).collect();
    let report = evaluate(&methods, &obs, &horizons, window, cfg.dm_baseline.as_deref())?;

    let dir = &cfg.output;
    let path = |name: &str| dir.join(name);
    let vars = panel.variable_names();
    io::write_scores(path(SCORES_FILE), &report)?;
    io::write_weights(path(WEIGHTS_FILE), &results, panel.model_names(), vars)?;
    io::write_alphas(path(ALPHAS_FILE), &results)?;
    io::write_forecasts(path(FORECAST_FILE), &results, vars, cfg.band_level)?;
    io::write_draws(path(DRAWS_FILE), &results, vars)?;
    let cum = match resolve_baseline(cfg, &results) {
        Some(b) => cumulative_log_scores(&results, &b, &horizons, window)?,
        None => Vec::new(),
    };
    io::write_cumls(path(CUMLS_FILE), &cum)?;

    let files = [SCORES_FILE, WEIGHTS_FILE, ALPHAS_FILE, FORECAST_FILE, DRAWS_FILE, CUMLS_FILE]
        .iter()
        .map(|n| path(n))
        .collect();
    Ok(ExperimentOutput { results, report, files })
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Grid search over the diversity-driven filter's initial coefficients;
/// writes the surface next to the other outputs unless `surface` is given.
pub fn run_gridsearch(cfg: &RunConfig, surface: Option<&Path>) -> Result<GridResult> {
    cfg.validate()?;
    let (obs, panel) = load_inputs(cfg)?;
    let window = eval_window(cfg, obs.len())?;
    let spec = cfg.gridsearch.grid_spec()?;
    let objective_spec = cfg.gridsearch.objective_spec(obs.variable_names(), window.start, window.end)?;
    let base = cfg.filter_config(LatentMode::Dtvw);
    let result = grid_search(&spec, filter_crps_objective(&obs, &panel, &base, &objective_spec))?;
    let out = surface.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.join(&cfg.gridsearch.surface));
    io::write_surface(out, &result)?;
    Ok(result)
}

/// Scores forecasts read back from `forecast.csv` and `draws.csv`.
pub fn score_files(
    forecast: &Path,
    draws: &Path,
    obs: &ObservationSeries,
    horizons: Option<&[usize]>,
    window: EvalWindow,
    baseline: Option<&str>,
) -> Result<ScoreReport> {
    let loaded = io::load_forecasts(forecast, draws, obs.variable_names())?;
    let hs: Vec<usize> = match horizons {
        Some(h) => h.to_vec(),
        None => {
            let mut v: Vec<usize> = loaded.iter().flat_map(|m| m.forecasts.iter().map(|f| f.horizon)).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    let methods: Vec<MethodForecasts> = loaded.iter().map(MethodForecasts::from).collect();
    evaluate(&methods, obs, &hs, window, baseline)
}
