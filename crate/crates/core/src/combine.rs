//! Combination methods behind one interface: individual models, equal
//! weights, recursive and rolling BMA, and the particle-filter methods.

use rand::Rng;

use crate::error::{Error, Result};
use crate::filter::{self, systematic_indices, FilterConfig};
use crate::latent::LatentMode;
use crate::link::{gaussian_log_pdf, log_sum_exp, softmax_link};
use crate::rng::substream;
use crate::types::{ModelMatrix, ObservationSeries, PredictorPanel, WeightMatrix};

/// Variance floor of the per-model Gaussian fits.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// One method's forecast of observation `target` at a given horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonForecast {
    pub horizon: usize,
    pub target: usize,
    pub point: Vec<f64>,
    /// Predictive draws per variable, `draws[l][j]`; draws are joint across variables.
    pub draws: Vec<Vec<f64>>,
    /// Joint log predictive density at the realized target, if observed.
    pub log_predictive: Option<f64>,
    /// Per-variable marginal log predictive densities.
    pub log_predictive_marginal: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CombinedRow {
    pub t: usize,
    pub weights: WeightMatrix,
    pub weight_lower: ModelMatrix,
    pub weight_upper: ModelMatrix,
    pub forecasts: Vec<HorizonForecast>,
}

/// Posterior mean and band of the coefficient state at step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaRow {
    pub t: usize,
    pub mean: [f64; 3],
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    Model,
    Combiner,
}

impl MethodKind {
    pub fn label(self) -> &'static str {
        match self {
            MethodKind::Model => "model",
            MethodKind::Combiner => "combiner",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CombinerResult {
    pub method: String,
    pub kind: MethodKind,
    pub rows: Vec<CombinedRow>,
    pub alphas: Option<Vec<AlphaRow>>,
}

pub trait Combiner {
    fn name(&self) -> String;
    fn combine(&self, obs: &ObservationSeries, panel: &PredictorPanel) -> Result<CombinerResult>;
}

fn check_alignment(obs: &ObservationSeries, panel: &PredictorPanel) -> Result<()> {
    if panel.n_vars() != obs.n_vars() || panel.n_steps() < obs.len() {
        return Err(Error::Dimension(format!(
            "panel covers {} steps of {} variables, observations {} steps of {}",
            panel.n_steps(),
            panel.n_vars(),
            obs.len(),
            obs.n_vars()
        )));
    }
    Ok(())
}

/// Mean and floored variance of a draw set; single draws use `fallback_sd`.
fn moment_fit(draws: &[f64], fallback_sd: f64) -> (f64, f64) {
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    if draws.len() < 2 {
        return (mean, fallback_sd.max(VARIANCE_FLOOR.sqrt()));
    }
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.max(VARIANCE_FLOOR).sqrt())
}

/// Per-variable log density of `y` under model `k`'s moment-fitted Gaussian
/// at row `t`, horizon `h`.
pub fn model_log_predictive_marginal(
    panel: &PredictorPanel,
    y: &[f64],
    t: usize,
    k: usize,
    h: usize,
    fallback_sd: f64,
) -> Vec<f64> {
    (0..panel.n_vars())
        .map(|l| {
            let (m, s) = moment_fit(panel.draws(t, k, l, h), fallback_sd);
            gaussian_log_pdf(y[l], m, s)
        })
        .collect()
}

/// Joint (independent across variables) one-step log predictive density of
/// observation `t` under model `k`.
pub fn model_log_predictive(
    panel: &PredictorPanel,
    obs: &ObservationSeries,
    t: usize,
    k: usize,
    fallback_sd: f64,
) -> Result<f64> {
    panel.check_index(t, 1)?;
    if t >= obs.len() || k >= panel.n_models() {
        return Err(Error::InvalidInput(format!("(t={t}, k={k}) outside the observed range")));
    }
    Ok(model_log_predictive_marginal(panel, obs.get(t), t, k, 1, fallback_sd).iter().sum())
}

/// Recursive BMA weights. Row `t` is the softmax over models of the log
/// scores of steps `max(0, t - window) .. t`, so it never sees step `t`.
pub fn bma_weights(log_pred: &[Vec<f64>], window: Option<usize>) -> Result<Vec<Vec<f64>>> {
    if window == Some(0) {
        return Err(Error::Config("BMA window must be at least 1".into()));
    }
    let k_n = log_pred.first().map_or(0, Vec::len);
    if k_n == 0 {
        return Err(Error::InvalidInput("BMA needs at least one model".into()));
    }
    if log_pred.iter().any(|r| r.len() != k_n || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("BMA log scores must be finite and rectangular".into()));
    }
    (0..log_pred.len())
        .map(|t| {
            let start = window.map_or(0, |w| t.saturating_sub(w));
            let cumulative: Vec<f64> = (0..k_n)
                .map(|k| log_pred[start..t].iter().map(|r| r[k]).sum())
                .collect();
            softmax_link(&cumulative)
        })
        .collect()
}

/// Weighted mixture of the models' Gaussian fits, sampled by systematic
/// selection of models.
#[allow(clippy::too_many_arguments)]
fn mixture_forecast(
    panel: &PredictorPanel,
    obs: &ObservationSeries,
    weights: &[f64],
    t: usize,
    h: usize,
    fallback_sd: f64,
    n_draws: usize,
    seed: u64,
) -> HorizonForecast {
    let (k_n, l_n) = (panel.n_models(), panel.n_vars());
    let point = (0..l_n)
        .map(|l| (0..k_n).map(|k| weights[k] * panel.mean(t, k, l, h)).sum())
        .collect();
    let target = t + h - 1;
    let (log_predictive, log_predictive_marginal) = if target < obs.len() {
        let y = obs.get(target);
        let per_model: Vec<Vec<f64>> = (0..k_n)
            .map(|k| model_log_predictive_marginal(panel, y, t, k, h, fallback_sd))
            .collect();
        let joint = log_sum_exp((0..k_n).map(|k| weights[k].ln() + per_model[k].iter().sum::<f64>()));
        let marginal = (0..l_n)
            .map(|l| log_sum_exp((0..k_n).map(|k| weights[k].ln() + per_model[k][l])))
            .collect();
        (Some(joint), Some(marginal))
    } else {
        (None, None)
    };
    let mut rng = substream(seed, "mixture", ((t as u64) << 8) | h as u64);
    let chosen = systematic_indices(weights, n_draws, rng.random::<f64>());
    let d_n = panel.n_draws();
    let mut draws = vec![Vec::with_capacity(n_draws); l_n];
    for k in chosen {
        let d = if d_n == 1 { 0 } else { rng.random_range(0..d_n) };
        for (l, col) in draws.iter_mut().enumerate() {
            col.push(panel.draws(t, k, l, h)[d]);
        }
    }
    HorizonForecast {
        horizon: h,
        target,
        point,
        draws,
        log_predictive,
        log_predictive_marginal,
    }
}

fn fixed_row(t: usize, weights: WeightMatrix, forecasts: Vec<HorizonForecast>) -> CombinedRow {
    CombinedRow {
        t,
        weight_lower: weights.matrix().clone(),
        weight_upper: weights.matrix().clone(),
        weights,
        forecasts,
    }
}

/// Each candidate model on its own, scored from its draws.
pub struct IndividualModel {
    pub k: usize,
    pub fallback_sd: f64,
}

impl IndividualModel {
    /// One result per model of the panel.
    pub fn all(obs: &ObservationSeries, panel: &PredictorPanel, fallback_sd: f64) -> Result<Vec<CombinerResult>> {
        (0..panel.n_models())
            .map(|k| IndividualModel { k, fallback_sd }.combine(obs, panel))
            .collect()
    }

    fn forecast(&self, panel: &PredictorPanel, obs: &ObservationSeries, t: usize, h: usize) -> HorizonForecast {
        let target = t + h - 1;
        let marginal =
            (target < obs.len()).then(|| model_log_predictive_marginal(panel, obs.get(target), t, self.k, h, self.fallback_sd));
        HorizonForecast {
            horizon: h,
            target,
            point: (0..panel.n_vars()).map(|l| panel.mean(t, self.k, l, h)).collect(),
            draws: (0..panel.n_vars()).map(|l| panel.draws(t, self.k, l, h).to_vec()).collect(),
            log_predictive: marginal.as_ref().map(|m| m.iter().sum()),
            log_predictive_marginal: marginal,
        }
    }
}

/// Name used for individual-model results.
pub fn model_method_name(panel: &PredictorPanel, k: usize) -> String {
    panel.model_names()[k].clone()
}

impl Combiner for IndividualModel {
    fn name(&self) -> String {
        format!("model{}", self.k + 1)
    }

    fn combine(&self, obs: &ObservationSeries, panel: &PredictorPanel) -> Result<CombinerResult> {
        check_alignment(obs, panel)?;
        if self.k >= panel.n_models() {
            return Err(Error::InvalidInput(format!("model index {} out of range", self.k)));
        }
        let mut one_hot = vec![0.0; panel.n_models()];
        one_hot[self.k] = 1.0;
        let w = WeightMatrix::from_model_weights(&one_hot, panel.n_vars())?;
        let rows = (0..obs.len())
            .map(|t| {
                let fc = (1..=panel.horizons()).map(|h| self.forecast(panel, obs, t, h)).collect();
                fixed_row(t, w.clone(), fc)
            })
            .collect();
        Ok(CombinerResult {
            method: model_method_name(panel, self.k),
            kind: MethodKind::Model,
            rows,
            alphas: None,
        })
    }
}

/// Equal weights `1/K`. Predictive draws pool every model's draws; the
/// density is the equal-weight mixture of the models' Gaussian fits.
pub struct EqualCombiner {
    pub fallback_sd: f64,
}

impl Combiner for EqualCombiner {
    fn name(&self) -> String {
        "equal".into()
    }

    fn combine(&self, obs: &ObservationSeries, panel: &PredictorPanel) -> Result<CombinerResult> {
        check_alignment(obs, panel)?;
        let (k_n, l_n) = (panel.n_models(), panel.n_vars());
        let w = WeightMatrix::uniform(k_n, l_n);
        let uniform = vec![1.0 / k_n as f64; k_n];
        let rows = (0..obs.len())
            .map(|t| {
                let fc = (1..=panel.horizons())
                    .map(|h| {
                        let mut f = mixture_forecast(panel, obs, &uniform, t, h, self.fallback_sd, 0, 0);
                        f.point = (0..l_n)
                            .map(|l| (0..k_n).map(|k| panel.mean(t, k, l, h)).sum::<f64>() / k_n as f64)
                            .collect();
                        f.draws = (0..l_n)
                            .map(|l| (0..k_n).flat_map(|k| panel.draws(t, k, l, h).iter().copied()).collect())
                            .collect();
                        f
                    })
                    .collect();
                fixed_row(t, w.clone(), fc)
            })
            .collect();
        Ok(CombinerResult {
            method: self.name(),
            kind: MethodKind::Combiner,
            rows,
            alphas: None,
        })
    }
}

/// BMA with weights from cumulative one-step log predictive scores, over
/// the whole past or a trailing window.
pub struct BmaCombiner {
    pub window: Option<usize>,
    pub fallback_sd: f64,
    pub predictive_draws: usize,
    pub seed: u64,
}

impl Combiner for BmaCombiner {
    fn name(&self) -> String {
        if self.window.is_some() { "bma_roll" } else { "bma" }.into()
    }

    fn combine(&self, obs: &ObservationSeries, panel: &PredictorPanel) -> Result<CombinerResult> {
        check_alignment(obs, panel)?;
        let k_n = panel.n_models();
        let scores: Vec<Vec<f64>> = (0..obs.len())
            .map(|t| (0..k_n).map(|k| model_log_predictive(panel, obs, t, k, self.fallback_sd)).collect())
            .collect::<Result<_>>()?;
        let weights = bma_weights(&scores, self.window)?;
        let rows = weights
            .iter()
            .enumerate()
            .map(|(t, w)| {
                let fc = (1..=panel.horizons())
                    .map(|h| mixture_forecast(panel, obs, w, t, h, self.fallback_sd, self.predictive_draws, self.seed))
                    .collect();
                Ok(fixed_row(t, WeightMatrix::from_model_weights(w, panel.n_vars())?, fc))
            })
            .collect::<Result<_>>()?;
        Ok(CombinerResult {
            method: self.name(),
            kind: MethodKind::Combiner,
            rows,
            alphas: None,
        })
    }
}

/// Particle-filter methods: TVW, adaptive TVW and DTVW.
pub struct FilterCombiner {
    pub config: FilterConfig,
}

impl Combiner for FilterCombiner {
    fn name(&self) -> String {
        self.config.mode.label().into()
    }

    fn combine(&self, obs: &ObservationSeries, panel: &PredictorPanel) -> Result<CombinerResult> {
        let out = filter::run(obs, panel, &self.config)?;
        let alphas = (self.config.mode != LatentMode::Tvw).then(|| {
            out.rows
                .iter()
                .map(|r| AlphaRow {
                    t: r.t,
                    mean: r.mean_alpha,
                    lower: r.alpha_lower,
                    upper: r.alpha_upper,
                })
                .collect()
        });
        let rows = out
            .rows
            .into_iter()
            .map(|r| CombinedRow {
                t: r.t,
                weights: r.mean_weights,
                weight_lower: r.weight_lower,
                weight_upper: r.weight_upper,
                forecasts: r.forecasts,
            })
            .collect();
        Ok(CombinerResult {
            method: self.name(),
            kind: MethodKind::Combiner,
            rows,
            alphas,
        })
    }
}
