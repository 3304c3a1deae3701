//! Particle filter over the latent weight state.
//!
//! Each step propagates the particle cloud, scores the realized observation
//! against every particle's combined forecast, reweights, and resamples
//! systematically when the normalized effective sample size drops below the
//! threshold. Forecasts at step `t` are formed from the prior cloud, before
//! observation `t` enters the weights.

use rand::Rng;
use rayon::prelude::*;

use crate::combine::HorizonForecast;
use crate::diversity::diversity_vector;
use crate::error::{Error, Result};
use crate::latent::{init_particles, propagate_in_place, LatentMode, LatentParticle};
use crate::link::{combine_into, gaussian_log_pdf, log_sum_exp, softmax_into};
use crate::rng::substream;
use crate::types::{ModelMatrix, NoiseConfig, ObservationSeries, PredictorPanel, WeightMatrix};
use rand_distr::StandardNormal;

/// Particles per propagation shard. Fixed so the random streams, and hence
/// the results, do not depend on the worker-thread count.
const SHARD: usize = 64;

/// Settings of one filter run.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterConfig {
    pub mode: LatentMode,
    pub particles: usize,
    /// Resample when the normalized ESS falls below this value.
    pub ess_threshold: f64,
    pub sigma_x: f64,
    pub sigma_alpha: f64,
    /// Observation standard deviations; estimated from the data when `None`.
    pub sigma_obs: Option<Vec<f64>>,
    pub alpha0: [f64; 3],
    pub x0_spread: f64,
    /// Horizon whose forecasts feed the diversity signal.
    pub div_horizon: usize,
    /// Upper bound on combined predictive draws per step.
    pub predictive_draws: usize,
    /// Coverage of the weight and coefficient bands.
    pub band_level: f64,
    /// Compute quantile bands; tuning runs switch this off.
    pub summaries: bool,
    /// Admit zero propagation noise (deterministic limit).
    pub allow_zero_noise: bool,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            mode: LatentMode::Dtvw,
            particles: 1000,
            ess_threshold: 0.5,
            sigma_x: 0.3,
            sigma_alpha: 0.05,
            sigma_obs: None,
            alpha0: [0.0, 10.0, 8.5],
            x0_spread: 0.0,
            div_horizon: 1,
            predictive_draws: 1000,
            band_level: 0.95,
            summaries: true,
            allow_zero_noise: false,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn with_mode(mode: LatentMode) -> Self {
        let alpha0 = match mode {
            LatentMode::Tvw => [0.0, 0.0, 0.0],
            LatentMode::AdaptiveTvw => [0.0, 9.0, 0.0],
            LatentMode::Dtvw => [0.0, 10.0, 8.5],
        };
        Self {
            mode,
            alpha0,
            ..Self::default()
        }
    }

    fn validate(&self, panel: &PredictorPanel) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("particle count must be at least 1".into()));
        }
        if !(self.ess_threshold > 0.0 && self.ess_threshold <= 1.0) {
            return Err(Error::Config(format!("ess_threshold must lie in (0,1], got {}", self.ess_threshold)));
        }
        if !(self.band_level > 0.0 && self.band_level < 1.0) {
            return Err(Error::Config(format!("band_level must lie in (0,1), got {}", self.band_level)));
        }
        if self.mode.uses_diversity() {
            if self.div_horizon == 0 || self.div_horizon > panel.horizons() {
                return Err(Error::Config(format!(
                    "div_horizon {} outside the panel's 1..={} horizons",
                    self.div_horizon,
                    panel.horizons()
                )));
            }
            if panel.n_models() < 2 {
                return Err(Error::Config("diversity-driven weights need at least two models".into()));
            }
        }
        Ok(())
    }
}

/// Particle cloud between steps.
#[derive(Clone, Debug)]
pub struct FilterState {
    pub particles: Vec<LatentParticle>,
    /// Next step to process.
    pub t: usize,
    /// Normalized ESS after the last update, before any resampling.
    pub ess: f64,
}

/// Summaries emitted after step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterRow {
    pub t: usize,
    pub ess: f64,
    pub resampled: bool,
    /// Mean weights of the prior cloud; these produced the forecasts.
    pub prior_weights: WeightMatrix,
    /// Mean weights after observation `t` was absorbed.
    pub mean_weights: WeightMatrix,
    pub weight_lower: ModelMatrix,
    pub weight_upper: ModelMatrix,
    pub mean_alpha: [f64; 3],
    pub alpha_lower: [f64; 3],
    pub alpha_upper: [f64; 3],
    /// One entry per panel horizon, `forecasts[h - 1]`.
    pub forecasts: Vec<HorizonForecast>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutput {
    pub mode: LatentMode,
    pub rows: Vec<FilterRow>,
    /// Observation standard deviations used per horizon, `sigma_obs[h - 1][l]`.
    pub sigma_obs: Vec<Vec<f64>>,
}

/// Normalized effective sample size `1 / (N * sum w^2)` of normalized weights.
pub fn normalized_ess(weights: &[f64]) -> f64 {
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    1.0 / (weights.len() as f64 * sum_sq)
}

/// Systematic resampling: `N` indices from a single uniform offset.
pub fn systematic_resample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || (total - 1.0).abs() > 1e-8 || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "resampling weights must be nonnegative and sum to 1 (sum = {total})"
        )));
    }
    Ok(systematic_indices(weights, weights.len(), rng.random::<f64>()))
}

/// `m` indices at positions `(j + u) / m` of the cumulative distribution.
pub(crate) fn systematic_indices(weights: &[f64], m: usize, u: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let last = weights.len() - 1;
    let mut out = Vec::with_capacity(m);
    let mut i = 0;
    let mut cum = weights[0];
    for j in 0..m {
        let pos = (j as f64 + u) / m as f64 * total;
        while pos >= cum && i < last {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    out
}

/// Per-variable sample standard deviation of equal-weight residuals at
/// horizon `h`, over the first `max(10, T/10)` usable steps.
pub fn estimate_sigma_obs(obs: &ObservationSeries, panel: &PredictorPanel, h: usize) -> Result<Vec<f64>> {
    panel.check_index(0, h)?;
    let n_steps = obs.len();
    let usable = n_steps.saturating_sub(h - 1);
    let n0 = (n_steps / 10).max(10).min(usable);
    if n0 == 0 {
        return Err(Error::InvalidInput(format!("no targets available at horizon {h}")));
    }
    let k_n = panel.n_models() as f64;
    (0..obs.n_vars())
        .map(|l| {
            let resid: Vec<f64> = (0..n0)
                .map(|t| {
                    let avg = (0..panel.n_models()).map(|k| panel.mean(t, k, l, h)).sum::<f64>() / k_n;
                    obs.get(t + h - 1)[l] - avg
                })
                .collect();
            let sd = if resid.len() < 2 {
                resid[0].abs()
            } else {
                let m = resid.iter().sum::<f64>() / resid.len() as f64;
                (resid.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (resid.len() - 1) as f64).sqrt()
            };
            Ok(sd.max(1e-8))
        })
        .collect()
}

/// Index of the first entry whose cumulative weight reaches `q`, over
/// `(value, weight)` pairs sorted by value.
fn weighted_quantile(sorted: &[(f64, f64)], q: f64) -> f64 {
    let mut cum = 0.0;
    for &(v, w) in sorted {
        cum += w;
        if cum >= q {
            return v;
        }
    }
    sorted.last().map_or(f64::NAN, |p| p.0)
}

/// Weighted mean and band of one coordinate; the band is widened to contain
/// the mean when the cloud is strongly skewed.
fn weighted_band(values: impl Iterator<Item = f64>, weights: &[f64], level: f64, scratch: &mut Vec<(f64, f64)>) -> (f64, f64, f64) {
    scratch.clear();
    scratch.extend(values.zip(weights.iter().copied()));
    let mean: f64 = scratch.iter().map(|(v, w)| v * w).sum();
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tail = 0.5 * (1.0 - level);
    let lo = weighted_quantile(scratch, tail).min(mean);
    let hi = weighted_quantile(scratch, 1.0 - tail).max(mean);
    (mean, lo, hi)
}

/// Stepwise particle filter bound to one observation path and panel.
pub struct ParticleFilter<'a> {
    cfg: FilterConfig,
    obs: &'a ObservationSeries,
    panel: &'a PredictorPanel,
    sigma: Vec<Vec<f64>>,
    state: FilterState,
    // Per-particle scratch: weights (K*L), combined means (H*L), log-likelihood.
    weights_buf: Vec<f64>,
    means_buf: Vec<f64>,
    loglik: Vec<f64>,
}

impl<'a> ParticleFilter<'a> {
    pub fn new(cfg: FilterConfig, obs: &'a ObservationSeries, panel: &'a PredictorPanel) -> Result<Self> {
        cfg.validate(panel)?;
        if panel.n_vars() != obs.n_vars() || panel.n_steps() < obs.len() {
            return Err(Error::Dimension(format!(
                "panel covers {} steps of {} variables, observations {} steps of {}",
                panel.n_steps(),
                panel.n_vars(),
                obs.len(),
                obs.n_vars()
            )));
        }
        let sigma: Vec<Vec<f64>> = match &cfg.sigma_obs {
            Some(s) => vec![s.clone(); panel.horizons()],
            None => (1..=panel.horizons())
                .map(|h| estimate_sigma_obs(obs, panel, h))
                .collect::<Result<_>>()?,
        };
        NoiseConfig {
            sigma_obs: sigma[0].clone(),
            sigma_x: cfg.sigma_x,
            sigma_alpha: cfg.sigma_alpha,
        }
        .validate(obs.n_vars(), cfg.allow_zero_noise)?;
        let mut rng = substream(cfg.seed, "init", 0);
        let particles = init_particles(
            cfg.particles,
            panel.n_models(),
            panel.n_vars(),
            cfg.alpha0,
            cfg.x0_spread,
            &mut rng,
        )?;
        let n = cfg.particles;
        let kl = panel.n_models() * panel.n_vars();
        let hl = panel.horizons() * panel.n_vars();
        Ok(Self {
            cfg,
            obs,
            panel,
            sigma,
            state: FilterState {
                particles,
                t: 0,
                ess: 1.0,
            },
            weights_buf: vec![0.0; n * kl],
            means_buf: vec![0.0; n * hl],
            loglik: vec![0.0; n],
        })
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    pub fn sigma_obs(&self) -> &[Vec<f64>] {
        &self.sigma
    }

    pub fn is_finished(&self) -> bool {
        self.state.t >= self.obs.len()
    }

    /// Processes the next observation.
    pub fn step(&mut self) -> Result<FilterRow> {
        let t = self.state.t;
        if t >= self.obs.len() {
            return Err(Error::InvalidInput(format!("filter already consumed all {} observations", t)));
        }
        let panel = self.panel;
        let (k_n, l_n, h_n) = (panel.n_models(), panel.n_vars(), panel.horizons());
        let kl = k_n * l_n;
        let hl = h_n * l_n;
        let n = self.state.particles.len();
        let cfg = &self.cfg;
        let div = if cfg.mode.uses_diversity() {
            diversity_vector(panel, t, cfg.div_horizon)?
        } else {
            Vec::new()
        };
        let y_t = self.obs.get(t);
        let sigma1 = &self.sigma[0];

        // Propagate and score, shard by shard.
        self.state
            .particles
            .par_chunks_mut(SHARD)
            .zip(self.weights_buf.par_chunks_mut(SHARD * kl))
            .zip(self.means_buf.par_chunks_mut(SHARD * hl))
            .zip(self.loglik.par_chunks_mut(SHARD))
            .enumerate()
            .for_each(|(shard, (((ps, ws), mus), lls))| {
                let mut rng = substream(cfg.seed, "propagate", ((t as u64) << 24) | shard as u64);
                for (i, p) in ps.iter_mut().enumerate() {
                    propagate_in_place(p, &div, cfg.mode, cfg.sigma_x, cfg.sigma_alpha, &mut rng);
                    let w = &mut ws[i * kl..(i + 1) * kl];
                    for (src, dst) in p.x.chunks_exact(k_n).zip(w.chunks_exact_mut(k_n)) {
                        softmax_into(src, dst);
                    }
                    let mu = &mut mus[i * hl..(i + 1) * hl];
                    for h in 1..=h_n {
                        combine_into(w, panel.mean_block(t, h), k_n, &mut mu[(h - 1) * l_n..h * l_n]);
                    }
                    lls[i] = (0..l_n).map(|l| gaussian_log_pdf(y_t[l], mu[l], sigma1[l])).sum();
                }
            });

        let prior: Vec<f64> = self.state.particles.iter().map(|p| p.omega).collect();
        let log_prior: Vec<f64> = prior.iter().map(|w| w.ln()).collect();
        let prior_weights = self.mean_weight_matrix(&prior);

        let forecasts = (1..=h_n)
            .map(|h| self.horizon_forecast(t, h, &prior, &log_prior, &prior_weights))
            .collect::<Result<Vec<_>>>()?;

        // Reweight by the likelihood of observation t.
        let mut log_post: Vec<f64> = log_prior.iter().zip(&self.loglik).map(|(a, b)| a + b).collect();
        let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Degeneracy { t: t + 1 });
        }
        let mut total = 0.0;
        for v in log_post.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        let posterior: Vec<f64> = log_post.iter().map(|w| w / total).collect();
        for (p, w) in self.state.particles.iter_mut().zip(&posterior) {
            p.omega = *w;
        }
        let ess = normalized_ess(&posterior);

        let mean_weights = self.mean_weight_matrix(&posterior);
        let mut weight_lower = mean_weights.matrix().clone();
        let mut weight_upper = mean_weights.matrix().clone();
        let mut mean_alpha = [0.0; 3];
        for (j, a) in mean_alpha.iter_mut().enumerate() {
            *a = self.state.particles.iter().zip(&posterior).map(|(p, w)| w * p.alpha[j]).sum();
        }
        let (mut alpha_lower, mut alpha_upper) = (mean_alpha, mean_alpha);
        if self.cfg.summaries {
            let mut scratch = Vec::with_capacity(n);
            let mut lo = vec![0.0; kl];
            let mut hi = vec![0.0; kl];
            for j in 0..kl {
                let vals = (0..n).map(|i| self.weights_buf[i * kl + j]);
                let (_, a, b) = weighted_band(vals, &posterior, self.cfg.band_level, &mut scratch);
                lo[j] = a;
                hi[j] = b;
            }
            weight_lower = ModelMatrix::from_vec(k_n, l_n, lo)?;
            weight_upper = ModelMatrix::from_vec(k_n, l_n, hi)?;
            for j in 0..3 {
                let vals = self.state.particles.iter().map(|p| p.alpha[j]);
                let (_, a, b) = weighted_band(vals, &posterior, self.cfg.band_level, &mut scratch);
                alpha_lower[j] = a.min(mean_alpha[j]);
                alpha_upper[j] = b.max(mean_alpha[j]);
            }
        }

        let resampled = ess < self.cfg.ess_threshold;
        if resampled {
            let mut rng = substream(self.cfg.seed, "resample", t as u64);
            let idx = systematic_resample(&posterior, &mut rng)?;
            let uniform = 1.0 / n as f64;
            let fresh: Vec<LatentParticle> = idx
                .into_iter()
                .map(|i| {
                    let mut p = self.state.particles[i].clone();
                    p.omega = uniform;
                    p
                })
                .collect();
            self.state.particles = fresh;
        }
        self.state.ess = ess;
        self.state.t += 1;

        Ok(FilterRow {
            t,
            ess,
            resampled,
            prior_weights,
            mean_weights,
            weight_lower,
            weight_upper,
            mean_alpha,
            alpha_lower,
            alpha_upper,
            forecasts,
        })
    }

    fn mean_weight_matrix(&self, omega: &[f64]) -> WeightMatrix {
        let kl = self.panel.n_models() * self.panel.n_vars();
        let mut mean = vec![0.0; kl];
        for (i, w) in omega.iter().enumerate() {
            for (m, v) in mean.iter_mut().zip(&self.weights_buf[i * kl..(i + 1) * kl]) {
                *m += w * v;
            }
        }
        WeightMatrix::new_unchecked(
            ModelMatrix::from_vec(self.panel.n_models(), self.panel.n_vars(), mean).expect("sized above"),
        )
    }

    fn horizon_forecast(
        &self,
        t: usize,
        h: usize,
        prior: &[f64],
        log_prior: &[f64],
        prior_weights: &WeightMatrix,
    ) -> Result<HorizonForecast> {
        let panel = self.panel;
        let (k_n, l_n) = (panel.n_models(), panel.n_vars());
        let hl = panel.horizons() * l_n;
        let kl = k_n * l_n;
        let n = prior.len();
        let sigma = &self.sigma[h - 1];
        let mut point = vec![0.0; l_n];
        combine_into(prior_weights.matrix().as_slice(), panel.mean_block(t, h), k_n, &mut point);

        let mu = |i: usize, l: usize| self.means_buf[i * hl + (h - 1) * l_n + l];
        let target = t + h - 1;
        let (log_predictive, log_predictive_marginal) = if target < self.obs.len() {
            let y = self.obs.get(target);
            let joint = log_sum_exp((0..n).map(|i| {
                log_prior[i] + (0..l_n).map(|l| gaussian_log_pdf(y[l], mu(i, l), sigma[l])).sum::<f64>()
            }));
            let marginal = (0..l_n)
                .map(|l| log_sum_exp((0..n).map(|i| log_prior[i] + gaussian_log_pdf(y[l], mu(i, l), sigma[l]))))
                .collect();
            (Some(joint), Some(marginal))
        } else {
            (None, None)
        };

        let mut draws = vec![Vec::new(); l_n];
        let m = n.min(self.cfg.predictive_draws);
        if m > 0 {
            let mut rng = substream(self.cfg.seed, "draws", ((t as u64) << 8) | h as u64);
            let chosen = systematic_indices(prior, m, rng.random::<f64>());
            for col in draws.iter_mut() {
                col.reserve(m);
            }
            let n_draws = panel.n_draws();
            for i in chosen {
                let d = if n_draws == 1 { 0 } else { rng.random_range(0..n_draws) };
                let w = &self.weights_buf[i * kl..(i + 1) * kl];
                for (l, col) in draws.iter_mut().enumerate() {
                    let combined: f64 = (0..k_n).map(|k| w[l * k_n + k] * panel.draws(t, k, l, h)[d]).sum();
                    let e: f64 = rng.sample(StandardNormal);
                    col.push(combined + sigma[l] * e);
                }
            }
        }
        Ok(HorizonForecast {
            horizon: h,
            target,
            point,
            draws,
            log_predictive,
            log_predictive_marginal,
        })
    }
}

/// Runs the filter over every observation.
pub fn run(obs: &ObservationSeries, panel: &PredictorPanel, cfg: &FilterConfig) -> Result<FilterOutput> {
    let mut filter = ParticleFilter::new(cfg.clone(), obs, panel)?;
    let mut rows = Vec::with_capacity(obs.len());
    while !filter.is_finished() {
        rows.push(filter.step()?);
    }
    Ok(FilterOutput {
        mode: cfg.mode,
        rows,
        sigma_obs: filter.sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn toy(n_steps: usize) -> (ObservationSeries, PredictorPanel) {
        let obs = ObservationSeries::univariate(
            (0..n_steps).map(|t| (t as f64 * 0.3).sin() + 0.05 * (t as f64 * 2.1).cos()).collect(),
            "y",
        ).unwrap();
        let panel = PredictorPanel::from_fn(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["y".into()],
            n_steps,
            2,
            3,
            |t, k, _, h, d| ((t + h - 1) as f64 * 0.3).sin() + 0.2 * k as f64 - 0.2 + 0.01 * d as f64,
        )
        .unwrap();
        (obs, panel)
    }

    #[test]
    fn resample_examples() {
        let mut rng = substream(0, "t", 0);
        assert_eq!(systematic_resample(&[1.0, 0.0, 0.0, 0.0], &mut rng).unwrap(), vec![0; 4]);
        assert_eq!(systematic_resample(&[0.25; 4], &mut rng).unwrap(), vec![0, 1, 2, 3]);
        let mut w = vec![0.0; 1000];
        w[0] = 0.5;
        w[1] = 0.5;
        let idx = systematic_resample(&w, &mut rng).unwrap();
        let c0 = idx.iter().filter(|&&i| i == 0).count();
        let c1 = idx.iter().filter(|&&i| i == 1).count();
        assert!((499..=501).contains(&c0) && (499..=501).contains(&c1), "{c0} {c1}");
        assert!(systematic_resample(&[0.5, 0.6], &mut rng).is_err());
    }

    #[test]
    fn ess_examples() {
        assert_eq!(normalized_ess(&[0.25; 4]), 1.0);
        let mut w = vec![0.0; 8];
        w[3] = 1.0;
        assert_eq!(normalized_ess(&w), 1.0 / 8.0);
    }

    #[test]
    fn single_particle_tvw_keeps_equal_weights() {
        let (obs, panel) = toy(30);
        let cfg = FilterConfig {
            mode: LatentMode::Tvw,
            particles: 1,
            sigma_x: 0.0,
            sigma_alpha: 0.0,
            allow_zero_noise: true,
            ..FilterConfig::default()
        };
        let out = run(&obs, &panel, &cfg).unwrap();
        for row in &out.rows {
            let eq: f64 = (0..3).map(|k| panel.mean(row.t, k, 0, 1)).sum::<f64>() / 3.0;
            assert!((row.forecasts[0].point[0] - eq).abs() < 1e-14);
            assert_eq!(row.ess, 1.0);
        }
    }

    #[test]
    fn weights_stay_normalized_and_ess_bounded() {
        let (obs, panel) = toy(40);
        let cfg = FilterConfig {
            particles: 200,
            seed: 3,
            ..FilterConfig::default()
        };
        let mut f = ParticleFilter::new(cfg, &obs, &panel).unwrap();
        while !f.is_finished() {
            let row = f.step().unwrap();
            let total: f64 = f.state().particles.iter().map(|p| p.omega).sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert!(row.ess > 1.0 / 200.0 - 1e-12 && row.ess <= 1.0 + 1e-12);
            for l in 0..1 {
                let s: f64 = (0..3).map(|k| row.mean_weights.get(k, l)).sum();
                assert!((s - 1.0).abs() < 1e-10);
                for k in 0..3 {
                    let m = row.mean_weights.get(k, l);
                    assert!(row.weight_lower.get(k, l) <= m && m <= row.weight_upper.get(k, l));
                }
            }
            for j in 0..3 {
                assert!(row.alpha_lower[j] <= row.mean_alpha[j] && row.mean_alpha[j] <= row.alpha_upper[j]);
            }
            assert!(row.forecasts[1].log_predictive.is_some() || row.t + 1 == obs.len());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (obs, panel) = toy(25);
        let cfg = FilterConfig {
            particles: 150,
            seed: 11,
            ..FilterConfig::default()
        };
        assert_eq!(run(&obs, &panel, &cfg).unwrap(), run(&obs, &panel, &cfg).unwrap());
        let other = FilterConfig { seed: 12, ..cfg.clone() };
        assert_ne!(run(&obs, &panel, &cfg).unwrap(), run(&obs, &panel, &other).unwrap());
    }

    #[test]
    fn tiny_sigma_triggers_degeneracy() {
        let (obs, panel) = toy(10);
        let cfg = FilterConfig {
            particles: 10,
            sigma_obs: Some(vec![1e-200]),
            ..FilterConfig::default()
        };
        match run(&obs, &panel, &cfg) {
            Err(Error::Degeneracy { t }) => assert_eq!(t, 1),
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let (obs, panel) = toy(10);
        for cfg in [
            FilterConfig { particles: 0, ..FilterConfig::default() },
            FilterConfig { ess_threshold: 0.0, ..FilterConfig::default() },
            FilterConfig { div_horizon: 3, ..FilterConfig::default() },
            FilterConfig { sigma_x: 0.0, ..FilterConfig::default() },
        ] {
            assert!(run(&obs, &panel, &cfg).is_err());
        }
    }

    #[test]
    fn sigma_estimate_uses_first_window() {
        let (obs, panel) = toy(200);
        let s = estimate_sigma_obs(&obs, &panel, 1).unwrap();
        // Residuals are 0.05 cos(2.1 t) minus a constant.
        assert!(s[0] > 0.02 && s[0] < 0.06, "{}", s[0]);
    }
}
