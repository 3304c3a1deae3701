//! Synthetic designs: the complete AR(1) set, the nonlinear incomplete set,
//! and a bivariate panel with a structural break for pipeline tests.
//!
//! Candidate models forecast from the realized truth's lags. Each draw of
//! an `h`-step forecast iterates the model `h` times with fresh innovations.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::types::{ObservationSeries, PredictorPanel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Design {
    CompleteAr,
    NonlinearIncomplete,
    PseudoEmpirical,
}

impl Design {
    pub fn label(self) -> &'static str {
        match self {
            Design::CompleteAr => "complete_ar",
            Design::NonlinearIncomplete => "nonlinear_incomplete",
            Design::PseudoEmpirical => "pseudo_empirical",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "complete_ar" | "complete" => Ok(Design::CompleteAr),
            "nonlinear_incomplete" | "incomplete" => Ok(Design::NonlinearIncomplete),
            "pseudo_empirical" | "pseudo" => Ok(Design::PseudoEmpirical),
            _ => Err(Error::Config(format!("unknown design {s}"))),
        }
    }

    /// Innovation sd the design is usually run with.
    pub fn default_sigma(self) -> f64 {
        match self {
            Design::CompleteAr => 0.05,
            Design::NonlinearIncomplete => 0.5,
            Design::PseudoEmpirical => 0.3,
        }
    }

    fn initial(self) -> Vec<f64> {
        match self {
            Design::CompleteAr => vec![0.25],
            Design::NonlinearIncomplete => vec![0.1],
            Design::PseudoEmpirical => vec![0.7, 0.8],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSpec {
    pub design: Design,
    pub n_steps: usize,
    pub sigma: f64,
    pub seed: u64,
    pub n_draws: usize,
    pub horizons: usize,
}

impl SimSpec {
    pub fn new(design: Design, n_steps: usize, seed: u64) -> Self {
        SimSpec {
            design,
            n_steps,
            sigma: design.default_sigma(),
            seed,
            n_draws: 10,
            horizons: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::Config(format!("simulation needs T >= 2, got {}", self.n_steps)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.n_draws == 0 || self.horizons == 0 {
            return Err(Error::Config("draw count and horizons must be at least 1".into()));
        }
        Ok(())
    }
}

/// Noise-free step of the complete design; `k = 0` is the truth, which is
/// also the first candidate model.
pub fn complete_ar_step(k: usize, lag1: f64, lag2: f64) -> f64 {
    match k {
        0 | 1 => 0.1 + 0.6 * lag1,
        2 => 0.3 + 0.2 * lag2,
        _ => 0.5 + 0.1 * lag1,
    }
}

/// Noise-free step of the incomplete design at 0-based time index `j`;
/// `k = 0` is the truth and `1..=6` the candidates.
pub fn nonlinear_step(k: usize, lag1: f64, lag2: f64, j: usize) -> f64 {
    let forcing = (1.2 * j as f64).cos();
    match k {
        0 => 0.5 * lag1 + 25.0 * lag1 / (1.0 + lag1 * lag1) + 8.0 * forcing,
        1 => 0.5 * lag1 + 15.0 * lag1 / (1.0 + lag1 * lag1) + 8.0 * forcing,
        2 => 0.5 * lag1 + 25.0 * lag2 / (1.0 + lag2 * lag2) + 8.0 * forcing,
        3 => 0.5 * lag1 + 5.0 * lag1 / (1.0 + lag1.abs()) + 8.0 * forcing,
        4 => 0.5 * lag1 + 0.5 * lag2 + 9.0 * forcing,
        5 => lag1 + 8.0 * forcing,
        _ => 30.0 * lag1 / (1.0 + lag1 * lag1) + 8.0 * forcing,
    }
}

/// Noise-free bivariate step; `k = 0` is the truth, whose intercepts shift
/// at `break_at`.
fn pseudo_step(k: usize, lag1: &[f64], lag2: &[f64], j: usize, break_at: usize) -> [f64; 2] {
    let regime_a = [0.2 + 0.6 * lag1[0] + 0.1 * lag1[1], 0.5 + 0.4 * lag1[1]];
    let regime_b = [0.8 + 0.6 * lag1[0] + 0.1 * lag1[1], 0.2 + 0.4 * lag1[1]];
    match k {
        0 if j < break_at => regime_a,
        0 => regime_b,
        1 => regime_a,
        2 => regime_b,
        3 => [lag1[0], lag1[1]],
        _ => [0.4 + 0.35 * lag1[0] + 0.35 * lag2[0], 0.3 + 0.3 * lag1[1] + 0.3 * lag2[1]],
    }
}

type StepFn = Box<dyn Fn(usize, &[f64], &[f64], usize) -> Vec<f64>>;

struct Setup {
    model_names: Vec<String>,
    variable_names: Vec<String>,
    step: StepFn,
}

fn setup(spec: &SimSpec) -> Setup {
    let break_at = spec.n_steps / 2;
    match spec.design {
        Design::CompleteAr => Setup {
            model_names: vec!["M1".into(), "M2".into(), "M3".into()],
            variable_names: vec!["y".into()],
            step: Box::new(|k, a, b, _| vec![complete_ar_step(k, a[0], b[0])]),
        },
        Design::NonlinearIncomplete => Setup {
            model_names: (1..=6).map(|k| format!("M{k}")).collect(),
            variable_names: vec!["y".into()],
            step: Box::new(|k, a, b, j| vec![nonlinear_step(k, a[0], b[0], j)]),
        },
        Design::PseudoEmpirical => Setup {
            model_names: vec!["regime_a".into(), "regime_b".into(), "random_walk".into(), "ar2".into()],
            variable_names: vec!["infl".into(), "growth".into()],
            step: Box::new(move |k, a, b, j| pseudo_step(k, a, b, j, break_at).to_vec()),
        },
    }
}

/// Generates the truth path and the candidate panel for any design.
pub fn simulate(spec: &SimSpec) -> Result<(ObservationSeries, PredictorPanel)> {
    spec.validate()?;
    let s = setup(spec);
    let y0 = spec.design.initial();
    let l_n = y0.len();
    let k_n = s.model_names.len();
    let (t_n, h_n, d_n) = (spec.n_steps, spec.horizons, spec.n_draws);

    let mut truth_rng = substream(spec.seed, "truth", 0);
    let mut y: Vec<Vec<f64>> = Vec::with_capacity(t_n);
    for j in 0..t_n {
        let lag1 = if j >= 1 { y[j - 1].clone() } else { y0.clone() };
        let lag2 = if j >= 2 { y[j - 2].clone() } else { y0.clone() };
        let mean = (s.step)(0, &lag1, &lag2, j);
        y.push(mean.iter().map(|m| m + spec.sigma * truth_rng.sample::<f64, _>(StandardNormal)).collect());
    }
    let lagged = |j: isize| if j >= 0 { y[j as usize].clone() } else { y0.clone() };

    // paths[((t * k_n + k) * d_n + d) * h_n + (h - 1)][l]
    let mut paths = Vec::with_capacity(t_n * k_n * d_n * h_n);
    for t in 0..t_n {
        let mut rng = substream(spec.seed, "predictors", t as u64);
        for k in 0..k_n {
            for _ in 0..d_n {
                let (mut lag2, mut lag1) = (lagged(t as isize - 2), lagged(t as isize - 1));
                for h in 0..h_n {
                    let mean = (s.step)(k + 1, &lag1, &lag2, t + h);
                    let next: Vec<f64> = mean
                        .iter()
                        .map(|m| m + spec.sigma * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    lag2 = std::mem::replace(&mut lag1, next.clone());
                    paths.push(next);
                }
            }
        }
    }
    let panel = PredictorPanel::from_fn(s.model_names, s.variable_names.clone(), t_n, h_n, d_n, |t, k, l, h, d| {
        paths[((t * k_n + k) * d_n + d) * h_n + (h - 1)][l]
    })?;
    debug_assert_eq!(panel.n_vars(), l_n);
    Ok((ObservationSeries::new(y, s.variable_names)?, panel))
}

fn require(spec: &SimSpec, design: Design) -> Result<()> {
    if spec.design != design {
        return Err(Error::Config(format!(
            "expected design {}, got {}",
            design.label(),
            spec.design.label()
        )));
    }
    Ok(())
}

/// Three AR models with different unconditional means; the first is the truth.
pub fn gen_complete_ar(spec: &SimSpec) -> Result<(ObservationSeries, PredictorPanel)> {
    require(spec, Design::CompleteAr)?;
    simulate(spec)
}

/// Nonlinear truth with six misspecified candidates.
pub fn gen_nonlinear_incomplete(spec: &SimSpec) -> Result<(ObservationSeries, PredictorPanel)> {
    require(spec, Design::NonlinearIncomplete)?;
    simulate(spec)
}

/// Bivariate panel whose best model switches halfway through the sample.
pub fn gen_pseudo_empirical(spec: &SimSpec) -> Result<(ObservationSeries, PredictorPanel)> {
    require(spec, Design::PseudoEmpirical)?;
    simulate(spec)
}
