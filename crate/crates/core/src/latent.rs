//! Latent state dynamics.
//!
//! A particle carries the latent weight state `x` (column-major `K x L`) and
//! a coefficient state `alpha`. The regression coefficients are
//! `theta_i = 2 * (logistic(alpha_i) - 1/2)` and the weight state moves as
//!
//! ```text
//! alpha' = alpha + e2
//! x'     = theta0' * 1 + theta1' * x + theta2' * div + e1
//! ```
//!
//! where `div` is the scaled diversity vector. The random-walk weights are
//! the special case `theta = (0, 1, 0)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Regression coefficients in `(-1, 1)^3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaVector {
    pub intercept: f64,
    pub persistence: f64,
    pub diversity: f64,
}

impl ThetaVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.intercept, self.persistence, self.diversity]
    }
}

/// `2 * (1 / (1 + e^-a) - 1/2)`, evaluated as `tanh(a / 2)`.
#[inline]
pub fn theta_component(alpha: f64) -> f64 {
    (0.5 * alpha).tanh()
}

pub fn theta_from_alpha(alpha: [f64; 3]) -> ThetaVector {
    ThetaVector {
        intercept: theta_component(alpha[0]),
        persistence: theta_component(alpha[1]),
        diversity: theta_component(alpha[2]),
    }
}

/// Which latent dynamics a filter runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LatentMode {
    /// Random-walk weights; `alpha` is never propagated.
    Tvw,
    /// Learns intercept and persistence; the diversity term is excluded and
    /// `alpha[2]` stays at its initial value.
    AdaptiveTvw,
    /// Learns all three coefficients.
    Dtvw,
}

impl LatentMode {
    pub fn uses_diversity(self) -> bool {
        matches!(self, LatentMode::Dtvw)
    }

    pub fn label(self) -> &'static str {
        match self {
            LatentMode::Tvw => "tvw",
            LatentMode::AdaptiveTvw => "adaptive_tvw",
            LatentMode::Dtvw => "dtvw",
        }
    }
}

/// One weighted sample of the latent state.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentParticle {
    pub x: Vec<f64>,
    pub alpha: [f64; 3],
    pub omega: f64,
}

/// Moves `p` one step in place. `div` may be empty unless `mode` uses diversity.
pub(crate) fn propagate_in_place<R: Rng + ?Sized>(
    p: &mut LatentParticle,
    div: &[f64],
    mode: LatentMode,
    sigma_x: f64,
    sigma_alpha: f64,
    rng: &mut R,
) {
    match mode {
        LatentMode::Tvw => {
            for xi in p.x.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *xi += sigma_x * e;
            }
        }
        LatentMode::AdaptiveTvw | LatentMode::Dtvw => {
            let learned = if mode == LatentMode::Dtvw { 3 } else { 2 };
            for a in p.alpha.iter_mut().take(learned) {
                let e: f64 = rng.sample(StandardNormal);
                *a += sigma_alpha * e;
            }
            let theta = theta_from_alpha(p.alpha);
            if mode == LatentMode::Dtvw {
                for (xi, d) in p.x.iter_mut().zip(div) {
                    let e: f64 = rng.sample(StandardNormal);
                    *xi = theta.intercept + theta.persistence * *xi + theta.diversity * d + sigma_x * e;
                }
            } else {
                for xi in p.x.iter_mut() {
                    let e: f64 = rng.sample(StandardNormal);
                    *xi = theta.intercept + theta.persistence * *xi + sigma_x * e;
                }
            }
        }
    }
}

/// Propagates a particle through the latent dynamics. The importance weight
/// is carried over unchanged.
pub fn propagate_particle<R: Rng + ?Sized>(
    p: &LatentParticle,
    div: &[f64],
    mode: LatentMode,
    sigma_x: f64,
    sigma_alpha: f64,
    rng: &mut R,
) -> Result<LatentParticle> {
    if mode.uses_diversity() && div.len() != p.x.len() {
        return Err(Error::Dimension(format!(
            "diversity vector has length {}, latent state {}",
            div.len(),
            p.x.len()
        )));
    }
    if !(sigma_x >= 0.0 && sigma_alpha >= 0.0) {
        return Err(Error::Config("propagation noise must be nonnegative".into()));
    }
    let mut next = p.clone();
    propagate_in_place(&mut next, div, mode, sigma_x, sigma_alpha, rng);
    Ok(next)
}

/// `n` particles with `x ~ N(0, x0_spread^2 I)`, `alpha = alpha0` and equal weights.
pub fn init_particles<R: Rng + ?Sized>(
    n: usize,
    n_models: usize,
    n_vars: usize,
    alpha0: [f64; 3],
    x0_spread: f64,
    rng: &mut R,
) -> Result<Vec<LatentParticle>> {
    if n == 0 {
        return Err(Error::InvalidInput("particle count must be at least 1".into()));
    }
    if !(x0_spread >= 0.0 && x0_spread.is_finite()) {
        return Err(Error::Config(format!("x0_spread must be nonnegative, got {x0_spread}")));
    }
    if alpha0.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidInput("alpha0 must be finite".into()));
    }
    let omega = 1.0 / n as f64;
    Ok((0..n)
        .map(|_| {
            let x = (0..n_models * n_vars)
                .map(|_| {
                    if x0_spread == 0.0 {
                        0.0
                    } else {
                        x0_spread * rng.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect();
            LatentParticle { x, alpha: alpha0, omega }
        })
        .collect())
}
