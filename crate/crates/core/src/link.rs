//! Softmax link from latent states to weights, and the Gaussian
//! combination likelihood.

use crate::error::{Error, Result};
use crate::types::{ModelMatrix, WeightMatrix};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Softmax of `x`, shifted by its maximum so large inputs cannot overflow.
pub fn softmax_link(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidInput("softmax of an empty vector".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite softmax input {v}")));
    }
    let mut out = vec![0.0; x.len()];
    softmax_into(x, &mut out);
    Ok(out)
}

/// Unchecked softmax into a caller-provided buffer.
#[inline]
pub(crate) fn softmax_into(x: &[f64], out: &mut [f64]) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = (v - max).exp();
        sum += *o;
    }
    let inv = 1.0 / sum;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

/// Log of `sum(exp(values))` with max shift. Empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Maps the column-major latent vector `x` (length `K * L`) to weights by a
/// softmax over each variable's block of `K` coordinates.
pub fn weights_from_latent(x: &[f64], n_models: usize, n_vars: usize) -> Result<WeightMatrix> {
    if x.len() != n_models * n_vars || n_models == 0 {
        return Err(Error::Dimension(format!(
            "latent vector has length {}, expected {n_models}x{n_vars}",
            x.len()
        )));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite latent coordinate {v}")));
    }
    let mut data = vec![0.0; x.len()];
    for (src, dst) in x.chunks_exact(n_models).zip(data.chunks_exact_mut(n_models)) {
        softmax_into(src, dst);
    }
    Ok(WeightMatrix::new_unchecked(ModelMatrix::from_vec(n_models, n_vars, data)?))
}

/// `sum_k w[k,l] * ytilde[k,l]` for each variable `l`.
pub fn combined_point(w: &WeightMatrix, ytilde: &ModelMatrix) -> Result<Vec<f64>> {
    if w.n_models() != ytilde.n_models() || w.n_vars() != ytilde.n_vars() {
        return Err(Error::Dimension(format!(
            "weights are {}x{}, forecasts are {}x{}",
            w.n_models(),
            w.n_vars(),
            ytilde.n_models(),
            ytilde.n_vars()
        )));
    }
    let mut out = vec![0.0; w.n_vars()];
    combine_into(w.matrix().as_slice(), ytilde.as_slice(), w.n_models(), &mut out);
    Ok(out)
}

/// Column-wise dot products of two column-major `K x L` blocks.
#[inline]
pub(crate) fn combine_into(w: &[f64], ytilde: &[f64], n_models: usize, out: &mut [f64]) {
    for ((o, wc), yc) in out
        .iter_mut()
        .zip(w.chunks_exact(n_models))
        .zip(ytilde.chunks_exact(n_models))
    {
        *o = wc.iter().zip(yc).map(|(a, b)| a * b).sum();
    }
}

/// Log density of `N(mean, sd^2)` at `y`.
#[inline]
pub fn gaussian_log_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    -HALF_LN_2PI - sd.ln() - 0.5 * z * z
}

/// Log of the Gaussian combination likelihood with diagonal covariance,
/// normalizing constant included.
pub fn log_likelihood(y: &[f64], w: &WeightMatrix, ytilde: &ModelMatrix, sigma_obs: &[f64]) -> Result<f64> {
    if sigma_obs.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Config("sigma_obs entries must be strictly positive".into()));
    }
    if y.len() != w.n_vars() || sigma_obs.len() != w.n_vars() {
        return Err(Error::Dimension(format!(
            "y has {} components and sigma_obs {}, weights cover {} variables",
            y.len(),
            sigma_obs.len(),
            w.n_vars()
        )));
    }
    let mean = combined_point(w, ytilde)?;
    Ok(y.iter()
        .zip(&mean)
        .zip(sigma_obs)
        .map(|((&y, &m), &s)| gaussian_log_pdf(y, m, s))
        .sum())
}
