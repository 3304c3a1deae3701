//! Scaled model diversity: how far each model's forecast sits from the
//! others, normalized per variable so each column sums to one.

use crate::error::{Error, Result};
use crate::types::{ModelMatrix, PredictorPanel};

/// `K x L` diversity matrix; each column lies on the simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct DiversityMatrix(ModelMatrix);

impl DiversityMatrix {
    pub fn matrix(&self) -> &ModelMatrix {
        &self.0
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0.get(k, l)
    }

    /// Column-major vectorization, aligned entry by entry with the latent state.
    pub fn into_vec(self) -> Vec<f64> {
        self.0.into_vec()
    }
}

/// Entry `(k, l)` is `sum_i (y_kl - y_il)^2 / sum_{i,j} (y_il - y_jl)^2`.
///
/// A column in which every model agrees has no diversity information and
/// maps to the uniform column `1/K`.
pub fn scaled_diversity(preds: &ModelMatrix) -> Result<DiversityMatrix> {
    let k_n = preds.n_models();
    if k_n < 2 {
        return Err(Error::InvalidInput(format!("diversity needs K >= 2 models, got {k_n}")));
    }
    if let Some(v) = preds.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite forecast {v}")));
    }
    let mut out = ModelMatrix::zeros(k_n, preds.n_vars());
    for l in 0..preds.n_vars() {
        diversity_column(preds.column(l), out.column_mut(l));
    }
    Ok(DiversityMatrix(out))
}

/// Centered form: `sum_i (y_k - y_i)^2 = K c_k^2 + S` and
/// `sum_{i,j} (y_i - y_j)^2 = 2 K S`, where `c` is the centered column and
/// `S = sum c^2`.
fn diversity_column(col: &[f64], out: &mut [f64]) {
    let k_n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / k_n;
    let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
    if ss == 0.0 {
        out.fill(1.0 / k_n);
        return;
    }
    let denom = 2.0 * k_n * ss;
    for (o, v) in out.iter_mut().zip(col) {
        *o = (k_n * (v - mean).powi(2) + ss) / denom;
    }
}

/// Diversity of the horizon-`h` draw means at panel row `t`, vectorized
/// column-major so entry `(k, l)` lines up with latent coordinate `(k, l)`.
pub fn diversity_vector(panel: &PredictorPanel, t: usize, h: usize) -> Result<Vec<f64>> {
    panel.check_index(t, h)?;
    Ok(scaled_diversity(&panel.mean_matrix(t, h))?.into_vec())
}
