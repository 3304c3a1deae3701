//! Domain types shared across the crate.
//!
//! Time is indexed from zero inside the library. Row `t` of a
//! [`PredictorPanel`] holds forecasts issued with information up to
//! observation `t - 1`; horizon `h` (1-based) of that row targets
//! observation `t + h - 1`, so horizon 1 is the ordinary one-step forecast
//! of observation `t`. CSV files use 1-based `t`.

use crate::error::{Error, Result};

/// The observed target path, `T` steps of `L` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    values: Vec<f64>,
    n_vars: usize,
    variable_names: Vec<String>,
}

impl ObservationSeries {
    pub fn new(rows: Vec<Vec<f64>>, variable_names: Vec<String>) -> Result<Self> {
        let n_vars = variable_names.len();
        if n_vars == 0 {
            return Err(Error::InvalidInput("observation series needs at least one variable".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("observation series needs T >= 1".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * n_vars);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n_vars {
                return Err(Error::Dimension(format!(
                    "observation row {t} has {} components, expected {n_vars}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite observation {v} at t={t}")));
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            values,
            n_vars,
            variable_names,
        })
    }

    /// Univariate convenience constructor.
    pub fn univariate(values: Vec<f64>, name: &str) -> Result<Self> {
        Self::new(values.into_iter().map(|v| vec![v]).collect(), vec![name.to_string()])
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.n_vars
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn get(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_vars..(t + 1) * self.n_vars]
    }

    /// Path of a single variable.
    pub fn variable(&self, l: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.get(t)[l]).collect()
    }
}

/// A `K x L` real matrix stored column by column, so its storage order
/// equals the column-major vectorization used for the latent state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMatrix {
    n_models: usize,
    n_vars: usize,
    data: Vec<f64>,
}

impl ModelMatrix {
    pub fn zeros(n_models: usize, n_vars: usize) -> Self {
        Self {
            n_models,
            n_vars,
            data: vec![0.0; n_models * n_vars],
        }
    }

    /// Builds from column-major storage.
    pub fn from_vec(n_models: usize, n_vars: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_models * n_vars {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {n_models}x{n_vars} matrix, got {}",
                n_models * n_vars,
                data.len()
            )));
        }
        Ok(Self {
            n_models,
            n_vars,
            data,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n_vars = columns.len();
        let n_models = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_models) {
            return Err(Error::Dimension("ragged columns".into()));
        }
        Ok(Self {
            n_models,
            n_vars,
            data: columns.concat(),
        })
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[l * self.n_models + k]
    }

    #[inline]
    pub fn set(&mut self, k: usize, l: usize, value: f64) {
        self.data[l * self.n_models + k] = value;
    }

    pub fn column(&self, l: usize) -> &[f64] {
        &self.data[l * self.n_models..(l + 1) * self.n_models]
    }

    pub fn column_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.n_models..(l + 1) * self.n_models]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Combination weights; every column lies on the `K`-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix(ModelMatrix);

/// Tolerance on column sums of weight and diversity matrices.
pub const SIMPLEX_TOL: f64 = 1e-10;

impl WeightMatrix {
    pub fn new(matrix: ModelMatrix) -> Result<Self> {
        for l in 0..matrix.n_vars() {
            let col = matrix.column(l);
            if col.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::InvalidInput(format!("weight column {l} has entries outside [0,1]")));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidInput(format!("weight column {l} sums to {sum}")));
            }
        }
        Ok(Self(matrix))
    }

    /// Skips validation; callers guarantee the simplex invariant.
    pub(crate) fn new_unchecked(matrix: ModelMatrix) -> Self {
        Self(matrix)
    }

    pub fn uniform(n_models: usize, n_vars: usize) -> Self {
        let w = 1.0 / n_models as f64;
        Self(ModelMatrix {
            n_models,
            n_vars,
            data: vec![w; n_models * n_vars],
        })
    }

    /// Same weight vector for every variable.
    pub fn from_model_weights(weights: &[f64], n_vars: usize) -> Result<Self> {
        Self::new(ModelMatrix::from_vec(weights.len(), n_vars, weights.repeat(n_vars))?)
    }

    pub fn matrix(&self) -> &ModelMatrix {
        &self.0
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0.get(k, l)
    }

    pub fn n_models(&self) -> usize {
        self.0.n_models()
    }

    pub fn n_vars(&self) -> usize {
        self.0.n_vars()
    }
}

/// Predictive draws of `K` models for `L` variables over `H` horizons.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorPanel {
    n_steps: usize,
    n_models: usize,
    n_vars: usize,
    horizons: usize,
    n_draws: usize,
    model_names: Vec<String>,
    variable_names: Vec<String>,
    /// Layout `[t][h][l][k][d]`.
    draws: Vec<f64>,
    /// Layout `[t][h][l][k]`, i.e. one column-major `K x L` block per `(t, h)`.
    means: Vec<f64>,
}

impl PredictorPanel {
    /// Builds a panel by evaluating `draw(t, k, l, h, d)` over the dense index
    /// range; `h` is 1-based, all other indices 0-based.
    pub fn from_fn<F>(
        model_names: Vec<String>,
        variable_names: Vec<String>,
        n_steps: usize,
        horizons: usize,
        n_draws: usize,
        mut draw: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize, usize, usize, usize) -> f64,
    {
        let (k_n, l_n) = (model_names.len(), variable_names.len());
        let mut data = Vec::with_capacity(n_steps * horizons * l_n * k_n * n_draws);
        for t in 0..n_steps {
            for h in 1..=horizons {
                for l in 0..l_n {
                    for k in 0..k_n {
                        for d in 0..n_draws {
                            data.push(draw(t, k, l, h, d));
                        }
                    }
                }
            }
        }
        Self::from_raw(model_names, variable_names, n_steps, horizons, n_draws, data)
    }

    /// Builds from storage laid out as `[t][h][l][k][d]`.
    pub fn from_raw(
        model_names: Vec<String>,
        variable_names: Vec<String>,
        n_steps: usize,
        horizons: usize,
        n_draws: usize,
        draws: Vec<f64>,
    ) -> Result<Self> {
        let (n_models, n_vars) = (model_names.len(), variable_names.len());
        if n_models == 0 || n_vars == 0 || n_steps == 0 || horizons == 0 || n_draws == 0 {
            return Err(Error::InvalidInput(
                "panel needs at least one model, variable, step, horizon and draw".into(),
            ));
        }
        let expected = n_steps * horizons * n_vars * n_models * n_draws;
        if draws.len() != expected {
            return Err(Error::Dimension(format!("panel expects {expected} draws, got {}", draws.len())));
        }
        if let Some(i) = draws.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite panel draw at flat index {i}")));
        }
        let means = draws
            .chunks_exact(n_draws)
            .map(|c| c.iter().sum::<f64>() / n_draws as f64)
            .collect();
        Ok(Self {
            n_steps,
            n_models,
            n_vars,
            horizons,
            n_draws,
            model_names,
            variable_names,
            draws,
            means,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    pub fn n_models(&self) -> usize {
        self.n_models
    }
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }
    pub fn horizons(&self) -> usize {
        self.horizons
    }
    pub fn n_draws(&self) -> usize {
        self.n_draws
    }
    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }
    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    #[inline]
    fn cell(&self, t: usize, k: usize, l: usize, h: usize) -> usize {
        (((t * self.horizons + (h - 1)) * self.n_vars + l) * self.n_models) + k
    }

    pub fn check_index(&self, t: usize, h: usize) -> Result<()> {
        if t >= self.n_steps || h == 0 || h > self.horizons {
            return Err(Error::InvalidInput(format!(
                "panel index (t={t}, h={h}) outside 0..{} x 1..={}",
                self.n_steps, self.horizons
            )));
        }
        Ok(())
    }

    /// Draws of model `k` for variable `l` at row `t` and horizon `h`.
    pub fn draws(&self, t: usize, k: usize, l: usize, h: usize) -> &[f64] {
        let c = self.cell(t, k, l, h) * self.n_draws;
        &self.draws[c..c + self.n_draws]
    }

    pub fn mean(&self, t: usize, k: usize, l: usize, h: usize) -> f64 {
        self.means[self.cell(t, k, l, h)]
    }

    /// Column-major `K x L` block of draw means.
    pub fn mean_block(&self, t: usize, h: usize) -> &[f64] {
        let c = self.cell(t, 0, 0, h);
        &self.means[c..c + self.n_models * self.n_vars]
    }

    pub fn mean_matrix(&self, t: usize, h: usize) -> ModelMatrix {
        ModelMatrix {
            n_models: self.n_models,
            n_vars: self.n_vars,
            data: self.mean_block(t, h).to_vec(),
        }
    }

    /// Single draw `d` of every model at `(t, h)` as a `K x L` block.
    pub fn draw_matrix(&self, t: usize, h: usize, d: usize) -> ModelMatrix {
        let mut m = ModelMatrix::zeros(self.n_models, self.n_vars);
        for l in 0..self.n_vars {
            for k in 0..self.n_models {
                m.set(k, l, self.draws(t, k, l, h)[d]);
            }
        }
        m
    }
}

/// Noise scales of the observation and latent equations.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    /// Diagonal of the observation covariance, one standard deviation per variable.
    pub sigma_obs: Vec<f64>,
    /// Standard deviation of the latent weight innovations.
    pub sigma_x: f64,
    /// Standard deviation of the coefficient random walk.
    pub sigma_alpha: f64,
}

impl NoiseConfig {
    /// `allow_zero_propagation` admits `sigma_x = sigma_alpha = 0` for the
    /// deterministic limit.
    pub fn validate(&self, n_vars: usize, allow_zero_propagation: bool) -> Result<()> {
        if self.sigma_obs.len() != n_vars {
            return Err(Error::Dimension(format!(
                "sigma_obs has {} entries for {n_vars} variables",
                self.sigma_obs.len()
            )));
        }
        if self.sigma_obs.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config("sigma_obs entries must be strictly positive".into()));
        }
        for (name, s) in [("sigma_x", self.sigma_x), ("sigma_alpha", self.sigma_alpha)] {
            let ok = if allow_zero_propagation { s >= 0.0 } else { s > 0.0 };
            if !(s.is_finite() && ok) {
                return Err(Error::Config(format!("{name} must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn panel_indexing_matches_from_fn() {
        let panel = PredictorPanel::from_fn(names("M", 3), names("y", 2), 4, 2, 5, |t, k, l, h, d| {
            (t * 10000 + k * 1000 + l * 100 + h * 10 + d) as f64
        })
        .unwrap();
        assert_eq!(panel.draws(2, 1, 1, 2)[3], 21123.0);
        assert_eq!(panel.mean(3, 2, 0, 1), 32012.0);
        let block = panel.mean_block(1, 2);
        assert_eq!(block[5], panel.mean(1, 2, 1, 2));
        assert_eq!(panel.mean_matrix(1, 2).get(2, 1), panel.mean(1, 2, 1, 2));
    }

    #[test]
    fn panel_rejects_non_finite() {
        let err = PredictorPanel::from_fn(names("M", 2), names("y", 1), 2, 1, 1, |t, _, _, _, _| {
            if t == 1 { f64::NAN } else { 0.0 }
        });
        assert!(err.is_err());
    }

    #[test]
    fn observation_rows_validated() {
        assert!(ObservationSeries::new(vec![vec![1.0], vec![1.0, 2.0]], names("y", 1)).is_err());
        assert!(ObservationSeries::new(vec![vec![f64::INFINITY]], names("y", 1)).is_err());
        assert!(ObservationSeries::new(vec![], names("y", 1)).is_err());
        let obs = ObservationSeries::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]], names("y", 2)).unwrap();
        assert_eq!(obs.get(1), &[3.0, 4.0]);
        assert_eq!(obs.variable(1), vec![2.0, 4.0]);
    }

    #[test]
    fn weight_matrix_invariants() {
        assert!(WeightMatrix::new(ModelMatrix::from_columns(&[vec![0.5, 0.6]]).unwrap()).is_err());
        assert!(WeightMatrix::new(ModelMatrix::from_columns(&[vec![1.5, -0.5]]).unwrap()).is_err());
        assert!(WeightMatrix::new(ModelMatrix::from_columns(&[vec![0.25, 0.75]]).unwrap()).is_ok());
    }

    #[test]
    fn noise_validation() {
        let mut cfg = NoiseConfig {
            sigma_obs: vec![1.0],
            sigma_x: 0.0,
            sigma_alpha: 0.0,
        };
        assert!(cfg.validate(1, true).is_ok());
        assert!(cfg.validate(1, false).is_err());
        cfg.sigma_x = 0.1;
        cfg.sigma_alpha = 0.1;
        assert!(cfg.validate(1, false).is_ok());
        cfg.sigma_obs = vec![0.0];
        assert!(matches!(cfg.validate(1, false), Err(Error::Config(_))));
    }
}
