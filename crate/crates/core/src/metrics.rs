//! Forecast scoring and Diebold-Mariano comparisons.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::combine::{CombinerResult, HorizonForecast, MethodKind};
use crate::error::{Error, Result};
use crate::types::ObservationSeries;

pub fn rmsfe(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    if actuals.len() != forecasts.len() || actuals.is_empty() {
        return Err(Error::Dimension(format!(
            "rmsfe needs equal non-empty lengths, got {} and {}",
            actuals.len(),
            forecasts.len()
        )));
    }
    let mse = actuals.iter().zip(forecasts).map(|(a, f)| (a - f).powi(2)).sum::<f64>() / actuals.len() as f64;
    Ok(mse.sqrt())
}

/// Negative mean log predictive density; lower is better.
pub fn log_score(log_predictives: &[f64]) -> Result<f64> {
    if log_predictives.is_empty() {
        return Err(Error::InvalidInput("log score of an empty series".into()));
    }
    if let Some(v) = log_predictives.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite log predictive {v}")));
    }
    Ok(-log_predictives.iter().sum::<f64>() / log_predictives.len() as f64)
}

/// `E|X - y| - E|X - X'| / 2` over the empirical draw distribution, with the
/// pair term taken over all ordered pairs and evaluated after sorting.
pub fn crps_from_draws(draws: &[f64], y: f64) -> Result<f64> {
    if draws.len() < 2 {
        return Err(Error::InvalidInput(format!("CRPS needs at least 2 draws, got {}", draws.len())));
    }
    if !y.is_finite() || draws.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("CRPS of non-finite values".into()));
    }
    Ok(crps_unchecked(draws, y))
}

fn crps_unchecked(draws: &[f64], y: f64) -> f64 {
    let n = draws.len() as f64;
    let mut sorted: Vec<f64> = draws.iter().map(|d| d - y).collect();
    let abs_err = sorted.iter().map(|d| d.abs()).sum::<f64>() / n;
    sorted.sort_by(f64::total_cmp);
    // sum_{i,j} |x_i - x_j| = 2 sum_i (2i - D + 1) x_(i)
    let spread: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - n + 1.0) * x)
        .sum();
    (abs_err - spread / (n * n)).max(0.0)
}

/// CRPS that degrades to absolute error for a single draw.
pub fn crps_or_abs(draws: &[f64], y: f64) -> f64 {
    match draws {
        [] => f64::NAN,
        [x] => (x - y).abs(),
        _ => crps_unchecked(draws, y),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DmResult {
    pub statistic: f64,
    pub p_value: f64,
    /// The loss differential had zero variance.
    pub degenerate: bool,
}

/// Diebold-Mariano test of equal accuracy. Positive statistics mean `a`
/// has the larger loss. Bartlett HAC variance with `h - 1` lags, the
/// Harvey-Leybourne-Newbold correction, and Student-t(`T - 1`) p-values.
pub fn dm_test(loss_a: &[f64], loss_b: &[f64], h: usize) -> Result<DmResult> {
    let n = loss_a.len();
    if n != loss_b.len() || n < 10 {
        return Err(Error::Dimension(format!(
            "DM test needs equal lengths of at least 10, got {} and {}",
            n,
            loss_b.len()
        )));
    }
    if h == 0 || h >= n {
        return Err(Error::InvalidInput(format!("DM horizon {h} invalid for {n} losses")));
    }
    if loss_a.iter().chain(loss_b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("DM losses must be finite".into()));
    }
    let d: Vec<f64> = loss_a.iter().zip(loss_b).map(|(a, b)| a - b).collect();
    let tf = n as f64;
    let mean = d.iter().sum::<f64>() / tf;
    let autocov = |j: usize| (j..n).map(|t| (d[t] - mean) * (d[t - j] - mean)).sum::<f64>() / tf;
    let gamma0 = autocov(0);
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if gamma0 <= (16.0 * f64::EPSILON * scale).powi(2) {
        return Ok(DmResult {
            statistic: 0.0,
            p_value: 1.0,
            degenerate: true,
        });
    }
    let mut var = gamma0;
    for j in 1..h {
        var += 2.0 * (1.0 - j as f64 / h as f64) * autocov(j);
    }
    if var <= 0.0 {
        var = gamma0;
    }
    let hf = h as f64;
    let hln = ((tf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / tf) / tf).sqrt();
    let statistic = hln * mean / (var / tf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, tf - 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let p_value = (2.0 * (1.0 - dist.cdf(statistic.abs()))).clamp(0.0, 1.0);
    Ok(DmResult {
        statistic,
        p_value,
        degenerate: false,
    })
}

/// Label of the cross-variable average row in multivariate reports.
pub const AVERAGE_LABEL: &str = "average";

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub method: String,
    pub kind: MethodKind,
    pub horizon: usize,
    pub variable: String,
    pub n: usize,
    pub rmsfe: f64,
    pub ls: f64,
    pub crps: f64,
    /// Joint log score across variables; filled on the average row only.
    pub ls_joint: Option<f64>,
    pub dm: Option<DmAnnotation>,
}

/// DM comparisons of a row's method against the baseline, one per loss.
#[derive(Clone, Debug, PartialEq)]
pub struct DmAnnotation {
    pub baseline: String,
    pub squared_error: DmResult,
    pub log_score: DmResult,
    pub crps: DmResult,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreReport {
    pub rows: Vec<ScoreRow>,
}

impl ScoreReport {
    pub fn find(&self, method: &str, horizon: usize, variable: &str) -> Option<&ScoreRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.horizon == horizon && r.variable == variable)
    }
}

/// Forecasts of one method, borrowed from wherever they were produced.
pub struct MethodForecasts<'a> {
    pub method: &'a str,
    pub kind: MethodKind,
    pub forecasts: Vec<&'a HorizonForecast>,
}

impl<'a> From<&'a CombinerResult> for MethodForecasts<'a> {
    fn from(r: &'a CombinerResult) -> Self {
        MethodForecasts {
            method: &r.method,
            kind: r.kind,
            forecasts: r.rows.iter().flat_map(|row| &row.forecasts).collect(),
        }
    }
}

/// Evaluation window over 0-based target indices, both ends inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalWindow {
    pub start: usize,
    pub end: usize,
}

struct Losses {
    sq: Vec<Vec<f64>>,
    ls: Vec<Vec<f64>>,
    crps: Vec<Vec<f64>>,
    joint: Vec<f64>,
    targets: Vec<usize>,
}

fn collect_losses(m: &MethodForecasts, obs: &ObservationSeries, h: usize, window: EvalWindow) -> Result<Losses> {
    let l_n = obs.n_vars();
    let mut out = Losses {
        sq: vec![Vec::new(); l_n],
        ls: vec![Vec::new(); l_n],
        crps: vec![Vec::new(); l_n],
        joint: Vec::new(),
        targets: Vec::new(),
    };
    let mut fcs: Vec<&HorizonForecast> = m
        .forecasts
        .iter()
        .copied()
        .filter(|f| f.horizon == h && f.target >= window.start && f.target <= window.end && f.target < obs.len())
        .collect();
    fcs.sort_by_key(|f| f.target);
    for f in fcs {
        let y = obs.get(f.target);
        let marginal = f.log_predictive_marginal.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!("{} has no log predictive for target {}", m.method, f.target + 1))
        })?;
        for l in 0..l_n {
            out.sq[l].push((y[l] - f.point[l]).powi(2));
            out.ls[l].push(-marginal[l]);
            out.crps[l].push(crps_or_abs(&f.draws[l], y[l]));
        }
        out.joint.push(-f.log_predictive.unwrap_or_else(|| marginal.iter().sum()));
        out.targets.push(f.target);
    }
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn column_average(per_var: &[Vec<f64>]) -> Vec<f64> {
    (0..per_var[0].len())
        .map(|t| per_var.iter().map(|v| v[t]).sum::<f64>() / per_var.len() as f64)
        .collect()
}

/// Scores every method at every horizon over targets in `window`, per
/// variable, plus an average row when there are several variables. With a
/// baseline, each row carries DM tests against the baseline's losses.
pub fn evaluate(
    methods: &[MethodForecasts],
    obs: &ObservationSeries,
    horizons: &[usize],
    window: EvalWindow,
    baseline: Option<&str>,
) -> Result<ScoreReport> {
    if let Some(b) = baseline {
        if !methods.iter().any(|m| m.method == b) {
            return Err(Error::Config(format!("DM baseline {b} is not among the scored methods")));
        }
    }
    let names = obs.variable_names();
    let l_n = obs.n_vars();
    let mut rows = Vec::new();
    for &h in horizons {
        let losses: Vec<Losses> = methods
            .iter()
            .map(|m| collect_losses(m, obs, h, window))
            .collect::<Result<_>>()?;
        let base = baseline.map(|b| {
            let i = methods.iter().position(|m| m.method == b).unwrap_or(0);
            (b, &losses[i])
        });
        for (m, loss) in methods.iter().zip(&losses) {
            let n = loss.targets.len();
            if n == 0 {
                return Err(Error::InvalidInput(format!(
                    "no scored targets for {} at horizon {h} in the evaluation window",
                    m.method
                )));
            }
            let dm = |sq: &[f64], ls: &[f64], crps: &[f64], pick: &dyn Fn(&Losses) -> [Vec<f64>; 3]| {
                base.and_then(|(b, bl)| {
                    if m.method == b || bl.targets != loss.targets || n < 10 || h >= n {
                        return None;
                    }
                    let [bsq, bls, bcrps] = pick(bl);
                    Some(DmAnnotation {
                        baseline: b.to_string(),
                        squared_error: dm_test(sq, &bsq, h).ok()?,
                        log_score: dm_test(ls, &bls, h).ok()?,
                        crps: dm_test(crps, &bcrps, h).ok()?,
                    })
                })
            };
            for l in 0..l_n {
                rows.push(ScoreRow {
                    method: m.method.to_string(),
                    kind: m.kind,
                    horizon: h,
                    variable: names[l].clone(),
                    n,
                    rmsfe: mean(&loss.sq[l]).sqrt(),
                    ls: mean(&loss.ls[l]),
                    crps: mean(&loss.crps[l]),
                    ls_joint: None,
                    dm: dm(&loss.sq[l], &loss.ls[l], &loss.crps[l], &|bl: &Losses| {
                        [bl.sq[l].clone(), bl.ls[l].clone(), bl.crps[l].clone()]
                    }),
                });
            }
            if l_n > 1 {
                let per_var = &rows[rows.len() - l_n..];
                let avg = |f: fn(&ScoreRow) -> f64| per_var.iter().map(f).sum::<f64>() / l_n as f64;
                let (rmsfe, ls, crps) = (avg(|r| r.rmsfe), avg(|r| r.ls), avg(|r| r.crps));
                let (sq, lsv, cr) = (column_average(&loss.sq), column_average(&loss.ls), column_average(&loss.crps));
                let dm = dm(&sq, &lsv, &cr, &|bl: &Losses| {
                    [column_average(&bl.sq), column_average(&bl.ls), column_average(&bl.crps)]
                });
                rows.push(ScoreRow {
                    method: m.method.to_string(),
                    kind: m.kind,
                    horizon: h,
                    variable: AVERAGE_LABEL.into(),
                    n,
                    rmsfe,
                    ls,
                    crps,
                    ls_joint: Some(mean(&loss.joint)),
                    dm,
                });
            }
        }
    }
    Ok(ScoreReport { rows })
}
