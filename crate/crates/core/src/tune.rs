//! Grid search over the initial coefficients `(alpha_1, alpha_2)` with
//! `alpha_0 = 0`, in one stage or as a coarse pass followed by a local
//! refinement.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{self, FilterConfig};
use crate::metrics::crps_or_abs;
use crate::types::{ObservationSeries, PredictorPanel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl AxisSpec {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        AxisSpec { lo, hi, step }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) || self.step <= 0.0 || self.lo >= self.hi {
            return Err(Error::Config(format!(
                "grid axis needs lo < hi and step > 0, got [{}, {}] step {}",
                self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }

    /// `lo, lo + step, ...` up to `hi`, computed by index to avoid drift.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| snap(self.lo + i as f64 * self.step)).collect()
    }
}

/// Rounds to 9 decimals so lattice points from different stages coincide.
fn snap(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: [AxisSpec; 2],
    /// Fine step of the second stage; `None` searches the first lattice only.
    pub stage2_step: Option<f64>,
    /// Half-width of the refinement rectangle, in coarse cells.
    pub stage2_margin: usize,
    /// Explicit refinement rectangle, overriding the margin rule.
    pub stage2_bounds: Option<[(f64, f64); 2]>,
}

impl GridSpec {
    /// Single fine lattice over `[lo, hi]^2`.
    pub fn one_stage(lo: f64, hi: f64, step: f64) -> Self {
        GridSpec {
            axes: [AxisSpec::new(lo, hi, step); 2],
            stage2_step: None,
            stage2_margin: 1,
            stage2_bounds: None,
        }
    }

    /// Coarse lattice followed by refinement around the incumbent.
    pub fn two_stage(lo: f64, hi: f64, coarse: f64, fine: f64) -> Self {
        GridSpec {
            stage2_step: Some(fine),
            ..Self::one_stage(lo, hi, coarse)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axes.iter().try_for_each(AxisSpec::validate)?;
        if let Some(s) = self.stage2_step {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Config(format!("stage-2 step must be positive, got {s}")));
            }
        }
        if let Some(b) = self.stage2_bounds {
            if b.iter().any(|(lo, hi)| !(lo < hi)) {
                return Err(Error::Config("stage-2 bounds need lo < hi".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfacePoint {
    pub alpha: [f64; 2],
    pub value: f64,
    pub stage: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub best: [f64; 2],
    pub best_value: f64,
    /// Every evaluated point exactly once, in lexicographic order.
    pub surface: Vec<SurfacePoint>,
    pub failures: Vec<([f64; 2], String)>,
}

/// Lower value first, then smaller `|a_1| + |a_2|`, then lexicographic.
fn rank(a: &SurfacePoint, b: &SurfacePoint) -> Ordering {
    let l1 = |p: &SurfacePoint| p.alpha[0].abs() + p.alpha[1].abs();
    a.value
        .total_cmp(&b.value)
        .then(l1(a).total_cmp(&l1(b)))
        .then(a.alpha[0].total_cmp(&b.alpha[0]))
        .then(a.alpha[1].total_cmp(&b.alpha[1]))
}

type Key = (i64, i64);

fn key(p: [f64; 2]) -> Key {
    ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64)
}

fn evaluate_points<F>(
    points: Vec<[f64; 2]>,
    stage: u8,
    objective: &F,
    seen: &mut BTreeMap<Key, SurfacePoint>,
    failures: &mut Vec<([f64; 2], String)>,
) where
    F: Fn([f64; 2]) -> Result<f64> + Sync,
{
    let fresh: Vec<[f64; 2]> = points.into_iter().filter(|p| !seen.contains_key(&key(*p))).collect();
    let values: Vec<Result<f64>> = fresh.par_iter().map(|p| objective(*p)).collect();
    for (p, v) in fresh.into_iter().zip(values) {
        let value = match v {
            Ok(v) if !v.is_nan() => v,
            Ok(_) => {
                failures.push((p, "objective returned NaN".into()));
                f64::INFINITY
            }
            Err(e) => {
                failures.push((p, e.to_string()));
                f64::INFINITY
            }
        };
        seen.insert(key(p), SurfacePoint { alpha: p, value, stage });
    }
}

fn lattice(a: &AxisSpec, b: &AxisSpec) -> Vec<[f64; 2]> {
    let ys = b.points();
    a.points().into_iter().flat_map(|x| ys.iter().map(move |&y| [x, y])).collect()
}

fn best_of(seen: &BTreeMap<Key, SurfacePoint>) -> &SurfacePoint {
    seen.values().min_by(|a, b| rank(a, b)).expect("grid has at least one point")
}

/// Minimizes `objective` over the lattice described by `spec`. Points where
/// the objective fails score `+inf` and are listed in `failures`.
pub fn grid_search<F>(spec: &GridSpec, objective: F) -> Result<GridResult>
where
    F: Fn([f64; 2]) -> Result<f64> + Sync,
{
    spec.validate()?;
    let mut seen = BTreeMap::new();
    let mut failures = Vec::new();
    evaluate_points(lattice(&spec.axes[0], &spec.axes[1]), 1, &objective, &mut seen, &mut failures);

    if let Some(fine) = spec.stage2_step {
        let inc = best_of(&seen).alpha;
        let bounds = spec.stage2_bounds.unwrap_or_else(|| {
            let around = |i: usize| {
                let ax = &spec.axes[i];
                let half = spec.stage2_margin as f64 * ax.step;
                ((inc[i] - half).max(ax.lo), (inc[i] + half).min(ax.hi))
            };
            [around(0), around(1)]
        });
        let axis = |(lo, hi): (f64, f64)| AxisSpec::new(lo, hi, fine);
        if bounds.iter().all(|(lo, hi)| lo < hi) {
            evaluate_points(lattice(&axis(bounds[0]), &axis(bounds[1])), 2, &objective, &mut seen, &mut failures);
        }
    }

    let best = best_of(&seen).clone();
    failures.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    Ok(GridResult {
        best: best.alpha,
        best_value: best.value,
        surface: seen.into_values().collect(),
        failures,
    })
}

/// Settings that make each grid evaluation cheaper than a final run.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub particle_divisor: usize,
    pub eval_draws: usize,
    /// 0-based targets scored, both ends inclusive.
    pub eval_start: usize,
    pub eval_end: usize,
    /// Variable whose CRPS is scored; `None` averages all variables.
    pub variable: Option<usize>,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            particle_divisor: 4,
            eval_draws: 10,
            eval_start: 0,
            eval_end: usize::MAX,
            variable: None,
        }
    }
}

/// Mean one-step CRPS of a reduced-cost filter run started at
/// `alpha0 = (0, a_1, a_2)`, with the same seed at every point.
pub fn filter_crps_objective<'a>(
    obs: &'a ObservationSeries,
    panel: &'a PredictorPanel,
    base: &'a FilterConfig,
    spec: &'a ObjectiveSpec,
) -> impl Fn([f64; 2]) -> Result<f64> + Sync + 'a {
    move |a: [f64; 2]| {
        let mut cfg = base.clone();
        cfg.alpha0 = [0.0, a[0], a[1]];
        cfg.particles = (base.particles / spec.particle_divisor.max(1)).max(1);
        cfg.predictive_draws = spec.eval_draws;
        cfg.summaries = false;
        let out = filter::run(obs, panel, &cfg)?;
        let vars: Vec<usize> = match spec.variable {
            Some(l) if l < obs.n_vars() => vec![l],
            Some(l) => return Err(Error::Config(format!("objective variable {l} out of range"))),
            None => (0..obs.n_vars()).collect(),
        };
        let mut total = 0.0;
        let mut count = 0usize;
        for row in &out.rows {
            let f = &row.forecasts[0];
            if f.target < spec.eval_start || f.target > spec.eval_end || f.target >= obs.len() {
                continue;
            }
            for &l in &vars {
                total += crps_or_abs(&f.draws[l], obs.get(f.target)[l]);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::Config("grid objective has no targets in its window".into()));
        }
        Ok(total / count as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_objective_tie_break() {
        let r = grid_search(&GridSpec::one_stage(-10.0, 10.0, 2.0), |_| Ok(1.0)).unwrap();
        assert_eq!(r.best, [0.0, 0.0]);
        assert_eq!(r.surface.len(), 121);
        let r = grid_search(&GridSpec::one_stage(-9.0, 9.0, 2.0), |_| Ok(1.0)).unwrap();
        assert_eq!(r.best, [-1.0, -1.0]);
    }

    #[test]
    fn quadratic_finds_nearest_lattice_point() {
        let f = |a: [f64; 2]| Ok((a[0] - 3.2).powi(2) + (a[1] - 4.1).powi(2));
        let r = grid_search(&GridSpec::one_stage(-10.0, 10.0, 0.5), f).unwrap();
        assert_eq!(r.best, [3.0, 4.0]);
        let r = grid_search(&GridSpec::two_stage(-10.0, 10.0, 2.0, 0.5), f).unwrap();
        assert_eq!(r.best, [3.0, 4.0]);
        assert!(r.surface.iter().any(|p| p.stage == 2));
    }

    #[test]
    fn refinement_never_loses_incumbent() {
        let f = |a: [f64; 2]| Ok(((a[0] * 1.7).sin() + (a[1] * 0.9).cos()).abs());
        let spec = GridSpec::two_stage(-10.0, 10.0, 2.0, 0.5);
        let r = grid_search(&spec, f).unwrap();
        let stage1_min = r.surface.iter().filter(|p| p.stage == 1).map(|p| p.value).fold(f64::INFINITY, f64::min);
        assert!(r.best_value <= stage1_min);
        let mut keys: Vec<Key> = r.surface.iter().map(|p| key(p.alpha)).collect();
        let n = keys.len();
        keys.dedup();
        assert_eq!(keys.len(), n);
    }

    #[test]
    fn failures_score_infinity() {
        let f = |a: [f64; 2]| if a[0] < 0.0 { Err(Error::Degeneracy { t: 1 }) } else { Ok(a[0] + a[1] + 30.0) };
        let r = grid_search(&GridSpec::one_stage(-2.0, 2.0, 1.0), f).unwrap();
        assert_eq!(r.failures.len(), 10);
        assert_eq!(r.best, [0.0, -2.0]);
        assert!(r.surface.iter().filter(|p| p.alpha[0] < 0.0).all(|p| p.value == f64::INFINITY));
        assert!(grid_search(&GridSpec::one_stage(1.0, 1.0, 1.0), f).is_err());
    }

    #[test]
    fn explicit_stage2_bounds() {
        let mut spec = GridSpec::two_stage(-10.0, 10.0, 2.0, 0.5);
        spec.stage2_bounds = Some([(1.0, 8.0), (3.0, 10.0)]);
        let r = grid_search(&spec, |a| Ok((a[0] - 7.0).abs() + (a[1] - 7.0).abs())).unwrap();
        assert_eq!(r.best, [7.0, 7.0]);
        let fine = r.surface.iter().filter(|p| p.stage == 2).count();
        // 15 x 15 fine points minus the coarse points already evaluated.
        assert_eq!(fine, 225 - 4 * 4);
    }
}
