//! Experiment configuration, read from a TOML file with one section per
//! method. Relative paths resolve against the file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::latent::LatentMode;
use crate::tune::{AxisSpec, GridSpec, ObjectiveSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Equal,
    Bma,
    BmaRoll,
    Tvw,
    AdaptiveTvw,
    Dtvw,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Equal,
        Method::Bma,
        Method::BmaRoll,
        Method::Tvw,
        Method::AdaptiveTvw,
        Method::Dtvw,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Equal => "equal",
            Method::Bma => "bma",
            Method::BmaRoll => "bma_roll",
            Method::Tvw => "tvw",
            Method::AdaptiveTvw => "adaptive_tvw",
            Method::Dtvw => "dtvw",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }

    pub fn latent_mode(self) -> Option<LatentMode> {
        match self {
            Method::Tvw => Some(LatentMode::Tvw),
            Method::AdaptiveTvw => Some(LatentMode::AdaptiveTvw),
            Method::Dtvw => Some(LatentMode::Dtvw),
            _ => None,
        }
    }
}

/// Settings shared by the particle-filter methods.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub particles: usize,
    pub ess_threshold: f64,
    pub sigma_x: f64,
    pub sigma_alpha: f64,
    /// Observation noise per variable; estimated from the data when absent.
    pub sigma_obs: Option<Vec<f64>>,
    pub x0_spread: f64,
    pub div_horizon: usize,
    pub predictive_draws: usize,
    pub allow_zero_noise: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        let f = FilterConfig::default();
        FilterSection {
            particles: f.particles,
            ess_threshold: f.ess_threshold,
            sigma_x: f.sigma_x,
            sigma_alpha: f.sigma_alpha,
            sigma_obs: f.sigma_obs,
            x0_spread: f.x0_spread,
            div_horizon: f.div_horizon,
            predictive_draws: f.predictive_draws,
            allow_zero_noise: f.allow_zero_noise,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvwSection {
    pub sigma_x: Option<f64>,
}

/// Per-method overrides for the coefficient-learning filters.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSection {
    pub alpha0: Option<[f64; 3]>,
    pub sigma_x: Option<f64>,
    pub sigma_alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BmaSection {
    pub predictive_draws: usize,
}

impl Default for BmaSection {
    fn default() -> Self {
        BmaSection { predictive_draws: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BmaRollSection {
    pub window: usize,
    pub predictive_draws: usize,
}

impl Default for BmaRollSection {
    fn default() -> Self {
        BmaRollSection {
            window: 24,
            predictive_draws: 1000,
        }
    }
}

/// Grid over `(alpha_1, alpha_2)` for the diversity-driven filter.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub lo: f64,
    pub hi: f64,
    pub coarse_step: f64,
    /// Refinement step; `0` searches the coarse lattice only.
    pub fine_step: f64,
    pub margin: usize,
    pub stage2_alpha1: Option<[f64; 2]>,
    pub stage2_alpha2: Option<[f64; 2]>,
    pub particle_divisor: usize,
    pub eval_draws: usize,
    /// Variable whose CRPS is minimized; all variables when absent.
    pub variable: Option<String>,
    pub surface: String,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            lo: -10.0,
            hi: 10.0,
            coarse_step: 2.0,
            fine_step: 0.5,
            margin: 1,
            stage2_alpha1: None,
            stage2_alpha2: None,
            particle_divisor: 4,
            eval_draws: 10,
            variable: None,
            surface: "surface.csv".into(),
        }
    }
}

impl GridSection {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let stage2_bounds = match (self.stage2_alpha1, self.stage2_alpha2) {
            (Some(a), Some(b)) => Some([(a[0], a[1]), (b[0], b[1])]),
            (None, None) => None,
            _ => return Err(Error::Config("give both stage2_alpha1 and stage2_alpha2 or neither".into())),
        };
        let spec = GridSpec {
            axes: [AxisSpec::new(self.lo, self.hi, self.coarse_step); 2],
            stage2_step: (self.fine_step > 0.0).then_some(self.fine_step),
            stage2_margin: self.margin,
            stage2_bounds,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Objective settings over 0-based evaluation targets.
    pub fn objective_spec(&self, variables: &[String], eval_start: usize, eval_end: usize) -> Result<ObjectiveSpec> {
        let variable = match &self.variable {
            None => None,
            Some(v) => Some(
                variables
                    .iter()
                    .position(|n| n == v)
                    .ok_or_else(|| Error::Config(format!("grid variable `{v}` not in the data")))?,
            ),
        };
        Ok(ObjectiveSpec {
            particle_divisor: self.particle_divisor.max(1),
            eval_draws: self.eval_draws.max(1),
            eval_start,
            eval_end,
            variable,
        })
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_true() -> bool {
    true
}

fn default_band() -> f64 {
    0.95
}

fn default_fallback_sd() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub observations: PathBuf,
    pub panel: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Score each candidate model alongside the combiners.
    #[serde(default = "default_true")]
    pub include_models: bool,
    /// Horizons to score; every panel horizon when absent.
    #[serde(default)]
    pub horizons: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    /// First and last evaluated target, 1-based and inclusive.
    #[serde(default)]
    pub eval_start: Option<usize>,
    #[serde(default)]
    pub eval_end: Option<usize>,
    #[serde(default)]
    pub dm_baseline: Option<String>,
    /// Baseline of the cumulative log-score series; defaults to `dm_baseline`.
    #[serde(default)]
    pub cumls_baseline: Option<String>,
    #[serde(default = "default_band")]
    pub band_level: f64,
    /// Predictive sd assumed for a model that supplies a single draw.
    #[serde(default = "default_fallback_sd")]
    pub fallback_sd: f64,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub tvw: TvwSection,
    #[serde(default)]
    pub adaptive_tvw: AdaptiveSection,
    #[serde(default)]
    pub dtvw: AdaptiveSection,
    #[serde(default)]
    pub bma: BmaSection,
    #[serde(default)]
    pub bma_roll: BmaRollSection,
    #[serde(default)]
    pub gridsearch: GridSection,
}

impl RunConfig {
    /// Minimal configuration with every default in place.
    pub fn new(observations: impl Into<PathBuf>, panel: impl Into<PathBuf>) -> Self {
        RunConfig {
            observations: observations.into(),
            panel: panel.into(),
            output: default_output(),
            methods: default_methods(),
            include_models: true,
            horizons: None,
            seed: 0,
            eval_start: None,
            eval_end: None,
            dm_baseline: None,
            cumls_baseline: None,
            band_level: default_band(),
            fallback_sd: default_fallback_sd(),
            filter: FilterSection::default(),
            tvw: TvwSection::default(),
            adaptive_tvw: AdaptiveSection::default(),
            dtvw: AdaptiveSection::default(),
            bma: BmaSection::default(),
            bma_roll: BmaRollSection::default(),
            gridsearch: GridSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Validation { path: path.into(), msg },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.observations, &mut cfg.panel, &mut cfg.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() && !self.include_models {
            return Err(Error::Config("nothing to run: no methods and models excluded".into()));
        }
        if self.bma_roll.window == 0 {
            return Err(Error::Config("bma_roll window must be at least 1".into()));
        }
        if let Some(hs) = &self.horizons {
            if hs.is_empty() || hs.contains(&0) {
                return Err(Error::Config("horizons must be a non-empty list of positive integers".into()));
            }
        }
        if self.eval_start == Some(0) || self.eval_end == Some(0) {
            return Err(Error::Config("eval_start and eval_end are 1-based".into()));
        }
        if let (Some(a), Some(b)) = (self.eval_start, self.eval_end) {
            if a > b {
                return Err(Error::Config(format!("eval_start {a} exceeds eval_end {b}")));
            }
        }
        if !(self.band_level > 0.0 && self.band_level < 1.0) {
            return Err(Error::Config(format!("band_level must lie in (0,1), got {}", self.band_level)));
        }
        if !(self.fallback_sd > 0.0 && self.fallback_sd.is_finite()) {
            return Err(Error::Config("fallback_sd must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(m) = self.methods.iter().find(|m| !seen.insert(**m)) {
            return Err(Error::Config(format!("method `{}` listed twice", m.label())));
        }
        Ok(())
    }

    /// Filter settings for one of the particle-filter methods.
    pub fn filter_config(&self, mode: LatentMode) -> FilterConfig {
        let f = &self.filter;
        let mut cfg = FilterConfig {
            particles: f.particles,
            ess_threshold: f.ess_threshold,
            sigma_x: f.sigma_x,
            sigma_alpha: f.sigma_alpha,
            sigma_obs: f.sigma_obs.clone(),
            x0_spread: f.x0_spread,
            div_horizon: f.div_horizon,
            predictive_draws: f.predictive_draws,
            band_level: self.band_level,
            allow_zero_noise: f.allow_zero_noise,
            seed: self.seed,
            ..FilterConfig::with_mode(mode)
        };
        let section = match mode {
            LatentMode::Tvw => {
                if let Some(s) = self.tvw.sigma_x {
                    cfg.sigma_x = s;
                }
                return cfg;
            }
            LatentMode::AdaptiveTvw => &self.adaptive_tvw,
            LatentMode::Dtvw => &self.dtvw,
        };
        if let Some(a) = section.alpha0 {
            cfg.alpha0 = a;
        }
        if let Some(s) = section.sigma_x {
            cfg.sigma_x = s;
        }
        if let Some(s) = section.sigma_alpha {
            cfg.sigma_alpha = s;
        }
        cfg
    }
}
