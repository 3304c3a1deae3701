//! Forecast combination with time-varying weights driven by the diversity
//! of the candidate models' forecasts.
//!
//! The weights live on the simplex through a softmax of a latent state that
//! a particle filter tracks. Alongside the diversity-driven filter the crate
//! provides random-walk and adaptive variants, equal weights and recursive or
//! rolling Bayesian model averaging, scoring rules with Diebold-Mariano
//! tests, simulation designs, a grid search for initial coefficients, and a
//! CSV-based command-line pipeline.

pub mod cli;
pub mod combine;
pub mod config;
pub mod dgp;
pub mod diversity;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod io;
pub mod latent;
pub mod link;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod tune;
pub mod types;

pub use combine::{Combiner, CombinerResult, HorizonForecast, MethodKind};
pub use config::{Method, RunConfig};
pub use error::{Error, Result};
pub use filter::FilterConfig;
pub use latent::LatentMode;
pub use metrics::{EvalWindow, ScoreReport};
pub use types::{ModelMatrix, ObservationSeries, PredictorPanel, WeightMatrix};
