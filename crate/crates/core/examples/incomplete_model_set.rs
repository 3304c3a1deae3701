//! Six misspecified candidates for a nonlinear process. Compares the
//! random-walk and diversity-driven filters with equal weights and BMA, and
//! prints the path of the diversity coefficient.

use dtvw::combine::{BmaCombiner, Combiner, CombinerResult, EqualCombiner, FilterCombiner, IndividualModel};
use dtvw::dgp::{simulate, Design, SimSpec};
use dtvw::metrics::crps_or_abs;
use dtvw::{FilterConfig, LatentMode};

fn main() -> dtvw::Result<()> {
    let seed = 11;
    let (obs, panel) = simulate(&SimSpec::new(Design::NonlinearIncomplete, 100, seed))?;
    let y = obs.variable(0);
    let n = obs.len() as f64;

    let mut results = IndividualModel::all(&obs, &panel, 1.0)?;
    results.push(EqualCombiner { fallback_sd: 1.0 }.combine(&obs, &panel)?);
    results.push(BmaCombiner { window: None, fallback_sd: 1.0, predictive_draws: 1000, seed }.combine(&obs, &panel)?);
    let tvw = FilterConfig { seed, ..FilterConfig::with_mode(LatentMode::Tvw) };
    let dtvw = FilterConfig { seed, alpha0: [0.0, 7.0, 7.0], ..FilterConfig::with_mode(LatentMode::Dtvw) };
    results.push(FilterCombiner { config: tvw }.combine(&obs, &panel)?);
    results.push(FilterCombiner { config: dtvw }.combine(&obs, &panel)?);

    let ls = |r: &CombinerResult| -r.rows.iter().filter_map(|row| row.forecasts[0].log_predictive).sum::<f64>() / n;
    let crps = |r: &CombinerResult| r.rows.iter().map(|row| crps_or_abs(&row.forecasts[0].draws[0], y[row.t])).sum::<f64>() / n;
    println!("{:<8} {:>8} {:>8}", "method", "LS", "CRPS");
    for r in &results {
        println!("{:<8} {:>8.3} {:>8.3}", r.method, ls(r), crps(r));
    }

    let alphas = results.last().and_then(|r| r.alphas.as_ref()).expect("dtvw alphas");
    println!("\n  t  alpha2   95% band");
    for a in alphas.iter().step_by(10) {
        println!("{:>3}  {:>6.2}  [{:.2}, {:.2}]", a.t + 1, a.mean[2], a.lower[2], a.upper[2]);
    }
    Ok(())
}
