//! Scores two methods with RMSFE, log score and CRPS, and tests equal
//! predictive accuracy with the Diebold-Mariano test.

use dtvw::combine::{Combiner, EqualCombiner, FilterCombiner};
use dtvw::dgp::{simulate, Design, SimSpec};
use dtvw::metrics::{crps_from_draws, dm_test, evaluate, EvalWindow, MethodForecasts};
use dtvw::{FilterConfig, LatentMode};

fn main() -> dtvw::Result<()> {
    let draws = [-0.4, 0.1, 0.3, 0.9, 1.2];
    println!("CRPS of five draws at y = 0.5: {:.4}", crps_from_draws(&draws, 0.5)?);

    let (obs, panel) = simulate(&SimSpec::new(Design::NonlinearIncomplete, 100, 5))?;
    let equal = EqualCombiner { fallback_sd: 1.0 }.combine(&obs, &panel)?;
    let tvw = FilterCombiner { config: FilterConfig { seed: 5, ..FilterConfig::with_mode(LatentMode::Tvw) } }.combine(&obs, &panel)?;

    let methods = [MethodForecasts::from(&equal), MethodForecasts::from(&tvw)];
    let window = EvalWindow { start: 20, end: 99 };
    let report = evaluate(&methods, &obs, &[1], window, Some("equal"))?;
    for r in &report.rows {
        print!("{:<6} RMSFE {:.3}  LS {:.3}  CRPS {:.3}", r.method, r.rmsfe, r.ls, r.crps);
        if let Some(dm) = &r.dm {
            print!("  DM(CRPS) vs {}: stat {:.2}, p {:.3}", dm.baseline, dm.crps.statistic, dm.crps.p_value);
        }
        println!();
    }

    // The same test written out by hand on squared errors.
    let y = obs.variable(0);
    let sq = |r: &dtvw::CombinerResult| -> Vec<f64> {
        r.rows[20..].iter().map(|row| (y[row.t] - row.forecasts[0].point[0]).powi(2)).collect()
    };
    let dm = dm_test(&sq(&tvw), &sq(&equal), 1)?;
    println!("DM on squared errors: stat {:.3}, p {:.4}", dm.statistic, dm.p_value);
    Ok(())
}
