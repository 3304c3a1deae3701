//! Three AR candidates, one of which is the data-generating process. The
//! diversity-driven filter should put almost all weight on it.

use dtvw::combine::{Combiner, CombinerResult, FilterCombiner, IndividualModel};
use dtvw::dgp::{simulate, Design, SimSpec};
use dtvw::metrics::rmsfe;
use dtvw::{FilterConfig, LatentMode};

fn main() -> dtvw::Result<()> {
    let (obs, panel) = simulate(&SimSpec::new(Design::CompleteAr, 100, 7))?;
    let y = obs.variable(0);
    let score = |r: &CombinerResult| {
        let points: Vec<f64> = r.rows.iter().map(|row| row.forecasts[0].point[0]).collect();
        rmsfe(&y, &points)
    };

    let mut results = IndividualModel::all(&obs, &panel, 1.0)?;
    for mode in [LatentMode::Tvw, LatentMode::Dtvw] {
        let config = FilterConfig { seed: 7, ..FilterConfig::with_mode(mode) };
        results.push(FilterCombiner { config }.combine(&obs, &panel)?);
    }

    println!("{:<6} {:>8}", "method", "RMSFE");
    for r in &results {
        println!("{:<6} {:>8.4}", r.method, score(r)?);
    }

    let dtvw = results.last().expect("dtvw result");
    println!("\n  t   M1     M2     M3   (DTVW mean weights)");
    for row in dtvw.rows.iter().step_by(10) {
        let w: Vec<String> = (0..3).map(|k| format!("{:.3}", row.weights.get(k, 0))).collect();
        println!("{:>3}  {}", row.t + 1, w.join("  "));
    }
    Ok(())
}
