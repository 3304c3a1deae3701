//! Equal weights, recursive BMA and rolling BMA on a panel with a regime
//! break. Rolling BMA forgets the first regime; recursive BMA does not.

use dtvw::combine::{BmaCombiner, Combiner, EqualCombiner};
use dtvw::dgp::{simulate, Design, SimSpec};

fn main() -> dtvw::Result<()> {
    let (obs, panel) = simulate(&SimSpec::new(Design::PseudoEmpirical, 120, 3))?;
    let equal = EqualCombiner { fallback_sd: 1.0 }.combine(&obs, &panel)?;
    let bma = BmaCombiner { window: None, fallback_sd: 1.0, predictive_draws: 500, seed: 3 }.combine(&obs, &panel)?;
    let roll = BmaCombiner { window: Some(24), fallback_sd: 1.0, predictive_draws: 500, seed: 3 }.combine(&obs, &panel)?;

    let names = panel.model_names();
    println!("weights on '{}' (first regime) and '{}' (second regime)", names[0], names[1]);
    println!("  t   equal        bma          bma_roll");
    for t in [30, 59, 70, 90, 119] {
        let pair = |r: &dtvw::CombinerResult| format!("{:.2}/{:.2}", r.rows[t].weights.get(0, 0), r.rows[t].weights.get(1, 0));
        println!("{:>3}   {:<12} {:<12} {}", t + 1, pair(&equal), pair(&bma), pair(&roll));
    }
    Ok(())
}
