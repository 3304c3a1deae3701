//! Two-stage search for the diversity-driven filter's initial coefficients:
//! a coarse lattice over [-10, 10]^2, then a finer one around the best
//! coarse point. Each point runs a cheaper filter scored by CRPS.

use dtvw::dgp::{simulate, Design, SimSpec};
use dtvw::tune::{filter_crps_objective, grid_search, GridSpec, ObjectiveSpec};
use dtvw::{FilterConfig, LatentMode};

fn main() -> dtvw::Result<()> {
    let (obs, panel) = simulate(&SimSpec::new(Design::CompleteAr, 100, 1))?;
    let base = FilterConfig { seed: 1, ..FilterConfig::with_mode(LatentMode::Dtvw) };
    let objective = ObjectiveSpec::default();
    let spec = GridSpec::two_stage(-10.0, 10.0, 2.0, 0.5);
    let res = grid_search(&spec, filter_crps_objective(&obs, &panel, &base, &objective))?;

    println!("coarse surface (rows alpha1, columns alpha2), CRPS x 1000:");
    let coarse: Vec<_> = res.surface.iter().filter(|p| p.stage == 1).collect();
    for a1 in (0..=10).map(|i| 10 - 2 * i) {
        let line: Vec<String> = coarse
            .iter()
            .filter(|p| p.alpha[0] == a1 as f64)
            .map(|p| format!("{:>4.0}", 1000.0 * p.value))
            .collect();
        println!("{a1:>4} {}", line.join(""));
    }
    println!(
        "\n{} points evaluated; best (alpha1, alpha2) = ({}, {}) with CRPS {:.5}",
        res.surface.len(),
        res.best[0],
        res.best[1],
        res.best_value
    );
    Ok(())
}
