//! File-based workflow: simulate a panel, write it as CSV, run every method
//! from a TOML configuration and print the comparison table.

use dtvw::dgp::{simulate, Design, SimSpec};
use dtvw::experiment::run_experiment;
use dtvw::report::comparison_table;
use dtvw::{io, RunConfig};

fn main() -> dtvw::Result<()> {
    let dir = std::env::temp_dir().join("dtvw-pipeline-example");
    let spec = SimSpec { horizons: 2, ..SimSpec::new(Design::PseudoEmpirical, 80, 21) };
    let (obs, panel) = simulate(&spec)?;
    io::write_observations(dir.join("observations.csv"), &obs)?;
    io::write_panel(dir.join("panel.csv"), &panel)?;

    let config = r#"
observations = "observations.csv"
panel = "panel.csv"
output = "out"
methods = ["equal", "bma_roll", "tvw", "dtvw"]
seed = 21
eval_start = 21
dm_baseline = "equal"

[filter]
particles = 500

[bma_roll]
window = 24
"#;
    io::write_text(dir.join("config.toml"), config)?;
    let cfg = RunConfig::from_file(dir.join("config.toml"))?;
    let out = run_experiment(&cfg)?;
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    println!();
    print!("{}", comparison_table(&[("run".into(), out.report)])?.to_text());
    Ok(())
}
