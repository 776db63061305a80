// A small Monte Carlo coverage and size study.

use panelband::experiments::{run, ExperimentConfig, Mode};
use panelband::{BootstrapConfig, Model, SimConfig};

pub fn run_example() -> panelband::Result<()> {
    let sim = SimConfig::new(Model::Par, 0.2, 100, 3).with_grid(41).with_seed(1);
    let boot = BootstrapConfig::new(1, 200, 0.05, 0);
    for mode in [Mode::Coverage, Mode::TypeI, Mode::Power] {
        let mut cfg = ExperimentConfig::new(mode, sim.clone(), boot, 40);
        cfg.power_b_grid = vec![0.0, 0.5, 1.0];
        for report in run(&cfg)? {
            println!(
                "{:?} b={:?}: rate {:.3} +- {:.3} over {} replications (mean block {:.1})",
                report.mode, report.b, report.rate, report.mc_stderr, report.replications, report.mean_block
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> panelband::Result<()> {
    run_example()
}
