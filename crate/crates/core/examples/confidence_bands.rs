// Joint simultaneous confidence bands with minimum-volatility block size.

use panelband::curves::Matrix;
use panelband::{band_contains, jscb, mv_select, simulate_panel, BootstrapConfig, Model, MvCandidates, SimConfig};

pub fn run_example() -> panelband::Result<()> {
    let panel = simulate_panel(&SimConfig::new(Model::Par, 0.2, 200, 5).with_seed(11))?;
    let block = mv_select(&panel, &MvCandidates::default_for(panel.n())?)?;
    let bands = jscb(&panel, &BootstrapConfig::new(block, 1000, 0.05, 3))?;
    println!("block size {block}, bootstrap quantile {:.3}", bands.quantile);

    let truth = Matrix::zeros(panel.r(), panel.grid_len());
    let hit = band_contains(&bands, &truth)?;
    println!("true mean (zero) inside all bands: {} (per panel {:?})", hit.overall, hit.per_panel);

    let (lower, upper) = (bands.lower(), bands.upper());
    for j in 0..panel.r() {
        println!("panel {j}: band at u = 0.5 is [{:+.3}, {:+.3}]", lower.get(j, 50), upper.get(j, 50));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> panelband::Result<()> {
    run_example()
}
