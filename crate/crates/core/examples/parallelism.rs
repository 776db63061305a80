// Testing whether all mean curves are parallel.

use panelband::curves::Matrix;
use panelband::{make_grid, parallelism_test, simulate_panel, BootstrapConfig, Model, SimConfig};

fn means(r: usize, tilt: f64) -> panelband::Result<Matrix> {
    let grid = make_grid(101)?;
    let rows: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            let slope = if j == 0 { tilt - 1.0 } else { -1.0 };
            grid.points().iter().map(|&u| u * u + slope * u + j as f64).collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

pub fn run_example() -> panelband::Result<()> {
    let cfg = BootstrapConfig::new(4, 1000, 0.05, 5);
    for tilt in [0.0, 0.5] {
        let sim = SimConfig::new(Model::Par, 0.2, 200, 6).with_seed(19).with_mean(means(6, tilt)?);
        let result = parallelism_test(&simulate_panel(&sim)?, &cfg)?;
        println!(
            "tilt {tilt}: T_n = {:.3}, critical value {:.3}, reject = {}",
            result.statistic, result.critical_value, result.reject
        );
        let p = &result.pairwise_pvalues;
        println!("  p-values against panel 0: {:?}", (1..6).map(|k| p.get(0, k)).collect::<Vec<_>>());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> panelband::Result<()> {
    run_example()
}
