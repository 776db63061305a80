// Simulate PAR and PMA panels and save one to disk.

use panelband::io::{read_panel, write_panel};
use panelband::{simulate_panel, ErrorDist, Model, SimConfig};

pub fn run_example() -> panelband::Result<()> {
    let par = SimConfig::new(Model::Par, 0.5, 200, 5).with_seed(7);
    let panel = simulate_panel(&par)?;
    println!("PAR(0.5): n={} r={} G={}", panel.n(), panel.r(), panel.grid_len());
    println!(
        "X[0, 0] at u = 0, 0.5, 1: {:.4} {:.4} {:.4}",
        panel.get(0, 0, 0),
        panel.get(0, 0, 50),
        panel.get(0, 0, 100)
    );

    let pma = SimConfig::new(Model::Pma, 1.0, 200, 5).with_dist(ErrorDist::ScaledT6).with_seed(7);
    let heavy = simulate_panel(&pma)?;
    println!("PMA(1) with scaled t6 errors: first value {:.4}", heavy.get(0, 0, 0));

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("par.bin");
    write_panel(&path, &panel)?;
    assert_eq!(read_panel(&path)?, panel);
    println!("round trip through {} ok", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> panelband::Result<()> {
    run_example()
}
