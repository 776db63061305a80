// Minimum-volatility block size under weak and strong dependence.

use panelband::boot::{mv_select_with, MvCriterion};
use panelband::{mv_select, simulate_panel, Model, MvCandidates, SimConfig};

pub fn run_example() -> panelband::Result<()> {
    let candidates = MvCandidates::default_for(400)?;
    println!("candidates {:?}", candidates.blocks());
    for (model, a) in [(Model::Par, 0.0), (Model::Par, 0.5), (Model::Pma, 1.0)] {
        let panel = simulate_panel(&SimConfig::new(model, a, 400, 3).with_grid(51).with_seed(2))?;
        let m = mv_select(&panel, &candidates)?;
        let printed = mv_select_with(&panel, &candidates, MvCriterion::SqrtPrefactor)?;
        println!("{model}({a}): m = {m} (square-root prefactor variant: {printed})");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> panelband::Result<()> {
    run_example()
}
