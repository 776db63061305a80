// Cosine coefficients of u² against their closed form, and truncated
// reconstruction.

use std::f64::consts::PI;

use panelband::curves::{cosine_coeffs, partial_sum_reconstruct};
use panelband::{make_grid, Curve};

pub fn run_example() -> panelband::Result<()> {
    let grid = make_grid(1001)?;
    let curve = Curve::from_fn(&grid, |u| u * u)?;
    let coeffs = cosine_coeffs(&grid, &curve, 50)?;
    println!("a_0 = {:.6} (exact {:.6})", coeffs.as_slice()[0], 1.0 / 3.0);
    for k in 1..=5 {
        let exact = 4.0 * (-1f64).powi(k as i32) / ((k * k) as f64 * PI * PI);
        println!("a_{k} = {:+.6} (exact {exact:+.6})", coeffs.as_slice()[k]);
    }
    for order in [5, 10, 50] {
        let approx = partial_sum_reconstruct(&cosine_coeffs(&grid, &curve, order)?, &grid);
        let err = approx.values().iter().zip(curve.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        println!("K = {order:>2}: sup error {err:.5}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> panelband::Result<()> {
    run_example()
}
