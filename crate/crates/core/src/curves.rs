//! Curves and panels sampled on a uniform grid over `[0, 1]`.
//!
//! Every curve in the crate lives on a [`Grid`] of `G` equispaced points
//! that includes both endpoints. Integrals over `[0, 1]` are composite
//! trapezoid sums on that grid and suprema over `u` are maxima over it.
//!
//! A [`PanelSeries`] stores `n` time points of `r` curves each as one
//! contiguous buffer in `(time, panel, grid)` order, so the `r × G` block
//! for a fixed time index is a single slice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `u_g = g / (G - 1)`, `g = 0..G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 points, got {count}")));
        }
        let last = (count - 1) as f64;
        let points = (0..count).map(|g| g as f64 / last).collect();
        Ok(Grid { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points.len() - 1) as f64
    }

    /// Composite trapezoid rule for `∫₀¹ f(u) du` from samples on the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let last = values.len() - 1;
        let inner: f64 = values[1..last].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[last]))
    }
}

/// Shorthand for [`Grid::uniform`].
pub fn make_grid(count: usize) -> Result<Grid> {
    Grid::uniform(count)
}

/// One curve sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "curve has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(g) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite curve value at grid index {g}")));
        }
        Ok(Curve { values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Curve::new(grid, grid.points().iter().map(|&u| f(u)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Dense row-major matrix. Rows usually index panels and columns grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::invalid("rows have different lengths"));
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// Cosine-basis coefficients `a_0..a_K` of a single curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineCoeffs {
    coeffs: Vec<f64>,
}

impl CosineCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("need at least the constant coefficient"));
        }
        Ok(CosineCoeffs { coeffs })
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }
}

/// `a_0 = ∫ X`, `a_k = 2 ∫ cos(kπu) X(u) du` for `k = 1..=order`, by the
/// trapezoid rule on the curve's grid.
pub fn cosine_coeffs(grid: &Grid, curve: &Curve, order: usize) -> Result<CosineCoeffs> {
    if curve.len() != grid.len() {
        return Err(Error::invalid("curve is not aligned to the grid"));
    }
    if grid.len() < order + 2 {
        return Err(Error::invalid(format!("order {order} aliases on a {}-point grid (need G >= K + 2)", grid.len())));
    }
    let mut product = vec![0.0; grid.len()];
    let coeffs = (0..=order)
        .map(|k| {
            let weight = if k == 0 { 1.0 } else { 2.0 };
            let freq = k as f64 * PI;
            for ((p, &u), &x) in product.iter_mut().zip(grid.points()).zip(curve.values()) {
                *p = (freq * u).cos() * x;
            }
            weight * grid.integrate(&product)
        })
        .collect();
    Ok(CosineCoeffs { coeffs })
}

/// Evaluates `Σ_k a_k cos(kπu)` on the grid.
pub fn partial_sum_reconstruct(coeffs: &CosineCoeffs, grid: &Grid) -> Curve {
    let values = grid
        .points()
        .iter()
        .map(|&u| coeffs.as_slice().iter().enumerate().map(|(k, a)| a * (k as f64 * PI * u).cos()).sum())
        .collect();
    Curve { values }
}

/// Observed panel `X_{i,j}(u_g)`: `n` time points, `r` panels, `G` grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSeries {
    n: usize,
    r: usize,
    grid: Grid,
    data: Vec<f64>,
}

impl PanelSeries {
    /// `data` is laid out `(i, j, g)` row-major.
    pub fn new(n: usize, r: usize, grid: Grid, data: Vec<f64>) -> Result<Self> {
        if n < 1 || r < 1 {
            return Err(Error::invalid(format!("panel needs n >= 1 and r >= 1, got n={n}, r={r}")));
        }
        if data.len() != n * r * grid.len() {
            return Err(Error::invalid(format!(
                "panel {n}x{r}x{} needs {} values, got {}",
                grid.len(),
                n * r * grid.len(),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let g = grid.len();
            return Err(Error::invalid(format!(
                "non-finite value at (i={}, j={}, g={})",
                pos / (r * g),
                (pos / g) % r,
                pos % g
            )));
        }
        Ok(PanelSeries { n, r, grid, data })
    }

    /// Builds a panel from `curves[i][j]`.
    pub fn from_curves(grid: Grid, curves: &[Vec<Curve>]) -> Result<Self> {
        let n = curves.len();
        let r = curves.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * r * grid.len());
        for (i, row) in curves.iter().enumerate() {
            if row.len() != r {
                return Err(Error::invalid(format!("time {i} has {} panels, expected {r}", row.len())));
            }
            for curve in row {
                if curve.len() != grid.len() {
                    return Err(Error::invalid("curve is not aligned to the grid"));
                }
                data.extend_from_slice(curve.values());
            }
        }
        PanelSeries::new(n, r, grid, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// Width of one time slice, `r * G`.
    pub fn width(&self) -> usize {
        self.r * self.grid.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn curve(&self, i: usize, j: usize) -> &[f64] {
        let g = self.grid.len();
        let start = (i * self.r + j) * g;
        &self.data[start..start + g]
    }

    /// All `r` curves at time `i`, concatenated.
    pub fn time_slice(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize, g: usize) -> f64 {
        self.data[(i * self.r + j) * self.grid.len() + g]
    }

    /// Applies `f` to every value, keeping the shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> PanelSeries {
        PanelSeries { n: self.n, r: self.r, grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise sum of two panels with identical shape.
    pub fn try_add(&self, other: &PanelSeries) -> Result<PanelSeries> {
        if self.n != other.n || self.r != other.r || self.grid != other.grid {
            return Err(Error::invalid("panel shapes differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(PanelSeries { n: self.n, r: self.r, grid: self.grid.clone(), data })
    }

    pub(crate) fn from_parts_unchecked(n: usize, r: usize, grid: Grid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * r * grid.len());
        PanelSeries { n, r, grid, data }
    }
}

/// Pointwise sum over time, as a flat `r * G` vector.
pub(crate) fn column_sums(panel: &PanelSeries) -> Vec<f64> {
    let mut sums = vec![0.0; panel.width()];
    for i in 0..panel.n() {
        for (s, &x) in sums.iter_mut().zip(panel.time_slice(i)) {
            *s += x;
        }
    }
    sums
}

/// `S_{n,j}(u_g) = n^{-1/2} Σ_i X_{i,j}(u_g)`.
pub fn standardized_sum(panel: &PanelSeries) -> Matrix {
    let scale = 1.0 / (panel.n() as f64).sqrt();
    let data = column_sums(panel).into_iter().map(|s| s * scale).collect();
    Matrix { rows: panel.r(), cols: panel.grid_len(), data }
}

/// Pointwise sample mean `ĝ_j(u)` and divide-by-`n` standard deviation `v̂_j(u)`.
pub fn sample_mean_sd(panel: &PanelSeries) -> Result<(Matrix, Matrix)> {
    if panel.n() < 2 {
        return Err(Error::invalid("sample moments need n >= 2"));
    }
    let n = panel.n() as f64;
    let mean: Vec<f64> = column_sums(panel).into_iter().map(|s| s / n).collect();
    let mut ss = vec![0.0; panel.width()];
    for i in 0..panel.n() {
        for ((acc, &x), &m) in ss.iter_mut().zip(panel.time_slice(i)).zip(&mean) {
            let d = x - m;
            *acc += d * d;
        }
    }
    let sd = ss.into_iter().map(|s| (s / n).sqrt()).collect();
    let (r, g) = (panel.r(), panel.grid_len());
    Ok((Matrix { rows: r, cols: g, data: mean }, Matrix { rows: r, cols: g, data: sd }))
}

/// `max |x|` over all entries; zero for an empty matrix.
pub fn sup_abs_max(values: &Matrix) -> f64 {
    values.as_slice().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        assert_eq!(make_grid(2).unwrap().points(), &[0.0, 1.0]);
        assert_eq!(make_grid(3).unwrap().points(), &[0.0, 0.5, 1.0]);
        let g = make_grid(101).unwrap();
        assert!(close(g.spacing(), 0.01, 1e-15));
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.points()[100], 1.0);
        assert!(g.points().windows(2).all(|w| w[0] < w[1]));
        assert!(matches!(make_grid(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn constant_curve_coefficients() {
        let grid = make_grid(51).unwrap();
        let c = cosine_coeffs(&grid, &Curve::from_fn(&grid, |_| 3.0).unwrap(), 6).unwrap();
        assert!(close(c.as_slice()[0], 3.0, 1e-13));
        for a in &c.as_slice()[1..] {
            assert!(a.abs() < 1e-13, "{a}");
        }
    }

    #[test]
    fn cosine_self_coefficient() {
        let grid = make_grid(1001).unwrap();
        let c = cosine_coeffs(&grid, &Curve::from_fn(&grid, |u| (PI * u).cos()).unwrap(), 3).unwrap();
        let a = c.as_slice();
        assert!(close(a[1], 1.0, 1e-4));
        for k in [0, 2, 3] {
            assert!(a[k].abs() < 1e-4);
        }
    }

    #[test]
    fn order_too_large_for_grid() {
        let grid = make_grid(5).unwrap();
        let curve = Curve::from_fn(&grid, |u| u).unwrap();
        assert!(cosine_coeffs(&grid, &curve, 3).is_ok());
        assert!(matches!(cosine_coeffs(&grid, &curve, 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reconstruct_direct_evaluation() {
        let grid = make_grid(11).unwrap();
        let c = partial_sum_reconstruct(&CosineCoeffs::new(vec![5.0]).unwrap(), &grid);
        assert!(c.values().iter().all(|&v| v == 5.0));
        let c = partial_sum_reconstruct(&CosineCoeffs::new(vec![1.0, 2.0]).unwrap(), &grid);
        for (&u, &v) in grid.points().iter().zip(c.values()) {
            assert!(close(v, 1.0 + 2.0 * (PI * u).cos(), 1e-14));
        }
    }

    fn panel_from(n: usize, r: usize, g: usize, f: impl Fn(usize, usize, usize) -> f64) -> PanelSeries {
        let grid = make_grid(g).unwrap();
        let mut data = Vec::new();
        for i in 0..n {
            for j in 0..r {
                for k in 0..g {
                    data.push(f(i, j, k));
                }
            }
        }
        PanelSeries::new(n, r, grid, data).unwrap()
    }

    #[test]
    fn standardized_sum_cases() {
        let single = panel_from(1, 2, 3, |_, j, g| (j * 3 + g) as f64 - 1.5);
        assert_eq!(standardized_sum(&single).as_slice(), single.as_slice());

        let same = panel_from(9, 2, 4, |_, j, g| 0.25 * (j + g) as f64);
        let s = standardized_sum(&same);
        for j in 0..2 {
            for g in 0..4 {
                assert!(close(s.get(j, g), 3.0 * same.get(0, j, g), 1e-13));
            }
        }

        let cancel = panel_from(2, 3, 5, |i, j, g| if i == 0 { 1.0 + (j * g) as f64 } else { -1.0 - (j * g) as f64 });
        assert!(standardized_sum(&cancel).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moments_edge_cases() {
        let constant = panel_from(5, 2, 3, |_, _, _| 4.5);
        let (mean, sd) = sample_mean_sd(&constant).unwrap();
        assert!(mean.as_slice().iter().all(|&m| close(m, 4.5, 1e-14)));
        assert!(sd.as_slice().iter().all(|&s| s == 0.0));

        let pm = panel_from(2, 1, 2, |i, _, g| if i == 0 { 2.5 + g as f64 } else { -2.5 - g as f64 });
        let (mean, sd) = sample_mean_sd(&pm).unwrap();
        assert_eq!(mean.as_slice(), &[0.0, 0.0]);
        assert!(close(sd.get(0, 0), 2.5, 1e-14));
        assert!(close(sd.get(0, 1), 3.5, 1e-14));

        let one = panel_from(1, 1, 2, |_, _, _| 1.0);
        assert!(matches!(sample_mean_sd(&one), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sup_abs_max_cases() {
        assert_eq!(sup_abs_max(&Matrix::zeros(3, 4)), 0.0);
        let mut m = Matrix::zeros(2, 2);
        m.set(1, 0, -7.0);
        assert_eq!(sup_abs_max(&m), 7.0);
        let m = Matrix::from_rows(&[vec![1.0, -3.0], vec![2.0, 0.5]]).unwrap();
        assert_eq!(sup_abs_max(&m), 3.0);
    }

    #[test]
    fn panel_validation() {
        let grid = make_grid(3).unwrap();
        assert!(PanelSeries::new(2, 1, grid.clone(), vec![0.0; 5]).is_err());
        assert!(PanelSeries::new(2, 1, grid.clone(), vec![0.0, 1.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
        assert!(Curve::new(&grid, vec![1.0, 2.0]).is_err());
    }
}
