//! Joint simultaneous confidence bands and the test of parallel mean curves.

use serde::Serialize;

use crate::boot::{block_means, order_statistic, sample_mean, BootstrapConfig, CenteredBlocks, SCALE_FLOOR};
use crate::curves::{sample_mean_sd, Grid, Matrix, PanelSeries};
use crate::error::{Error, Result};

/// Bands `center ± halfwidth` covering all `r` mean curves jointly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSet {
    #[serde(skip)]
    pub grid: Grid,
    /// Sample mean `ĝ_j(u_g)`.
    pub center: Matrix,
    /// `quantile · v̂_j(u_g) / √n`.
    pub halfwidth: Matrix,
    pub quantile: f64,
    pub alpha: f64,
    pub block: usize,
    pub replicates_used: usize,
    #[serde(skip)]
    pub replicates: Vec<f64>,
}

impl BandSet {
    pub fn lower(&self) -> Matrix {
        self.bound(-1.0)
    }

    pub fn upper(&self) -> Matrix {
        self.bound(1.0)
    }

    fn bound(&self, sign: f64) -> Matrix {
        let data = self.center.as_slice().iter().zip(self.halfwidth.as_slice()).map(|(c, h)| c + sign * h).collect();
        Matrix::from_vec(self.center.rows(), self.center.cols(), data).expect("same shape as center")
    }
}

/// Builds the bands: sample mean, divide-by-`n` standard deviation, and the
/// bootstrap quantile of the self-normalized sup-statistic.
pub fn jscb(panel: &PanelSeries, cfg: &BootstrapConfig) -> Result<BandSet> {
    let (center, sd) = sample_mean_sd(panel)?;
    let sup = crate::boot::bootstrap_sup_quantile(panel, cfg, &sd)?;
    let factor = sup.quantile / (panel.n() as f64).sqrt();
    let halfwidth = sd.map(|s| factor * s);
    Ok(BandSet {
        grid: panel.grid().clone(),
        center,
        halfwidth,
        quantile: sup.quantile,
        alpha: cfg.alpha,
        block: cfg.block,
        replicates_used: cfg.replicates,
        replicates: sup.replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Containment {
    pub overall: bool,
    pub per_panel: Vec<bool>,
}

/// Whether each candidate curve stays inside its closed band at every grid point.
pub fn band_contains(bands: &BandSet, candidates: &Matrix) -> Result<Containment> {
    if candidates.rows() != bands.center.rows() || candidates.cols() != bands.center.cols() {
        return Err(Error::invalid(format!(
            "candidates are {}x{}, bands are {}x{}",
            candidates.rows(),
            candidates.cols(),
            bands.center.rows(),
            bands.center.cols()
        )));
    }
    let per_panel: Vec<bool> = (0..candidates.rows())
        .map(|j| {
            candidates
                .row(j)
                .iter()
                .zip(bands.center.row(j))
                .zip(bands.halfwidth.row(j))
                .all(|((&x, &c), &h)| c - h <= x && x <= c + h)
        })
        .collect();
    Ok(Containment { overall: per_panel.iter().all(|&b| b), per_panel })
}

/// `W_{i,j}(u) = X_{i,j}(u) - ∫₀¹ X_{i,j}`.
pub fn center_within_curve(panel: &PanelSeries) -> PanelSeries {
    let grid = panel.grid();
    let g = grid.len();
    let mut data = panel.as_slice().to_vec();
    for curve in data.chunks_exact_mut(g) {
        let level = grid.integrate(curve);
        curve.iter_mut().for_each(|v| *v -= level);
    }
    PanelSeries::from_parts_unchecked(panel.n(), panel.r(), grid.clone(), data)
}

/// Index of pair `(j, k)`, `j < k`, in row-major upper-triangular order.
fn pair_index(r: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < r);
    j * (2 * r - j - 1) / 2 + (k - j - 1)
}

fn pairs(r: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..r).flat_map(move |j| (j + 1..r).map(move |k| (j, k)))
}

/// `T_n`, its per-pair components and the pair scales `v̂_{j,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelismStatistic {
    pub statistic: f64,
    /// `r × r`, symmetric, zero diagonal.
    pub pairwise: Matrix,
    /// `v̂_{j,k}(u_g)` in upper-triangular pair order.
    pub scales: Vec<Vec<f64>>,
    /// Reciprocal scales with degenerate points zeroed, pair-major.
    inv_scales: Vec<f64>,
}

impl ParallelismStatistic {
    pub fn scale(&self, j: usize, k: usize) -> &[f64] {
        let (a, b) = if j < k { (j, k) } else { (k, j) };
        &self.scales[pair_index(self.pairwise.rows(), a, b)]
    }
}

fn statistic_of_centered(w: &PanelSeries) -> Result<ParallelismStatistic> {
    let (n, r, g) = (w.n(), w.r(), w.grid_len());
    let (_, sd_w) = sample_mean_sd(w)?;
    let reference = sd_w.as_slice().iter().fold(0.0_f64, |m, &s| m.max(s));
    if reference.is_nan() || reference <= 0.0 {
        return Err(Error::DegenerateScale("every centered curve is constant over time".into()));
    }
    let floor = SCALE_FLOOR * reference;
    let root_n = (n as f64).sqrt();
    let npairs = r * (r - 1) / 2;
    let mut pairwise = Matrix::zeros(r, r);
    let mut scales = Vec::with_capacity(npairs);
    let mut inv_scales = Vec::with_capacity(npairs * g);
    let mut diff_sum = vec![0.0; g];
    let mut diff_sq = vec![0.0; g];
    for (j, k) in pairs(r) {
        diff_sum.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for ((s, &a), &b) in diff_sum.iter_mut().zip(w.curve(i, j)).zip(w.curve(i, k)) {
                *s += a - b;
            }
        }
        let mean: Vec<f64> = diff_sum.iter().map(|s| s / n as f64).collect();
        diff_sq.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for (((s, &a), &b), &m) in diff_sq.iter_mut().zip(w.curve(i, j)).zip(w.curve(i, k)).zip(&mean) {
                let d = a - b - m;
                *s += d * d;
            }
        }
        let scale: Vec<f64> = diff_sq.iter().map(|s| (s / n as f64).sqrt()).collect();
        let mut sup = 0.0_f64;
        for (&m, &v) in mean.iter().zip(&scale) {
            let inv = if v >= floor { 1.0 / v } else { 0.0 };
            inv_scales.push(inv);
            sup = sup.max((root_n * m).abs() * inv);
        }
        pairwise.set(j, k, sup);
        pairwise.set(k, j, sup);
        scales.push(scale);
    }
    let statistic = pairwise.as_slice().iter().fold(0.0_f64, |m, &v| m.max(v));
    Ok(ParallelismStatistic { statistic, pairwise, scales, inv_scales })
}

/// `T_n = max_{j<k} sup_u |S̊_{n,j,k}(u)| / v̂_{j,k}(u)`.
///
/// Grid points where `v̂_{j,k}` falls below the degeneracy floor contribute
/// zero, so panels that differ only by constants give `T_n = 0`.
pub fn parallelism_statistic(panel: &PanelSeries) -> Result<ParallelismStatistic> {
    if panel.r() < 2 {
        return Err(Error::invalid("parallelism needs at least two panels"));
    }
    if panel.n() < 2 {
        return Err(Error::invalid("parallelism needs n >= 2"));
    }
    statistic_of_centered(&center_within_curve(panel))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParallelismResult {
    pub statistic: f64,
    pub pairwise: Matrix,
    pub critical_value: f64,
    /// Add-one Monte Carlo p-values from the joint replicate list; diagonal is 1.
    pub pairwise_pvalues: Matrix,
    pub reject: bool,
    pub alpha: f64,
    pub block: usize,
    pub replicates_used: usize,
    #[serde(skip)]
    pub replicates: Vec<f64>,
}

impl ParallelismResult {
    pub fn min_pvalue(&self) -> f64 {
        let r = self.pairwise_pvalues.rows();
        pairs(r).map(|(j, k)| self.pairwise_pvalues.get(j, k)).fold(1.0, f64::min)
    }
}

/// Bootstrap test of `H0: all mean curves are parallel`.
///
/// Each replicate takes the sup over all pairs and grid points jointly.
/// Pair differences of the multiplier sums are formed on the fly from the
/// per-panel sums, which is exact because the bootstrap is linear.
pub fn parallelism_test(panel: &PanelSeries, cfg: &BootstrapConfig) -> Result<ParallelismResult> {
    if panel.r() < 2 {
        return Err(Error::invalid("parallelism needs at least two panels"));
    }
    cfg.validate(panel.n())?;
    let w = center_within_curve(panel);
    let stat = statistic_of_centered(&w)?;
    let (r, g) = (w.r(), w.grid_len());

    let blocks = block_means(&w, cfg.block)?;
    let mean = sample_mean(&w);
    let centered = CenteredBlocks::new(w.n(), &blocks, &mean, None);
    let inv = &stat.inv_scales;
    let replicates = centered.replicate(cfg.replicates, cfg.seed, |phi| {
        let mut sup = 0.0_f64;
        for (p, (j, k)) in pairs(r).enumerate() {
            let a = &phi[j * g..(j + 1) * g];
            let b = &phi[k * g..(k + 1) * g];
            let s = &inv[p * g..(p + 1) * g];
            for ((&x, &y), &i) in a.iter().zip(b).zip(s) {
                sup = sup.max((x - y).abs() * i);
            }
        }
        sup
    });
    let critical_value = order_statistic(&replicates, cfg.alpha);

    let mut sorted = replicates.clone();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len() as f64;
    let mut pvalues = Matrix::filled(r, r, 1.0);
    for (j, k) in pairs(r) {
        let t = stat.pairwise.get(j, k);
        let below = sorted.partition_point(|&x| x < t);
        let p = (1.0 + (sorted.len() - below) as f64) / (b + 1.0);
        pvalues.set(j, k, p);
        pvalues.set(k, j, p);
    }

    Ok(ParallelismResult {
        statistic: stat.statistic,
        pairwise: stat.pairwise,
        critical_value,
        pairwise_pvalues: pvalues,
        reject: stat.statistic > critical_value,
        alpha: cfg.alpha,
        block: cfg.block,
        replicates_used: cfg.replicates,
        replicates,
    })
}
