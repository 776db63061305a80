//! Multiplier block bootstrap.
//!
//! For a block size `m` the panel is summarized by the `n - m` local means
//! `T_i = m⁻¹ (X_i + … + X_{i+m-1})`. One bootstrap replicate draws i.i.d.
//! standard normal weights `N_1..N_{n-m}` and forms
//!
//! ```text
//! Φ(u) = √(m / (n - m)) Σ_i [T_i(u) - ĝ(u)] N_i
//! ```
//!
//! where `ĝ` is the pointwise sample mean. Replicates are reduced to a
//! single sup-statistic and the critical value is an order statistic of
//! those sups.
//!
//! Replicate `b` draws its weights from the stream `(seed, b, Multipliers)`
//! and accumulates over `i` in a fixed order, so the replicate list is
//! bit-identical for any number of worker threads.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{column_sums, Grid, Matrix, PanelSeries};
use crate::error::{Error, Result};
use crate::rng::{Purpose, RngStream};

/// Relative floor below which a scale value counts as degenerate.
pub const SCALE_FLOOR: f64 = 1e-10;

/// Replicates processed together so each block-mean row is loaded once per chunk.
const CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Block size `m`.
    pub block: usize,
    /// Number of replicates `B`.
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(block: usize, replicates: usize, alpha: f64, seed: u64) -> Self {
        BootstrapConfig { block, replicates, alpha, seed }
    }

    /// Checks the config against a panel of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.block < 1 || self.block + 1 > n {
            return Err(Error::invalid(format!(
                "block size {} outside 1..={} for n = {n}",
                self.block,
                n.saturating_sub(1)
            )));
        }
        if self.replicates < 1 {
            return Err(Error::invalid("need at least one bootstrap replicate"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Local means of `m` consecutive observations, `(n - m) × r × G`.
#[derive(Debug, Clone)]
pub struct BlockMeans {
    block: usize,
    count: usize,
    width: usize,
    data: Vec<f64>,
}

impl BlockMeans {
    pub fn block(&self) -> usize {
        self.block
    }

    /// Number of windows, `n - m`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Entries per window, `r * G`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn window(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn get(&self, i: usize, j: usize, g: usize, grid_len: usize) -> f64 {
        self.data[i * self.width + j * grid_len + g]
    }
}

pub fn block_means(panel: &PanelSeries, block: usize) -> Result<BlockMeans> {
    let n = panel.n();
    if block < 1 || block + 1 > n {
        return Err(Error::invalid(format!("block size {block} outside 1..={}", n.saturating_sub(1))));
    }
    let count = n - block;
    let width = panel.width();
    let inv = 1.0 / block as f64;
    let mut data = vec![0.0; count * width];
    data.par_chunks_mut(width).enumerate().for_each(|(i, out)| {
        for l in i..i + block {
            for (o, &x) in out.iter_mut().zip(panel.time_slice(l)) {
                *o += x;
            }
        }
        out.iter_mut().for_each(|o| *o *= inv);
    });
    Ok(BlockMeans { block, count, width, data })
}

/// Centered, prefactor-scaled block means `c (T_i - ĝ) w`, one row per window.
#[derive(Debug, Clone)]
pub(crate) struct CenteredBlocks {
    rows: usize,
    width: usize,
    data: Vec<f64>,
}

impl CenteredBlocks {
    /// `weights` multiplies each column after centering; `None` means 1.
    pub(crate) fn new(n: usize, blocks: &BlockMeans, mean: &[f64], weights: Option<&[f64]>) -> Self {
        let prefactor = (blocks.block as f64 / (n - blocks.block) as f64).sqrt();
        let mut data = Vec::with_capacity(blocks.count * blocks.width);
        for i in 0..blocks.count {
            let window = blocks.window(i);
            match weights {
                Some(w) => data.extend(window.iter().zip(mean).zip(w).map(|((t, m), w)| prefactor * (t - m) * w)),
                None => data.extend(window.iter().zip(mean).map(|(t, m)| prefactor * (t - m))),
            }
        }
        CenteredBlocks { rows: blocks.count, width: blocks.width, data }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// `Σ_i row_i N_i` for the given weights.
    pub(crate) fn combine(&self, multipliers: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &w) in multipliers.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.row(i)) {
                *o += w * c;
            }
        }
    }

    /// Runs `replicates` multiplier draws and maps each `Φ` through `reduce`.
    pub(crate) fn replicate<F>(&self, replicates: usize, seed: u64, reduce: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let chunks = replicates.div_ceil(CHUNK);
        let per_chunk: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let len = CHUNK.min(replicates - start);
                let mut weights = vec![0.0; len * self.rows];
                for (b, w) in weights.chunks_exact_mut(self.rows).enumerate() {
                    let mut rng = RngStream::new(seed, (start + b) as u64, Purpose::Multipliers).rng();
                    w.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
                }
                let mut acc = vec![0.0; len * self.width];
                for i in 0..self.rows {
                    let row = self.row(i);
                    for (b, out) in acc.chunks_exact_mut(self.width).enumerate() {
                        let w = weights[b * self.rows + i];
                        for (o, &x) in out.iter_mut().zip(row) {
                            *o += w * x;
                        }
                    }
                }
                acc.chunks_exact(self.width).map(&reduce).collect()
            })
            .collect();
        per_chunk.concat()
    }
}

/// `Φ_m(u)` for one explicit multiplier vector of length `n - m`.
pub fn multiplier_draw(panel: &PanelSeries, blocks: &BlockMeans, multipliers: &[f64]) -> Result<Matrix> {
    if blocks.count + blocks.block != panel.n() || blocks.width != panel.width() {
        return Err(Error::invalid("block means do not belong to this panel"));
    }
    if multipliers.len() != blocks.count {
        return Err(Error::invalid(format!("expected {} multipliers, got {}", blocks.count, multipliers.len())));
    }
    let mean = sample_mean(panel);
    let centered = CenteredBlocks::new(panel.n(), blocks, &mean, None);
    let mut out = vec![0.0; panel.width()];
    centered.combine(multipliers, &mut out);
    Matrix::from_vec(panel.r(), panel.grid_len(), out)
}

pub(crate) fn sample_mean(panel: &PanelSeries) -> Vec<f64> {
    let n = panel.n() as f64;
    column_sums(panel).into_iter().map(|s| s / n).collect()
}

/// Reciprocal scale with degenerate entries mapped to zero. Fails if every
/// entry is degenerate.
pub(crate) fn inverse_scale(scale: &[f64]) -> Result<Vec<f64>> {
    let max = scale.iter().fold(0.0_f64, |m, &s| m.max(s));
    if max.is_nan() || max <= 0.0 || max.is_infinite() {
        return Err(Error::DegenerateScale("scale is zero (or not finite) at every grid point".into()));
    }
    let floor = SCALE_FLOOR * max;
    Ok(scale.iter().map(|&s| if s >= floor { 1.0 / s } else { 0.0 }).collect())
}

/// One-based order-statistic index `⌊(1-α)B⌋` clamped to `[1, B]`.
pub fn quantile_index(replicates: usize, alpha: f64) -> usize {
    // The nudge keeps e.g. (1 - 0.05) * 500 from flooring to 474.
    let raw = ((1.0 - alpha) * replicates as f64 + 1e-9).floor() as usize;
    raw.clamp(1, replicates.max(1))
}

/// `⌊(1-α)B⌋`-th smallest replicate.
pub fn order_statistic(replicates: &[f64], alpha: f64) -> f64 {
    assert!(!replicates.is_empty(), "order statistic of an empty sample");
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[quantile_index(sorted.len(), alpha) - 1]
}

/// Bootstrap critical value and the full replicate list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupQuantile {
    pub quantile: f64,
    pub replicates: Vec<f64>,
}

/// Replicates of `max_j sup_u |Φ_{m,j}(u)| / scale_j(u)` and their order statistic.
pub fn bootstrap_sup_quantile(panel: &PanelSeries, cfg: &BootstrapConfig, scale: &Matrix) -> Result<SupQuantile> {
    cfg.validate(panel.n())?;
    if scale.rows() != panel.r() || scale.cols() != panel.grid_len() {
        return Err(Error::invalid("scale matrix does not match the panel shape"));
    }
    let inv = inverse_scale(scale.as_slice())?;
    let blocks = block_means(panel, cfg.block)?;
    let mean = sample_mean(panel);
    let centered = CenteredBlocks::new(panel.n(), &blocks, &mean, Some(&inv));
    let replicates =
        centered.replicate(cfg.replicates, cfg.seed, |phi| phi.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let quantile = order_statistic(&replicates, cfg.alpha);
    Ok(SupQuantile { quantile, replicates })
}

/// Equally spaced candidate block sizes for minimum-volatility selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MvCandidates {
    blocks: Vec<usize>,
}

impl MvCandidates {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("need at least one candidate block size"));
        }
        if blocks[0] < 1 {
            return Err(Error::invalid("block sizes must be positive"));
        }
        if blocks.len() >= 2 {
            let step = blocks[1] as i64 - blocks[0] as i64;
            if step <= 0 || blocks.windows(2).any(|w| w[1] as i64 - w[0] as i64 != step) {
                return Err(Error::invalid("candidates must be strictly increasing and equally spaced"));
            }
            if blocks[0] as i64 - step < 1 {
                return Err(Error::invalid(format!(
                    "extended candidate 2*{} - {} falls below 1",
                    blocks[0], blocks[1]
                )));
            }
        }
        Ok(MvCandidates { blocks })
    }

    /// `2, 3, …, ⌈3 n^{1/3}⌉`, trimmed so the upper extension stays `≤ n - 1`.
    pub fn default_for(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("block selection needs n >= 3, got {n}")));
        }
        let upper = ((3.0 * (n as f64).cbrt()).ceil() as usize).min(n.saturating_sub(2)).max(2);
        if upper + 1 > n - 1 {
            return MvCandidates::new(vec![1.max(n - 2)]);
        }
        MvCandidates::new((2..=upper).collect())
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Candidates with the two extrapolated neighbours `m_0` and `m_{k+1}`.
    fn extended(&self) -> Vec<usize> {
        let k = self.blocks.len();
        let mut out = Vec::with_capacity(k + 2);
        out.push(2 * self.blocks[0] - self.blocks[1]);
        out.extend_from_slice(&self.blocks);
        out.push(2 * self.blocks[k - 1] - self.blocks[k - 2]);
        out
    }
}

/// Variance proxy used inside minimum-volatility selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MvCriterion {
    /// `(m/(n-m)) Σ_l (T_l - ĝ)²`, the conditional variance of `Φ_m`.
    #[default]
    ConditionalVariance,
    /// Same sum with a `√(m/(n-m))` prefactor.
    SqrtPrefactor,
}

/// `Ξ_j(u)` for one block size, flattened over `(j, g)`.
fn mv_functional(panel: &PanelSeries, mean: &[f64], block: usize, criterion: MvCriterion) -> Result<Vec<f64>> {
    let blocks = block_means(panel, block)?;
    let n = panel.n();
    let ratio = block as f64 / (n - block) as f64;
    let prefactor = match criterion {
        MvCriterion::ConditionalVariance => ratio,
        MvCriterion::SqrtPrefactor => ratio.sqrt(),
    };
    let mut acc = vec![0.0; blocks.width()];
    for i in 0..blocks.count() {
        for ((a, &t), &m) in acc.iter_mut().zip(blocks.window(i)).zip(mean) {
            let d = t - m;
            *a += d * d;
        }
    }
    acc.iter_mut().for_each(|a| *a *= prefactor);
    Ok(acc)
}

/// Minimum-volatility block size with the default criterion.
pub fn mv_select(panel: &PanelSeries, candidates: &MvCandidates) -> Result<usize> {
    mv_select_with(panel, candidates, MvCriterion::default())
}

/// Picks the candidate whose variance proxy moves least against its two
/// neighbours, integrated over `u` and summed over panels. Ties go to the
/// smaller block.
pub fn mv_select_with(panel: &PanelSeries, candidates: &MvCandidates, criterion: MvCriterion) -> Result<usize> {
    let n = panel.n();
    let blocks = candidates.blocks();
    if let Some(&too_big) = blocks.iter().find(|&&m| m + 1 > n) {
        return Err(Error::invalid(format!("candidate {too_big} exceeds n - 1 = {}", n.saturating_sub(1))));
    }
    if blocks.len() == 1 {
        return Ok(blocks[0]);
    }
    let extended = candidates.extended();
    let top = *extended.last().expect("extended has k + 2 entries");
    if top + 1 > n {
        return Err(Error::invalid(format!("extended candidate {top} exceeds n - 1 = {}", n - 1)));
    }
    let mean = sample_mean(panel);
    let xi: Vec<Vec<f64>> =
        extended.par_iter().map(|&m| mv_functional(panel, &mean, m, criterion)).collect::<Result<_>>()?;

    let grid: &Grid = panel.grid();
    let g = grid.len();
    let mut sd_curve = vec![0.0; g];
    let mut best = (f64::INFINITY, blocks[0]);
    for i in 1..=blocks.len() {
        let mut volatility = 0.0;
        for j in 0..panel.r() {
            for (gi, sd) in sd_curve.iter_mut().enumerate() {
                let idx = j * g + gi;
                let vals = [xi[i - 1][idx], xi[i][idx], xi[i + 1][idx]];
                let m = (vals[0] + vals[1] + vals[2]) / 3.0;
                let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
                *sd = (ss / 2.0).sqrt();
            }
            volatility += grid.integrate(&sd_curve);
        }
        if volatility < best.0 {
            best = (volatility, blocks[i - 1]);
        }
    }
    Ok(best.1)
}
