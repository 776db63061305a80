//! Panel autoregressive (PAR) and moving-average (PMA) functional models.
//!
//! Both models share the same building blocks:
//!
//! - innovation curves `ε(u) = Σ_{k=1}^{K} k⁻³ [cos(2πku) + sin(2πku)] ε_k`,
//!   whose coefficient vector is `A ε'` for the `K × K` tridiagonal matrix
//!   `A` (ones on the diagonal, halves beside it) and i.i.d. `ε'_k`;
//! - a temporal recursion per panel: `e_i = a e_{i-1} + ε_i` (PAR) or
//!   `e_i = ε_i + a ε_{i-1}` (PMA);
//! - spatial mixing `X_i = g + A_r e_i` with the same tridiagonal pattern of
//!   size `r × r`, so panels three or more indices apart are independent.
//!
//! The observed sample always draws from the `Innovations` stream; warm-up
//! draws come from the separate `PreSample` stream. With `a = 0` both
//! models therefore return the same panel for the same seed.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::curves::{Grid, Matrix, PanelSeries};
use crate::error::{Error, Result};
use crate::rng::{Purpose, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Model {
    Par,
    Pma,
}

/// Distribution of the i.i.d. coefficient draws `ε'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorDist {
    /// Standard normal.
    Normal,
    /// `√(2/3) · t₆`, which has unit variance.
    ScaledT6,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Par => "PAR",
            Model::Pma => "PMA",
        })
    }
}

impl std::fmt::Display for ErrorDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorDist::Normal => "Normal",
            ErrorDist::ScaledT6 => "ScaledT6",
        })
    }
}

pub const DEFAULT_K_TRUNC: usize = 50;
pub const DEFAULT_BURNIN: usize = 100;
pub const DEFAULT_GRID: usize = 101;

/// Everything needed to generate one panel.
///
/// Serialized as a flat key/value table with keys `model`, `a`, `n`, `r`,
/// `G`, `K_trunc`, `burnin`, `dist`, `seed`. The optional mean matrix is
/// never serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: Model,
    pub a: f64,
    pub n: usize,
    pub r: usize,
    #[serde(rename = "G", default = "default_grid")]
    pub grid_size: usize,
    #[serde(rename = "K_trunc", default = "default_k_trunc")]
    pub k_trunc: usize,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default = "default_dist")]
    pub dist: ErrorDist,
    /// Mean functions `g_j(u_g)`, `r × G`. `None` means zero.
    #[serde(skip)]
    pub mean: Option<Matrix>,
    #[serde(default)]
    pub seed: u64,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}
fn default_k_trunc() -> usize {
    DEFAULT_K_TRUNC
}
fn default_burnin() -> usize {
    DEFAULT_BURNIN
}
fn default_dist() -> ErrorDist {
    ErrorDist::Normal
}

impl SimConfig {
    /// Defaults for everything except the model, coefficient and dimensions.
    pub fn new(model: Model, a: f64, n: usize, r: usize) -> Self {
        SimConfig {
            model,
            a,
            n,
            r,
            grid_size: DEFAULT_GRID,
            k_trunc: DEFAULT_K_TRUNC,
            burnin: DEFAULT_BURNIN,
            dist: ErrorDist::Normal,
            mean: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dist(mut self, dist: ErrorDist) -> Self {
        self.dist = dist;
        self
    }

    pub fn with_grid(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn with_mean(mut self, mean: Matrix) -> Self {
        self.mean = Some(mean);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::invalid("coefficient a must be finite"));
        }
        match self.model {
            Model::Par if !(0.0..1.0).contains(&self.a) => {
                return Err(Error::invalid(format!("PAR needs 0 <= a < 1, got {}", self.a)));
            }
            Model::Pma if self.a < 0.0 => {
                return Err(Error::invalid(format!("PMA needs a >= 0, got {}", self.a)));
            }
            _ => {}
        }
        if self.n < 1 || self.r < 1 {
            return Err(Error::invalid("n and r must be positive"));
        }
        if self.grid_size < 2 {
            return Err(Error::invalid("G must be at least 2"));
        }
        if self.k_trunc < 1 {
            return Err(Error::invalid("K_trunc must be at least 1"));
        }
        if let Some(mean) = &self.mean {
            if mean.rows() != self.r || mean.cols() != self.grid_size {
                return Err(Error::invalid(format!(
                    "mean matrix is {}x{}, expected {}x{}",
                    mean.rows(),
                    mean.cols(),
                    self.r,
                    self.grid_size
                )));
            }
        }
        Ok(())
    }
}

/// One draw of `ε'`.
pub fn draw_error<R: Rng + ?Sized>(dist: ErrorDist, rng: &mut R) -> f64 {
    match dist {
        ErrorDist::Normal => StandardNormal.sample(rng),
        ErrorDist::ScaledT6 => {
            let t6 = StudentT::new(6.0).expect("6 degrees of freedom is valid");
            (2.0_f64 / 3.0).sqrt() * t6.sample(rng)
        }
    }
}

/// Basis table `c_k(u_g) = k⁻³ (cos 2πku_g + sin 2πku_g)` for `k = 1..=K`.
#[derive(Debug, Clone)]
pub struct InnovationBasis {
    k_trunc: usize,
    grid_len: usize,
    table: Vec<f64>,
}

impl InnovationBasis {
    pub fn new(grid: &Grid, k_trunc: usize) -> Self {
        let mut table = Vec::with_capacity(k_trunc * grid.len());
        for k in 1..=k_trunc {
            let kf = k as f64;
            let w = kf.powi(-3);
            table.extend(grid.points().iter().map(|&u| {
                let arg = 2.0 * PI * kf * u;
                w * (arg.cos() + arg.sin())
            }));
        }
        InnovationBasis { k_trunc, grid_len: grid.len(), table }
    }

    pub fn k_trunc(&self) -> usize {
        self.k_trunc
    }

    /// `c_k(u_g)` with `k` one-based.
    pub fn weight(&self, k: usize, g: usize) -> f64 {
        self.table[(k - 1) * self.grid_len + g]
    }

    /// Writes the curve for raw draws `ε'_1..ε'_K` into `out`, applying the
    /// tridiagonal coefficient mixing first.
    pub fn curve_from_raw(&self, raw: &[f64], out: &mut [f64]) {
        debug_assert_eq!(raw.len(), self.k_trunc);
        out.iter_mut().for_each(|v| *v = 0.0);
        let k_max = self.k_trunc;
        for k in 0..k_max {
            let mut coef = raw[k];
            if k > 0 {
                coef += 0.5 * raw[k - 1];
            }
            if k + 1 < k_max {
                coef += 0.5 * raw[k + 1];
            }
            let row = &self.table[k * self.grid_len..(k + 1) * self.grid_len];
            for (o, &c) in out.iter_mut().zip(row) {
                *o += coef * c;
            }
        }
    }

    /// Exact `Cov(ε(u_g), ε(u_h))` for the truncated construction with unit
    /// variance draws: `c(u_g)ᵀ A Aᵀ c(u_h)`.
    pub fn covariance(&self, g: usize, h: usize) -> f64 {
        // (Aᵀ c)(u) has entries c_l + ½c_{l-1} + ½c_{l+1}; A symmetric.
        let mixed = |g: usize| -> Vec<f64> {
            (1..=self.k_trunc)
                .map(|l| {
                    let mut v = self.weight(l, g);
                    if l > 1 {
                        v += 0.5 * self.weight(l - 1, g);
                    }
                    if l < self.k_trunc {
                        v += 0.5 * self.weight(l + 1, g);
                    }
                    v
                })
                .collect()
        };
        mixed(g).iter().zip(mixed(h)).map(|(a, b)| a * b).sum()
    }
}

/// `count × r` innovation curves, laid out `(i, j, g)`.
pub fn gen_innovations<R: Rng + ?Sized>(
    count: usize,
    r: usize,
    basis: &InnovationBasis,
    dist: ErrorDist,
    rng: &mut R,
) -> Vec<f64> {
    let g = basis.grid_len;
    let mut out = vec![0.0; count * r * g];
    let mut raw = vec![0.0; basis.k_trunc];
    for curve in out.chunks_exact_mut(g) {
        raw.iter_mut().for_each(|x| *x = draw_error(dist, rng));
        basis.curve_from_raw(&raw, curve);
    }
    out
}

/// Generates a PAR or PMA panel of length `cfg.n`.
pub fn simulate_panel(cfg: &SimConfig) -> Result<PanelSeries> {
    cfg.validate()?;
    let grid = Grid::uniform(cfg.grid_size)?;
    let basis = InnovationBasis::new(&grid, cfg.k_trunc);
    let (n, r, g) = (cfg.n, cfg.r, grid.len());
    let width = r * g;

    let mut main_rng = RngStream::new(cfg.seed, 0, Purpose::Innovations).rng();
    let innovations = gen_innovations(n, r, &basis, cfg.dist, &mut main_rng);

    let pre_count = match cfg.model {
        Model::Par => cfg.burnin,
        Model::Pma => 1,
    };
    let mut pre_rng = RngStream::new(cfg.seed, 0, Purpose::PreSample).rng();
    let pre = gen_innovations(pre_count, r, &basis, cfg.dist, &mut pre_rng);

    let a = cfg.a;
    let mut e = vec![0.0; n * width];
    match cfg.model {
        Model::Par => {
            let mut state = vec![0.0; width];
            for eps in pre.chunks_exact(width) {
                for (s, &x) in state.iter_mut().zip(eps) {
                    *s = a * *s + x;
                }
            }
            for (row, eps) in e.chunks_exact_mut(width).zip(innovations.chunks_exact(width)) {
                for ((s, out), &x) in state.iter_mut().zip(row.iter_mut()).zip(eps) {
                    *s = a * *s + x;
                    *out = *s;
                }
            }
        }
        Model::Pma => {
            let mut prev: &[f64] = &pre;
            for (row, eps) in e.chunks_exact_mut(width).zip(innovations.chunks_exact(width)) {
                for ((out, &x), &p) in row.iter_mut().zip(eps).zip(prev) {
                    *out = x + a * p;
                }
                prev = eps;
            }
        }
    }

    let mut data = vec![0.0; n * width];
    for (x_row, e_row) in data.chunks_exact_mut(width).zip(e.chunks_exact(width)) {
        for j in 0..r {
            let out = &mut x_row[j * g..(j + 1) * g];
            out.copy_from_slice(&e_row[j * g..(j + 1) * g]);
            if j > 0 {
                for (o, &v) in out.iter_mut().zip(&e_row[(j - 1) * g..j * g]) {
                    *o += 0.5 * v;
                }
            }
            if j + 1 < r {
                for (o, &v) in out.iter_mut().zip(&e_row[(j + 1) * g..(j + 2) * g]) {
                    *o += 0.5 * v;
                }
            }
            if let Some(mean) = &cfg.mean {
                for (o, &m) in out.iter_mut().zip(mean.row(j)) {
                    *o += m;
                }
            }
        }
    }
    PanelSeries::new(n, r, grid, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (a, b) in x.iter().zip(y) {
            sxy += (a - mx) * (b - my);
            sxx += (a - mx) * (a - mx);
            syy += (b - my) * (b - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn scaled_t6_has_unit_variance() {
        // Var(t_ν) = ν / (ν - 2).
        assert!(((2.0 / 3.0) * (6.0 / 4.0) - 1.0_f64).abs() < 1e-15);
    }

    #[test]
    fn error_draws_are_centered() {
        for dist in [ErrorDist::Normal, ErrorDist::ScaledT6] {
            let mut rng = RngStream::new(11, 0, Purpose::Other).rng();
            let draws = 1_000_000;
            let mean = (0..draws).map(|_| draw_error(dist, &mut rng)).sum::<f64>() / draws as f64;
            assert!(mean.abs() < 3e-3, "{dist}: {mean}");
        }
    }

    #[test]
    fn error_draws_are_reproducible() {
        let stream = RngStream::new(5, 3, Purpose::Innovations);
        let draw = |dist| -> Vec<f64> {
            let mut rng = stream.rng();
            (0..16).map(|_| draw_error(dist, &mut rng)).collect()
        };
        assert_eq!(draw(ErrorDist::Normal), draw(ErrorDist::Normal));
        assert_eq!(draw(ErrorDist::ScaledT6), draw(ErrorDist::ScaledT6));
    }

    #[test]
    fn truncation_tail_is_negligible() {
        let tail: f64 = (51..200_000).map(|k| (k as f64).powi(-3)).sum();
        assert!(tail < 2e-4);

        let grid = Grid::uniform(101).unwrap();
        let short = InnovationBasis::new(&grid, 50);
        let long = InnovationBasis::new(&grid, 500);
        let mut rng = RngStream::new(9, 0, Purpose::Other).rng();
        for _ in 0..20 {
            let raw: Vec<f64> = (0..500).map(|_| draw_error(ErrorDist::Normal, &mut rng)).collect();
            let mut a = vec![0.0; 101];
            let mut b = vec![0.0; 101];
            short.curve_from_raw(&raw[..50], &mut a);
            long.curve_from_raw(&raw, &mut b);
            let diff = a.iter().zip(&b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(diff < 1e-3, "{diff}");
        }
    }

    #[test]
    fn innovation_variance_matches_quadratic_form() {
        // Grid of 5 points puts u = 0.25 at index 1.
        let grid = Grid::uniform(5).unwrap();
        let basis = InnovationBasis::new(&grid, 50);
        let g = 1;
        // Oracle: Σ_{k,l} c_k c_l (A Aᵀ)_{kl} built from an explicit matrix.
        let k = 50;
        let mut a = vec![vec![0.0; k]; k];
        for i in 0..k {
            a[i][i] = 1.0;
            if i + 1 < k {
                a[i][i + 1] = 0.5;
                a[i + 1][i] = 0.5;
            }
        }
        let c: Vec<f64> = (1..=k).map(|l| basis.weight(l, g)).collect();
        let mut expected = 0.0;
        for p in 0..k {
            for q in 0..k {
                let aat: f64 = (0..k).map(|s| a[p][s] * a[q][s]).sum();
                expected += c[p] * c[q] * aat;
            }
        }
        assert!((basis.covariance(g, g) - expected).abs() < 1e-12);

        let reps = 100_000;
        let mut rng = RngStream::new(21, 0, Purpose::Other).rng();
        let draws = gen_innovations(reps, 1, &basis, ErrorDist::Normal, &mut rng);
        let xs: Vec<f64> = draws.chunks_exact(5).map(|c| c[g]).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        // Gaussian: SE of the sample variance is σ² √(2/(N-1)).
        let se = expected * (2.0 / (reps - 1) as f64).sqrt();
        assert!((var - expected).abs() < 3.0 * se, "var {var} vs {expected} (se {se})");
    }

    #[test]
    fn innovations_independent_across_time() {
        let grid = Grid::uniform(3).unwrap();
        let basis = InnovationBasis::new(&grid, 50);
        let reps = 100_000;
        let mut x = Vec::with_capacity(reps);
        let mut y = Vec::with_capacity(reps);
        for rep in 0..reps as u64 {
            let mut rng = RngStream::new(3, rep, Purpose::Other).rng();
            let d = gen_innovations(2, 1, &basis, ErrorDist::Normal, &mut rng);
            x.push(d[1]);
            y.push(d[3 + 1]);
        }
        let rho = corr(&x, &y);
        assert!(rho.abs() < 3.0 / (reps as f64).sqrt(), "{rho}");
    }

    #[test]
    fn par_and_pma_coincide_at_zero() {
        let par = SimConfig::new(Model::Par, 0.0, 30, 4).with_grid(21).with_seed(77);
        let pma = SimConfig { model: Model::Pma, ..par.clone() };
        assert_eq!(simulate_panel(&par).unwrap(), simulate_panel(&pma).unwrap());
    }

    fn series_at(panel: &PanelSeries, j: usize, g: usize) -> Vec<f64> {
        (0..panel.n()).map(|i| panel.get(i, j, g)).collect()
    }

    #[test]
    fn par_lag_one_autocorrelation() {
        // 5-point grid: u = 0, .25, .5, .75, 1. Innovations vanish nowhere
        // except through the basis, so every point carries the AR(1) signal.
        let cfg = SimConfig::new(Model::Par, 0.5, 4000, 3).with_grid(5).with_seed(2024);
        let panel = simulate_panel(&cfg).unwrap();
        let mut total = 0.0;
        let mut count = 0.0;
        for j in 0..3 {
            for g in 0..5 {
                let s = series_at(&panel, j, g);
                total += corr(&s[..s.len() - 1], &s[1..]);
                count += 1.0;
            }
        }
        let acf = total / count;
        assert!((acf - 0.5).abs() < 0.05, "{acf}");
    }

    #[test]
    fn spatial_dependence_pattern() {
        let cfg = SimConfig::new(Model::Par, 0.0, 4000, 4).with_grid(5).with_seed(99);
        let panel = simulate_panel(&cfg).unwrap();
        let mid = 2;
        // Panels two apart share one neighbour through the mixing matrix:
        // corr = (1/4) / sqrt(1.25 * 1.5).
        let two_apart = 0.25 / (1.25_f64 * 1.5).sqrt();
        let far = corr(&series_at(&panel, 0, mid), &series_at(&panel, 2, mid));
        assert!((far - two_apart).abs() < 0.05, "{far} vs {two_apart}");
        for g in 0..5 {
            let near = corr(&series_at(&panel, 0, g), &series_at(&panel, 1, g));
            assert!(near.abs() > 0.3, "g={g}: {near}");
            let distant = corr(&series_at(&panel, 0, g), &series_at(&panel, 3, g));
            assert!(distant.abs() < 0.05, "g={g}: {distant}");
        }
    }

    #[test]
    fn par_moments_are_stationary() {
        let cfg = SimConfig::new(Model::Par, 0.5, 4000, 2).with_grid(5).with_seed(7);
        let panel = simulate_panel(&cfg).unwrap();
        for j in 0..2 {
            for g in 0..5 {
                let s = series_at(&panel, j, g);
                let var = |x: &[f64]| {
                    let m = x.iter().sum::<f64>() / x.len() as f64;
                    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
                };
                let (v1, v2) = (var(&s[..2000]), var(&s[2000..]));
                assert!((v1 - v2).abs() / v1.max(v2) < 0.10, "j={j} g={g}: {v1} vs {v2}");
            }
        }
    }

    #[test]
    fn mean_is_added() {
        let mean = Matrix::filled(2, 11, 3.0);
        let base = SimConfig::new(Model::Pma, 0.5, 10, 2).with_grid(11).with_seed(1);
        let shifted = simulate_panel(&base.clone().with_mean(mean)).unwrap();
        let plain = simulate_panel(&base).unwrap();
        for (a, b) in shifted.as_slice().iter().zip(plain.as_slice()) {
            assert!((a - b - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(simulate_panel(&SimConfig::new(Model::Par, 1.0, 10, 2)).is_err());
        assert!(simulate_panel(&SimConfig::new(Model::Par, -0.1, 10, 2)).is_err());
        assert!(simulate_panel(&SimConfig::new(Model::Pma, -0.1, 10, 2)).is_err());
        assert!(simulate_panel(&SimConfig::new(Model::Pma, 1.5, 10, 2)).is_ok());
        let mut cfg = SimConfig::new(Model::Par, 0.2, 10, 2);
        cfg.k_trunc = 0;
        assert!(simulate_panel(&cfg).is_err());
        let cfg = SimConfig::new(Model::Par, 0.2, 10, 2).with_mean(Matrix::zeros(3, 101));
        assert!(simulate_panel(&cfg).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = SimConfig::new(Model::Pma, 0.5, 200, 5).with_seed(12).with_dist(ErrorDist::ScaledT6);
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("K_trunc = 50"));
        assert!(text.contains("G = 101"));
        let back: SimConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
