//! Monte Carlo harness for coverage, size and power studies.
//!
//! Replication `t` of an experiment with seed `s` uses three independent
//! streams derived from `(s, t)`: one for the simulated panel, one for the
//! random mean shifts `c_j`, and one seed for the bootstrap. Replications
//! run in parallel and are aggregated by counting, so rates are identical
//! for any thread count.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boot::{mv_select, BootstrapConfig, MvCandidates};
use crate::curves::{Grid, Matrix};
use crate::error::{Error, Result};
use crate::infer::{band_contains, jscb, parallelism_test};
use crate::rng::{Purpose, RngStream};
use crate::simgen::{simulate_panel, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Coverage,
    TypeI,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Model, dimensions and base seed. Any mean in here is ignored; each
    /// mode builds its own.
    pub sim: SimConfig,
    /// `block` is used only when `mv` is false.
    pub boot: BootstrapConfig,
    pub replications: usize,
    pub mode: Mode,
    #[serde(default)]
    pub power_b_grid: Vec<f64>,
    /// Select the block size per replication by minimum volatility.
    pub mv: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, sim: SimConfig, boot: BootstrapConfig, replications: usize) -> Self {
        ExperimentConfig { sim, boot, replications, mode, power_b_grid: Vec::new(), mv: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::invalid("need at least one replication"));
        }
        self.sim.validate()?;
        if matches!(self.mode, Mode::TypeI | Mode::Power) && self.sim.r < 2 {
            return Err(Error::invalid("parallelism experiments need r >= 2"));
        }
        if self.mode == Mode::Power && self.power_b_grid.is_empty() {
            return Err(Error::invalid("power mode needs a non-empty b grid"));
        }
        if !self.mv {
            self.boot.validate(self.sim.n)?;
        }
        Ok(())
    }
}

/// One cell of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub model: String,
    pub a: f64,
    pub n: usize,
    pub r: usize,
    pub alpha: f64,
    pub dist: String,
    pub b: Option<f64>,
    pub replications: usize,
    pub hits: usize,
    /// Coverage or rejection frequency.
    pub rate: f64,
    /// `√(p̂(1-p̂)/R)`.
    pub mc_stderr: f64,
    /// Average block size used across replications.
    pub mean_block: f64,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig, b: Option<f64>, hits: usize, block_total: usize) -> Self {
        let reps = cfg.replications;
        let rate = hits as f64 / reps as f64;
        ExperimentReport {
            mode: cfg.mode,
            model: cfg.sim.model.to_string(),
            a: cfg.sim.a,
            n: cfg.sim.n,
            r: cfg.sim.r,
            alpha: cfg.boot.alpha,
            dist: cfg.sim.dist.to_string(),
            b,
            replications: reps,
            hits,
            rate,
            mc_stderr: (rate * (1.0 - rate) / reps as f64).sqrt(),
            mean_block: block_total as f64 / reps as f64,
        }
    }
}

struct Replication {
    sim: SimConfig,
    boot_seed: u64,
}

fn replication(cfg: &ExperimentConfig, t: usize) -> Replication {
    let seed = cfg.sim.seed;
    let mut sim = cfg.sim.clone();
    sim.seed = RngStream::new(seed, t as u64, Purpose::Innovations).child_seed();
    sim.mean = None;
    Replication { sim, boot_seed: RngStream::new(seed, t as u64, Purpose::Nested).child_seed() }
}

/// `c_j ~ N(0, 1)` shifts for replication `t`.
fn mean_shifts(cfg: &ExperimentConfig, t: usize) -> Vec<f64> {
    let mut rng = RngStream::new(cfg.sim.seed, t as u64, Purpose::MeanShifts).rng();
    (0..cfg.sim.r).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `g_j(u) = u² - u + c_j`, with `g_1` tilted by `b u`.
fn parallel_design(grid: &Grid, shifts: &[f64], tilt: f64) -> Matrix {
    let rows: Vec<Vec<f64>> = shifts
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let slope = if j == 0 { tilt - 1.0 } else { -1.0 };
            grid.points().iter().map(|&u| u * u + slope * u + c).collect()
        })
        .collect();
    Matrix::from_rows(&rows).expect("rows share the grid length")
}

fn boot_for(cfg: &ExperimentConfig, panel: &crate::curves::PanelSeries, seed: u64) -> Result<BootstrapConfig> {
    let block = if cfg.mv { mv_select(panel, &MvCandidates::default_for(panel.n())?)? } else { cfg.boot.block };
    Ok(BootstrapConfig { block, seed, ..cfg.boot })
}

/// Per-replication outcome: (hit, block used).
fn run_replications<F>(cfg: &ExperimentConfig, body: F) -> Result<(usize, usize)>
where
    F: Fn(usize) -> Result<(bool, usize)> + Sync + Send,
{
    let outcomes: Vec<(bool, usize)> = (0..cfg.replications).into_par_iter().map(body).collect::<Result<_>>()?;
    Ok(outcomes.iter().fold((0, 0), |(h, b), &(hit, block)| (h + hit as usize, b + block)))
}

/// Coverage of an arbitrary target mean matrix (`r × G`).
pub fn coverage_of(cfg: &ExperimentConfig, target: &Matrix) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (hits, blocks) = run_replications(cfg, |t| {
        let rep = replication(cfg, t);
        let panel = simulate_panel(&rep.sim)?;
        let boot = boot_for(cfg, &panel, rep.boot_seed)?;
        let bands = jscb(&panel, &boot)?;
        Ok((band_contains(&bands, target)?.overall, boot.block))
    })?;
    Ok(ExperimentReport::new(cfg, None, hits, blocks))
}

/// Fraction of replications whose bands contain the zero mean function.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.mode != Mode::Coverage {
        return Err(Error::invalid("run_coverage needs mode = Coverage"));
    }
    coverage_of(cfg, &Matrix::zeros(cfg.sim.r, cfg.sim.grid_size))
}

fn rejection_rate(cfg: &ExperimentConfig, tilt: f64) -> Result<(usize, usize)> {
    let grid = Grid::uniform(cfg.sim.grid_size)?;
    run_replications(cfg, |t| {
        let rep = replication(cfg, t);
        let mean = parallel_design(&grid, &mean_shifts(cfg, t), tilt);
        let panel = simulate_panel(&rep.sim.with_mean(mean))?;
        let boot = boot_for(cfg, &panel, rep.boot_seed)?;
        Ok((parallelism_test(&panel, &boot)?.reject, boot.block))
    })
}

/// Rejection frequency under parallel means `u² - u + c_j`.
pub fn run_type1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.mode != Mode::TypeI {
        return Err(Error::invalid("run_type1 needs mode = TypeI"));
    }
    cfg.validate()?;
    let (hits, blocks) = rejection_rate(cfg, 0.0)?;
    Ok(ExperimentReport::new(cfg, None, hits, blocks))
}

/// Rejection frequency for each deviation `b` in the grid. All `b` values
/// reuse the same replication streams.
pub fn run_power(cfg: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    if cfg.mode != Mode::Power {
        return Err(Error::invalid("run_power needs mode = Power"));
    }
    cfg.validate()?;
    cfg.power_b_grid
        .iter()
        .map(|&b| {
            let (hits, blocks) = rejection_rate(cfg, b)?;
            Ok(ExperimentReport::new(cfg, Some(b), hits, blocks))
        })
        .collect()
}

/// Dispatches on `cfg.mode`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    match cfg.mode {
        Mode::Coverage => run_coverage(cfg).map(|r| vec![r]),
        Mode::TypeI => run_type1(cfg).map(|r| vec![r]),
        Mode::Power => run_power(cfg),
    }
}
