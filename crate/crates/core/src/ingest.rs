//! Raw long-format records to panels via local linear smoothing.
//!
//! Input rows carry a unit label (e.g. a city), an integer period (e.g. a
//! year), a position in `[0, 1]` within the period (e.g. day-of-year / 365)
//! and a value that may be missing. Every `(unit, period)` cell is smoothed
//! onto a common grid; periods become the time index and units the panels.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{Curve, Grid, PanelSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub unit: String,
    pub period: i64,
    pub position: f64,
    /// `None` for a missing observation.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Kernel {
    #[default]
    Epanechnikov,
}

impl Kernel {
    pub fn weight(self, t: f64) -> f64 {
        match self {
            Kernel::Epanechnikov if t.abs() < 1.0 => 0.75 * (1.0 - t * t),
            Kernel::Epanechnikov => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothConfig {
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub grid: Grid,
    /// Minimum number of points with positive kernel weight at each grid point.
    pub min_points: usize,
}

impl SmoothConfig {
    pub fn new(bandwidth: f64, grid: Grid) -> Self {
        SmoothConfig { bandwidth, kernel: Kernel::Epanechnikov, grid, min_points: 3 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth <= 1.0) {
            return Err(Error::invalid(format!("bandwidth must lie in (0, 1], got {}", self.bandwidth)));
        }
        if self.min_points < 2 {
            return Err(Error::invalid("min_points must be at least 2"));
        }
        Ok(())
    }
}

/// Rule-of-thumb bandwidth `1.5 · σ · N^{-1/5}` for `N` design points spread
/// uniformly over `[0, 1]` (`σ = 1/√12`).
pub fn default_bandwidth(points_per_curve: usize) -> f64 {
    let n = points_per_curve.max(1) as f64;
    (1.5 / 12.0_f64.sqrt() * n.powf(-0.2)).min(1.0)
}

const COLUMNS: [&str; 4] = ["unit", "period", "position", "value"];

/// Reads a `unit,period,position,value` CSV. Empty or `NA` values are missing.
pub fn load_long_csv(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 4];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}` in header")))?;
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |k: usize| row.get(index[k]).unwrap_or("");
        let unit = field(0).to_string();
        if unit.is_empty() {
            return Err(parse_err(line, "empty unit".into()));
        }
        let period: i64 =
            field(1).parse().map_err(|_| parse_err(line, format!("period `{}` is not an integer", field(1))))?;
        let position: f64 =
            field(2).parse().map_err(|_| parse_err(line, format!("position `{}` is not a number", field(2))))?;
        if !(0.0..=1.0).contains(&position) {
            return Err(parse_err(line, format!("position {position} outside [0, 1]")));
        }
        let value = match field(3) {
            "" | "NA" => None,
            text => {
                let v: f64 = text.parse().map_err(|_| parse_err(line, format!("value `{text}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("value `{text}` is not finite")));
                }
                Some(v)
            }
        };
        records.push(RawRecord { unit, period, position, value });
    }
    Ok(records)
}

/// Local linear fit evaluated at each grid point.
pub fn local_linear_smooth(points: &[(f64, f64)], cfg: &SmoothConfig) -> Result<Curve> {
    cfg.validate()?;
    let h = cfg.bandwidth;
    let mut values = Vec::with_capacity(cfg.grid.len());
    for &u in cfg.grid.points() {
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut support = 0;
        for &(x, y) in points {
            let d = x - u;
            let w = cfg.kernel.weight(d / h);
            if w > 0.0 {
                support += 1;
                s0 += w;
                s1 += w * d;
                s2 += w * d * d;
                t0 += w * y;
                t1 += w * d * y;
            }
        }
        let det = s0 * s2 - s1 * s1;
        if support < cfg.min_points || det.is_nan() || det <= 1e-12 * s0 * s2 {
            return Err(Error::SparseData { position: u, found: support, needed: cfg.min_points });
        }
        values.push((s2 * t0 - s1 * t1) / det);
    }
    Curve::new(&cfg.grid, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltPanel {
    pub panel: PanelSeries,
    /// Panel labels, sorted.
    pub units: Vec<String>,
    /// Time labels, sorted.
    pub periods: Vec<i64>,
}

/// Smooths every `(unit, period)` cell; rows `i` follow sorted periods and
/// columns `j` sorted units. Missing values are dropped before fitting.
pub fn build_panel(records: &[RawRecord], cfg: &SmoothConfig) -> Result<BuiltPanel> {
    cfg.validate()?;
    let mut cells: BTreeMap<(i64, &str), Vec<(f64, f64)>> = BTreeMap::new();
    let mut units = BTreeSet::new();
    let mut periods = BTreeSet::new();
    for rec in records {
        units.insert(rec.unit.as_str());
        periods.insert(rec.period);
        let cell = cells.entry((rec.period, rec.unit.as_str())).or_default();
        if let Some(v) = rec.value {
            cell.push((rec.position, v));
        }
    }
    if cells.is_empty() {
        return Err(Error::Structural("no records".into()));
    }
    let missing: Vec<String> = periods
        .iter()
        .flat_map(|&p| units.iter().map(move |&u| (p, u)))
        .filter(|key| !cells.contains_key(key))
        .map(|(p, u)| format!("({u}, {p})"))
        .collect();
    if !missing.is_empty() {
        let shown = missing.iter().take(20).cloned().collect::<Vec<_>>().join(", ");
        let more = if missing.len() > 20 { format!(" and {} more", missing.len() - 20) } else { String::new() };
        return Err(Error::Structural(format!("{} missing cells: {shown}{more}", missing.len())));
    }

    // BTreeMap order is (period, unit), exactly the panel layout.
    let ordered: Vec<_> = cells.iter().collect();
    let curves: Vec<Curve> = ordered
        .par_iter()
        .map(|((period, unit), pts)| {
            local_linear_smooth(pts, cfg).map_err(|e| Error::Cell {
                unit: unit.to_string(),
                period: *period,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let data: Vec<f64> = curves.into_iter().flat_map(Curve::into_values).collect();
    let panel = PanelSeries::new(periods.len(), units.len(), cfg.grid.clone(), data)?;
    Ok(BuiltPanel {
        panel,
        units: units.into_iter().map(str::to_string).collect(),
        periods: periods.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;
    use std::io::Write;

    fn grid(g: usize) -> Grid {
        Grid::uniform(g).unwrap()
    }

    fn write_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_header_only() {
        let f = write_csv("unit,period,position,value\n");
        assert!(load_long_csv(f.path()).unwrap().is_empty());
    }

    #[test]
    fn csv_single_row_and_missing() {
        let f = write_csv("unit,period,position,value\nToronto,1902,0.5,-3.25\nToronto,1902,0.75,NA\nOttawa,1903,1,\n");
        let recs = load_long_csv(f.path()).unwrap();
        assert_eq!(recs[0], RawRecord { unit: "Toronto".into(), period: 1902, position: 0.5, value: Some(-3.25) });
        assert_eq!(recs[1].value, None);
        assert_eq!(recs[2].value, None);
        assert_eq!(recs[2].position, 1.0);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let f = write_csv("unit,period,position,value\nA,1,0.5,1\nA,1,1.5,2\n");
        match load_long_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_csv("unit,period,position,value\nA,x,0.5,1\n");
        assert!(matches!(load_long_csv(f.path()), Err(Error::Parse { line: 2, .. })));
        let f = write_csv("unit,year,position,value\n");
        assert!(matches!(load_long_csv(f.path()), Err(Error::Parse { line: 1, .. })));
        let f = write_csv("unit,period,position,value\nA,1,0.5\n");
        assert!(matches!(load_long_csv(f.path()), Err(Error::Parse { .. })));
        assert!(load_long_csv("/nonexistent/file.csv").is_err());
    }

    fn design(count: usize) -> Vec<f64> {
        (0..count).map(|d| d as f64 / (count - 1) as f64).collect()
    }

    #[test]
    fn reproduces_affine_data() {
        let xs = design(365);
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 2.0 * x + 1.0)).collect();
        for h in [0.02, 0.1, 0.5, 1.0] {
            let curve = local_linear_smooth(&pts, &SmoothConfig::new(h, grid(101))).unwrap();
            for (&u, &v) in grid(101).points().iter().zip(curve.values()) {
                assert!((v - (2.0 * u + 1.0)).abs() < 1e-10, "h={h} u={u}: {v}");
            }
        }
        let constant: Vec<(f64, f64)> = xs.iter().map(|&x| (x, -4.0)).collect();
        let curve = local_linear_smooth(&constant, &SmoothConfig::new(0.05, grid(51))).unwrap();
        assert!(curve.values().iter().all(|v| (v + 4.0).abs() < 1e-12));
    }

    #[test]
    fn smoother_is_linear_in_the_data() {
        let xs = design(200);
        let d1: Vec<(f64, f64)> = xs.iter().map(|&x| (x, (5.0 * x).sin())).collect();
        let d2: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x * x * x - x)).collect();
        let comb: Vec<(f64, f64)> =
            xs.iter().zip(d1.iter().zip(&d2)).map(|(&x, (a, b))| (x, 2.0 * a.1 - 3.5 * b.1)).collect();
        let cfg = SmoothConfig::new(0.07, grid(41));
        let s1 = local_linear_smooth(&d1, &cfg).unwrap();
        let s2 = local_linear_smooth(&d2, &cfg).unwrap();
        let sc = local_linear_smooth(&comb, &cfg).unwrap();
        for ((a, b), c) in s1.values().iter().zip(s2.values()).zip(sc.values()) {
            assert!((2.0 * a - 3.5 * b - c).abs() < 1e-10);
        }
    }

    /// Equivalent weights `l_i(u)` of the local linear fit, so that the
    /// estimate at `u` is `Σ l_i(u) y_i`.
    fn equivalent_weights(xs: &[f64], u: f64, h: f64) -> Vec<f64> {
        let w: Vec<f64> = xs.iter().map(|x| Kernel::Epanechnikov.weight((x - u) / h)).collect();
        let s = |p: i32| xs.iter().zip(&w).map(|(x, w)| w * (x - u).powi(p)).sum::<f64>();
        let (s0, s1, s2) = (s(0), s(1), s(2));
        xs.iter().zip(&w).map(|(x, w)| w * (s2 - s1 * (x - u)) / (s0 * s2 - s1 * s1)).collect()
    }

    #[test]
    fn noisy_sine_matches_equivalent_kernel() {
        let xs = design(365);
        let h = 0.05;
        let cfg = SmoothConfig::new(h, grid(101));
        let sigma = 0.1;
        let noise = Normal::new(0.0, sigma).unwrap();
        let runs = 200;
        let mut interior_good = 0;
        let mut sums = vec![(0.0, 0.0); cfg.grid.len()];
        for run in 0..runs as u64 {
            let mut rng = RngStream::new(77, run, Purpose::Other).rng();
            let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, (2.0 * PI * x).sin() + noise.sample(&mut rng))).collect();
            let curve = local_linear_smooth(&pts, &cfg).unwrap();
            let mut interior = 0.0_f64;
            for (g, (&u, &v)) in cfg.grid.points().iter().zip(curve.values()).enumerate() {
                let err = v - (2.0 * PI * u).sin();
                sums[g].0 += err;
                sums[g].1 += err * err;
                if (h..=1.0 - h).contains(&u) {
                    interior = interior.max(err.abs());
                }
            }
            if interior <= 0.08 {
                interior_good += 1;
            }
        }
        assert!(interior_good as f64 >= 0.95 * runs as f64, "{interior_good}/{runs}");
        for (g, &u) in cfg.grid.points().iter().enumerate() {
            let l = equivalent_weights(&xs, u, h);
            let sd = sigma * l.iter().map(|w| w * w).sum::<f64>().sqrt();
            let bias = l.iter().zip(&xs).map(|(w, x)| w * (2.0 * PI * x).sin()).sum::<f64>() - (2.0 * PI * u).sin();
            let mean = sums[g].0 / runs as f64;
            let var = sums[g].1 / runs as f64 - mean * mean;
            assert!((mean - bias).abs() < 4.0 * sd / (runs as f64).sqrt(), "u={u}: mean {mean} vs bias {bias}");
            assert!((var.sqrt() / sd - 1.0).abs() < 0.2, "u={u}: sd {} vs {sd}", var.sqrt());
        }
    }

    #[test]
    fn sparse_data_is_reported() {
        let pts: Vec<(f64, f64)> = (0..31).map(|d| (d as f64 / 100.0, 1.0)).collect();
        match local_linear_smooth(&pts, &SmoothConfig::new(0.15, grid(11))) {
            Err(Error::SparseData { position, .. }) => assert!((position - 0.5).abs() < 1e-12, "{position}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(local_linear_smooth(&pts, &SmoothConfig::new(0.0, grid(11))).is_err());
    }

    fn linear_records(units: &[&str], periods: &[i64]) -> Vec<RawRecord> {
        let mut out = Vec::new();
        for (ui, unit) in units.iter().enumerate() {
            for &p in periods {
                for x in design(50) {
                    out.push(RawRecord {
                        unit: unit.to_string(),
                        period: p,
                        position: x,
                        value: Some(ui as f64 + p as f64 * x),
                    });
                }
            }
        }
        out
    }

    #[test]
    fn builds_sorted_panel() {
        let mut recs = linear_records(&["b", "a"], &[3, 1, 2]);
        recs.push(RawRecord { unit: "a".into(), period: 1, position: 0.3, value: None });
        let built = build_panel(&recs, &SmoothConfig::new(0.2, grid(11))).unwrap();
        assert_eq!(built.units, vec!["a", "b"]);
        assert_eq!(built.periods, vec![1, 2, 3]);
        assert_eq!((built.panel.n(), built.panel.r(), built.panel.grid_len()), (3, 2, 11));
        // unit "b" was listed first (index 0 in the generator).
        for (i, &p) in built.periods.iter().enumerate() {
            for (j, offset) in [(0, 1.0), (1, 0.0)] {
                for (g, &u) in built.panel.grid().points().iter().enumerate() {
                    let expected = offset + p as f64 * u;
                    assert!((built.panel.get(i, j, g) - expected).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ragged_input_lists_missing_cells() {
        let mut recs = linear_records(&["a", "b"], &[1, 2]);
        recs.retain(|r| !(r.unit == "b" && r.period == 2));
        match build_panel(&recs, &SmoothConfig::new(0.2, grid(11))) {
            Err(Error::Structural(msg)) => assert!(msg.contains("(b, 2)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn failing_cell_is_identified() {
        let mut recs = linear_records(&["a"], &[1, 2]);
        recs.retain(|r| !(r.period == 2 && r.position > 0.5));
        match build_panel(&recs, &SmoothConfig::new(0.1, grid(11))) {
            Err(Error::Cell { unit, period, .. }) => assert_eq!((unit.as_str(), period), ("a", 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_bandwidth_is_in_range() {
        let h = default_bandwidth(365);
        assert!(h > 0.05 && h < 0.2, "{h}");
    }
}
