//! File formats.
//!
//! Panel tensors come in two layouts, chosen by file extension:
//!
//! - binary (any extension other than `.csv`): the 8-byte magic `PBPANEL1`,
//!   then `n`, `r`, `G` as little-endian `u64`, then `n·r·G` little-endian
//!   `f64` values in row-major `(i, j, g)` order;
//! - CSV (`.csv`): a header line `n,r,G`, one line with the three sizes,
//!   then `n·r` lines of `G` values, line `i·r + j` holding curve `X_{i,j}`.
//!
//! The grid is always the uniform grid with `G` points.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::curves::{Grid, Matrix, PanelSeries};
use crate::error::{Error, Result};
use crate::experiments::ExperimentReport;
use crate::infer::{BandSet, ParallelismResult};
use crate::simgen::SimConfig;

pub const PANEL_MAGIC: &[u8; 8] = b"PBPANEL1";

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_panel(path: impl AsRef<Path>, panel: &PanelSeries) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        writeln!(out, "n,r,G")?;
        writeln!(out, "{},{},{}", panel.n(), panel.r(), panel.grid_len())?;
        for row in panel.as_slice().chunks(panel.grid_len()) {
            write_row(&mut out, row)?;
        }
    } else {
        out.write_all(PANEL_MAGIC)?;
        for size in [panel.n(), panel.r(), panel.grid_len()] {
            out.write_all(&(size as u64).to_le_bytes())?;
        }
        for v in panel.as_slice() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_row(out: &mut impl Write, row: &[f64]) -> Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            out.write_all(b",")?;
        }
        first = false;
        write!(out, "{v}")?;
    }
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_panel(path: impl AsRef<Path>) -> Result<PanelSeries> {
    let path = path.as_ref();
    if is_csv(path) {
        read_panel_csv(path)
    } else {
        read_panel_binary(path)
    }
}

fn sizes(n: u64, r: u64, g: u64) -> Result<(usize, usize, usize, usize)> {
    let total = n
        .checked_mul(r)
        .and_then(|x| x.checked_mul(g))
        .filter(|&t| t <= (1 << 40))
        .ok_or_else(|| Error::Format(format!("implausible sizes n={n}, r={r}, G={g}")))?;
    Ok((n as usize, r as usize, g as usize, total as usize))
}

fn build(n: usize, r: usize, g: usize, data: Vec<f64>) -> Result<PanelSeries> {
    let grid = Grid::uniform(g).map_err(|e| Error::Format(e.to_string()))?;
    PanelSeries::new(n, r, grid, data).map_err(|e| Error::Format(e.to_string()))
}

fn read_panel_binary(path: &Path) -> Result<PanelSeries> {
    let mut input = BufReader::new(File::open(path)?);
    let mut head = [0u8; 32];
    input.read_exact(&mut head).map_err(|_| Error::Format("file shorter than the 32-byte header".into()))?;
    if &head[..8] != PANEL_MAGIC {
        return Err(Error::Format("bad magic; expected PBPANEL1".into()));
    }
    let word = |k: usize| u64::from_le_bytes(head[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let (n, r, g, total) = sizes(word(1), word(2), word(3))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != total * 8 {
        return Err(Error::Format(format!("expected {} data bytes, found {}", total * 8, bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    build(n, r, g, data)
}

fn read_panel_csv(path: &Path) -> Result<PanelSeries> {
    let parse_err = |line: u64, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "n,r,G" {
        return Err(parse_err(1, "expected header `n,r,G`".into()));
    }
    let dims = lines.next().transpose()?.unwrap_or_default();
    let dims: Vec<u64> = dims
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(2, "sizes must be three non-negative integers".into()))?;
    if dims.len() != 3 {
        return Err(parse_err(2, "sizes must be three non-negative integers".into()));
    }
    let (n, r, g, total) = sizes(dims[0], dims[1], dims[2])?;
    let mut data = Vec::with_capacity(total);
    let mut rows = 0usize;
    for (k, line) in lines.enumerate() {
        let line = line?;
        let number = k as u64 + 3;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 =
                field.trim().parse().map_err(|_| parse_err(number, format!("`{}` is not a number", field.trim())))?;
            data.push(v);
        }
        if data.len() - before != g {
            return Err(parse_err(number, format!("expected {g} values, found {}", data.len() - before)));
        }
        rows += 1;
    }
    if rows != n * r {
        return Err(Error::Format(format!("expected {} curve rows, found {rows}", n * r)));
    }
    build(n, r, g, data)
}

pub fn read_sim_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(cfg)
}

pub fn write_sim_config(path: impl AsRef<Path>, cfg: &SimConfig) -> Result<()> {
    let text = toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// Wide layout: `u`, then `lower_j,center_j,upper_j` for every panel.
/// `labels` names the panels (defaults to `1..=r`).
pub fn write_bands_csv(path: impl AsRef<Path>, bands: &BandSet, labels: Option<&[String]>) -> Result<()> {
    let r = bands.center.rows();
    let names = panel_labels(r, labels)?;
    let (lower, upper) = (bands.lower(), bands.upper());
    let mut w = csv_writer(path.as_ref())?;
    let mut header = vec!["u".to_string()];
    for name in &names {
        header.extend([format!("lower_{name}"), format!("center_{name}"), format!("upper_{name}")]);
    }
    w.write_record(&header)?;
    for (g, u) in bands.grid.points().iter().enumerate() {
        let mut row = vec![u.to_string()];
        for j in 0..r {
            row.extend([lower.get(j, g), bands.center.get(j, g), upper.get(j, g)].map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the wide layout back into `(u, lower, center, upper)`.
pub fn read_bands_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Matrix, Matrix, Matrix)> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let cols = reader.headers()?.len();
    if cols < 4 || (cols - 1) % 3 != 0 {
        return Err(Error::Format(format!("{}: {cols} columns is not 1 + 3r", path.display())));
    }
    let r = (cols - 1) / 3;
    let mut u = Vec::new();
    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let vals: Vec<f64> = row
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { path: path.to_path_buf(), line, message: e.to_string() })?;
        u.push(vals[0]);
        for (j, triple) in vals[1..].chunks(3).enumerate() {
            for (p, v) in parts.iter_mut().zip(triple) {
                p.push((j, *v));
            }
        }
    }
    let g = u.len();
    let to_matrix = |entries: &[(usize, f64)]| {
        let mut m = Matrix::zeros(r, g);
        for (k, &(j, v)) in entries.iter().enumerate() {
            m.set(j, k / r, v);
        }
        m
    };
    Ok((u, to_matrix(&parts[0]), to_matrix(&parts[1]), to_matrix(&parts[2])))
}

/// Square matrix with a label column and header row.
pub fn write_pvalues_csv(path: impl AsRef<Path>, pvalues: &Matrix, labels: Option<&[String]>) -> Result<()> {
    let names = panel_labels(pvalues.rows(), labels)?;
    let mut w = csv_writer(path.as_ref())?;
    let mut header = vec![String::new()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (j, name) in names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(pvalues.row(j).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn panel_labels(r: usize, labels: Option<&[String]>) -> Result<Vec<String>> {
    match labels {
        Some(l) if l.len() != r => Err(Error::invalid(format!("{} labels for {r} panels", l.len()))),
        Some(l) => Ok(l.to_vec()),
        None => Ok((1..=r).map(|j| j.to_string()).collect()),
    }
}

/// One replicate per line under a `replicate` header.
pub fn write_replicates_csv(path: impl AsRef<Path>, replicates: &[f64]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["replicate"])?;
    for v in replicates {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reports_csv(path: impl AsRef<Path>, reports: &[ExperimentReport]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    for report in reports {
        w.serialize(report)?;
    }
    w.flush()?;
    Ok(())
}

/// `b,rate,stderr` rows of a power curve.
pub fn write_power_curve_csv(path: impl AsRef<Path>, reports: &[ExperimentReport]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["b", "rate", "stderr"])?;
    for rep in reports {
        let b = rep.b.map_or_else(String::new, |b| b.to_string());
        w.write_record([b, rep.rate.to_string(), rep.mc_stderr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Summary fields of a parallelism test, for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct TestSummary {
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub min_pairwise_pvalue: f64,
    pub block: usize,
    pub replicates_used: usize,
}

impl From<&ParallelismResult> for TestSummary {
    fn from(res: &ParallelismResult) -> Self {
        TestSummary {
            statistic: res.statistic,
            critical_value: res.critical_value,
            alpha: res.alpha,
            reject: res.reject,
            min_pairwise_pvalue: res.min_pvalue(),
            block: res.block,
            replicates_used: res.replicates_used,
        }
    }
}
