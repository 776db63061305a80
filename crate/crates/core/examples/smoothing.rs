// Raw long-format records to a panel, then bands and a parallelism test.

use std::f64::consts::PI;
use std::io::Write;

use panelband::ingest::{build_panel, default_bandwidth, load_long_csv, SmoothConfig};
use panelband::{jscb, make_grid, parallelism_test, BootstrapConfig};

pub fn run_example() -> panelband::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("temperatures.csv");
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "unit,period,position,value")?;
    for (j, city) in ["Halifax", "Ottawa", "Victoria"].iter().enumerate() {
        for year in 1990..2030 {
            for day in 0..73 {
                let x = day as f64 / 72.0;
                let wobble = ((year * 31 + day * 7 + j * 13) % 17) as f64 / 17.0 - 0.5;
                let value = j as f64 - 12.0 * (2.0 * PI * x).cos() + wobble;
                if day % 20 == 5 {
                    writeln!(file, "{city},{year},{x},NA")?;
                } else {
                    writeln!(file, "{city},{year},{x},{value}")?;
                }
            }
        }
    }
    drop(file);

    let records = load_long_csv(&path)?;
    let h = default_bandwidth(73);
    let built = build_panel(&records, &SmoothConfig::new(h, make_grid(51)?))?;
    println!(
        "{} records -> panel n={} r={} G={} (h = {h:.3}), units {:?}",
        records.len(),
        built.panel.n(),
        built.panel.r(),
        built.panel.grid_len(),
        built.units
    );
    let cfg = BootstrapConfig::new(2, 500, 0.05, 1);
    let bands = jscb(&built.panel, &cfg)?;
    println!("band quantile {:.3}", bands.quantile);
    let test = parallelism_test(&built.panel, &cfg)?;
    println!("parallel: T_n = {:.3}, critical {:.3}, reject = {}", test.statistic, test.critical_value, test.reject);
    Ok(())
}

#[allow(dead_code)]
fn main() -> panelband::Result<()> {
    run_example()
}
