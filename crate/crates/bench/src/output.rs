//! CSV tables of a finished sweep.
//!
//! A sweep named `name` writes four files into the output directory:
//!
//! | file | contents |
//! |------|----------|
//! | `name.csv` | one [`MetricsRow`] per sweep value and estimator |
//! | `name_plot.csv` | the same metrics in long format, `sweep,estimator,x,metric,value` |
//! | `name_atoms.csv` | atoms evaluated against a uniform grid of equal final resolution |
//! | `name_timing.csv` | mean wall-clock time per trial |
//!
//! Only the timing table changes between runs of the same scenario.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::harness::{MetricsRow, Setup};
use crate::scenario::Estimator;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub sweep: &'static str,
    pub estimator: Estimator,
    pub x: f64,
    pub metric: &'static str,
    pub value: f64,
}

pub fn plot_rows(rows: &[MetricsRow]) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for r in rows {
        let metrics = [
            ("rmse_angles", r.rmse_angles),
            ("rmse_coupling_pct", r.rmse_coupling_pct),
            ("correct_order_prob", Some(r.correct_order_prob)),
        ];
        for (metric, value) in metrics {
            if let Some(value) = value {
                out.push(PlotRow {
                    sweep: r.sweep,
                    estimator: r.estimator,
                    x: r.value,
                    metric,
                    value,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomRow {
    pub sweep: &'static str,
    pub value: f64,
    pub estimator: Estimator,
    pub mean_atoms: f64,
    pub resolution_az_deg: f64,
    pub resolution_el_deg: f64,
    /// Points of a uniform grid with the same final spacing.
    pub equal_resolution_grid_atoms: f64,
}

pub fn atom_rows(setup: &Setup, rows: &[MetricsRow]) -> Vec<AtomRow> {
    let s = &setup.scenario;
    rows.iter()
        .map(|r| {
            let (res_az, res_el, full) = match r.estimator {
                Estimator::Proposed => {
                    let az: usize = s.pipeline.schedule.iter().map(|&(a, _)| a).product();
                    let el: usize = s.pipeline.schedule.iter().map(|&(_, e)| e).product();
                    (360.0 / az as f64, 90.0 / el as f64, az as f64 * el as f64)
                }
                _ => {
                    let g = s.baseline.grid;
                    (360.0 / g.n_az as f64, 90.0 / (g.n_el - 1) as f64, g.len() as f64)
                }
            };
            AtomRow {
                sweep: r.sweep,
                value: r.value,
                estimator: r.estimator,
                mean_atoms: r.mean_atoms,
                resolution_az_deg: res_az,
                resolution_el_deg: res_el,
                equal_resolution_grid_atoms: full,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TimingRow {
    sweep: &'static str,
    value: f64,
    estimator: Estimator,
    mean_runtime_s: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Writes the four tables and returns their paths, metrics first.
pub fn write_sweep(dir: &Path, name: &str, setup: &Setup, rows: &[MetricsRow]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = |suffix: &str| dir.join(format!("{name}{suffix}.csv"));
    let paths = vec![path(""), path("_plot"), path("_atoms"), path("_timing")];
    write_csv(&paths[0], rows)?;
    write_csv(&paths[1], &plot_rows(rows))?;
    write_csv(&paths[2], &atom_rows(setup, rows))?;
    let timing: Vec<_> = rows
        .iter()
        .map(|r| TimingRow {
            sweep: r.sweep,
            value: r.value,
            estimator: r.estimator,
            mean_runtime_s: r.mean_runtime_s,
        })
        .collect();
    write_csv(&paths[3], &timing)?;
    Ok(paths)
}
