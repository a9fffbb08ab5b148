//! Monte Carlo trials and their aggregation.
//!
//! Trial `i` of a sweep point synthesizes its data from seed `seed + i`, so
//! every point of a sweep sees the same source and noise realizations up to
//! scale. Records are collected in trial order before they are reduced,
//! which makes the metrics independent of the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use ucacal::baseline::{grid_music, narrowband_lasso};
use ucacal::metrics::{rmse_angles, rmse_coupling};
use ucacal::pipeline::{run, PipelineConfig};
use ucacal::{synthesize, ArrayConfig, CouplingVector, Direction, Error, SourceSet};

use crate::error::{invalid, Result};
use crate::scenario::{Estimator, Scenario};

/// The varied quantity of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Snr,
    Snapshots,
    Alpha,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Snr => "snr",
            Axis::Snapshots => "snapshots",
            Axis::Alpha => "alpha",
        }
    }

    /// Only the proposed estimator has a regularization that sets the
    /// detected source count; the references are handed the true count.
    pub fn applies_to(self, e: Estimator) -> bool {
        self != Axis::Alpha || e == Estimator::Proposed
    }
}

/// Settings shared by every trial of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub snr_db: f64,
    pub snapshots: usize,
    pub alpha: f64,
}

impl Condition {
    pub fn base(s: &Scenario) -> Self {
        Self {
            snr_db: s.snr_db[0],
            snapshots: s.snapshots,
            alpha: s.pipeline.alpha,
        }
    }

    pub fn with(self, axis: Axis, value: f64) -> Result<Self> {
        let mut c = self;
        match axis {
            Axis::Snr => {
                if value.is_nan() {
                    return invalid("SNR must be a number");
                }
                c.snr_db = value;
            }
            Axis::Snapshots => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return invalid(format!("snapshot counts must be positive integers, got {value}"));
                }
                c.snapshots = value as usize;
            }
            Axis::Alpha => {
                if !(value > 0.0 && value <= 1.0) {
                    return invalid(format!("alpha must lie in (0, 1], got {value}"));
                }
                c.alpha = value;
            }
        }
        Ok(c)
    }
}

/// Outcome of one estimator on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub estimates: Vec<Direction>,
    pub coupling: Option<CouplingVector>,
    /// Dictionary columns or grid points the estimator evaluated.
    pub atoms: usize,
    /// The estimator returned an error other than detecting nothing.
    pub failed: bool,
    pub runtime_s: f64,
}

/// Inputs every trial shares, validated once.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub array: ArrayConfig,
    pub sources: SourceSet,
    pub coupling: CouplingVector,
    pub truth: Vec<Direction>,
}

impl Setup {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            array: scenario.array,
            sources: scenario.source_set()?,
            coupling: scenario.coupling_vector()?,
            truth: scenario.truth(),
            scenario: scenario.clone(),
        })
    }
}

pub fn run_trial(setup: &Setup, estimator: Estimator, cond: Condition, trial: usize) -> Result<TrialRecord> {
    let s = &setup.scenario;
    let seed = s.seed.wrapping_add(trial as u64);
    let data = synthesize(&setup.array, &setup.sources, &setup.coupling, cond.snapshots, cond.snr_db, seed)?;
    let k = setup.truth.len();
    let start = Instant::now();
    let (outcome, atoms) = match estimator {
        Estimator::Proposed => {
            let pcfg = PipelineConfig {
                alpha: cond.alpha,
                ..s.pipeline.clone()
            };
            let r = run(&data.snapshots, &setup.array, &pcfg);
            let atoms = r.as_ref().map_or(0, |r| r.stages.iter().map(|st| st.n_bands).sum());
            (r.map(|r| (r.doas, Some(r.coupling))), atoms)
        }
        Estimator::NarrowbandGridLasso => (
            narrowband_lasso(&data.snapshots, &setup.array, k, &s.baseline).map(|d| (d, None)),
            s.baseline.grid.len(),
        ),
        Estimator::GridMusic => (
            grid_music(&data.snapshots, &setup.array, k, &s.baseline.grid).map(|d| (d, None)),
            s.baseline.grid.len(),
        ),
    };
    let runtime_s = start.elapsed().as_secs_f64();
    let (estimates, coupling, failed) = match outcome {
        Ok((d, c)) => (d, c, false),
        Err(Error::NoSourcesDetected) => (Vec::new(), None, false),
        Err(_) => (Vec::new(), None, true),
    };
    Ok(TrialRecord {
        trial,
        estimates,
        coupling,
        atoms,
        failed,
        runtime_s,
    })
}

/// All trials of one sweep point, in trial order. Runs on the current
/// rayon pool.
pub fn run_point(setup: &Setup, estimator: Estimator, cond: Condition) -> Result<Vec<TrialRecord>> {
    (0..setup.scenario.trials)
        .into_par_iter()
        .map(|i| run_trial(setup, estimator, cond, i))
        .collect()
}

/// Summary of one estimator at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub sweep: &'static str,
    pub value: f64,
    pub estimator: Estimator,
    pub trials: usize,
    /// `None` when no trial returned the true source count.
    pub rmse_angles: Option<f64>,
    /// `None` for estimators without a coupling estimate.
    pub rmse_coupling_pct: Option<f64>,
    /// Fraction of trials reporting exactly the true number of sources.
    pub correct_order_prob: f64,
    pub matched_trials: usize,
    pub excluded_trials: usize,
    pub failed_trials: usize,
    pub mean_atoms: f64,
    #[serde(skip)]
    pub mean_runtime_s: f64,
}

pub fn summarize(
    setup: &Setup,
    axis: Axis,
    value: f64,
    estimator: Estimator,
    records: &[TrialRecord],
) -> Result<MetricsRow> {
    if records.is_empty() {
        return invalid("no trials to summarize");
    }
    let mut records: Vec<&TrialRecord> = records.iter().collect();
    records.sort_by_key(|r| r.trial);
    let k = setup.truth.len();
    let m = records.len() as f64;

    let ok: Vec<&&TrialRecord> = records.iter().filter(|r| !r.failed).collect();
    let pairs: Vec<_> = ok.iter().map(|r| (r.estimates.clone(), setup.truth.clone())).collect();
    let angles = rmse_angles(&pairs)?;
    let couplings: Vec<_> = ok
        .iter()
        .filter_map(|r| r.coupling.clone().map(|c| (c, setup.coupling.clone())))
        .collect();
    let rmse_coupling_pct = if couplings.is_empty() {
        None
    } else {
        Some(rmse_coupling(&couplings, setup.scenario.coupling_rmse)?)
    };
    let correct = ok.iter().filter(|r| r.estimates.len() == k).count();

    Ok(MetricsRow {
        sweep: axis.name(),
        value,
        estimator,
        trials: records.len(),
        rmse_angles: angles.rmse_deg,
        rmse_coupling_pct,
        correct_order_prob: correct as f64 / m,
        matched_trials: angles.matched_trials,
        excluded_trials: angles.excluded_trials,
        failed_trials: records.len() - ok.len(),
        mean_atoms: records.iter().map(|r| r.atoms as f64).sum::<f64>() / m,
        mean_runtime_s: records.iter().map(|r| r.runtime_s).sum::<f64>() / m,
    })
}

/// Every estimator of the scenario at every value, with `base` supplying
/// the quantities that stay fixed. Rows are ordered by value, then
/// estimator.
pub fn run_sweep(setup: &Setup, axis: Axis, values: &[f64], base: Condition) -> Result<Vec<MetricsRow>> {
    if values.is_empty() {
        return invalid("a sweep needs at least one value");
    }
    let mut rows = Vec::new();
    for &v in values {
        let cond = base.with(axis, v)?;
        for &e in setup.scenario.estimators.iter().filter(|&&e| axis.applies_to(e)) {
            let records = run_point(setup, e, cond)?;
            rows.push(summarize(setup, axis, v, e, &records)?);
        }
    }
    Ok(rows)
}

/// Runs `f` on a pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}
