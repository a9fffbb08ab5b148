//! Experiment description read from JSON.
//!
//! ```json
//! {
//!   "array": { "n_sensors": 15, "radius": 1.0 },
//!   "sources": [
//!     { "azimuth_deg": 243.4, "elevation_deg": 18.3 },
//!     { "azimuth_deg": 60.0, "elevation_deg": 83.6, "power": 1.0 }
//!   ],
//!   "coupling": [[0.79, 0.432], [0.35, 0.16]],
//!   "snapshots": 200,
//!   "snr_db": [0, 5, 10, 15, 20],
//!   "trials": 50,
//!   "seed": 1
//! }
//! ```
//!
//! `coupling` lists `[re, im]` of `c₂, c₃, …`; `c₁ = 1` and omitted
//! coefficients are zero. Optional keys: `pipeline` (estimator settings,
//! see [`PipelineConfig`]), `estimators` (default: all three),
//! `baseline` (grid and LASSO settings of the reference estimators) and
//! `coupling_rmse` (`"mean"` or `"literal"`). Unknown keys are rejected
//! at every level.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use ucacal::baseline::NarrowbandConfig;
use ucacal::metrics::CouplingRmseForm;
use ucacal::pipeline::PipelineConfig;
use ucacal::{presets, ArrayConfig, Complex64, CouplingVector, Direction, Source, SourceSet};

use crate::error::{invalid, BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Integrated-dictionary zooming with coupling estimation.
    Proposed,
    /// LASSO over pointwise steering vectors on a fixed grid, no coupling
    /// correction.
    NarrowbandGridLasso,
    /// Peaks of the 2-D MUSIC pseudospectrum on a fixed grid, no coupling
    /// correction.
    GridMusic,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Proposed, Estimator::NarrowbandGridLasso, Estimator::GridMusic];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Proposed => "proposed",
            Estimator::NarrowbandGridLasso => "narrowband-grid-lasso",
            Estimator::GridMusic => "grid-music",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Estimator::ALL.iter().map(|e| e.name()).collect();
                format!("unknown estimator {s:?}, expected one of {}", names.join(", "))
            })
    }
}

fn all_estimators() -> Vec<Estimator> {
    Estimator::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub sources: Vec<Source>,
    #[serde(default)]
    pub coupling: Vec<[f64; 2]>,
    /// Snapshot count `T`.
    pub snapshots: usize,
    pub snr_db: Vec<f64>,
    /// Monte Carlo trials `M` per sweep point.
    pub trials: usize,
    /// Trial `i` draws its data from seed `seed + i`.
    pub seed: u64,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default = "all_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub baseline: NarrowbandConfig,
    #[serde(default)]
    pub coupling_rmse: CouplingRmseForm,
}

impl Scenario {
    /// The reference experiment: 15 sensors, three sources, two coupling
    /// coefficients, `T = 200`, SNR 0 to 20 dB, 50 trials.
    pub fn preset() -> Self {
        let c = presets::coupling();
        Self {
            array: presets::array(),
            sources: presets::sources().as_slice().to_vec(),
            coupling: c.coeffs()[1..]
                .iter()
                .take_while(|v| v.norm() > 0.0)
                .map(|v| [v.re, v.im])
                .collect(),
            snapshots: presets::SNAPSHOTS,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 50,
            seed: 1,
            pipeline: PipelineConfig::default(),
            estimators: all_estimators(),
            baseline: NarrowbandConfig::default(),
            coupling_rmse: CouplingRmseForm::Mean,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.source_set()?;
        self.coupling_vector()?;
        self.pipeline.validate()?;
        self.baseline.grid.validate()?;
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.snapshots == 0 {
            return invalid("snapshots must be at least 1");
        }
        if self.snr_db.is_empty() {
            return invalid("snr_db needs at least one value");
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return invalid("snr_db values must be numbers");
        }
        if self.estimators.is_empty() {
            return invalid("estimators needs at least one entry");
        }
        if !(self.baseline.alpha > 0.0 && self.baseline.alpha <= 1.0) {
            return invalid(format!("baseline alpha must lie in (0, 1], got {}", self.baseline.alpha));
        }
        Ok(())
    }

    pub fn source_set(&self) -> Result<SourceSet> {
        Ok(SourceSet::new(self.sources.clone())?)
    }

    pub fn coupling_vector(&self) -> Result<CouplingVector> {
        let tail: Vec<Complex64> = self.coupling.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(CouplingVector::leading(&tail, self.array.n_sensors())?)
    }

    pub fn truth(&self) -> Vec<Direction> {
        self.sources.iter().map(Source::direction).collect()
    }
}
