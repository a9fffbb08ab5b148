//! Integrated wideband dictionaries over azimuth × elevation bands.
//!
//! Each dictionary column is the steering vector integrated over one band,
//! so the columns of a stage-0 grid jointly cover every direction: no
//! source can fall between atoms. Zooming keeps the bands the sparse solver
//! activates and splits them into finer children.

mod band;
pub mod integrate;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use band::{band_center, refine, Band, BandGrid};
pub use integrate::{
    cos_power_integral, integrated_atom_element, integrated_atom_series, sin_power_integral,
    SeriesValue,
};

use crate::array::ArrayConfig;
use crate::error::Result;
use integrate::BandIntegrals;

/// Column scaling applied after integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Normalization {
    /// Raw integrals (units of rad²).
    Raw,
    /// Each column scaled to unit Euclidean norm.
    #[default]
    UnitNorm,
}

/// `N×Q` matrix of integrated atoms, column `q` belonging to band `q`.
#[derive(Debug, Clone)]
pub struct IntegratedDictionary {
    atoms: DMatrix<Complex64>,
    bands: Vec<Band>,
    /// Factor each raw column was divided by (1 for [`Normalization::Raw`]).
    scales: Vec<f64>,
    /// Series terms used per column (max over sensors).
    terms: Vec<usize>,
}

impl IntegratedDictionary {
    pub fn atoms(&self) -> &DMatrix<Complex64> {
        &self.atoms
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn terms(&self) -> &[usize] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    /// Diagnostic dump: one record per column.
    pub fn dump(&self) -> DictionaryDump {
        let columns = (0..self.len())
            .map(|q| ColumnRecord {
                band: self.bands[q],
                terms: self.terms[q],
                scale: self.scales[q],
                atom: self.atoms.column(q).iter().map(|v| [v.re, v.im]).collect(),
            })
            .collect();
        DictionaryDump { columns }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRecord {
    pub band: Band,
    pub terms: usize,
    pub scale: f64,
    /// `[re, im]` per sensor.
    pub atom: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryDump {
    pub columns: Vec<ColumnRecord>,
}

impl DictionaryDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dump serializes")
    }
}

/// Integrates every band of `grid`. Columns are computed in parallel.
pub fn build_dictionary(
    cfg: &ArrayConfig,
    grid: &BandGrid,
    normalization: Normalization,
) -> Result<IntegratedDictionary> {
    build_from_bands(cfg, grid.bands(), normalization)
}

pub fn build_from_bands(
    cfg: &ArrayConfig,
    bands: &[Band],
    normalization: Normalization,
) -> Result<IntegratedDictionary> {
    cfg.validate()?;
    let n = cfg.n_sensors();
    let columns = bands
        .par_iter()
        .map(|band| {
            band.validate()?;
            let integrals = BandIntegrals::new(band);
            let mut col = Vec::with_capacity(n);
            let mut terms = 0;
            for sensor in 0..n {
                let s = integrals.element(cfg, sensor)?;
                terms = terms.max(s.terms);
                col.push(s.value);
            }
            Ok((col, terms))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut atoms = DMatrix::zeros(n, bands.len());
    let mut scales = Vec::with_capacity(bands.len());
    let mut terms = Vec::with_capacity(bands.len());
    for (q, (col, t)) in columns.into_iter().enumerate() {
        let scale = match normalization {
            Normalization::Raw => 1.0,
            Normalization::UnitNorm => {
                let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if norm > 0.0 {
                    norm
                } else {
                    1.0
                }
            }
        };
        for (i, v) in col.into_iter().enumerate() {
            atoms[(i, q)] = v / scale;
        }
        scales.push(scale);
        terms.push(t);
    }
    Ok(IntegratedDictionary {
        atoms,
        bands: bands.to_vec(),
        scales,
        terms,
    })
}
