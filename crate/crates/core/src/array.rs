//! Uniform circular array geometry and steering vectors.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Geometry of a uniform circular array.
///
/// `radius` and `wavelength` share one length unit; with the default
/// wavelength of 1.0 the radius reads directly in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    n_sensors: usize,
    radius: f64,
    #[serde(default = "unit_wavelength")]
    wavelength: f64,
}

fn unit_wavelength() -> f64 {
    1.0
}

impl ArrayConfig {
    pub fn new(n_sensors: usize, radius: f64, wavelength: f64) -> Result<Self> {
        let cfg = Self {
            n_sensors,
            radius,
            wavelength,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Array with the radius given in wavelengths.
    pub fn with_radius_in_wavelengths(n_sensors: usize, radius: f64) -> Result<Self> {
        Self::new(n_sensors, radius, 1.0)
    }

    /// Checks the invariants; deserialized configs bypass [`ArrayConfig::new`].
    pub fn validate(&self) -> Result<()> {
        if self.n_sensors < 3 {
            return domain(format!("array needs at least 3 sensors, got {}", self.n_sensors));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return domain(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return domain(format!("wavelength must be positive, got {}", self.wavelength));
        }
        Ok(())
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Wave number `2π/λ`.
    pub fn wave_number(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Electrical radius `k0·r`, the phase scale of every steering element.
    pub fn electrical_radius(&self) -> f64 {
        self.wave_number() * self.radius
    }

    /// Angular position of sensor `n` measured from the x axis, radians.
    pub fn sensor_angle(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.n_sensors as f64
    }
}

/// One far-field narrowband emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    /// Degrees in `[0, 360)`, counterclockwise from the x axis.
    pub azimuth_deg: f64,
    /// Degrees in `[0, 90]`, measured down from the z axis.
    pub elevation_deg: f64,
    /// Signal variance (linear).
    #[serde(default = "unit_power")]
    pub power: f64,
}

fn unit_power() -> f64 {
    1.0
}

impl Source {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, power: f64) -> Result<Self> {
        let s = Self {
            azimuth_deg,
            elevation_deg,
            power,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_angles(self.azimuth_deg, self.elevation_deg)?;
        if !(self.power.is_finite() && self.power > 0.0) {
            return domain(format!("source power must be positive, got {}", self.power));
        }
        Ok(())
    }

    /// `ξ = k0·r·sin θ` for this source.
    pub fn xi(&self, cfg: &ArrayConfig) -> f64 {
        cfg.electrical_radius() * self.elevation_deg.to_radians().sin()
    }

    pub fn direction(&self) -> Direction {
        Direction {
            azimuth_deg: self.azimuth_deg,
            elevation_deg: self.elevation_deg,
        }
    }
}

/// An (azimuth, elevation) pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl Direction {
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self {
            azimuth_deg,
            elevation_deg,
        }
    }

    /// Great-circle angle to `other`, degrees. Elevation is measured from
    /// the array axis.
    pub fn separation_deg(&self, other: &Direction) -> f64 {
        let unit = |d: &Direction| {
            let (sp, cp) = d.azimuth_deg.to_radians().sin_cos();
            let (st, ct) = d.elevation_deg.to_radians().sin_cos();
            [st * cp, st * sp, ct]
        };
        let (a, b) = (unit(self), unit(other));
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let sin = cross.iter().map(|v| v * v).sum::<f64>().sqrt();
        sin.atan2(dot).to_degrees()
    }
}

/// A nonempty collection of sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceSet {
    sources: Vec<Source>,
}

impl SourceSet {
    pub fn new(sources: Vec<Source>) -> Result<Self> {
        let set = Self { sources };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return domain("a source set needs at least one source");
        }
        self.sources.iter().try_for_each(Source::validate)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Source> {
        self.sources.iter()
    }

    pub fn as_slice(&self) -> &[Source] {
        &self.sources
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.sources.iter().map(Source::direction).collect()
    }
}

pub(crate) fn check_angles(azimuth_deg: f64, elevation_deg: f64) -> Result<()> {
    if !(0.0..360.0).contains(&azimuth_deg) {
        return domain(format!("azimuth {azimuth_deg}° outside [0, 360)"));
    }
    if !(0.0..=90.0).contains(&elevation_deg) {
        return domain(format!("elevation {elevation_deg}° outside [0, 90]"));
    }
    Ok(())
}

/// Steering vector `a_n = exp(j·k0·r·sin θ·cos(φ − γ_n))`.
pub fn steering_vector(
    cfg: &ArrayConfig,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> Result<DVector<Complex64>> {
    check_angles(azimuth_deg, elevation_deg)?;
    Ok(steering_vector_rad(
        cfg,
        azimuth_deg.to_radians(),
        elevation_deg.to_radians(),
    ))
}

/// Unchecked radian form; any real angles are accepted.
pub fn steering_vector_rad(cfg: &ArrayConfig, azimuth: f64, elevation: f64) -> DVector<Complex64> {
    let xi = cfg.electrical_radius() * elevation.sin();
    DVector::from_fn(cfg.n_sensors(), |n, _| {
        Complex64::from_polar(1.0, xi * (azimuth - cfg.sensor_angle(n)).cos())
    })
}

/// Steering matrix with one column per direction.
pub fn steering_matrix(cfg: &ArrayConfig, directions: &[Direction]) -> Result<DMatrix<Complex64>> {
    let mut a = DMatrix::zeros(cfg.n_sensors(), directions.len());
    for (k, d) in directions.iter().enumerate() {
        a.set_column(k, &steering_vector(cfg, d.azimuth_deg, d.elevation_deg)?);
    }
    Ok(a)
}

/// Wraps an azimuth in degrees into `[0, 360)`.
pub fn wrap_azimuth(azimuth_deg: f64) -> f64 {
    let w = azimuth_deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}
