//! Closed-form band integrals of the UCA steering element.
//!
//! Expanding `exp(j·x·sin θ·cos u)` with `x = k0·r` as a power series gives
//!
//! ```text
//! ∫∫ exp(j·x·sin θ·cos(φ − γ)) dθ dφ = Σₙ (j·x)ⁿ/n! · ∫cosⁿ u du · ∫sinⁿ θ dθ
//! ```
//!
//! with `u = φ − γ`. Both one-dimensional integrals follow from the
//! reduction formulas
//!
//! ```text
//! ∫sinⁿ = −sinⁿ⁻¹·cos/n + (n−1)/n·∫sinⁿ⁻²
//! ∫cosⁿ =  cosⁿ⁻¹·sin/n + (n−1)/n·∫cosⁿ⁻²
//! ```
//!
//! evaluated upward from `n = 0, 1`. The recursion multiplies earlier
//! rounding errors by `(n−1)/n < 1`, so it is stable in the forward
//! direction.

use num_complex::Complex64;

use crate::array::ArrayConfig;
use crate::dictionary::Band;
use crate::error::{Error, Result};

/// Hard cap on series terms.
pub const MAX_TERMS: usize = 80;

/// Relative tail tolerance of the adaptive truncation.
pub const SERIES_TOL: f64 = 1e-12;

/// `[∫_lo^hi sinⁿ t dt for n in 0..=n_max]`.
pub fn sin_power_integrals(n_max: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (s_lo, c_lo) = lo.sin_cos();
    let (s_hi, c_hi) = hi.sin_cos();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(hi - lo);
    if n_max == 0 {
        return out;
    }
    out.push(c_lo - c_hi);
    // sⁿ⁻¹ at both ends, starting from n = 2
    let (mut p_lo, mut p_hi) = (s_lo, s_hi);
    for n in 2..=n_max {
        let nf = n as f64;
        let boundary = -(p_hi * c_hi - p_lo * c_lo) / nf;
        out.push(boundary + (nf - 1.0) / nf * out[n - 2]);
        p_lo *= s_lo;
        p_hi *= s_hi;
    }
    out
}

/// `[∫_lo^hi cosⁿ t dt for n in 0..=n_max]`.
pub fn cos_power_integrals(n_max: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (s_lo, c_lo) = lo.sin_cos();
    let (s_hi, c_hi) = hi.sin_cos();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(hi - lo);
    if n_max == 0 {
        return out;
    }
    out.push(s_hi - s_lo);
    let (mut p_lo, mut p_hi) = (c_lo, c_hi);
    for n in 2..=n_max {
        let nf = n as f64;
        let boundary = (p_hi * s_hi - p_lo * s_lo) / nf;
        out.push(boundary + (nf - 1.0) / nf * out[n - 2]);
        p_lo *= c_lo;
        p_hi *= c_hi;
    }
    out
}

/// Definite integral of `sinⁿ` over `[lo, hi]`, radians.
pub fn sin_power_integral(n: usize, lo: f64, hi: f64) -> f64 {
    sin_power_integrals(n, lo, hi)[n]
}

/// Definite integral of `cosⁿ` over `[lo, hi]`, radians.
pub fn cos_power_integral(n: usize, lo: f64, hi: f64) -> f64 {
    cos_power_integrals(n, lo, hi)[n]
}

/// A summed series together with the number of terms it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub terms: usize,
}

/// Everything about a band that does not depend on the sensor.
pub(crate) struct BandIntegrals {
    az_lo: f64,
    az_hi: f64,
    sin_table: Vec<f64>,
    /// `|∫cosⁿ| · |∫sinⁿ| ≤ az_width · el_width · sin_maxⁿ`
    az_width: f64,
    el_width: f64,
    sin_max: f64,
}

impl BandIntegrals {
    pub(crate) fn new(band: &Band) -> Self {
        let el_lo = band.el_lo.to_radians();
        let el_hi = band.el_hi.to_radians();
        Self {
            az_lo: band.az_lo.to_radians(),
            az_hi: band.az_hi.to_radians(),
            sin_table: sin_power_integrals(MAX_TERMS, el_lo, el_hi),
            az_width: (band.az_hi - band.az_lo).to_radians(),
            el_width: el_hi - el_lo,
            // sin is increasing on [0, π/2]
            sin_max: el_hi.sin(),
        }
    }

    pub(crate) fn element(&self, cfg: &ArrayConfig, sensor: usize) -> Result<SeriesValue> {
        let x = cfg.electrical_radius();
        let shift = cfg.sensor_angle(sensor);
        let cos_table = cos_power_integrals(MAX_TERMS, self.az_lo - shift, self.az_hi - shift);

        let area = self.az_width * self.el_width;
        let ratio = x * self.sin_max;
        let mut sum = Complex64::new(0.0, 0.0);
        // xⁿ/n! and jⁿ, advanced together
        let mut coef = 1.0;
        let mut j_pow = Complex64::new(1.0, 0.0);
        // bound on term n+1 divided by the area: xⁿ⁺¹·sin_maxⁿ⁺¹/(n+1)!
        let mut next_bound = ratio;
        let mut tail = f64::INFINITY;
        for n in 0..MAX_TERMS {
            sum += j_pow * (coef * cos_table[n] * self.sin_table[n]);

            let m = (n + 1) as f64;
            if ratio < m + 1.0 {
                tail = area * next_bound / (1.0 - ratio / (m + 1.0));
                if tail <= SERIES_TOL * sum.norm() {
                    return Ok(SeriesValue {
                        value: sum,
                        terms: n + 1,
                    });
                }
            }
            coef *= x / m;
            j_pow *= Complex64::new(0.0, 1.0);
            next_bound *= ratio / (m + 1.0);
        }
        Err(Error::SeriesNotConverged {
            sensor,
            terms: MAX_TERMS,
            tail_bound: tail,
            partial: sum.norm(),
        })
    }
}

/// Integrated steering element of sensor `sensor` over `band`, in rad².
pub fn integrated_atom_element(cfg: &ArrayConfig, band: &Band, sensor: usize) -> Result<Complex64> {
    integrated_atom_series(cfg, band, sensor).map(|s| s.value)
}

/// As [`integrated_atom_element`], also reporting the terms used.
pub fn integrated_atom_series(cfg: &ArrayConfig, band: &Band, sensor: usize) -> Result<SeriesValue> {
    band.validate()?;
    if sensor >= cfg.n_sensors() {
        return crate::error::domain(format!(
            "sensor {sensor} out of range for {} sensors",
            cfg.n_sensors()
        ));
    }
    BandIntegrals::new(band).element(cfg, sensor)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::array::steering_vector_rad;

    #[test]
    fn power_integral_base_cases() {
        for &(a, b) in &[(0.0, 1.0), (-0.3, 2.2), (1.0, 1.0)] {
            assert_eq!(sin_power_integral(0, a, b), b - a);
            assert_eq!(cos_power_integral(0, a, b), b - a);
        }
        assert!((sin_power_integral(1, 0.0, PI / 2.0) - 1.0).abs() < 1e-15);
        assert!(cos_power_integral(1, 0.0, PI).abs() < 1e-15);
    }

    #[test]
    fn power_integrals_match_closed_forms() {
        // ∫sin⁵ = −cos + 2cos³/3 − cos⁵/5 over [0, π/2] is 8/15
        assert!((sin_power_integral(5, 0.0, PI / 2.0) - 8.0 / 15.0).abs() < 1e-15);
        // ∫cos⁴ = 3t/8 + sin2t/4 + sin4t/32 over [0, π/2] is 3π/16
        assert!((cos_power_integral(4, 0.0, PI / 2.0) - 3.0 * PI / 16.0).abs() < 1e-15);
        // generic interval, checked against the same antiderivatives
        let (a, b): (f64, f64) = (0.2, 1.3);
        let f5 = |t: f64| -t.cos() + 2.0 * t.cos().powi(3) / 3.0 - t.cos().powi(5) / 5.0;
        assert!((sin_power_integral(5, a, b) - (f5(b) - f5(a))).abs() < 1e-14);
        let g4 = |t: f64| 3.0 * t / 8.0 + (2.0 * t).sin() / 4.0 + (4.0 * t).sin() / 32.0;
        assert!((cos_power_integral(4, a, b) - (g4(b) - g4(a))).abs() < 1e-14);
    }

    #[test]
    fn tiny_elevation_band_integrates_to_its_area() {
        let cfg = ArrayConfig::with_radius_in_wavelengths(15, 1.0).unwrap();
        let band = Band::new((40.0, 47.0), (0.0, 0.001), 0).unwrap();
        let eps = 0.001f64.to_radians();
        let area = 7f64.to_radians() * eps;
        // the integrand is 1 + j·x·θ·cos(φ − γ) + O(θ²): the real part is the
        // area to second order, the imaginary part is bounded by x·ε·area/2
        let x = cfg.electrical_radius();
        for n in 0..15 {
            let v = integrated_atom_element(&cfg, &band, n).unwrap();
            assert!((v.re - area).abs() / area < 1e-6, "sensor {n}: {v}");
            assert!(v.im.abs() <= 0.5 * x * eps * area * (1.0 + 1e-6), "sensor {n}: {v}");
        }
    }

    #[test]
    fn shrunken_band_approaches_pointwise_steering() {
        let cfg = ArrayConfig::with_radius_in_wavelengths(15, 1.0).unwrap();
        let w = 1e-6f64;
        let (az, el) = (1.1f64, 0.7f64);
        let band = Band::new((az.to_degrees(), (az + w).to_degrees()), (el.to_degrees(), (el + w).to_degrees()), 0).unwrap();
        let a = steering_vector_rad(&cfg, az, el);
        let area = band.az_width().to_radians() * band.el_width().to_radians();
        for n in 0..15 {
            let v = integrated_atom_element(&cfg, &band, n).unwrap() / area;
            assert!((v - a[n]).norm() < 1e-4, "sensor {n}");
        }
    }

    #[test]
    fn zero_width_band_is_zero() {
        let cfg = ArrayConfig::with_radius_in_wavelengths(8, 0.5).unwrap();
        let band = Band::new((10.0, 10.0), (20.0, 30.0), 0).unwrap();
        let s = integrated_atom_series(&cfg, &band, 3).unwrap();
        assert_eq!(s.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn large_electrical_radius_reports_non_convergence() {
        let cfg = ArrayConfig::with_radius_in_wavelengths(15, 8.0).unwrap();
        let band = Band::new((0.0, 360.0), (0.0, 90.0), 0).unwrap();
        match integrated_atom_series(&cfg, &band, 0) {
            Err(Error::SeriesNotConverged { terms, .. }) => assert_eq!(terms, MAX_TERMS),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_sensor_out_of_range() {
        let cfg = ArrayConfig::with_radius_in_wavelengths(5, 0.5).unwrap();
        assert!(integrated_atom_element(&cfg, &Band::full(), 5).is_err());
    }

    #[test]
    fn term_bound_decreases_past_the_electrical_radius() {
        let x = 2.0 * PI;
        let mut b = 1.0f64;
        let mut prev = f64::INFINITY;
        for n in 1..MAX_TERMS {
            b *= x / n as f64;
            if n as f64 > x {
                assert!(b < prev);
            }
            prev = b;
        }
    }
}
