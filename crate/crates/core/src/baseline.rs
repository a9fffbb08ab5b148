//! Reference estimators without coupling correction: 2-D MUSIC on a point
//! grid, and the LASSO over a dictionary of pointwise steering vectors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector_rad, ArrayConfig, Direction};
use crate::error::{domain, Error, Result};
use crate::lasso::{gamma_max, solve_lasso, PenaltyMode, StackedSystem};
use crate::subspace::reduce;
use crate::synth::SnapshotMatrix;

/// A uniform grid of points: `n_az` azimuths `360·i/n_az` and `n_el`
/// elevations `90·j/(n_el − 1)`, both edges included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointGrid {
    pub n_az: usize,
    pub n_el: usize,
}

impl PointGrid {
    pub fn new(n_az: usize, n_el: usize) -> Result<Self> {
        let g = Self { n_az, n_el };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_az == 0 || self.n_el < 2 {
            return domain(format!("grid needs n_az ≥ 1 and n_el ≥ 2, got {self:?}"));
        }
        Ok(())
    }

    /// One point per degree in both angles.
    pub fn one_degree() -> Self {
        Self { n_az: 360, n_el: 91 }
    }

    pub fn len(&self) -> usize {
        self.n_az * self.n_el
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `i·n_el + j`.
    pub fn point(&self, i: usize, j: usize) -> Direction {
        Direction::new(
            360.0 * i as f64 / self.n_az as f64,
            90.0 * j as f64 / (self.n_el - 1) as f64,
        )
    }

    fn steering_matrix(&self, cfg: &ArrayConfig) -> DMatrix<Complex64> {
        let n = cfg.n_sensors();
        let scale = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        let mut a = DMatrix::zeros(n, self.len());
        for i in 0..self.n_az {
            for j in 0..self.n_el {
                let d = self.point(i, j);
                let col = steering_vector_rad(cfg, d.azimuth_deg.to_radians(), d.elevation_deg.to_radians()) * scale;
                a.set_column(i * self.n_el + j, &col);
            }
        }
        a
    }

    /// Grid indices of local maxima of `values` (laid out like the points),
    /// strongest first. Azimuth wraps; elevation edges are open. Plateaus
    /// yield their first point only.
    pub fn peaks(&self, values: &[f64]) -> Vec<usize> {
        let (na, ne) = (self.n_az as isize, self.n_el as isize);
        let at = |i: isize, j: isize| values[(i.rem_euclid(na) * ne + j) as usize];
        let mut out = Vec::new();
        for i in 0..na {
            for j in 0..ne {
                let v = at(i, j);
                let mut peak = true;
                'scan: for di in -1..=1isize {
                    for dj in -1..=1isize {
                        let (ii, jj) = (i + di, j + dj);
                        if (di == 0 && dj == 0) || jj < 0 || jj >= ne || (na < 3 && di != 0) {
                            continue;
                        }
                        let w = at(ii, jj);
                        let earlier = (ii.rem_euclid(na), jj) < (i, j);
                        if w > v || (earlier && w == v) {
                            peak = false;
                            break 'scan;
                        }
                    }
                }
                if peak {
                    out.push((i * ne + j) as usize);
                }
            }
        }
        out.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        out
    }

    fn direction_of(&self, q: usize) -> Direction {
        self.point(q / self.n_el, q % self.n_el)
    }
}

/// `1/‖E_nᴴ·a(φ, θ)‖²` at every grid point, with `a` of unit norm.
pub fn music_spectrum(x: &SnapshotMatrix, cfg: &ArrayConfig, k: usize, grid: &PointGrid) -> Result<Vec<f64>> {
    grid.validate()?;
    let en = reduce(x, k)?.noise_basis;
    let proj = en.adjoint() * grid.steering_matrix(cfg);
    Ok(proj
        .column_iter()
        .map(|c| 1.0 / c.norm_squared().max(f64::MIN_POSITIVE))
        .collect())
}

/// The `k` highest peaks of the MUSIC pseudospectrum, strongest first.
/// Fewer are returned if the spectrum has fewer peaks.
pub fn grid_music(x: &SnapshotMatrix, cfg: &ArrayConfig, k: usize, grid: &PointGrid) -> Result<Vec<Direction>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if x.n_sensors() != cfg.n_sensors() {
        return domain("snapshot rows do not match the array");
    }
    let spectrum = music_spectrum(x, cfg, k, grid)?;
    Ok(grid.peaks(&spectrum).into_iter().take(k).map(|q| grid.direction_of(q)).collect())
}

/// Settings of [`narrowband_lasso`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NarrowbandConfig {
    pub grid: PointGrid,
    pub alpha: f64,
    /// KKT tolerance relative to `γ_max`.
    pub lasso_tol: f64,
    pub lasso_max_iter: usize,
}

impl Default for NarrowbandConfig {
    fn default() -> Self {
        Self {
            grid: PointGrid::one_degree(),
            alpha: 0.3,
            lasso_tol: 1e-8,
            lasso_max_iter: 20_000,
        }
    }
}

/// Group LASSO of the reduced snapshots on unit-norm point atoms at
/// `γ = 2α·γ_max`; returns the `k` strongest local maxima of the
/// coefficient norms, strongest first.
pub fn narrowband_lasso(
    x: &SnapshotMatrix,
    cfg: &ArrayConfig,
    k: usize,
    nb: &NarrowbandConfig,
) -> Result<Vec<Direction>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    nb.grid.validate()?;
    if !(nb.alpha > 0.0 && nb.alpha <= 1.0) {
        return domain(format!("alpha must lie in (0, 1], got {}", nb.alpha));
    }
    let sub = reduce(x, k)?;
    let sys = StackedSystem::from_reduced(&nb.grid.steering_matrix(cfg), &sub.reduced, PenaltyMode::Group)?;
    let g_max = gamma_max(&sys);
    if g_max == 0.0 {
        return Err(Error::NoSourcesDetected);
    }
    let sol = solve_lasso(&sys, 2.0 * nb.alpha * g_max, nb.lasso_tol * g_max, nb.lasso_max_iter)?;
    let norms = sol.block_norms();
    Ok(nb
        .grid
        .peaks(&norms)
        .into_iter()
        .filter(|&q| norms[q] > 0.0)
        .take(k)
        .map(|q| nb.grid.direction_of(q))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{Source, SourceSet};
    use crate::coupling::CouplingVector;
    use crate::presets;
    use crate::synth::synthesize;

    fn single(az: f64, el: f64, snr: f64) -> (ArrayConfig, SnapshotMatrix) {
        let cfg = presets::array();
        let ss = SourceSet::new(vec![Source::new(az, el, 1.0).unwrap()]).unwrap();
        let c = CouplingVector::identity(cfg.n_sensors()).unwrap();
        (cfg.clone(), synthesize(&cfg, &ss, &c, 100, snr, 5).unwrap().snapshots)
    }

    #[test]
    fn peaks_wrap_in_azimuth() {
        let grid = PointGrid::new(4, 3).unwrap();
        // row-major over azimuth: the maximum at azimuth index 3 borders index 0
        let mut v = vec![0.0; 12];
        v[3 * 3 + 1] = 5.0;
        v[1] = 4.0;
        v[2 * 3 + 2] = 1.0;
        assert_eq!(grid.peaks(&v), vec![10]);
    }

    #[test]
    fn plateau_gives_one_peak() {
        let grid = PointGrid::new(5, 2).unwrap();
        assert_eq!(grid.peaks(&[1.0; 10]), vec![0]);
    }

    #[test]
    fn music_finds_an_on_grid_source() {
        let grid = PointGrid::one_degree();
        let (cfg, x) = single(123.0, 47.0, 30.0);
        assert_eq!(grid_music(&x, &cfg, 1, &grid).unwrap(), vec![Direction::new(123.0, 47.0)]);
        assert!(grid_music(&x, &cfg, 0, &grid).unwrap().is_empty());
    }

    #[test]
    fn narrowband_lasso_finds_an_on_grid_source() {
        let nb = NarrowbandConfig {
            grid: PointGrid::new(180, 46).unwrap(),
            ..Default::default()
        };
        let (cfg, x) = single(124.0, 48.0, 30.0);
        assert_eq!(narrowband_lasso(&x, &cfg, 1, &nb).unwrap(), vec![Direction::new(124.0, 48.0)]);
    }

    #[test]
    fn off_grid_error_is_at_least_half_the_spacing() {
        // midway between grid points in both angles
        let nb = NarrowbandConfig {
            grid: PointGrid::new(180, 46).unwrap(),
            ..Default::default()
        };
        let (cfg, x) = single(125.0, 49.0, f64::INFINITY);
        let est = narrowband_lasso(&x, &cfg, 1, &nb).unwrap();
        assert_eq!(est.len(), 1);
        assert!((est[0].azimuth_deg - 125.0).abs() >= 1.0 - 1e-9);
        assert!((est[0].elevation_deg - 49.0).abs() >= 1.0 - 1e-9);
    }
}
