//! Joint local refinement of directions and coupling inside their bands.
//!
//! Minimizes
//!
//! ```text
//! J = Σₖ ‖Eₙᴴ·C(c)·a(φₖ, θₖ)‖² / ‖C(c)·a(φₖ, θₖ)‖²
//! ```
//!
//! over the free coupling coefficients `c₂ … c_L` and the angles with a
//! projected Levenberg–Marquardt iteration. Each direction is kept inside
//! the union of its bands after every step. `J` vanishes at the true
//! parameters of noiseless data, where the iteration converges
//! quadratically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{steering_vector_rad, wrap_azimuth, ArrayConfig, Direction};
use crate::coupling::{coupling_matrix, CouplingVector};
use crate::dictionary::Band;
use crate::error::{domain, Result};
use crate::mcm::f_transform;

/// Output of [`polish`].
#[derive(Debug, Clone)]
pub struct Polished {
    pub doas: Vec<Direction>,
    pub coupling: CouplingVector,
    /// Final value of the normalized cost.
    pub cost: f64,
    pub iterations: usize,
}

const MAX_DAMPING: f64 = 1e12;

/// Refines `doas` and `coupling` jointly. `regions[k]` lists the bands
/// direction `k` must stay in; an empty list only enforces the angle ranges.
pub fn polish(
    cfg: &ArrayConfig,
    noise_basis: &DMatrix<Complex64>,
    doas: &[Direction],
    regions: &[Vec<Band>],
    coupling: &CouplingVector,
    max_iter: usize,
) -> Result<Polished> {
    let n = cfg.n_sensors();
    if doas.is_empty() {
        return domain("nothing to refine");
    }
    if regions.len() != doas.len() {
        return domain(format!("{} regions for {} directions", regions.len(), doas.len()));
    }
    if noise_basis.nrows() != n || coupling.n_sensors() != n {
        return domain("noise basis, coupling and array disagree on the sensor count");
    }
    let problem = Problem {
        cfg,
        en: noise_basis,
        n_free: coupling.len() - 1,
    };

    let mut params = problem.pack(coupling, doas);
    let (mut r, mut jac) = problem.evaluate(&params);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;

    'outer: while iterations < max_iter && cost > 0.0 {
        iterations += 1;
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let floor = 1e-12 * jtj.diagonal().max().max(f64::MIN_POSITIVE);

        let mut accepted = false;
        while lambda <= MAX_DAMPING {
            let mut h = jtj.clone();
            for i in 0..h.nrows() {
                h[(i, i)] += lambda * jtj[(i, i)].max(floor);
            }
            let Some(chol) = h.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut trial = &params + &step;
            problem.project(&mut trial, regions);
            let (r_new, jac_new) = problem.evaluate(&trial);
            let cost_new = r_new.norm_squared();
            if cost_new < cost {
                let moved = (&trial - &params).amax();
                params = trial;
                r = r_new;
                jac = jac_new;
                let gain = cost - cost_new;
                cost = cost_new;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if moved < 1e-15 || gain <= 1e-15 * cost_new {
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }

    let (coupling, doas) = problem.unpack(&params)?;
    Ok(Polished {
        doas,
        coupling,
        cost,
        iterations,
    })
}

struct Problem<'a> {
    cfg: &'a ArrayConfig,
    en: &'a DMatrix<Complex64>,
    n_free: usize,
}

impl Problem<'_> {
    /// `[Re c₂.., Im c₂.., φ₁, θ₁, φ₂, θ₂, ..]`, angles in radians.
    fn pack(&self, c: &CouplingVector, doas: &[Direction]) -> DVector<f64> {
        let m = self.n_free;
        let mut p = DVector::zeros(2 * m + 2 * doas.len());
        for l in 0..m {
            p[l] = c.coeffs()[l + 1].re;
            p[m + l] = c.coeffs()[l + 1].im;
        }
        for (k, d) in doas.iter().enumerate() {
            p[2 * m + 2 * k] = d.azimuth_deg.to_radians();
            p[2 * m + 2 * k + 1] = d.elevation_deg.to_radians();
        }
        p
    }

    fn coeffs(&self, p: &DVector<f64>) -> Vec<Complex64> {
        let m = self.n_free;
        std::iter::once(Complex64::new(1.0, 0.0))
            .chain((0..m).map(|l| Complex64::new(p[l], p[m + l])))
            .collect()
    }

    fn unpack(&self, p: &DVector<f64>) -> Result<(CouplingVector, Vec<Direction>)> {
        let c = CouplingVector::from_estimate(self.coeffs(p), self.cfg.n_sensors())?;
        let k = (p.len() - 2 * self.n_free) / 2;
        let doas = (0..k)
            .map(|i| {
                let az = p[2 * self.n_free + 2 * i].to_degrees();
                let el = p[2 * self.n_free + 2 * i + 1].to_degrees();
                Direction::new(wrap_azimuth(az), el.clamp(0.0, 90.0))
            })
            .collect();
        Ok((c, doas))
    }

    fn project(&self, p: &mut DVector<f64>, regions: &[Vec<Band>]) {
        for (k, bands) in regions.iter().enumerate() {
            let i = 2 * self.n_free + 2 * k;
            let d = Direction::new(p[i].to_degrees(), p[i + 1].to_degrees());
            let d = project_onto(d, bands);
            p[i] = d.azimuth_deg.to_radians();
            p[i + 1] = d.elevation_deg.to_radians();
        }
    }

    /// Stacked real residual and its Jacobian.
    fn evaluate(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.cfg.n_sensors();
        let m = self.n_free;
        let rows_per = self.en.ncols();
        let k_count = (p.len() - 2 * m) / 2;
        let coeffs = self.coeffs(p);
        let cv = DVector::from_column_slice(&coeffs);
        let cmat = coupling_matrix(&CouplingVector::from_estimate(coeffs, n).expect("finite parameters"));
        let x = self.cfg.electrical_radius();

        let mut r = DVector::zeros(2 * rows_per * k_count);
        let mut jac = DMatrix::zeros(r.len(), p.len());
        let en_h = self.en.adjoint();
        for k in 0..k_count {
            let (az, el) = (p[2 * m + 2 * k], p[2 * m + 2 * k + 1]);
            let a = steering_vector_rad(self.cfg, az, el);
            let f = f_transform(&a).expect("at least 3 sensors");
            let v = f.matrix() * &cv;
            let nv = v.norm();
            let pv = &en_h * &v;
            let row0 = 2 * rows_per * k;
            for i in 0..rows_per {
                r[row0 + i] = pv[i].re / nv;
                r[row0 + rows_per + i] = pv[i].im / nv;
            }

            // d r = Eₙᴴ·dv/‖v‖ − Eₙᴴ·v·Re(vᴴ·dv)/‖v‖³
            let mut put = |col: usize, dv: &DVector<Complex64>| {
                let pdv = &en_h * dv;
                let s = v.dotc(dv).re / (nv * nv * nv);
                for i in 0..rows_per {
                    let d = pdv[i] / nv - pv[i] * s;
                    jac[(row0 + i, col)] = d.re;
                    jac[(row0 + rows_per + i, col)] = d.im;
                }
            };
            for l in 0..m {
                let col = f.matrix().column(l + 1).into_owned();
                put(l, &col);
                put(m + l, &col.map(|z| z * Complex64::new(0.0, 1.0)));
            }
            let (sin_el, cos_el) = el.sin_cos();
            let da_az = DVector::from_fn(n, |s, _| {
                let u = az - self.cfg.sensor_angle(s);
                a[s] * Complex64::new(0.0, -x * sin_el * u.sin())
            });
            let da_el = DVector::from_fn(n, |s, _| {
                let u = az - self.cfg.sensor_angle(s);
                a[s] * Complex64::new(0.0, x * cos_el * u.cos())
            });
            put(2 * m + 2 * k, &(cmat.matrix() * da_az));
            put(2 * m + 2 * k + 1, &(cmat.matrix() * da_el));
        }
        (r, jac)
    }
}

/// Nearest point of the union of `bands` (closed), or `d` with its
/// elevation clamped to `[0, 90]` when `bands` is empty.
pub(crate) fn project_onto(d: Direction, bands: &[Band]) -> Direction {
    let el = d.elevation_deg.clamp(0.0, 90.0);
    if bands.is_empty() {
        return Direction::new(wrap_azimuth(d.azimuth_deg), el);
    }
    let mut best = (f64::INFINITY, d);
    for b in bands {
        let offset = wrap_azimuth(d.azimuth_deg - b.az_lo);
        let width = b.az_width();
        let az = if offset <= width {
            d.azimuth_deg
        } else if offset - width <= 360.0 - offset {
            b.az_hi
        } else {
            b.az_lo
        };
        let daz = {
            let w = wrap_azimuth(az - d.azimuth_deg);
            w.min(360.0 - w)
        };
        let el_c = d.elevation_deg.clamp(b.el_lo, b.el_hi);
        let dist = daz * daz + (el_c - d.elevation_deg).powi(2);
        if dist < best.0 {
            best = (dist, Direction::new(wrap_azimuth(az), el_c));
        }
    }
    best.1
}
