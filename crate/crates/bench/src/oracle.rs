//! Reference computations that share no code with the estimators: adaptive
//! Gauss–Kronrod quadrature of the band integral, the coupled steering
//! vector by direct summation, and an accelerated proximal-gradient LASSO.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use ucacal::dictionary::{integrated_atom_element, Band};
use ucacal::lasso::{solve_lasso, PenaltyMode, StackedSystem};
use ucacal::mcm::f_transform;
use ucacal::{ArrayConfig, Complex64, CouplingVector};

use crate::error::Result;

// 15-point Kronrod nodes on [0, 1] with their weights; the odd entries
// carry the embedded 7-point Gauss rule.
const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: usize = 40;

fn kronrod(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mid = f(c);
    let mut k = mid * WK[7];
    let mut g = mid * WG[3];
    for i in 0..7 {
        let pair = f(c - h * XK[i]) + f(c + h * XK[i]);
        k += pair * WK[i];
        if i % 2 == 1 {
            g += pair * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature of a complex integrand,
/// bisecting until each piece's error estimate is below its share of
/// `abs_tol`.
pub fn integrate(mut f: impl FnMut(f64) -> Complex64, a: f64, b: f64, abs_tol: f64) -> Complex64 {
    fn go(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64, tol: f64, depth: usize) -> Complex64 {
        let (v, err) = kronrod(f, a, b);
        if err <= tol || depth == MAX_DEPTH {
            return v;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth + 1) + go(f, m, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    go(&mut f, a, b, abs_tol, 0)
}

/// `∫∫ exp(j·k0·r·sin θ·cos(φ − γ_n)) dφ dθ` over `band` (radians), by
/// nested adaptive quadrature to an absolute accuracy of about
/// `rel_tol · area`.
pub fn quadrature_atom_element(cfg: &ArrayConfig, band: &Band, sensor: usize, rel_tol: f64) -> Complex64 {
    let x = cfg.electrical_radius();
    let shift = cfg.sensor_angle(sensor);
    let (az_lo, az_hi) = (band.az_lo.to_radians(), band.az_hi.to_radians());
    let (el_lo, el_hi) = (band.el_lo.to_radians(), band.el_hi.to_radians());
    let area = (az_hi - az_lo) * (el_hi - el_lo);
    let inner_tol = rel_tol * (az_hi - az_lo);
    integrate(
        |theta| {
            let xi = x * theta.sin();
            integrate(|phi| Complex64::from_polar(1.0, xi * (phi - shift).cos()), az_lo, az_hi, inner_tol)
        },
        el_lo,
        el_hi,
        rel_tol * area,
    )
}

/// `C(c)·a` summed entry by entry: `C_ij = c[min(|i − j|, N − |i − j|)]`.
pub fn coupled_steering(c: &CouplingVector, a: &DVector<Complex64>) -> DVector<Complex64> {
    let n = a.len();
    let coeffs = c.coeffs();
    DVector::from_fn(n, |i, _| {
        (0..n)
            .map(|j| {
                let d = i.abs_diff(j);
                coeffs[d.min(n - d)] * a[j]
            })
            .sum()
    })
}

/// `‖Y − D·S‖²_F + γ·Σ_q ‖S_q‖` with `S_q` the rows of `S`.
pub fn lasso_objective(d: &DMatrix<Complex64>, y: &DMatrix<Complex64>, s: &DMatrix<Complex64>, gamma: f64) -> f64 {
    let r = y - d * s;
    r.norm_squared() + gamma * s.row_iter().map(|row| row.norm()).sum::<f64>()
}

/// Largest violation of the first-order conditions: `‖d_qᴴR‖ − γ/2` on
/// zero rows, `‖2·d_qᴴR − γ·S_q/‖S_q‖‖` on the others.
pub fn kkt_residual(d: &DMatrix<Complex64>, y: &DMatrix<Complex64>, s: &DMatrix<Complex64>, gamma: f64) -> f64 {
    let corr = d.adjoint() * (y - d * s);
    let mut worst: f64 = 0.0;
    for q in 0..s.nrows() {
        let row = s.row(q);
        let norm = row.norm();
        let g = corr.row(q);
        let v = if norm == 0.0 {
            g.norm() - 0.5 * gamma
        } else {
            (g * Complex64::new(2.0, 0.0) - row * Complex64::new(gamma / norm, 0.0)).norm()
        };
        worst = worst.max(v);
    }
    worst
}

/// FISTA with adaptive restart on the row-sparse problem; the step is
/// `1/L` with `L = 2·σ_max(D)²`.
pub fn proximal_gradient(d: &DMatrix<Complex64>, y: &DMatrix<Complex64>, gamma: f64, iters: usize) -> DMatrix<Complex64> {
    let sigma = d.singular_values().max();
    let step = 1.0 / (2.0 * sigma * sigma);
    let dh = d.adjoint();
    let shrink = |v: DMatrix<Complex64>| {
        let mut v = v;
        for mut row in v.row_iter_mut() {
            let n = row.norm();
            let scale = if n > gamma * step { 1.0 - gamma * step / n } else { 0.0 };
            row *= Complex64::new(scale, 0.0);
        }
        v
    };
    let mut s = DMatrix::zeros(d.ncols(), y.ncols());
    let mut z = s.clone();
    let mut t: f64 = 1.0;
    let mut f_prev = lasso_objective(d, y, &s, gamma);
    for _ in 0..iters {
        let grad = &dh * (d * &z - y) * Complex64::new(2.0, 0.0);
        let next = shrink(&z - grad * Complex64::new(step, 0.0));
        let f = lasso_objective(d, y, &next, gamma);
        if f > f_prev {
            // restart the momentum from the last accepted point
            t = 1.0;
            z = s.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &s) * Complex64::new((t - 1.0) / t_next, 0.0);
        s = next;
        t = t_next;
        f_prev = f;
    }
    s
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box–Muller; exact distribution is irrelevant, only variety
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    Complex64::from_polar((-u.ln()).sqrt(), std::f64::consts::TAU * v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FTransformReport {
    pub draws: usize,
    /// Largest `‖F{a}·c − C(c)·a‖∞`.
    pub max_error: f64,
}

/// Random `N ∈ {4, …, 16}`, random coupling with `c₁ = 1` and a random
/// steering vector per draw.
pub fn check_f_transform(draws: usize, seed: u64) -> Result<FTransformReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error: f64 = 0.0;
    for _ in 0..draws {
        let n = rng.random_range(4..=16);
        let l = ucacal::coupling::coupling_len(n);
        let mut coeffs: Vec<Complex64> = (0..l).map(|_| complex_gaussian(&mut rng)).collect();
        coeffs[0] = Complex64::new(1.0, 0.0);
        let c = CouplingVector::from_estimate(coeffs, n)?;
        let cfg = ArrayConfig::with_radius_in_wavelengths(n, rng.random_range(0.2..1.5))?;
        let a = ucacal::array::steering_vector_rad(
            &cfg,
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        );
        let fc = f_transform(&a)?.apply(&c);
        let err = (fc - coupled_steering(&c, &a)).camax();
        max_error = max_error.max(err);
    }
    Ok(FTransformReport { draws, max_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureReport {
    pub cases: usize,
    /// Largest `|series − quadrature| / |quadrature|`.
    pub max_rel_error: f64,
}

/// Random bands up to 30° on a side (some straddling 0° azimuth), random
/// sensors and `r ∈ {λ/2, λ}`.
pub fn check_quadrature(cases: usize, seed: u64) -> Result<QuadratureReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_error: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(3..=16);
        let r = if rng.random::<bool>() { 0.5 } else { 1.0 };
        let cfg = ArrayConfig::with_radius_in_wavelengths(n, r)?;
        let az_lo = rng.random_range(0.0..360.0);
        let az_w = rng.random_range(0.01..30.0);
        let el_w: f64 = rng.random_range(0.01..30.0);
        let el_lo = rng.random_range(0.0..90.0 - el_w);
        let band = Band::new((az_lo, az_lo + az_w), (el_lo, el_lo + el_w), 0)?;
        let sensor = rng.random_range(0..n);
        let series = integrated_atom_element(&cfg, &band, sensor)?;
        let quad = quadrature_atom_element(&cfg, &band, sensor, 1e-14);
        max_rel_error = max_rel_error.max((series - quad).norm() / quad.norm());
    }
    Ok(QuadratureReport { cases, max_rel_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LassoReport {
    pub systems: usize,
    /// Largest certificate violation of the solver's output.
    pub max_kkt: f64,
    /// Largest `|f_solver − f_reference| / f_reference`.
    pub max_rel_gap: f64,
    pub all_converged: bool,
}

/// Random complex systems with 10 to 30 rows, 20 to 60 columns and 1 to 3
/// right-hand sides, solved at `γ = 2α·γ_max` for `α ∈ [0.1, 0.9]`.
pub fn check_lasso(systems: usize, seed: u64, tol: f64) -> Result<LassoReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LassoReport {
        systems,
        max_kkt: 0.0,
        max_rel_gap: 0.0,
        all_converged: true,
    };
    for _ in 0..systems {
        let m = rng.random_range(10..=30);
        let q = rng.random_range(20..=60);
        let p = rng.random_range(1..=3);
        let d = DMatrix::from_fn(m, q, |_, _| complex_gaussian(&mut rng));
        let y = DMatrix::from_fn(m, p, |_, _| complex_gaussian(&mut rng));
        let g_max = (0..q)
            .map(|j| (d.column(j).adjoint() * &y).norm())
            .fold(0.0, f64::max);
        let gamma = 2.0 * rng.random_range(0.1..0.9) * g_max;

        let sys = StackedSystem::new(d.clone(), y.clone(), PenaltyMode::Group)?;
        let sol = solve_lasso(&sys, gamma, tol, 100_000)?;
        let reference = proximal_gradient(&d, &y, gamma, 20_000);
        let f_ref = lasso_objective(&d, &y, &reference, gamma);
        let f = lasso_objective(&d, &y, &sol.coefficients, gamma);

        report.all_converged &= sol.converged;
        report.max_kkt = report.max_kkt.max(kkt_residual(&d, &y, &sol.coefficients, gamma));
        report.max_rel_gap = report.max_rel_gap.max((f - f_ref).abs() / f_ref);
    }
    Ok(report)
}
