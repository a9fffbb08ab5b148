//! Complex LASSO over band dictionaries.
//!
//! The problem is
//!
//! ```text
//! min_S ‖Y − D·S‖²_F + γ·Σ_q ‖S[q, :]‖₂
//! ```
//!
//! where `D` is `M×Q` and `Y` is `M×P`. With `P = 1` this is the plain
//! complex LASSO `‖y − D·s‖² + γ‖s‖₁`; with `P > 1` each band owns a
//! row block of `P` coefficients under a mixed ℓ2/ℓ1 penalty. Every block
//! is zero exactly when `γ ≥ 2·max_q ‖d_qᴴ Y‖`.
//!
//! The solver repeats a working-set solve over the active blocks and the
//! worst violators, falling back to block coordinate sweeps when that
//! stalls. The working-set solve is Newton continuation on the smoothed
//! penalty `√(‖S_q‖² + μ²)` as `μ → 0`, finished by exact Newton on the
//! surviving blocks. It stops once the optimality certificate holds:
//!
//! * `S_q = 0`: `‖d_qᴴ R‖ ≤ γ/2 + tol`
//! * `S_q ≠ 0`: `‖2·d_qᴴ R − γ·S_q/‖S_q‖‖ ≤ tol`
//!
//! with `R = Y − D·S`. A working-set result is kept only if it lowers the
//! objective, so the objective never increases.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// How the `K` reduced snapshot columns share coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyMode {
    /// The dictionary is stacked `K` times against `vec(X_SV)`, so one
    /// scalar per band explains every column.
    Shared,
    /// One length-`K` coefficient block per band, mixed ℓ2/ℓ1 penalty.
    #[default]
    Group,
}

/// A regression problem `Y ≈ D·S` ready for [`solve_lasso`].
#[derive(Debug, Clone)]
pub struct StackedSystem {
    dictionary: DMatrix<Complex64>,
    observation: DMatrix<Complex64>,
    mode: PenaltyMode,
}

impl StackedSystem {
    /// Uses `dictionary` and `observation` as given. Shared mode requires a
    /// single observation column.
    pub fn new(
        dictionary: DMatrix<Complex64>,
        observation: DMatrix<Complex64>,
        mode: PenaltyMode,
    ) -> Result<Self> {
        if dictionary.nrows() != observation.nrows() {
            return domain(format!(
                "dictionary has {} rows, observation {}",
                dictionary.nrows(),
                observation.nrows()
            ));
        }
        if dictionary.ncols() == 0 || observation.ncols() == 0 {
            return domain("empty dictionary or observation");
        }
        if mode == PenaltyMode::Shared && observation.ncols() != 1 {
            return domain("shared mode takes a single stacked observation vector");
        }
        Ok(Self {
            dictionary,
            observation,
            mode,
        })
    }

    /// Builds the system for `mode` from an `N×Q` dictionary and the `N×K`
    /// reduced data.
    pub fn from_reduced(
        atoms: &DMatrix<Complex64>,
        reduced: &DMatrix<Complex64>,
        mode: PenaltyMode,
    ) -> Result<Self> {
        match mode {
            PenaltyMode::Group => Self::new(atoms.clone(), reduced.clone(), mode),
            PenaltyMode::Shared => {
                let (n, q) = atoms.shape();
                let k = reduced.ncols();
                let mut d = DMatrix::zeros(n * k, q);
                for block in 0..k {
                    d.view_mut((block * n, 0), (n, q)).copy_from(atoms);
                }
                let y = DMatrix::from_column_slice(n * k, 1, reduced.as_slice());
                Self::new(d, y, mode)
            }
        }
    }

    pub fn dictionary(&self) -> &DMatrix<Complex64> {
        &self.dictionary
    }

    pub fn observation(&self) -> &DMatrix<Complex64> {
        &self.observation
    }

    pub fn mode(&self) -> PenaltyMode {
        self.mode
    }

    pub fn n_bands(&self) -> usize {
        self.dictionary.ncols()
    }

    /// Coefficients per band (1 in shared mode, `K` in group mode).
    pub fn block_len(&self) -> usize {
        self.observation.ncols()
    }
}

/// Solver output. Row `q` of `coefficients` is band `q`'s block.
#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub coefficients: DMatrix<Complex64>,
    pub gamma: f64,
    /// Coordinate sweeps plus Newton steps.
    pub iterations: usize,
    pub converged: bool,
    /// Largest optimality-certificate violation at the returned point.
    pub kkt_violation: f64,
    pub objective: f64,
    /// Objective after every sweep and Newton step, in order.
    pub history: Vec<f64>,
}

impl SparseSolution {
    /// ℓ2 norm of each band's coefficient block.
    pub fn block_norms(&self) -> Vec<f64> {
        block_norms(&self.coefficients)
    }
}

fn block_norms(s: &DMatrix<Complex64>) -> Vec<f64> {
    (0..s.nrows())
        .map(|q| s.row(q).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

/// `d_qᴴ·R` for column `q`, written into `out` (length `P`).
#[inline]
fn correlate(d: &DMatrix<Complex64>, q: usize, r: &DMatrix<Complex64>, out: &mut [Complex64]) {
    let col = d.column(q);
    for (p, o) in out.iter_mut().enumerate() {
        let rc = r.column(p);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..col.len() {
            acc += col[i].conj() * rc[i];
        }
        *o = acc;
    }
}

/// `max_q ‖d_qᴴ·Y‖₂`. Any `γ ≥ 2·gamma_max` makes zero optimal.
pub fn gamma_max(sys: &StackedSystem) -> f64 {
    gamma_max_of(&sys.dictionary, &sys.observation)
}

pub fn gamma_max_of(d: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> f64 {
    let mut z = vec![Complex64::new(0.0, 0.0); y.ncols()];
    (0..d.ncols())
        .map(|q| {
            correlate(d, q, y, &mut z);
            norm(&z)
        })
        .fold(0.0, f64::max)
}

fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖Y − D·S‖²_F + γ·Σ_q ‖S_q‖`.
pub fn objective(sys: &StackedSystem, coefficients: &DMatrix<Complex64>, gamma: f64) -> f64 {
    let r = &sys.observation - &sys.dictionary * coefficients;
    r.norm_squared() + gamma * block_norms(coefficients).iter().sum::<f64>()
}

/// Largest violation of the optimality certificate at `coefficients`.
pub fn kkt_violation(sys: &StackedSystem, coefficients: &DMatrix<Complex64>, gamma: f64) -> f64 {
    kkt_violation_of(&sys.dictionary, &sys.observation, coefficients, gamma)
}

fn kkt_violation_of(
    d: &DMatrix<Complex64>,
    y: &DMatrix<Complex64>,
    coefficients: &DMatrix<Complex64>,
    gamma: f64,
) -> f64 {
    let r = y - d * coefficients;
    let p = y.ncols();
    let mut z = vec![Complex64::new(0.0, 0.0); p];
    let mut worst = 0.0f64;
    for q in 0..d.ncols() {
        correlate(d, q, &r, &mut z);
        let s = coefficients.row(q);
        let s_norm = s.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let v = if s_norm == 0.0 {
            norm(&z) - gamma / 2.0
        } else {
            z.iter()
                .zip(s.iter())
                .map(|(zp, sp)| (2.0 * zp - gamma * sp / s_norm).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        worst = worst.max(v);
    }
    worst
}

struct Workspace<'a> {
    d: &'a DMatrix<Complex64>,
    y: &'a DMatrix<Complex64>,
    gamma: f64,
    col_norm2: Vec<f64>,
    s: DMatrix<Complex64>,
    r: DMatrix<Complex64>,
    z: Vec<Complex64>,
}

impl<'a> Workspace<'a> {
    fn new(sys: &'a StackedSystem, gamma: f64) -> Self {
        let d = &sys.dictionary;
        Self {
            d,
            y: &sys.observation,
            gamma,
            col_norm2: (0..d.ncols()).map(|q| d.column(q).norm_squared()).collect(),
            s: DMatrix::zeros(d.ncols(), sys.observation.ncols()),
            r: sys.observation.clone(),
            z: vec![Complex64::new(0.0, 0.0); sys.observation.ncols()],
        }
    }

    fn refresh_residual(&mut self) {
        self.r = self.y - self.d * &self.s;
    }

    fn objective(&self) -> f64 {
        self.r.norm_squared() + self.gamma * block_norms(&self.s).iter().sum::<f64>()
    }

    fn active(&self) -> Vec<usize> {
        (0..self.s.nrows())
            .filter(|&q| self.s.row(q).iter().any(|v| *v != Complex64::new(0.0, 0.0)))
            .collect()
    }

    /// Exact block minimization over `indices`; returns the largest change
    /// of `‖d_q‖·‖ΔS_q‖`.
    fn sweep(&mut self, indices: impl Iterator<Item = usize>) -> f64 {
        let p = self.s.ncols();
        let half_gamma = 0.5 * self.gamma;
        let mut biggest = 0.0f64;
        for q in indices {
            let nu = self.col_norm2[q];
            if nu == 0.0 {
                continue;
            }
            correlate(self.d, q, &self.r, &mut self.z);
            for c in 0..p {
                self.z[c] += nu * self.s[(q, c)];
            }
            let zn = norm(&self.z);
            let shrink = if zn <= half_gamma {
                0.0
            } else {
                (1.0 - half_gamma / zn) / nu
            };
            let mut change = 0.0;
            for c in 0..p {
                let new = self.z[c] * shrink;
                let delta = new - self.s[(q, c)];
                if delta != Complex64::new(0.0, 0.0) {
                    change += delta.norm_sqr();
                    let col = self.d.column(q);
                    let mut rc = self.r.column_mut(c);
                    for i in 0..col.len() {
                        rc[i] -= col[i] * delta;
                    }
                    self.s[(q, c)] = new;
                }
            }
            biggest = biggest.max((change * nu).sqrt());
        }
        biggest
    }

    /// Block violations `‖d_qᴴ R‖ − γ/2` of the zero blocks, largest first.
    fn violators(&mut self) -> Vec<(usize, f64)> {
        let half_gamma = 0.5 * self.gamma;
        let mut out = Vec::new();
        for q in 0..self.s.nrows() {
            if self.s.row(q).iter().any(|v| *v != Complex64::new(0.0, 0.0)) {
                continue;
            }
            correlate(self.d, q, &self.r, &mut self.z);
            let v = norm(&self.z) - half_gamma;
            if v > 0.0 {
                out.push((q, v));
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        out
    }

    /// Solves the problem restricted to the active blocks plus the worst
    /// violators. Keeps the result only if it lowers the objective. Returns
    /// the Newton steps taken, or `None` when the working set is too large.
    fn solve_working_set(&mut self, tol: f64, budget: usize, history: &mut Vec<f64>) -> Option<usize> {
        let p = self.s.ncols();
        let cap = MAX_WORKING_DIM / (2 * p);
        let mut set = self.active();
        if set.len() > cap {
            return None;
        }
        let room = (cap - set.len()).min(WORKING_GROWTH);
        set.extend(self.violators().into_iter().take(room).map(|(q, _)| q));
        if set.is_empty() {
            return Some(0);
        }
        set.sort_unstable();

        let da = self.d.select_columns(set.iter());
        let mut sub = Restricted::new(&da, self.y, self.gamma, self.s.select_rows(set.iter()));
        let steps = sub.solve(tol, budget);
        let f_old = self.objective();
        let saved = self.s.clone();
        for (i, &q) in set.iter().enumerate() {
            for c in 0..p {
                self.s[(q, c)] = sub.s[(i, c)];
            }
        }
        self.refresh_residual();
        let f = self.objective();
        if f <= f_old {
            history.push(f);
        } else {
            self.s = saved;
            self.refresh_residual();
        }
        Some(steps)
    }
}

/// The problem over a few blocks, in terms of `G = Dᴴ·D` and `B = Dᴴ·Y`
/// so that evaluations cost nothing in the number of sensors.
struct Restricted {
    gram: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
    y_norm2: f64,
    gamma: f64,
    s: DMatrix<Complex64>,
}

impl Restricted {
    fn new(d: &DMatrix<Complex64>, y: &DMatrix<Complex64>, gamma: f64, s: DMatrix<Complex64>) -> Self {
        Self {
            gram: d.adjoint() * d,
            b: d.adjoint() * y,
            y_norm2: y.norm_squared(),
            gamma,
            s,
        }
    }

    /// `‖Y − D·S‖² + γ·Σ √(‖S_q‖² + μ²)`.
    fn value(&self, s: &DMatrix<Complex64>, mu: f64) -> f64 {
        let gs = &self.gram * s;
        let mut fit = self.y_norm2;
        for (i, v) in s.iter().enumerate() {
            fit += (v.conj() * (gs[i] - 2.0 * self.b[i])).re;
        }
        fit.max(0.0) + self.gamma * block_norms(s).iter().map(|n| n.hypot(mu)).sum::<f64>()
    }

    /// Gradient and real Hessian of [`Self::value`] over the blocks in
    /// `set`, in the real embedding of [`idx`]. With `μ = 0` every block in
    /// `set` must be nonzero.
    fn system(&self, set: &[usize], mu: f64) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.s.ncols();
        let a = set.len();
        let dim = 2 * a * p;
        let rho: Vec<f64> = set
            .iter()
            .map(|&q| self.s.row(q).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().hypot(mu))
            .collect();
        let mut grad = DVector::zeros(dim);
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (i, &qi) in set.iter().enumerate() {
            for c in 0..p {
                let mut g = -2.0 * self.b[(qi, c)];
                for k in 0..self.s.nrows() {
                    g += 2.0 * self.gram[(qi, k)] * self.s[(k, c)];
                }
                g += self.gamma * self.s[(qi, c)] / rho[i];
                grad[idx(i, c, p, 0)] = g.re;
                grad[idx(i, c, p, 1)] = g.im;
            }
            for (j, &qj) in set.iter().enumerate() {
                let g = 2.0 * self.gram[(qi, qj)];
                for c in 0..p {
                    let (r0, c0) = (idx(i, c, p, 0), idx(j, c, p, 0));
                    h[(r0, c0)] += g.re;
                    h[(r0, c0 + 1)] -= g.im;
                    h[(r0 + 1, c0)] += g.im;
                    h[(r0 + 1, c0 + 1)] += g.re;
                }
            }
            let w = self.gamma / rho[i];
            for c in 0..p {
                let u = self.s[(qi, c)] / rho[i];
                for c2 in 0..p {
                    let u2 = self.s[(qi, c2)] / rho[i];
                    let (r0, c0) = (idx(i, c, p, 0), idx(i, c2, p, 0));
                    let eye = if c == c2 { 1.0 } else { 0.0 };
                    h[(r0, c0)] += w * (eye - u.re * u2.re);
                    h[(r0, c0 + 1)] -= w * u.re * u2.im;
                    h[(r0 + 1, c0)] -= w * u.im * u2.re;
                    h[(r0 + 1, c0 + 1)] += w * (eye - u.im * u2.im);
                }
            }
        }
        (h, grad)
    }

    /// One damped Newton step on the blocks in `set`; `false` when no
    /// progress is possible.
    fn step(&mut self, set: &[usize], mu: f64, tol: f64) -> bool {
        let p = self.s.ncols();
        let (h, grad) = self.system(set, mu);
        if mu == 0.0 && grad.amax() <= 0.1 * tol {
            return false;
        }
        let Some(dir) = solve_spd(h, &grad) else {
            return false;
        };
        let slope = -grad.dot(&dir);
        let f0 = self.value(&self.s, mu);
        // half the Newton decrement estimates the remaining gap
        if slope >= 0.0 || -slope <= 1e-15 * f0 {
            return false;
        }
        let mut t = 1.0;
        for _ in 0..40 {
            let mut trial = self.s.clone();
            for (i, &q) in set.iter().enumerate() {
                for c in 0..p {
                    trial[(q, c)] -= Complex64::new(dir[idx(i, c, p, 0)], dir[idx(i, c, p, 1)]) * t;
                }
            }
            if self.value(&trial, mu) <= f0 + 1e-4 * t * slope {
                self.s = trial;
                return true;
            }
            t *= 0.5;
        }
        false
    }

    /// Newton continuation on the smoothed penalty with `μ` shrinking to
    /// zero, then exact Newton on the blocks that survive. Returns the
    /// steps taken.
    fn solve(&mut self, tol: f64, budget: usize) -> usize {
        let all: Vec<usize> = (0..self.s.nrows()).collect();
        let scale = match block_norms(&self.s).iter().cloned().fold(0.0, f64::max) {
            0.0 => self.b.norm() / self.gram.diagonal().camax().max(f64::MIN_POSITIVE),
            m => m,
        };
        // the smoothing error of a block is about γ·μ/‖S_q‖
        let mu_end = SMOOTH_END.max(0.01 * tol / self.gamma) * scale;
        let mut steps = 0;
        let mut mu = SMOOTH_START * scale;
        while mu >= mu_end {
            for _ in 0..MAX_NEWTON_STEPS {
                if steps >= budget || !self.step(&all, mu, tol) {
                    break;
                }
                steps += 1;
            }
            mu *= SMOOTH_RATIO;
        }

        let norms = block_norms(&self.s);
        let top = norms.iter().cloned().fold(0.0, f64::max);
        for (q, &n) in norms.iter().enumerate() {
            if n <= SMOOTH_CUTOFF * top {
                for c in 0..self.s.ncols() {
                    self.s[(q, c)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        let support: Vec<usize> = (0..norms.len()).filter(|&q| norms[q] > SMOOTH_CUTOFF * top).collect();
        if support.is_empty() {
            return steps;
        }
        for _ in 0..MAX_NEWTON_STEPS {
            if steps >= budget || !self.step(&support, 0.0, tol) {
                break;
            }
            steps += 1;
        }
        steps
    }
}

const MAX_NEWTON_STEPS: usize = 50;
const MAX_ACTIVE_SWEEPS: usize = 200;
/// Largest real dimension of a working-set solve.
const MAX_WORKING_DIM: usize = 600;
/// Violators admitted to a working set beyond its active blocks.
const WORKING_GROWTH: usize = 5;
/// Smoothing levels relative to the largest block norm.
const SMOOTH_START: f64 = 1e-2;
const SMOOTH_END: f64 = 1e-12;
const SMOOTH_RATIO: f64 = 0.1;
/// Blocks below this fraction of the largest are zeroed after smoothing.
const SMOOTH_CUTOFF: f64 = 1e-7;

#[inline]
fn idx(block: usize, col: usize, p: usize, part: usize) -> usize {
    2 * (block * p + col) + part
}

/// Solves `H·x = b` for symmetric PSD `H`, adding a ridge if needed.
fn solve_spd(h: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            let x = ch.solve(b);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
    }
    None
}

/// Minimizes `‖Y − D·S‖² + γ·Σ‖S_q‖` to certificate tolerance `tol`.
///
/// `max_iter` bounds the total number of coordinate sweeps and Newton
/// steps. The bound is approximate, since a restricted Newton solve may
/// overrun it. When it runs out the best point so far is returned with
/// `converged = false`.
pub fn solve_lasso(sys: &StackedSystem, gamma: f64, tol: f64, max_iter: usize) -> Result<SparseSolution> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let mut ws = Workspace::new(sys, gamma);
    let mut history = vec![ws.objective()];
    let mut iterations = 0;

    // warm-started path from the zero-solution level down to `gamma`
    let zero_level = 2.0 * gamma_max(sys);
    if zero_level > gamma {
        let steps = ((zero_level / gamma).ln() / PATH_RATIO.ln()).ceil() as usize;
        let path_budget = max_iter / 2;
        for i in 1..steps {
            let g = gamma * (zero_level / gamma).powf(1.0 - i as f64 / steps as f64);
            ws.gamma = g;
            iterations += descend(&mut ws, g * PATH_TOL, path_budget.saturating_sub(iterations), &mut Vec::new());
        }
    }
    ws.gamma = gamma;
    history.push(ws.objective());
    iterations += descend(&mut ws, tol, max_iter.saturating_sub(iterations), &mut history);
    let violation = kkt_violation(sys, &ws.s, gamma);

    let objective = ws.objective();
    Ok(SparseSolution {
        coefficients: ws.s,
        gamma,
        iterations,
        converged: violation <= tol,
        kkt_violation: violation,
        objective,
        history,
    })
}

/// Shrink factor of `γ` between path points.
const PATH_RATIO: f64 = 1.5;
/// Certificate tolerance of intermediate path points, relative to their `γ`.
const PATH_TOL: f64 = 1e-3;

/// Working-set solves at the workspace's current `γ` until the certificate
/// holds or `budget` runs out. Coordinate sweeps take over when the working
/// set grows too large or stops making progress. Returns the iterations
/// used.
fn descend(ws: &mut Workspace<'_>, tol: f64, budget: usize, history: &mut Vec<f64>) -> usize {
    let mut iterations = 0;
    while iterations < budget {
        let before = ws.objective();
        let stalled = match ws.solve_working_set(tol, budget - iterations, history) {
            Some(steps) => {
                iterations += steps.max(1);
                ws.objective() >= before
            }
            None => true,
        };
        if kkt_violation_of(ws.d, ws.y, &ws.s, ws.gamma) <= tol {
            break;
        }
        if stalled && iterations < budget {
            let q_all = ws.s.nrows();
            ws.sweep(0..q_all);
            iterations += 1;
            history.push(ws.objective());
            let active = ws.active();
            for _ in 0..MAX_ACTIVE_SWEEPS {
                if iterations >= budget {
                    break;
                }
                let change = ws.sweep(active.iter().copied());
                iterations += 1;
                history.push(ws.objective());
                if change <= 0.01 * tol {
                    break;
                }
            }
            if kkt_violation_of(ws.d, ws.y, &ws.s, ws.gamma) <= tol {
                break;
            }
        }
    }
    iterations
}

/// Bands whose block norm is at least `rel_threshold` times the largest.
/// Empty only for the all-zero solution.
pub fn active_bands(sol: &SparseSolution, rel_threshold: f64) -> Result<Vec<usize>> {
    active_from_norms(&sol.block_norms(), rel_threshold)
}

pub fn active_from_norms(norms: &[f64], rel_threshold: f64) -> Result<Vec<usize>> {
    if !(rel_threshold > 0.0 && rel_threshold <= 1.0) {
        return domain(format!("relative threshold must lie in (0, 1], got {rel_threshold}"));
    }
    let top = norms.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(Vec::new());
    }
    Ok(norms
        .iter()
        .enumerate()
        .filter(|(_, &m)| m >= rel_threshold * top)
        .map(|(q, _)| q)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_system(m: usize, q: usize, p: usize, seed: u64) -> StackedSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = complex_gaussian(m, q, 1.0, &mut rng);
        let y = complex_gaussian(m, p, 1.0, &mut rng);
        let mode = if p == 1 { PenaltyMode::Shared } else { PenaltyMode::Group };
        StackedSystem::new(d, y, mode).unwrap()
    }

    /// Proximal gradient (ISTA with a 1/L step) run to stagnation.
    fn ista(sys: &StackedSystem, gamma: f64, iters: usize) -> DMatrix<Complex64> {
        let d = sys.dictionary();
        let y = sys.observation();
        let lip = 2.0 * d.singular_values().max().powi(2);
        let step = 1.0 / lip;
        let mut s = DMatrix::zeros(d.ncols(), y.ncols());
        for _ in 0..iters {
            let grad = d.adjoint() * (d * &s - y) * Complex64::new(2.0, 0.0);
            let v = &s - grad * Complex64::new(step, 0.0);
            for q in 0..v.nrows() {
                let n = v.row(q).norm();
                let f = if n <= gamma * step { 0.0 } else { 1.0 - gamma * step / n };
                for c in 0..v.ncols() {
                    s[(q, c)] = v[(q, c)] * f;
                }
            }
        }
        s
    }

    #[test]
    fn gamma_max_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = complex_gaussian(6, 4, 1.0, &mut rng);
        let zero = DMatrix::zeros(6, 1);
        assert_eq!(gamma_max_of(&d, &zero), 0.0);

        let x = complex_gaussian(6, 1, 1.0, &mut rng);
        let unit = &x / Complex64::new(x.norm(), 0.0);
        assert!((gamma_max_of(&unit, &x) - x.norm()).abs() < 1e-12);
    }

    #[test]
    fn gamma_max_matches_direct_scan() {
        let sys = random_system(45, 100, 1, 5);
        let brute = (0..100)
            .map(|q| (sys.dictionary().column(q).adjoint() * sys.observation())[(0, 0)].norm())
            .fold(0.0, f64::max);
        assert!((gamma_max(&sys) - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn zero_solution_at_twice_gamma_max() {
        for (p, seed) in [(1, 1), (3, 2)] {
            let sys = random_system(12, 30, p, seed);
            let g = 2.0 * gamma_max(&sys);
            let sol = solve_lasso(&sys, g, 1e-10, 100).unwrap();
            assert!(sol.block_norms().iter().all(|&n| n == 0.0));
            assert!(sol.converged);
            assert!(active_bands(&sol, 0.05).unwrap().is_empty());
            // just below the boundary something switches on
            let sol = solve_lasso(&sys, 0.99 * g, 1e-10, 1000).unwrap();
            assert!(sol.block_norms().iter().any(|&n| n > 0.0));
        }
    }

    #[test]
    fn orthonormal_dictionary_gives_soft_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = complex_gaussian(10, 10, 1.0, &mut rng).qr().q();
        let s_true = complex_gaussian(10, 1, 1.0, &mut rng);
        let y = &q * &s_true;
        let sys = StackedSystem::new(q.clone(), y.clone(), PenaltyMode::Shared).unwrap();
        let gamma = 1e-6;
        let sol = solve_lasso(&sys, gamma, 1e-10, 1000).unwrap();
        let z = q.adjoint() * y;
        for i in 0..10 {
            let expected = z[(i, 0)] * (1.0 - gamma / (2.0 * z[(i, 0)].norm()));
            assert!((sol.coefficients[(i, 0)] - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn matches_proximal_gradient_objective() {
        for (p, seed) in [(1, 11), (1, 12), (3, 13)] {
            let sys = random_system(20, 40, p, seed);
            let gamma = 2.0 * 0.3 * gamma_max(&sys);
            let sol = solve_lasso(&sys, gamma, 1e-8, 10_000).unwrap();
            assert!(sol.converged, "kkt {}", sol.kkt_violation);
            assert!(kkt_violation(&sys, &sol.coefficients, gamma) <= 1e-8);
            let reference = objective(&sys, &ista(&sys, gamma, 20_000), gamma);
            assert!((sol.objective - reference).abs() <= 1e-6 * reference, "{} vs {reference}", sol.objective);
        }
    }

    #[test]
    fn objective_never_increases() {
        for (p, seed) in [(1, 21), (4, 22)] {
            let sys = random_system(15, 80, p, seed);
            let sol = solve_lasso(&sys, 0.2 * gamma_max(&sys), 1e-9, 5000).unwrap();
            for w in sol.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn scaling_observation_and_gamma_scales_solution() {
        let sys = random_system(12, 25, 1, 31);
        let gamma = 0.5 * gamma_max(&sys);
        let beta = 3.7;
        let scaled = StackedSystem::new(
            sys.dictionary().clone(),
            sys.observation() * Complex64::new(beta, 0.0),
            PenaltyMode::Shared,
        )
        .unwrap();
        let a = solve_lasso(&sys, gamma, 1e-10, 5000).unwrap();
        let b = solve_lasso(&scaled, beta * gamma, 1e-10, 5000).unwrap();
        let diff = &b.coefficients - &a.coefficients * Complex64::new(beta, 0.0);
        assert!(diff.norm() < 1e-8 * b.coefficients.norm());
    }

    #[test]
    fn zero_optimal_iff_gamma_above_boundary() {
        for seed in 40..50 {
            let sys = random_system(8, 20, 2, seed);
            let gm = gamma_max(&sys);
            let zero = DMatrix::zeros(20, 2);
            assert!(kkt_violation(&sys, &zero, 2.0 * gm * 1.0001) <= 0.0);
            assert!(kkt_violation(&sys, &zero, 2.0 * gm * 0.999) > 0.0);
        }
    }

    #[test]
    fn shared_stacking_repeats_the_dictionary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let atoms = complex_gaussian(5, 7, 1.0, &mut rng);
        let reduced = complex_gaussian(5, 3, 1.0, &mut rng);
        let sys = StackedSystem::from_reduced(&atoms, &reduced, PenaltyMode::Shared).unwrap();
        assert_eq!(sys.dictionary().shape(), (15, 7));
        assert_eq!(sys.observation().shape(), (15, 1));
        assert_eq!(sys.dictionary()[(11, 2)], atoms[(1, 2)]);
        assert_eq!(sys.observation()[(11, 0)], reduced[(1, 2)]);
        // column q of D against x is the sum of per-column correlations
        let direct: Complex64 = (0..3).map(|k| atoms.column(2).dotc(&reduced.column(k))).sum();
        let stacked = sys.dictionary().column(2).dotc(&sys.observation().column(0));
        assert!((direct - stacked).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = random_system(4, 5, 1, 0);
        assert!(solve_lasso(&sys, 0.0, 1e-8, 10).is_err());
        assert!(solve_lasso(&sys, 1.0, 0.0, 10).is_err());
        let d = DMatrix::zeros(4, 3);
        assert!(StackedSystem::new(d.clone(), DMatrix::zeros(5, 1), PenaltyMode::Group).is_err());
        assert!(StackedSystem::new(d, DMatrix::zeros(4, 2), PenaltyMode::Shared).is_err());
    }

    #[test]
    fn active_band_thresholds() {
        let norms = [1.0, 0.04, 0.9];
        assert_eq!(active_from_norms(&norms, 0.05).unwrap(), vec![0, 2]);
        assert_eq!(active_from_norms(&[0.0, 0.3, 0.0], 0.05).unwrap(), vec![1]);
        assert!(active_from_norms(&[0.0, 0.0], 0.5).unwrap().is_empty());
        assert!(active_from_norms(&norms, 0.0).is_err());
        assert!(active_from_norms(&norms, 1.5).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let sys = random_system(30, 200, 3, 9);
        let sol = solve_lasso(&sys, 0.01 * gamma_max(&sys), 1e-14, 1).unwrap();
        assert!(!sol.converged);
        assert!(sol.iterations <= 1 + MAX_NEWTON_STEPS);
    }
}
