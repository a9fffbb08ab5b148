//! Coupling estimation from direction estimates and the noise subspace.
//!
//! For a circulant symmetric `C(c)`, the product `C(c)·a` is linear in the
//! free coefficients: `C(c)·a = F{a}·c` with an `N×L` matrix `F{a}`.
//! Writing out row `i` of `C·a`,
//!
//! ```text
//! (C·a)_i = Σ_j c[dist(i, j)]·a_j = Σ_l c_l · Σ_{j : dist(i, j) = l} a_j
//! ```
//!
//! where `dist(i, j) = min(|i − j| mod N, N − |i − j| mod N)`. So
//! `F[i, 0] = a_i`, `F[i, l] = a_{i+l} + a_{i−l}` (indices mod `N`) for
//! `0 < l < N/2`, and for even `N` the antipodal column `l = N/2` holds the
//! single term `a_{i+N/2}`.
//!
//! Since `Eₙᴴ·C·a(φₖ, θₖ) = 0` for the true coupling and directions, the
//! coupling minimizes `J(c) = Σₖ ‖Eₙᴴ·F{aₖ}·c‖² = cᴴ·U·c`, and under
//! `c₁ = 1` the minimizer is the eigenvector of `U` for its smallest
//! eigenvalue, scaled to a unit first entry.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{steering_vector, ArrayConfig, Direction};
use crate::coupling::{circular_distance, coupling_len, CouplingVector};
use crate::error::{domain, Error, Result};

/// Smallest-eigenvalue gap, relative to the largest eigenvalue, below which
/// the minimizer is not unique.
pub const SPECTRAL_GAP_TOL: f64 = 1e-10;

/// `N×L` matrix with `F{a}·c = C(c)·a`.
#[derive(Debug, Clone, PartialEq)]
pub struct FTransform {
    matrix: DMatrix<Complex64>,
}

impl FTransform {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn apply(&self, c: &CouplingVector) -> DVector<Complex64> {
        &self.matrix * c.to_dvector()
    }
}

pub fn f_transform(a: &DVector<Complex64>) -> Result<FTransform> {
    let n = a.len();
    if n < 3 {
        return domain(format!("transform needs at least 3 sensors, got {n}"));
    }
    let mut f = DMatrix::zeros(n, coupling_len(n));
    for i in 0..n {
        for j in 0..n {
            f[(i, circular_distance(i, j, n))] += a[j];
        }
    }
    Ok(FTransform { matrix: f })
}

/// The Hermitian PSD form `U = Σₖ F{aₖ}ᴴ·Eₙ·Eₙᴴ·F{aₖ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCost {
    u: DMatrix<Complex64>,
    n_sensors: usize,
}

impl CouplingCost {
    /// Wraps an explicit form; it is symmetrized to be exactly Hermitian.
    pub fn from_matrix(u: DMatrix<Complex64>, n_sensors: usize) -> Result<Self> {
        if !u.is_square() || u.nrows() != coupling_len(n_sensors) {
            return domain(format!(
                "cost for {n_sensors} sensors must be {0}×{0}",
                coupling_len(n_sensors)
            ));
        }
        let u = (&u + u.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self { u, n_sensors })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    /// `J(c) = cᴴ·U·c`.
    pub fn evaluate(&self, c: &DVector<Complex64>) -> f64 {
        c.dotc(&(&self.u * c)).re
    }

    /// Eigenvalues ascending with matching eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = self.u.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = eig.eigenvectors.select_columns(order.iter());
        (values, vectors)
    }
}

pub fn coupling_cost(
    doas: &[Direction],
    noise_basis: &DMatrix<Complex64>,
    cfg: &ArrayConfig,
) -> Result<CouplingCost> {
    if doas.is_empty() {
        return domain("coupling cost needs at least one direction");
    }
    if noise_basis.nrows() != cfg.n_sensors() {
        return domain(format!(
            "noise basis has {} rows for {} sensors",
            noise_basis.nrows(),
            cfg.n_sensors()
        ));
    }
    let l = coupling_len(cfg.n_sensors());
    let mut u = DMatrix::zeros(l, l);
    for d in doas {
        let a = steering_vector(cfg, d.azimuth_deg, d.elevation_deg)?;
        let g = noise_basis.adjoint() * f_transform(&a)?.matrix();
        u += g.adjoint() * g;
    }
    CouplingCost::from_matrix(u, cfg.n_sensors())
}

/// Minimum-eigenvector estimate with its spectral diagnostics.
#[derive(Debug, Clone)]
pub struct CouplingEstimate {
    pub coupling: CouplingVector,
    /// Eigenvalues of `U`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `λ₂ − λ₁`.
    pub gap: f64,
}

/// The eigenvector of the smallest eigenvalue, scaled so `c₁ = 1` exactly.
pub fn estimate_coupling(cost: &CouplingCost) -> Result<CouplingVector> {
    estimate_coupling_detailed(cost).map(|e| e.coupling)
}

pub fn estimate_coupling_detailed(cost: &CouplingCost) -> Result<CouplingEstimate> {
    let (values, vectors) = cost.eigen();
    let top = values.last().copied().unwrap_or(0.0).abs();
    let gap = if values.len() > 1 {
        values[1] - values[0]
    } else {
        f64::INFINITY
    };
    let threshold = SPECTRAL_GAP_TOL * top;
    if !(gap > threshold) {
        return Err(Error::DegenerateSpectrum { gap, threshold });
    }
    let v = vectors.column(0);
    let lead = v[0];
    if lead.norm() < 1e-12 * v.norm() {
        return Err(Error::DegenerateNormalization(lead.norm()));
    }
    let mut coeffs: Vec<Complex64> = v.iter().map(|z| z / lead).collect();
    coeffs[0] = Complex64::new(1.0, 0.0);
    Ok(CouplingEstimate {
        coupling: CouplingVector::from_estimate(coeffs, cost.n_sensors)?,
        eigenvalues: values,
        gap,
    })
}
