//! Signal/noise subspaces of the snapshot matrix and source-count selection.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::synth::SnapshotMatrix;

/// Output of the SVD reduction `X_SV = X·V_s`.
#[derive(Debug, Clone)]
pub struct SubspaceData {
    /// `N×K` reduced data.
    pub reduced: DMatrix<Complex64>,
    /// `N×K`, left singular vectors of the `K` largest singular values.
    pub signal_basis: DMatrix<Complex64>,
    /// `N×(N−K)`, the orthogonal complement of `signal_basis`.
    pub noise_basis: DMatrix<Complex64>,
    /// All singular values, descending (zero padded to `N` when `T < N`).
    pub singular_values: Vec<f64>,
    pub k: usize,
}

struct OrderedSvd {
    u: DMatrix<Complex64>,
    /// `T×r`, right singular vectors as columns.
    v: DMatrix<Complex64>,
    sigma: Vec<f64>,
}

/// SVD with descending singular values and a full `N×N` left basis.
fn ordered_svd(x: &DMatrix<Complex64>) -> OrderedSvd {
    let (n, t) = x.shape();
    // zero columns leave the spectrum unchanged but force a complete U
    let padded;
    let work = if t < n {
        padded = x.clone().resize_horizontally(n, Complex64::new(0.0, 0.0));
        &padded
    } else {
        x
    };
    let svd = work.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let r = order.len();
    let mut u_sorted = DMatrix::zeros(n, r);
    let mut v_sorted = DMatrix::zeros(t, r);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        for row in 0..t {
            v_sorted[(row, dst)] = v_t[(src, row)].conj();
        }
    }
    OrderedSvd {
        u: u_sorted,
        v: v_sorted,
        sigma: order.iter().map(|&i| svd.singular_values[i]).collect(),
    }
}

/// Projects the snapshots onto the `k`-dimensional dominant subspace.
///
/// Each right singular vector is rotated so its largest-magnitude entry is
/// real positive (the matching left vector gets the same rotation), which
/// makes the result independent of the SVD's phase choices.
pub fn reduce(x: &SnapshotMatrix, k: usize) -> Result<SubspaceData> {
    let data = x.data();
    let (n, t) = data.shape();
    if k == 0 || k >= n.min(t) {
        return domain(format!("source count {k} must lie in 1..{}", n.min(t)));
    }
    let OrderedSvd { mut u, mut v, sigma } = ordered_svd(data);

    for col in 0..k {
        let (_, pivot) = v
            .column(col)
            .iter()
            .enumerate()
            .fold((0usize, Complex64::new(0.0, 0.0)), |best, (i, &z)| {
                if z.norm() > best.1.norm() {
                    (i, z)
                } else {
                    best
                }
            });
        if pivot.norm() > 0.0 {
            let rot = (pivot / pivot.norm()).conj();
            v.column_mut(col).iter_mut().for_each(|z| *z *= rot);
            u.column_mut(col).iter_mut().for_each(|z| *z *= rot);
        }
    }

    let v_s = v.columns(0, k).into_owned();
    Ok(SubspaceData {
        reduced: data * v_s,
        signal_basis: u.columns(0, k).into_owned(),
        noise_basis: u.columns(k, n - k).into_owned(),
        singular_values: sigma,
        k,
    })
}

/// `(1/T)·X·Xᴴ`.
pub fn sample_covariance(x: &SnapshotMatrix) -> DMatrix<Complex64> {
    let d = x.data();
    d * d.adjoint() / Complex64::new(d.ncols() as f64, 0.0)
}

/// Sample covariance eigenvalues, descending, length `N`.
pub fn covariance_eigenvalues(x: &SnapshotMatrix) -> Vec<f64> {
    let d = x.data();
    let t = d.ncols() as f64;
    let mut sv: Vec<f64> = d.singular_values().iter().map(|s| s * s / t).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.resize(d.nrows(), 0.0);
    sv
}

/// Eigenvalues below this fraction of the largest are treated as exact
/// zeros of a rank-deficient (noiseless) covariance and floored.
const EIGEN_FLOOR: f64 = 1e-10;

/// Information-criterion score for every `k` in `1..=k_max`.
///
/// The log-likelihood of order `k` measures how spherical the `N−k`
/// smallest eigenvalues are (geometric over arithmetic mean):
///
/// ```text
/// LL(k)  = T·(N−k)·ln(geo(λ_{k+1..N}) / arith(λ_{k+1..N}))
/// BIC(k) = −2·LL(k) + k·(2N−k)·ln T
/// ```
///
/// `k·(2N−k)` counts the real parameters of `k` complex eigenvectors and
/// eigenvalues.
pub fn bic_scores(eigenvalues: &[f64], snapshots: usize, k_max: usize) -> Vec<f64> {
    let n = eigenvalues.len();
    let t = snapshots as f64;
    let top = eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = top * EIGEN_FLOOR;
    let mut sorted: Vec<f64> = eigenvalues.iter().map(|&l| l.max(floor)).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));

    (1..=k_max)
        .map(|k| {
            let tail = &sorted[k..];
            let m = tail.len() as f64;
            let arith = tail.iter().sum::<f64>() / m;
            let log_geo = tail.iter().map(|l| l.ln()).sum::<f64>() / m;
            let ll = t * m * (log_geo - arith.ln());
            -2.0 * ll + (k * (2 * n - k)) as f64 * t.ln()
        })
        .collect()
}

/// Selects the source count minimizing [`bic_scores`].
///
/// `k_max` is capped at `N − 2` (the noise subspace keeps at least two
/// dimensions) and at `T − 1`.
pub fn select_model_order(x: &SnapshotMatrix, k_max: usize) -> Result<usize> {
    let n = x.n_sensors();
    let t = x.snapshot_count();
    let cap = k_max.min(n.saturating_sub(2)).min(t.saturating_sub(1));
    if cap == 0 {
        return domain(format!("no admissible source count for N = {n}, T = {t}, k_max = {k_max}"));
    }
    let eig = covariance_eigenvalues(x);
    if eig[0] <= 0.0 {
        return Ok(1);
    }
    let scores = bic_scores(&eig, t, cap);
    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .expect("at least one candidate");
    Ok(best)
}
