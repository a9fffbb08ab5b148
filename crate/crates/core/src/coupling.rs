//! Mutual coupling for uniform circular arrays.
//!
//! The coupling matrix of a UCA is complex symmetric and circulant: the
//! coupling between two sensors only depends on their circular distance
//! `min(d, N − d)`. It is therefore fixed by `L` free coefficients, where
//! `L = N/2 + 1` for even `N` and `(N + 1)/2` for odd `N`, and `c₁ = 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Number of free coupling coefficients for an array of `n` sensors.
pub fn coupling_len(n: usize) -> usize {
    n / 2 + 1
}

/// Circular distance between sensor indices `i` and `j` of an `n`-sensor ring.
pub fn circular_distance(i: usize, j: usize, n: usize) -> usize {
    let d = (j + n - i % n) % n;
    d.min(n - d)
}

/// The free coefficients `[c₁, …, c_L]` of a coupling matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingVector {
    coeffs: Vec<Complex64>,
    n_sensors: usize,
}

impl CouplingVector {
    /// Validated construction: length rule, `c₁ = 1` and non-increasing
    /// magnitudes (zeros allowed).
    pub fn new(coeffs: Vec<Complex64>, n_sensors: usize) -> Result<Self> {
        let c = Self::from_estimate(coeffs, n_sensors)?;
        for (i, w) in c.coeffs.windows(2).enumerate() {
            if w[1].norm() > w[0].norm() {
                return domain(format!(
                    "coupling magnitudes must be non-increasing: |c{}| = {} > |c{}| = {}",
                    i + 2,
                    w[1].norm(),
                    i + 1,
                    w[0].norm()
                ));
            }
        }
        Ok(c)
    }

    /// Construction for estimated vectors, which only have to satisfy the
    /// length rule and `c₁ = 1`; noise may break the magnitude ordering.
    pub fn from_estimate(coeffs: Vec<Complex64>, n_sensors: usize) -> Result<Self> {
        if n_sensors < 3 {
            return domain(format!("coupling needs at least 3 sensors, got {n_sensors}"));
        }
        let l = coupling_len(n_sensors);
        if coeffs.len() != l {
            return domain(format!(
                "{n_sensors} sensors need {l} coupling coefficients, got {}",
                coeffs.len()
            ));
        }
        if coeffs[0] != Complex64::new(1.0, 0.0) {
            return domain(format!("first coupling coefficient must be exactly 1, got {}", coeffs[0]));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return domain("coupling coefficients must be finite");
        }
        Ok(Self { coeffs, n_sensors })
    }

    /// `c = e₁`, no coupling.
    pub fn identity(n_sensors: usize) -> Result<Self> {
        Self::leading(&[], n_sensors)
    }

    /// `c₁ = 1` followed by `tail`, zero padded to length `L`.
    pub fn leading(tail: &[Complex64], n_sensors: usize) -> Result<Self> {
        let l = coupling_len(n_sensors);
        if tail.len() + 1 > l {
            return domain(format!("{} coefficients exceed L = {l}", tail.len() + 1));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); l];
        coeffs[0] = Complex64::new(1.0, 0.0);
        coeffs[1..=tail.len()].copy_from_slice(tail);
        Self::new(coeffs, n_sensors)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.coeffs)
    }

    /// The mirrored first row `c̃ = [c₁, …, c_L, …, c₂]`.
    pub fn first_row(&self) -> Vec<Complex64> {
        (0..self.n_sensors)
            .map(|k| self.coeffs[circular_distance(0, k, self.n_sensors)])
            .collect()
    }

    /// Euclidean distance to another coupling vector of the same array.
    pub fn distance(&self, other: &CouplingVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Symmetric circulant `N×N` coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    matrix: DMatrix<Complex64>,
}

impl CouplingMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        &self.matrix * x
    }
}

/// Builds `toeplitz(c̃, c̃)`. Entry `(i, j)` is `c` at the circular distance
/// of the two sensors, which makes the result symmetric and circulant by
/// construction.
pub fn coupling_matrix(c: &CouplingVector) -> CouplingMatrix {
    let n = c.n_sensors;
    let row = c.first_row();
    CouplingMatrix {
        matrix: DMatrix::from_fn(n, n, |i, j| row[(j + n - i) % n]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn length_rule() {
        assert_eq!(coupling_len(15), 8);
        assert_eq!(coupling_len(16), 9);
        assert_eq!(coupling_len(5), 3);
        assert_eq!(coupling_len(4), 3);
        assert!(CouplingVector::new(vec![c(1.0, 0.0); 3], 6).is_err());
        assert!(CouplingVector::new(vec![c(1.0, 0.0), c(0.5, 0.0), c(0.2, 0.0)], 5).is_ok());
    }

    #[test]
    fn first_coefficient_must_be_one() {
        assert!(CouplingVector::new(vec![c(0.9, 0.0), c(0.5, 0.0), c(0.2, 0.0)], 5).is_err());
        assert!(CouplingVector::from_estimate(vec![c(1.0, 1e-17), c(0.0, 0.0), c(0.0, 0.0)], 5).is_err());
    }

    #[test]
    fn ordering_is_weak_and_allows_zeros() {
        assert!(CouplingVector::new(vec![c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0)], 5).is_ok());
        assert!(CouplingVector::new(vec![c(1.0, 0.0), c(0.2, 0.0), c(0.5, 0.0)], 5).is_err());
        // estimates are allowed to break the ordering
        assert!(CouplingVector::from_estimate(vec![c(1.0, 0.0), c(0.2, 0.0), c(0.5, 0.0)], 5).is_ok());
    }

    #[test]
    fn identity_coupling_gives_identity_matrix() {
        for n in 3..10 {
            let m = coupling_matrix(&CouplingVector::identity(n).unwrap());
            assert_eq!(m.matrix(), &DMatrix::identity(n, n));
        }
    }

    #[test]
    fn odd_array_first_row_and_shifts() {
        let v = CouplingVector::new(vec![c(1.0, 0.0), c(0.5, 0.0), c(0.2, 0.0)], 5).unwrap();
        let m = coupling_matrix(&v).into_inner();
        let expected = [1.0, 0.5, 0.2, 0.2, 0.5];
        for j in 0..5 {
            assert_eq!(m[(0, j)], c(expected[j], 0.0));
        }
        for i in 1..5 {
            for j in 0..5 {
                assert_eq!(m[(i, j)], m[(i - 1, (j + 4) % 5)]);
            }
        }
    }

    #[test]
    fn even_array_first_row() {
        let v = CouplingVector::new(vec![c(1.0, 0.0), c(0.4, 0.1), c(0.2, 0.0), c(0.1, 0.0)], 6).unwrap();
        let row = v.first_row();
        let expected = [v.coeffs[0], v.coeffs[1], v.coeffs[2], v.coeffs[3], v.coeffs[2], v.coeffs[1]];
        assert_eq!(row, expected);
    }

    #[test]
    fn experiment_coupling_first_row() {
        let c2 = c(0.79, 0.432);
        let c3 = c(0.35, 0.16);
        let v = CouplingVector::leading(&[c2, c3], 15).unwrap();
        let row = coupling_matrix(&v).into_inner().row(0).transpose();
        let zero = c(0.0, 0.0);
        let mut expected = vec![zero; 15];
        expected[0] = c(1.0, 0.0);
        expected[1] = c2;
        expected[2] = c3;
        expected[13] = c3;
        expected[14] = c2;
        assert_eq!(row.as_slice(), expected.as_slice());
    }

    proptest::proptest! {
        #[test]
        fn matrix_is_exactly_symmetric_and_circulant(
            n in 3usize..20,
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 10),
        ) {
            let l = coupling_len(n);
            let mut coeffs = vec![c(1.0, 0.0)];
            coeffs.extend(raw.iter().take(l - 1).map(|&(re, im)| c(re, im)));
            let v = CouplingVector::from_estimate(coeffs, n).unwrap();
            let m = coupling_matrix(&v).into_inner();
            for i in 0..n {
                proptest::prop_assert_eq!(m[(i, i)], c(1.0, 0.0));
                for j in 0..n {
                    proptest::prop_assert_eq!(m[(i, j)], m[(j, i)]);
                    if i > 0 {
                        proptest::prop_assert_eq!(m[(i, j)], m[(i - 1, (j + n - 1) % n)]);
                    }
                }
            }
        }
    }
}
