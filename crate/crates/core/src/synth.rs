//! Synthetic snapshots following `X = C·A(φ, θ)·S + E`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::array::{steering_matrix, ArrayConfig, SourceSet};
use crate::coupling::{coupling_matrix, CouplingVector};
use crate::error::{domain, Result};

/// `N×T` array output; column `t` is the snapshot at time index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<Complex64>,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return domain("snapshot matrix must be nonempty");
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn n_sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshot_count(&self) -> usize {
        self.data.ncols()
    }
}

/// What generated a snapshot matrix. Serialized for the bench harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub array: ArrayConfig,
    pub sources: SourceSet,
    pub coupling: CouplingVector,
    pub snapshots: usize,
    pub seed: u64,
    /// Zero for noiseless data.
    pub noise_variance: f64,
    /// `10·log10(σᵢ²/σ²)` per source; `None` when noiseless.
    pub per_source_snr_db: Vec<Option<f64>>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub snapshots: SnapshotMatrix,
    pub truth: GroundTruth,
}

/// Draws a `rows×cols` matrix of i.i.d. circularly symmetric complex
/// Gaussians with the given variance (real and imaginary parts each carry
/// half of it). Entries are drawn in column-major order.
pub fn complex_gaussian<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> DMatrix<Complex64> {
    if variance == 0.0 {
        return DMatrix::zeros(rows, cols);
    }
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite variance");
    DMatrix::from_fn(rows, cols, |_, _| {
        let re = normal.sample(rng);
        let im = normal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Simulates `T` snapshots of the coupled array.
///
/// The noise variance is `max σᵢ² / 10^(snr_db/10)`, so `snr_db` is the SNR
/// of the strongest source; `f64::INFINITY` gives noiseless data. Signals
/// are drawn first (`K×T`), then noise (`N×T`), from one generator seeded
/// with `seed`.
pub fn synthesize(
    cfg: &ArrayConfig,
    sources: &SourceSet,
    coupling: &CouplingVector,
    snapshots: usize,
    snr_db: f64,
    seed: u64,
) -> Result<Synthesis> {
    cfg.validate()?;
    sources.validate()?;
    if snapshots == 0 {
        return domain("need at least one snapshot");
    }
    if coupling.n_sensors() != cfg.n_sensors() {
        return domain(format!(
            "coupling built for {} sensors, array has {}",
            coupling.n_sensors(),
            cfg.n_sensors()
        ));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return domain(format!("invalid SNR {snr_db}"));
    }

    let max_power = sources.iter().map(|s| s.power).fold(0.0, f64::max);
    let noise_variance = if snr_db.is_infinite() {
        0.0
    } else {
        max_power / 10f64.powf(snr_db / 10.0)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signals = complex_gaussian(sources.len(), snapshots, 1.0, &mut rng);
    for (k, s) in sources.iter().enumerate() {
        let scale = s.power.sqrt();
        signals.row_mut(k).iter_mut().for_each(|v| *v *= scale);
    }
    let noise = complex_gaussian(cfg.n_sensors(), snapshots, noise_variance, &mut rng);

    let a = steering_matrix(cfg, &sources.directions())?;
    let c = coupling_matrix(coupling);
    let data = c.matrix() * a * signals + noise;

    let per_source_snr_db = sources
        .iter()
        .map(|s| (noise_variance > 0.0).then(|| 10.0 * (s.power / noise_variance).log10()))
        .collect();

    Ok(Synthesis {
        snapshots: SnapshotMatrix::new(data)?,
        truth: GroundTruth {
            array: *cfg,
            sources: sources.clone(),
            coupling: coupling.clone(),
            snapshots,
            seed,
            noise_variance,
            per_source_snr_db,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering_vector, Source};
    use crate::presets;

    #[test]
    fn noiseless_single_source_is_one_outer_product_term() {
        let cfg = presets::array();
        let sources = SourceSet::new(vec![Source::new(120.0, 40.0, 2.0).unwrap()]).unwrap();
        let ident = CouplingVector::identity(15).unwrap();
        let out = synthesize(&cfg, &sources, &ident, 1, f64::INFINITY, 9).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = complex_gaussian(1, 1, 1.0, &mut rng)[(0, 0)] * 2f64.sqrt();
        let a = steering_vector(&cfg, 120.0, 40.0).unwrap();
        let x = out.snapshots.data();
        for n in 0..15 {
            assert!((x[(n, 0)] - a[n] * s).norm() < 1e-14);
        }
        assert_eq!(out.truth.noise_variance, 0.0);
        assert_eq!(out.truth.per_source_snr_db, vec![None]);
    }

    #[test]
    fn experiment_dimensions() {
        let out = synthesize(
            &presets::array(),
            &presets::sources(),
            &presets::coupling(),
            200,
            10.0,
            1,
        )
        .unwrap();
        assert_eq!(out.snapshots.data().shape(), (15, 200));
        for snr in &out.truth.per_source_snr_db {
            assert!((snr.unwrap() - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let run = |seed| {
            synthesize(&presets::array(), &presets::sources(), &presets::coupling(), 20, 5.0, seed)
                .unwrap()
                .snapshots
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn identity_coupling_equals_explicit_identity_product() {
        let cfg = presets::array();
        let ident = CouplingVector::identity(15).unwrap();
        let a = synthesize(&cfg, &presets::sources(), &ident, 30, 3.0, 11).unwrap();
        let x = a.snapshots.data();
        let multiplied = DMatrix::<Complex64>::identity(15, 15) * x;
        assert_eq!(&multiplied, x);
    }

    #[test]
    fn noise_covariance_approaches_scaled_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = 100_000;
        let variance = 0.7;
        let e = complex_gaussian(4, t, variance, &mut rng);
        let r = &e * e.adjoint() / Complex64::new(t as f64, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { variance } else { 0.0 };
                assert!((r[(i, j)] - target).norm() < 0.05 * variance, "entry ({i},{j}) = {}", r[(i, j)]);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = presets::array();
        let c5 = CouplingVector::identity(5).unwrap();
        assert!(synthesize(&cfg, &presets::sources(), &c5, 10, 0.0, 0).is_err());
        assert!(synthesize(&cfg, &presets::sources(), &presets::coupling(), 0, 0.0, 0).is_err());
    }

    #[test]
    fn ground_truth_round_trips_through_json() {
        let out = synthesize(&presets::array(), &presets::sources(), &presets::coupling(), 5, 20.0, 2).unwrap();
        let json = out.truth.to_json();
        let back: GroundTruth = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out.truth);
    }
}
