//! The reference experiment: a 15-sensor UCA of radius λ observing three
//! sources through a two-coefficient coupling, zoomed in three stages.

use num_complex::Complex64;

use crate::array::{ArrayConfig, Source, SourceSet};
use crate::coupling::CouplingVector;

pub const SENSORS: usize = 15;
pub const SNAPSHOTS: usize = 200;

pub fn array() -> ArrayConfig {
    ArrayConfig::with_radius_in_wavelengths(SENSORS, 1.0).expect("valid preset")
}

/// Sources listed as (elevation, azimuth): (18.3°, 243.4°), (83.6°, 60°),
/// (73.9°, 357.8°), unit power.
pub fn sources() -> SourceSet {
    SourceSet::new(vec![
        Source::new(243.4, 18.3, 1.0).unwrap(),
        Source::new(60.0, 83.6, 1.0).unwrap(),
        Source::new(357.8, 73.9, 1.0).unwrap(),
    ])
    .expect("valid preset")
}

/// `c₂ = 0.79 + 0.432j`, `c₃ = 0.35 + 0.16j`, remaining coefficients zero.
pub fn coupling() -> CouplingVector {
    CouplingVector::leading(
        &[Complex64::new(0.79, 0.432), Complex64::new(0.35, 0.16)],
        SENSORS,
    )
    .expect("valid preset")
}

/// Three-stage schedule as (azimuth, elevation) splits: 120×30 bands, then
/// each active band into 10×10, then 3×3. Final bands are 0.1° on a side.
pub fn schedule() -> Vec<(usize, usize)> {
    vec![(120, 30), (10, 10), (3, 3)]
}

/// The coarser alternative schedule (120×30, 5×5, 3×3).
pub fn coarse_schedule() -> Vec<(usize, usize)> {
    vec![(120, 30), (5, 5), (3, 3)]
}
