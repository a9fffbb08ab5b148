//! Joint 2-D direction-of-arrival and mutual coupling estimation for
//! uniform circular arrays.
//!
//! The estimator alternates two steps. Directions are found by sparse
//! regression of the reduced snapshot matrix on an *integrated wideband
//! dictionary*, whose columns are steering vectors integrated over
//! azimuth × elevation bands, zooming into the bands the solver activates.
//! The coupling matrix, which is symmetric circulant for a UCA, is then
//! re-estimated from the direction estimates and the noise subspace as the
//! minimum eigenvector of a small Hermitian form.
//!
//! ```
//! use ucacal::{presets, synthesize, pipeline::{run, PipelineConfig}};
//!
//! let cfg = presets::array();
//! let data = synthesize(&cfg, &presets::sources(), &presets::coupling(), 200, 20.0, 7)?;
//! let result = run(&data.snapshots, &cfg, &PipelineConfig::default())?;
//! assert_eq!(result.doas.len(), 3);
//! # Ok::<(), ucacal::Error>(())
//! ```

pub mod array;
pub mod baseline;
pub mod coupling;
pub mod dictionary;
mod error;
pub mod lasso;
pub mod mcm;
pub mod metrics;
pub mod pipeline;
pub mod presets;
pub mod subspace;
pub mod synth;

pub use array::{steering_vector, ArrayConfig, Direction, Source, SourceSet};
pub use coupling::{coupling_matrix, CouplingMatrix, CouplingVector};
pub use error::{Error, Result};
pub use synth::{synthesize, GroundTruth, SnapshotMatrix, Synthesis};

pub use num_complex::Complex64;
