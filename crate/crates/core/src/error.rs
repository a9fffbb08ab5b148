use thiserror::Error;

/// Errors raised by the estimation chain.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The series expansion of an integrated atom did not reach its tolerance.
    #[error("series for sensor {sensor} did not converge after {terms} terms (tail bound {tail_bound:e}, partial sum {partial:e})")]
    SeriesNotConverged {
        sensor: usize,
        terms: usize,
        tail_bound: f64,
        partial: f64,
    },

    /// The minimum-eigenvalue eigenvector cannot be scaled to a unit first entry.
    #[error("degenerate coupling normalization: first entry magnitude {0:e}")]
    DegenerateNormalization(f64),

    /// The smallest eigenvalue of the coupling cost is not simple.
    #[error("degenerate coupling spectrum: eigenvalue gap {gap:e} below {threshold:e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    /// The sparse solver left every band inactive.
    #[error("no sources detected")]
    NoSourcesDetected,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
