//! Monte Carlo benchmarking of the `ucacal` estimators: scenario files,
//! parallel trials with per-trial seeds, error metrics, CSV tables and
//! reference oracles.
//!
//! ```
//! use ucacal_bench::harness::{run_sweep, Axis, Condition, Setup};
//! use ucacal_bench::scenario::{Estimator, Scenario};
//!
//! let mut scenario = Scenario::preset();
//! scenario.trials = 2;
//! scenario.estimators = vec![Estimator::GridMusic];
//! let setup = Setup::new(&scenario)?;
//! let rows = run_sweep(&setup, Axis::Snr, &[20.0], Condition::base(&scenario))?;
//! assert_eq!(rows[0].correct_order_prob, 1.0);
//! # Ok::<(), ucacal_bench::BenchError>(())
//! ```

mod error;
pub mod harness;
pub mod oracle;
pub mod output;
pub mod scenario;

pub use error::{BenchError, Result};
