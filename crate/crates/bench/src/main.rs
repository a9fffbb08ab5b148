use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ucacal_bench::harness::{run_sweep, with_threads, Axis, Condition, Setup};
use ucacal_bench::oracle::{check_f_transform, check_lasso, check_quadrature};
use ucacal_bench::output::write_sweep;
use ucacal_bench::scenario::{Estimator, Scenario};
use ucacal_bench::Result;

/// Monte Carlo benchmarks of joint DOA and coupling estimation on a
/// uniform circular array.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the SNR grid of a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Angle and coupling error against SNR.
    SweepSnr {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 5.0, 10.0, 15.0, 20.0])]
        snr: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Angle error against the snapshot count at fixed SNR.
    SweepSnapshots {
        #[arg(long, value_delimiter = ',', default_values_t = [50.0, 100.0, 200.0, 400.0])]
        snapshots: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        snr: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Probability of detecting the true source count against α.
    SweepAlpha {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        snr: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Check the coupling transform, the atom series and the LASSO solver
    /// against independent references.
    OracleCheck {
        /// Random cases per check.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Base scenario for the sweep commands; defaults to the reference
    /// experiment.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    parallel: Option<usize>,
    /// Run only this estimator.
    #[arg(long)]
    estimator: Option<Estimator>,
}

impl Common {
    fn scenario(&self, file: Option<&Path>) -> Result<Scenario> {
        let mut s = match file.or(self.scenario_file.as_deref()) {
            Some(p) => Scenario::load(p)?,
            None => Scenario::preset(),
        };
        if let Some(t) = self.trials {
            s.trials = t;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(e) = self.estimator {
            s.estimators = vec![e];
        }
        s.validate()?;
        Ok(s)
    }

    fn threads(&self) -> usize {
        self.parallel
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

fn sweep(common: &Common, scenario: Scenario, name: &str, axis: Axis, values: &[f64], base: Condition) -> Result<()> {
    let setup = Setup::new(&scenario)?;
    let rows = with_threads(common.threads(), || run_sweep(&setup, axis, values, base))??;
    for r in &rows {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{}={:<6} {:<22} rmse {:>9}°  coupling {:>9}%  P(order) {:.2}",
            axis.name(),
            r.value,
            r.estimator.name(),
            fmt(r.rmse_angles),
            fmt(r.rmse_coupling_pct),
            r.correct_order_prob
        );
    }
    for p in write_sweep(&common.out, name, &setup, &rows)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn oracle_check(trials: usize, seed: u64) -> Result<bool> {
    let f = check_f_transform(trials, seed)?;
    let q = check_quadrature(trials, seed)?;
    let l = check_lasso(trials, seed, 1e-8)?;
    let checks = [
        (format!("coupling transform: {} draws, max |F{{a}}c - C(c)a| = {:.2e}", f.draws, f.max_error), f.max_error < 1e-12),
        (format!("atom series: {} bands, max relative error vs quadrature = {:.2e}", q.cases, q.max_rel_error), q.max_rel_error < 1e-8),
        (
            format!(
                "lasso: {} systems, max KKT violation = {:.2e}, max objective gap vs proximal gradient = {:.2e}",
                l.systems, l.max_kkt, l.max_rel_gap
            ),
            l.all_converged && l.max_kkt <= 1e-8 && l.max_rel_gap < 1e-6,
        ),
    ];
    let mut ok = true;
    for (line, pass) in &checks {
        println!("{} {line}", if *pass { "PASS" } else { "FAIL" });
        ok &= pass;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, common } => common.scenario(Some(scenario)).and_then(|s| {
            let name = scenario.file_stem().and_then(|n| n.to_str()).unwrap_or("run").to_string();
            let values = s.snr_db.clone();
            let base = Condition::base(&s);
            sweep(common, s, &name, Axis::Snr, &values, base)
        }),
        Command::SweepSnr { snr, common } => common.scenario(None).and_then(|s| {
            let base = Condition::base(&s);
            sweep(common, s, "snr", Axis::Snr, snr, base)
        }),
        Command::SweepSnapshots { snapshots, snr, common } => common.scenario(None).and_then(|s| {
            let base = Condition::base(&s).with(Axis::Snr, *snr)?;
            sweep(common, s, "snapshots", Axis::Snapshots, snapshots, base)
        }),
        Command::SweepAlpha { alphas, snr, common } => common.scenario(None).and_then(|s| {
            let base = Condition::base(&s).with(Axis::Snr, *snr)?;
            sweep(common, s, "alpha", Axis::Alpha, alphas, base)
        }),
        Command::OracleCheck { trials, seed } => match oracle_check(*trials, *seed) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::FAILURE,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
