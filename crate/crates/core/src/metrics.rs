//! Pairing estimates with ground truth and Monte Carlo error summaries.

use serde::{Deserialize, Serialize};

use crate::array::{wrap_azimuth, Direction};
use crate::coupling::CouplingVector;
use crate::error::{domain, Result};

/// Smallest absolute azimuth difference, degrees in `[0, 180]`.
pub fn azimuth_gap(a: f64, b: f64) -> f64 {
    let d = wrap_azimuth(a - b);
    d.min(360.0 - d)
}

/// `Δθ² + Δφ²` in square degrees, with the azimuth difference taken on the
/// circle.
pub fn squared_angle_error(estimate: &Direction, truth: &Direction) -> f64 {
    let del = estimate.elevation_deg - truth.elevation_deg;
    let daz = azimuth_gap(estimate.azimuth_deg, truth.azimuth_deg);
    del * del + daz * daz
}

/// Largest list [`match_estimates`] accepts; the search is `O(K²·2ᴷ)`.
pub const MAX_MATCH: usize = 20;

/// The assignment minimizing the total [`squared_angle_error`]: truth `k`
/// pairs with `estimated[perm[k]]`.
pub fn match_estimates(estimated: &[Direction], truth: &[Direction]) -> Result<Vec<usize>> {
    let k = truth.len();
    if estimated.len() != k {
        return domain(format!("{} estimates for {k} true directions", estimated.len()));
    }
    if k > MAX_MATCH {
        return domain(format!("cannot match more than {MAX_MATCH} directions, got {k}"));
    }
    // best[mask]: least cost of pairing the first popcount(mask) truths with
    // the estimates in mask
    let full = 1usize << k;
    let mut best = vec![f64::INFINITY; full];
    let mut choice = vec![0usize; full];
    best[0] = 0.0;
    for mask in 0..full {
        if !best[mask].is_finite() {
            continue;
        }
        let t = mask.count_ones() as usize;
        if t == k {
            continue;
        }
        for e in (0..k).filter(|e| mask & (1 << e) == 0) {
            let next = mask | (1 << e);
            let cost = best[mask] + squared_angle_error(&estimated[e], &truth[t]);
            if cost < best[next] {
                best[next] = cost;
                choice[next] = e;
            }
        }
    }
    let mut perm = vec![0; k];
    let mut mask = full - 1;
    for t in (0..k).rev() {
        let e = choice[mask];
        perm[t] = e;
        mask &= !(1 << e);
    }
    Ok(perm)
}

/// Angle RMSE over a set of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRmse {
    /// `None` when no trial could be matched.
    pub rmse_deg: Option<f64>,
    pub matched_trials: usize,
    /// Trials whose estimate count differs from the truth.
    pub excluded_trials: usize,
}

/// `√(1/(K·M) · Σ [(θ̂ − θ)² + (φ̂ − φ)²])` over matched trials, each given
/// as `(estimates, truth)`.
pub fn rmse_angles(trials: &[(Vec<Direction>, Vec<Direction>)]) -> Result<AngleRmse> {
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut matched = 0;
    let mut excluded = 0;
    for (est, truth) in trials {
        if est.len() != truth.len() {
            excluded += 1;
            continue;
        }
        let perm = match_estimates(est, truth)?;
        sum += truth
            .iter()
            .zip(&perm)
            .map(|(t, &e)| squared_angle_error(&est[e], t))
            .sum::<f64>();
        count += truth.len();
        matched += 1;
    }
    Ok(AngleRmse {
        rmse_deg: (count > 0).then(|| (sum / count as f64).sqrt()),
        matched_trials: matched,
        excluded_trials: excluded,
    })
}

/// Normalization of the coupling RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingRmseForm {
    /// `√(1/M · Σ‖ĉ − c‖²) / ‖c‖`, independent of the trial count.
    #[default]
    Mean,
    /// `√(Σ‖ĉ − c‖²) / ‖c‖` without the `1/M`.
    Literal,
}

/// Coupling RMSE in percent over `(estimate, truth)` pairs. Each error is
/// normalized by its own truth, which is the usual form when the truth is
/// shared.
pub fn rmse_coupling(trials: &[(CouplingVector, CouplingVector)], form: CouplingRmseForm) -> Result<f64> {
    if trials.is_empty() {
        return domain("no trials");
    }
    let mut sum = 0.0;
    for (est, truth) in trials {
        if est.len() != truth.len() {
            return domain(format!(
                "coupling lengths differ: estimate {}, truth {}",
                est.len(),
                truth.len()
            ));
        }
        sum += (est.distance(truth) / truth.norm()).powi(2);
    }
    let m = match form {
        CouplingRmseForm::Mean => trials.len() as f64,
        CouplingRmseForm::Literal => 1.0,
    };
    Ok(100.0 * (sum / m).sqrt())
}
