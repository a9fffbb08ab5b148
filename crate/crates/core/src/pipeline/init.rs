//! Starting point for the coupling estimate.
//!
//! A dictionary built with `Ĉ = I` still places each source near its true
//! azimuth when the coupling is strong, but elevations can be far off. The
//! search solves stage 0 at `Ĉ = I`, then runs the joint refinement from a
//! few elevation guesses per cluster and keeps the best fit.

use crate::array::{ArrayConfig, Direction};
use crate::coupling::CouplingVector;
use crate::dictionary::{band_center, Band, BandGrid};
use crate::error::{Error, Result};
use crate::lasso::active_from_norms;
use crate::subspace::SubspaceData;

use super::polish::polish;
use super::{cluster_bands, solve_stage, PipelineConfig};

/// Elevation guesses tried besides the cluster's own, degrees.
const ELEVATION_STARTS: [f64; 3] = [15.0, 45.0, 75.0];

/// Largest number of elevation combinations tried exhaustively per set of
/// clusters; beyond it the sources are varied one at a time.
const MAX_COMBINATIONS: usize = 64;

/// Clusters considered beyond the `k` strongest. A strongly coupled
/// source can rank below several spurious clusters at `Ĉ = I`.
const EXTRA_CLUSTERS: usize = 3;

/// Fits that put two directions closer than this, in degrees, describe
/// fewer than `k` sources and are discarded.
const MIN_SEPARATION: f64 = 1.0;

/// Relative cost margin within which two fits count as equally good; the
/// one closer to no coupling wins.
const TIE_MARGIN: f64 = 1e-3;

/// Iteration cap of each trial refinement.
const SEARCH_MAX_ITER: usize = 60;

pub(crate) fn search_coupling(
    cfg: &ArrayConfig,
    sub: &SubspaceData,
    pcfg: &PipelineConfig,
) -> Result<CouplingVector> {
    let n = cfg.n_sensors();
    let identity = CouplingVector::identity(n)?;
    let (n_az, n_el) = pcfg.schedule[0];
    let grid = BandGrid::uniform(n_az, n_el)?;
    let (norms, _) = solve_stage(cfg, &grid, &identity, sub, pcfg)?;
    let active = active_from_norms(&norms, pcfg.rel_threshold)?;
    if active.is_empty() {
        return Err(Error::NoSourcesDetected);
    }
    let clusters = cluster_bands(grid.bands(), &active, &norms);
    let centres: Vec<Direction> = clusters
        .iter()
        .take(sub.k + EXTRA_CLUSTERS)
        .map(|c| band_center(&grid.bands()[c.members[0]]))
        .collect();
    let m = centres.len().min(sub.k);

    let mut best: Option<(f64, CouplingVector)> = None;
    for subset in subsets(centres.len(), m) {
        let picked: Vec<Direction> = subset.iter().map(|&i| centres[i]).collect();
        search_subset(cfg, sub, &identity, &picked, &mut best)?;
    }
    Ok(best.map(|b| b.1).unwrap_or(identity))
}

/// Runs the trial refinements for one set of cluster centres.
fn search_subset(
    cfg: &ArrayConfig,
    sub: &SubspaceData,
    identity: &CouplingVector,
    centres: &[Direction],
    best: &mut Option<(f64, CouplingVector)>,
) -> Result<()> {
    let starts: Vec<Vec<f64>> = centres
        .iter()
        .map(|d| std::iter::once(d.elevation_deg).chain(ELEVATION_STARTS).collect())
        .collect();
    let unconstrained: Vec<Vec<Band>> = vec![Vec::new(); centres.len()];

    let mut fit = |choice: &[usize]| -> Result<f64> {
        let doas: Vec<Direction> = centres
            .iter()
            .zip(choice)
            .enumerate()
            .map(|(i, (d, &j))| Direction::new(d.azimuth_deg, starts[i][j]))
            .collect();
        let p = polish(cfg, &sub.noise_basis, &doas, &unconstrained, identity, SEARCH_MAX_ITER)?;
        if too_close(&p.doas) {
            return Ok(f64::INFINITY);
        }
        let better = match best {
            None => true,
            Some((cost, c)) => {
                if p.cost < *cost * (1.0 - TIE_MARGIN) {
                    true
                } else if p.cost <= *cost * (1.0 + TIE_MARGIN) {
                    p.coupling.distance(identity) < c.distance(identity)
                } else {
                    false
                }
            }
        };
        if better {
            *best = Some((p.cost, p.coupling));
        }
        Ok(p.cost)
    };

    let per = ELEVATION_STARTS.len() + 1;
    let m = centres.len();
    let exhaustive = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(per).filter(|&v| v <= MAX_COMBINATIONS));
    if let Some(total) = exhaustive {
        for code in 0..total {
            let choice: Vec<usize> = (0..m).map(|i| code / per.pow(i as u32) % per).collect();
            fit(&choice)?;
        }
    } else {
        let mut choice = vec![0; m];
        fit(&choice)?;
        for i in 0..m {
            let mut keep = (0, f64::INFINITY);
            for j in 0..per {
                choice[i] = j;
                let cost = fit(&choice)?;
                if cost < keep.1 {
                    keep = (j, cost);
                }
            }
            choice[i] = keep.0;
        }
    }
    Ok(())
}

fn too_close(doas: &[Direction]) -> bool {
    doas.iter()
        .enumerate()
        .any(|(i, a)| doas[i + 1..].iter().any(|b| a.separation_deg(b) < MIN_SEPARATION))
}

/// All `m`-element subsets of `0..n` in lexicographic order.
fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    if m > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..m).rev().find(|&i| cur[i] < n - m + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
