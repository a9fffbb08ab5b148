//! The full estimator: model order, SVD reduction, and alternating zoomed
//! sparse recovery with coupling re-estimation.
//!
//! 1. Pick the source count `k`, reduce the snapshots to `X_SV` and set
//!    the starting coupling estimate `Ĉ` (see [`CouplingInit`]).
//! 2. For every stage of the schedule: build the integrated dictionary of
//!    the current bands, solve the LASSO with atoms `Ĉ·A` at
//!    `γ = 2α·γ_max`, keep the active bands, group them into clusters of
//!    touching bands, and take one direction per source. Re-estimate `ĉ`
//!    from those directions, then split the active bands for the next
//!    stage.
//! 3. Report the final stage's directions.
//!
//! Stage 0 fixes the sources: its `k` strongest clusters, in order of
//! strength. Later stages take the strongest cluster near each of them.
//! A source's direction is the centre of its strongest band, or with
//! [`PipelineConfig::refine`] set, the point found by [`polish`] inside
//! its stage-0 cluster widened by one band.

mod init;
mod polish;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{wrap_azimuth, ArrayConfig, Direction};
use crate::coupling::{coupling_matrix, CouplingVector};
use crate::dictionary::{band_center, build_dictionary, Band, BandGrid, Normalization};
use crate::error::{domain, Error, Result};
use crate::lasso::{active_from_norms, gamma_max, solve_lasso, PenaltyMode, StackedSystem};
use crate::mcm::{coupling_cost, estimate_coupling_detailed};
use crate::presets;
use crate::subspace::{reduce, select_model_order, SubspaceData};
use crate::synth::SnapshotMatrix;

pub use polish::{polish, Polished};

/// Where the coupling estimate starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingInit {
    /// `Ĉ = I`.
    Identity,
    /// Stage 0 at `Ĉ = I` followed by a multi-start joint refinement.
    /// Strong coupling biases a dictionary built with `Ĉ = I` far enough
    /// that alternating from it can settle on the wrong directions.
    #[default]
    Search,
}

/// Iteration cap of the in-band refinement.
pub const POLISH_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// `(azimuth, elevation)` splits per stage; the first entry tiles the
    /// full rectangle.
    pub schedule: Vec<(usize, usize)>,
    /// Regularization as a fraction of the zero-solution level: `α = 1`
    /// switches every band off.
    pub alpha: f64,
    /// Band activation threshold relative to the strongest band.
    pub rel_threshold: f64,
    /// KKT tolerance of the LASSO, relative to the stage's `γ_max`.
    pub lasso_tol: f64,
    pub lasso_max_iter: usize,
    /// Largest source count considered; `None` means `N − 2`.
    pub k_max: Option<usize>,
    pub mode: PenaltyMode,
    pub init: CouplingInit,
    /// Locate each source inside its band cluster (jointly with the
    /// coupling) instead of using the strongest band's centre.
    pub refine: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schedule: presets::schedule(),
            alpha: 0.3,
            rel_threshold: 0.05,
            lasso_tol: 1e-8,
            lasso_max_iter: 20000,
            k_max: None,
            mode: PenaltyMode::Group,
            init: CouplingInit::Search,
            refine: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return domain("schedule needs at least one stage");
        }
        if self.schedule.iter().any(|&(a, e)| a == 0 || e == 0) {
            return domain("split counts must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return domain(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.rel_threshold > 0.0 && self.rel_threshold <= 1.0) {
            return domain(format!("relative threshold must lie in (0, 1], got {}", self.rel_threshold));
        }
        if !(self.lasso_tol.is_finite() && self.lasso_tol > 0.0) {
            return domain(format!("lasso tolerance must be positive, got {}", self.lasso_tol));
        }
        if self.lasso_max_iter == 0 {
            return domain("lasso_max_iter must be positive");
        }
        if self.k_max == Some(0) {
            return domain("k_max must be positive");
        }
        Ok(())
    }
}

/// Diagnostics of one zoom stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub split: (usize, usize),
    pub n_bands: usize,
    pub gamma_max: f64,
    pub gamma: f64,
    pub active: Vec<Band>,
    pub clusters: usize,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    /// False when the coupling estimate was degenerate and the previous
    /// one was kept.
    pub coupling_updated: bool,
    /// `λ₂ − λ₁` of the coupling cost, when it could be formed.
    pub spectral_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// Strongest first; never more than `k`.
    pub doas: Vec<Direction>,
    pub coupling: CouplingVector,
    /// Selected source count.
    pub k: usize,
    /// Final-stage band holding each estimate's strongest coefficient.
    pub doa_bands: Vec<Band>,
    /// How many of the `k` sources found no final-stage cluster.
    pub shortfall: usize,
    pub stages: Vec<StageTrace>,
    /// False when some stage's LASSO stopped before its certificate held.
    pub converged: bool,
    /// Refinement cost at the last stage, when refinement ran.
    pub polish_cost: Option<f64>,
}

/// A group of touching active bands, strongest band first.
#[derive(Debug, Clone)]
struct Cluster {
    members: Vec<usize>,
    strength: f64,
}

pub fn run(x: &SnapshotMatrix, cfg: &ArrayConfig, pcfg: &PipelineConfig) -> Result<EstimationResult> {
    cfg.validate()?;
    pcfg.validate()?;
    if x.n_sensors() != cfg.n_sensors() {
        return domain(format!(
            "snapshots have {} rows for {} sensors",
            x.n_sensors(),
            cfg.n_sensors()
        ));
    }
    let n = cfg.n_sensors();
    let k = select_model_order(x, pcfg.k_max.unwrap_or(n))?;
    let sub = reduce(x, k)?;

    let mut coupling = match pcfg.init {
        CouplingInit::Identity => CouplingVector::identity(n)?,
        CouplingInit::Search => init::search_coupling(cfg, &sub, pcfg)?,
    };
    let mut grid = BandGrid::uniform(pcfg.schedule[0].0, pcfg.schedule[0].1)?;
    let mut active = Vec::new();
    let mut stages = Vec::with_capacity(pcfg.schedule.len());
    let mut doas = Vec::new();
    let mut doa_bands = Vec::new();
    let mut polish_cost = None;
    let mut regions: Vec<Vec<Band>> = Vec::new();

    for (s, &split) in pcfg.schedule.iter().enumerate() {
        if s > 0 {
            grid = grid.refine(&active, split)?;
        }
        let (norms, mut trace) = solve_stage(cfg, &grid, &coupling, &sub, pcfg)?;
        active = active_from_norms(&norms, pcfg.rel_threshold)?;
        if active.is_empty() {
            return Err(Error::NoSourcesDetected);
        }
        trace.split = split;
        trace.active = active.iter().map(|&q| grid.bands()[q]).collect();

        let clusters = cluster_bands(grid.bands(), &active, &norms);
        trace.clusters = clusters.len();
        if s == 0 {
            let kept = &clusters[..clusters.len().min(k)];
            doa_bands = kept.iter().map(|c| grid.bands()[c.members[0]]).collect();
            regions = kept
                .iter()
                .map(|c| c.members.iter().map(|&q| widen(&grid.bands()[q])).collect())
                .collect();
        } else {
            // one cluster per first-stage region, so a source that splits
            // into several clusters cannot crowd out another; a region left
            // without one keeps its previous band
            let mut best: Vec<Option<Band>> = vec![None; regions.len()];
            for c in &clusters {
                let band = grid.bands()[c.members[0]];
                best[nearest_region(&regions, band_center(&band))].get_or_insert(band);
            }
            doa_bands = best.into_iter().zip(&doa_bands).map(|(b, &prev)| b.unwrap_or(prev)).collect();
        }
        doas = doa_bands.iter().map(band_center).collect();
        if pcfg.refine {
            // finer stages can pull a band off the source when sources
            // interfere, so the search stays inside the widened first-stage
            // clusters
            let own: Vec<Vec<Band>> = doas.iter().map(|&d| regions[nearest_region(&regions, d)].clone()).collect();
            let p = polish(cfg, &sub.noise_basis, &doas, &own, &coupling, POLISH_MAX_ITER)?;
            doas = p.doas;
            polish_cost = Some(p.cost);
        }

        match update_coupling(cfg, &sub, &doas) {
            Ok((c, gap)) => {
                coupling = c;
                trace.coupling_updated = true;
                trace.spectral_gap = Some(gap);
            }
            Err(Error::DegenerateSpectrum { gap, .. }) => trace.spectral_gap = Some(gap),
            Err(Error::DegenerateNormalization(_)) => {}
            Err(e) => return Err(e),
        }
        stages.push(trace);
    }

    Ok(EstimationResult {
        shortfall: k - doas.len(),
        converged: stages.iter().all(|s| s.converged),
        doas,
        coupling,
        k,
        doa_bands,
        stages,
        polish_cost,
    })
}

/// Solves one stage; returns the block norm of every band.
fn solve_stage(
    cfg: &ArrayConfig,
    grid: &BandGrid,
    coupling: &CouplingVector,
    sub: &SubspaceData,
    pcfg: &PipelineConfig,
) -> Result<(Vec<f64>, StageTrace)> {
    let dict = build_dictionary(cfg, grid, Normalization::UnitNorm)?;
    let atoms = coupled_atoms(dict.atoms(), coupling);
    let sys = StackedSystem::from_reduced(&atoms, &sub.reduced, pcfg.mode)?;
    let g_max = gamma_max(&sys);
    if g_max == 0.0 {
        return Err(Error::NoSourcesDetected);
    }
    let gamma = 2.0 * pcfg.alpha * g_max;
    let sol = solve_lasso(&sys, gamma, pcfg.lasso_tol * g_max, pcfg.lasso_max_iter)?;
    let trace = StageTrace {
        split: (0, 0),
        n_bands: grid.len(),
        gamma_max: g_max,
        gamma,
        active: Vec::new(),
        clusters: 0,
        iterations: sol.iterations,
        converged: sol.converged,
        kkt_violation: sol.kkt_violation,
        coupling_updated: false,
        spectral_gap: None,
    };
    Ok((sol.block_norms(), trace))
}

/// `Ĉ·A` with every column rescaled to unit norm.
fn coupled_atoms(atoms: &DMatrix<Complex64>, coupling: &CouplingVector) -> DMatrix<Complex64> {
    let mut out = coupling_matrix(coupling).matrix() * atoms;
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= Complex64::new(norm, 0.0);
        }
    }
    out
}

/// `band` grown by its own width on every side, clipped to the elevation
/// range.
fn widen(band: &Band) -> Band {
    let (w_az, w_el) = (band.az_width(), band.el_width());
    let span = (w_az * 3.0).min(360.0);
    let az_lo = wrap_azimuth(band.az_lo - w_az);
    Band {
        az_lo,
        az_hi: az_lo + span,
        el_lo: (band.el_lo - w_el).max(0.0),
        el_hi: (band.el_hi + w_el).min(90.0),
        depth: band.depth,
    }
}

/// Index of the region closest to `d`; `regions` must be nonempty.
fn nearest_region(regions: &[Vec<Band>], d: Direction) -> usize {
    let gap = |r: &[Band]| {
        let p = polish::project_onto(d, r);
        let daz = (p.azimuth_deg - d.azimuth_deg).rem_euclid(360.0);
        daz.min(360.0 - daz).hypot(p.elevation_deg - d.elevation_deg)
    };
    (0..regions.len())
        .min_by(|&a, &b| gap(&regions[a]).total_cmp(&gap(&regions[b])))
        .unwrap_or(0)
}

fn update_coupling(
    cfg: &ArrayConfig,
    sub: &SubspaceData,
    doas: &[Direction],
) -> Result<(CouplingVector, f64)> {
    let cost = coupling_cost(doas, &sub.noise_basis, cfg)?;
    let est = estimate_coupling_detailed(&cost)?;
    Ok((est.coupling, est.gap))
}

/// Groups active bands that touch (gaps of up to one band are bridged),
/// ordered by their strongest member.
fn cluster_bands(bands: &[Band], active: &[usize], norms: &[f64]) -> Vec<Cluster> {
    let slack = active
        .iter()
        .map(|&q| bands[q].az_width().min(bands[q].el_width()))
        .fold(f64::INFINITY, f64::min);
    let mut parent: Vec<usize> = (0..active.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..active.len() {
        for j in i + 1..active.len() {
            if bands[active[i]].touches(&bands[active[j]], slack) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group = vec![usize::MAX; active.len()];
    for i in 0..active.len() {
        let r = find(&mut parent, i);
        if root_to_group[r] == usize::MAX {
            root_to_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_to_group[r]].push(active[i]);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_iter()
        .map(|mut members| {
            members.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
            Cluster {
                strength: norms[members[0]],
                members,
            }
        })
        .collect();
    clusters.sort_by(|a, b| b.strength.total_cmp(&a.strength).then(a.members[0].cmp(&b.members[0])));
    clusters
}

#[cfg(test)]
mod tests;
