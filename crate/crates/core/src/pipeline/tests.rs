use super::*;
use crate::array::{Source, SourceSet};
use crate::synth::synthesize;

fn preset_run(snr: f64, seed: u64, pcfg: &PipelineConfig) -> Result<EstimationResult> {
    let cfg = presets::array();
    let data = synthesize(&cfg, &presets::sources(), &presets::coupling(), presets::SNAPSHOTS, snr, seed)?;
    run(&data.snapshots, &cfg, pcfg)
}

fn single_source(az: f64, el: f64, snr: f64) -> (ArrayConfig, SnapshotMatrix) {
    let cfg = presets::array();
    let ss = SourceSet::new(vec![Source::new(az, el, 1.0).unwrap()]).unwrap();
    let c = CouplingVector::identity(cfg.n_sensors()).unwrap();
    (cfg.clone(), synthesize(&cfg, &ss, &c, 100, snr, 11).unwrap().snapshots)
}

#[test]
fn noiseless_preset_is_recovered_exactly() {
    let r = preset_run(f64::INFINITY, 1, &PipelineConfig::default()).unwrap();
    assert_eq!(r.k, 3);
    assert_eq!(r.doas.len(), 3);
    assert_eq!(r.shortfall, 0);
    let truth = presets::sources().directions();
    let perm = crate::metrics::match_estimates(&r.doas, &truth).unwrap();
    for (t, &e) in truth.iter().zip(&perm) {
        assert!(crate::metrics::squared_angle_error(&r.doas[e], t).sqrt() < 1e-6, "{:?} vs {t:?}", r.doas[e]);
    }
    let c = presets::coupling();
    assert!(r.coupling.distance(&c) / c.norm() < 1e-6);
    assert!(r.converged);
    assert_eq!(r.stages.len(), 3);
    assert!(r.polish_cost.unwrap() < 1e-20);
}

#[test]
fn truth_is_a_fixed_point() {
    let cfg = presets::array();
    let c = presets::coupling();
    let truth = presets::sources().directions();
    let data = synthesize(&cfg, &presets::sources(), &c, presets::SNAPSHOTS, f64::INFINITY, 4).unwrap();
    let sub = reduce(&data.snapshots, 3).unwrap();

    let (c_hat, gap) = update_coupling(&cfg, &sub, &truth).unwrap();
    assert!(c_hat.distance(&c) < 1e-9, "{:?}", c_hat);
    assert!(gap > 0.0);

    let regions: Vec<Vec<Band>> = truth
        .iter()
        .map(|d| vec![Band::new((d.azimuth_deg - 1.0, d.azimuth_deg + 1.0), (d.elevation_deg - 1.0, (d.elevation_deg + 1.0).min(90.0)), 0).unwrap()])
        .collect();
    let p = polish(&cfg, &sub.noise_basis, &truth, &regions, &c, POLISH_MAX_ITER).unwrap();
    assert!(p.coupling.distance(&c) < 1e-6);
    for (a, b) in p.doas.iter().zip(&truth) {
        assert!(a.separation_deg(b) < 1e-6);
    }
}

#[test]
fn single_source_at_a_band_centre_is_exact() {
    // centre of a final band: [120, 123] → [121.5, 121.8] → [121.6, 121.7]
    let (az, el) = (121.65, 46.65);
    let (cfg, x) = single_source(az, el, 40.0);
    let pcfg = PipelineConfig {
        init: CouplingInit::Identity,
        refine: false,
        ..Default::default()
    };
    let r = run(&x, &cfg, &pcfg).unwrap();
    assert_eq!(r.doas.len(), 1);
    assert!((r.doas[0].azimuth_deg - az).abs() < 1e-9, "{:?}", r.doas);
    assert!((r.doas[0].elevation_deg - el).abs() < 1e-9, "{:?}", r.doas);
}

#[test]
fn estimates_stay_inside_earlier_active_bands() {
    let (cfg, x) = single_source(200.3, 33.3, 20.0);
    let pcfg = PipelineConfig {
        init: CouplingInit::Identity,
        refine: false,
        ..Default::default()
    };
    let r = run(&x, &cfg, &pcfg).unwrap();
    let d = r.doas[0];
    let mut prev_area = f64::INFINITY;
    for (s, stage) in r.stages.iter().enumerate() {
        let holder = stage.active.iter().find(|b| b.contains_closed(d, 1e-9));
        let holder = holder.unwrap_or_else(|| panic!("stage {s} has no active band around {d:?}"));
        let area = holder.area_deg2();
        if s > 0 {
            let (a, e) = stage.split;
            assert!((area - prev_area / (a * e) as f64).abs() < 1e-9 * prev_area);
        }
        prev_area = area;
    }
    assert!(r.doa_bands[0].contains_closed(d, 1e-9));
}

#[test]
fn uncoupled_data_gives_identity_coupling() {
    let cfg = presets::array();
    let c = CouplingVector::identity(cfg.n_sensors()).unwrap();
    let truth = presets::sources().directions();
    // at 200 snapshots the estimate is as good as one made from the true
    // directions; the 1e-3 level needs more data
    for (t, bound) in [(200, None), (3200, Some(1e-3))] {
        let data = synthesize(&cfg, &presets::sources(), &c, t, 20.0, 3).unwrap();
        let r = run(&data.snapshots, &cfg, &PipelineConfig::default()).unwrap();
        let err = r.coupling.distance(&c);
        let sub = reduce(&data.snapshots, 3).unwrap();
        let floor = update_coupling(&cfg, &sub, &truth).unwrap().0.distance(&c);
        assert!(err < 1.5 * floor, "T = {t}: {err:e} against {floor:e}");
        if let Some(b) = bound {
            assert!(err < b, "T = {t}: {err:e}");
        }
    }
}

#[test]
fn alpha_one_detects_nothing() {
    let pcfg = PipelineConfig {
        alpha: 1.0,
        ..Default::default()
    };
    assert!(matches!(preset_run(10.0, 0, &pcfg), Err(Error::NoSourcesDetected)));
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    let ok: PipelineConfig = serde_json::from_str(r#"{"alpha": 0.2, "init": "identity"}"#).unwrap();
    assert_eq!(ok.alpha, 0.2);
    assert_eq!(ok.init, CouplingInit::Identity);
    assert_eq!(ok.schedule, presets::schedule());
    assert!(serde_json::from_str::<PipelineConfig>(r#"{"alpha": 0.2, "gamma": 1}"#).is_err());
    for bad in [
        PipelineConfig { alpha: 0.0, ..Default::default() },
        PipelineConfig { schedule: vec![], ..Default::default() },
        PipelineConfig { schedule: vec![(3, 0)], ..Default::default() },
        PipelineConfig { k_max: Some(0), ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn mismatched_snapshots_are_rejected() {
    let cfg = ArrayConfig::with_radius_in_wavelengths(8, 1.0).unwrap();
    let (_, x) = single_source(10.0, 10.0, 20.0);
    assert!(run(&x, &cfg, &PipelineConfig::default()).is_err());
}

#[test]
fn clusters_join_touching_bands() {
    let grid = BandGrid::uniform(12, 3).unwrap();
    let bands = grid.bands();
    let find = |az: f64, el: f64| grid.locate(Direction::new(az, el)).unwrap();
    // two neighbours plus one across the azimuth seam, and a loner
    let a = find(15.0, 15.0);
    let b = find(45.0, 15.0);
    let c = find(345.0, 15.0);
    let lone = find(180.0, 75.0);
    let mut norms = vec![0.0; bands.len()];
    norms[a] = 1.0;
    norms[b] = 0.5;
    norms[c] = 0.2;
    norms[lone] = 0.9;
    let clusters = cluster_bands(bands, &[a, b, c, lone], &norms);
    assert_eq!(clusters.len(), 2);
    assert_eq!(clusters[0].members[0], a);
    assert_eq!(clusters[0].members.len(), 3);
    assert_eq!(clusters[1].members, vec![lone]);
}

#[test]
fn widened_band_wraps_and_clips() {
    let b = Band::new((0.0, 3.0), (87.0, 90.0), 0).unwrap();
    let w = widen(&b);
    assert_eq!((w.az_lo, w.az_hi), (357.0, 366.0));
    assert_eq!((w.el_lo, w.el_hi), (84.0, 90.0));
    assert!(w.validate().is_ok());
}
