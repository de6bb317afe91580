use skgeom::distortion::{bpam_sdr, db, uniform_approx_bound};
use skgeom::mappings::{bpam_linear, rcasd_surface, snasu_surface, Mapping, MappingKind, MappingParams};
use skgeom::optim::{optimize, OptProblem};
use skgeom::sim::{run_simulation, SimConfig};

fn cfg(snr_db: f64, n: usize, seed: u64) -> SimConfig {
    SimConfig { snr_db, n_samples: n, seed, ..SimConfig::default() }
}

#[test]
fn noiseless_rcasd_distortion_approaches_uniform_sheet_model() {
    let gap = |delta: f64| {
        let m = rcasd_surface(MappingParams::new(delta, 5.0, 2.0), 1.0).unwrap();
        let r = run_simulation(&m, &cfg(f64::INFINITY, 20_000, 2)).unwrap();
        assert_eq!(r.anomaly_rate, 0.0);
        (r.mse / uniform_approx_bound(3, 2, delta) - 1.0).abs()
    };
    let (fine, coarse) = (gap(0.2), gap(0.6));
    assert!(fine < 0.05 && coarse < 0.1 && fine < coarse, "{fine} {coarse}");
}

#[test]
fn high_snr_channel_distortion_matches_weak_noise_model() {
    let p = optimize(&OptProblem::new(MappingKind::Rcasd), 45.0).unwrap().params;
    let m = rcasd_surface(p, 1.0).unwrap();
    let clean = run_simulation(&m, &cfg(f64::INFINITY, 40_000, 4)).unwrap();
    let noisy = run_simulation(&m, &cfg(45.0, 40_000, 4)).unwrap();
    let s2 = 10f64.powf(-4.5);
    let model = m.weak_channel_closed_form(s2).unwrap();
    let ratio = (noisy.mse - clean.mse) / model;
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn seeds_control_reproducibility() {
    let m = snasu_surface(MappingParams::new(0.5, 2.8, 2.0), 1.0).unwrap();
    let a = run_simulation(&m, &cfg(30.0, 5000, 11)).unwrap();
    let b = run_simulation(&m, &cfg(30.0, 5000, 11)).unwrap();
    let c = run_simulation(&m, &cfg(30.0, 5000, 12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.mse, c.mse);
}

// A reducing decoder is continuous, so anomalies only arise where the linearisation
// breaks down (the spiral centre); they stay rare at any SNR.
#[test]
fn anomalies_stay_rare_for_reduction() {
    let m = rcasd_surface(MappingParams::new(0.6, 5.5, 2.0), 1.0).unwrap();
    for s in [15.0, 25.0, 35.0] {
        let r = run_simulation(&m, &cfg(s, 20_000, 5)).unwrap();
        assert!(r.anomaly_rate < 0.01, "{s}: {}", r.anomaly_rate);
    }
}

#[test]
fn bpam_simulation_follows_closed_form() {
    let m = bpam_linear(MappingParams::new(1.0, 1.0, 1.0), 1.0, 3, 2).unwrap();
    for snr_db in [0.0, 10.0, 30.0] {
        let r = run_simulation(&m, &cfg(snr_db, 20_000, 6)).unwrap();
        let want = db(bpam_sdr(10f64.powf(snr_db / 10.0), 3, 2));
        assert!((r.sdr_db - want).abs() < 0.1, "{snr_db}: {} vs {want}", r.sdr_db);
    }
}

#[test]
fn reported_power_matches_model() {
    let m = rcasd_surface(MappingParams::new(0.5, 6.0, 2.0), 1.0).unwrap();
    let r = run_simulation(&m, &cfg(30.0, 20_000, 7)).unwrap();
    let p = m.power().unwrap();
    assert_eq!(r.analytical_power, Some(p));
    let emp = 0.5 * (r.empirical_power[0] + r.empirical_power[1]);
    assert!((emp / p - 1.0).abs() < 0.05, "{emp} {p}");
}
