use skgeom::mappings::MappingKind;
use skgeom::optim::{optimize, sweep, OptProblem};

const KINDS: [MappingKind; 4] = [MappingKind::Helicoid, MappingKind::Rcasd, MappingKind::Snasu, MappingKind::Mscds];

#[test]
fn optima_satisfy_kkt_conditions() {
    for kind in KINDS {
        let p = OptProblem::new(kind);
        let r = optimize(&p, 30.0).unwrap();
        assert!(r.power <= p.p_max * (1.0 + 1e-6), "{kind}: P={}", r.power);
        assert!(r.lambda >= 0.0, "{kind}");
        assert!((r.lambda * (p.p_max - r.power)).abs() < 1e-6, "{kind}: slackness");
        assert!(r.kkt_residual < 1e-4, "{kind}: {}", r.kkt_residual);
        assert!((r.d_total - r.eps_approx - r.eps_ch_weak).abs() < 1e-12);
    }
}

#[test]
fn rcasd_fold_spacing_shrinks_with_snr() {
    let pts = sweep(&OptProblem::new(MappingKind::Rcasd), &[20.0, 30.0, 40.0, 50.0]);
    let d: Vec<f64> = pts.iter().map(|p| p.result.as_ref().unwrap().params.delta).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn approximation_and_channel_terms_balance_at_high_snr() {
    for kind in [MappingKind::Rcasd, MappingKind::Snasu, MappingKind::Helicoid] {
        let r = optimize(&OptProblem::new(kind), 40.0).unwrap();
        let q = r.eps_approx / r.eps_ch_weak;
        assert!((0.2..5.0).contains(&q), "{kind}: {q}");
    }
}

#[test]
fn warm_start_is_no_worse_than_cold_start() {
    let p = OptProblem::new(MappingKind::Snasu);
    let snrs = [25.0, 30.0, 35.0];
    for (warm, &s) in sweep(&p, &snrs).iter().zip(&snrs) {
        let cold = optimize(&p, s).unwrap();
        assert!(warm.result.as_ref().unwrap().d_total <= cold.d_total * (1.0 + 1e-9));
    }
}

#[test]
fn single_point_sweep_equals_optimize() {
    let p = OptProblem::new(MappingKind::Rcasd);
    let s = sweep(&p, &[35.0]);
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].result.as_ref().unwrap(), &optimize(&p, 35.0).unwrap());
}

#[test]
fn same_seed_same_optimum() {
    let p = OptProblem::new(MappingKind::Helicoid);
    assert_eq!(optimize(&p, 30.0).unwrap(), optimize(&p, 30.0).unwrap());
}
