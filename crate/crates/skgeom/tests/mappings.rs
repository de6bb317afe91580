use proptest::prelude::*;

use skgeom::channel::stream_rng;
use skgeom::mappings::{
    build, helicoid_arclength_variant, helicoid_surface, mscds_surface, rcasd_surface, snasu_surface, Extras, Mapping,
    MappingConfig, MappingKind, MappingParams,
};
use skgeom::sim::{encode, ProjectionConfig};
use skgeom::surface::{classify_surface, fd_partials, forms_from_partials, Grid, ParametricSurface, Rect, Vec2};

use rand::Rng;

fn interior_points(m: &dyn Mapping, n: usize, seed: u64) -> Vec<Vec2> {
    let d = m.domain();
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|_| {
            let t = |i: usize, rng: &mut rand_chacha::ChaCha8Rng| d.lo[i] + (0.1 + 0.8 * rng.gen::<f64>()) * d.width(i);
            Vec2::new(t(0, &mut rng), t(1, &mut rng))
        })
        .filter(|z| z[0].abs() > 1e-3)
        .collect()
}

/// Worst relative mismatch of closed-form metric / SFF against forms of the partials.
fn closed_form_mismatch(m: &dyn Mapping, pts: &[Vec2]) -> (f64, f64) {
    let (mut gm, mut bm): (f64, f64) = (0.0, 0.0);
    for &z in pts {
        let cf = m.closed_forms(z).expect("closed forms");
        let f = forms_from_partials(&m.partials(z)).expect("regular");
        let gs = f.g11.abs() + f.g22.abs();
        for (a, b) in [cf.metric[0], cf.metric[1], cf.metric[2]].iter().zip([f.g11, f.g12, f.g22]) {
            gm = gm.max((a - b).abs() / gs);
        }
        if let Some(sff) = cf.sff {
            let bs = f.b11.abs() + f.b12.abs() + f.b22.abs() + 1e-12;
            let direct = (sff[0] - f.b11).abs() + (sff[1] - f.b12).abs() + (sff[2] - f.b22).abs();
            let flipped = (sff[0] + f.b11).abs() + (sff[1] + f.b12).abs() + (sff[2] + f.b22).abs();
            bm = bm.max(direct.min(flipped) / bs);
        }
    }
    (gm, bm)
}

fn first_partials_mismatch(m: &dyn Mapping, pts: &[Vec2]) -> f64 {
    pts.iter()
        .map(|&z| {
            let (a, f) = (m.partials(z), fd_partials(m, z));
            let s = a.s1.norm().max(a.s2.norm());
            ((a.s1 - f.s1).norm() / s).max((a.s2 - f.s2).norm() / s)
        })
        .fold(0.0, f64::max)
}

fn mapping(kind: MappingKind, d: f64, a1: f64, a2: f64) -> Box<dyn Mapping> {
    build(&MappingConfig { name: kind, params: MappingParams::new(d, a1, a2) }, 1.0).unwrap()
}

const CURVED: [MappingKind; 4] = [MappingKind::Helicoid, MappingKind::Rcasd, MappingKind::Mscds, MappingKind::Snasu];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_match_embedding(k in 0usize..4, d in 0.1f64..2.5, a1 in 0.5f64..12.0, a2 in 0.5f64..6.0, seed in 0u64..1000) {
        let m = mapping(CURVED[k], d, a1, a2);
        let pts = interior_points(m.as_ref(), 40, seed);
        let (g, b) = closed_form_mismatch(m.as_ref(), &pts);
        prop_assert!(g < 1e-8, "{:?} metric {g:e}", CURVED[k]);
        prop_assert!(b < 1e-6, "{:?} sff {b:e}", CURVED[k]);
        prop_assert!(first_partials_mismatch(m.as_ref(), &pts) < 1e-5);
    }

    #[test]
    fn surface_points_encode_to_themselves(k in 0usize..4, d in 0.2f64..1.5, a1 in 1.0f64..8.0, a2 in 1.0f64..4.0, seed in 0u64..1000) {
        let kind = [MappingKind::Helicoid, MappingKind::Rcasd, MappingKind::Snasu, MappingKind::Bpam][k];
        let m = mapping(kind, d, a1, a2);
        for z in interior_points(m.as_ref(), 8, seed) {
            let x = m.point(z);
            let e = encode(m.as_ref(), &x, &ProjectionConfig::default());
            prop_assert!(e.residual < 1e-7 * (1.0 + x.norm()), "{kind} z={z:?} residual {}", e.residual);
        }
    }

    #[test]
    fn laws_agree_with_closed_form_variances(k in 0usize..3, d in 0.1f64..2.5, a1 in 0.5f64..12.0, a2 in 0.5f64..6.0, sx in 0.5f64..2.0) {
        let kind = [MappingKind::Helicoid, MappingKind::Rcasd, MappingKind::Snasu][k];
        let m = build(&MappingConfig { name: kind, params: MappingParams::new(d, a1, a2) }, sx).unwrap();
        let laws = m.channel_laws().unwrap();
        let v = m.channel_variances().unwrap();
        for i in 0..2 {
            prop_assert!((laws[i].variance() / v[i] - 1.0).abs() < 1e-9, "{kind} channel {i}");
        }
        let p = m.power().unwrap();
        prop_assert!(p > 0.0 && p.is_finite());
    }

    #[test]
    fn power_decreases_with_spacing_for_spirals(d in 0.1f64..1.5, a1 in 1.0f64..8.0, a2 in 1.0f64..4.0) {
        for kind in [MappingKind::Rcasd, MappingKind::Snasu] {
            let lo = mapping(kind, d, a1, a2).channel_variances().unwrap()[0];
            let hi = mapping(kind, 1.5 * d, a1, a2).channel_variances().unwrap()[0];
            prop_assert!(hi < lo);
        }
    }

    #[test]
    fn config_round_trips_through_toml(k in 0usize..6, d in 0.1f64..2.5, a1 in 0.5f64..12.0, a2 in 0.5f64..6.0) {
        let mc = MappingConfig { name: MappingKind::ALL[k], params: MappingParams::new(d, a1, a2) };
        let text = toml::to_string(&mc).unwrap();
        prop_assert_eq!(toml::from_str::<MappingConfig>(&text).unwrap(), mc);
    }
}

#[test]
fn classification_of_the_three_mappings() {
    let p = MappingParams::new(0.6, 3.3, 2.0);
    let r = classify_surface(&rcasd_surface(p, 1.0).unwrap(), Grid::default()).unwrap();
    assert!(r.developable && r.coords_are_loc && !r.minimal, "{r:?}");
    let h = classify_surface(&helicoid_surface(p, 1.0).unwrap(), Grid::default()).unwrap();
    assert!(h.minimal && !h.developable, "{h:?}");
    let s = classify_surface(&snasu_surface(p, 1.0).unwrap(), Grid::default()).unwrap();
    assert!(!s.coords_are_loc && !s.coords_are_geodesic, "{s:?}");
}

#[test]
fn mscds_is_developable_only_without_bending() {
    let flat = Extras { a: Some(0.0), ..Extras::default() };
    let m = mscds_surface(MappingParams::new(0.6, 3.3, 2.0).with_extras(flat), 1.0).unwrap();
    assert!(classify_surface(&m, Grid::default()).unwrap().developable);
    let bent = mscds_surface(MappingParams::new(0.6, 3.3, 2.0), 1.0).unwrap();
    assert!(!classify_surface(&bent, Grid::default()).unwrap().developable);
}

#[test]
fn arclength_helicoid_has_unit_g22() {
    let m = helicoid_arclength_variant(MappingParams::new(1.0, 1.0, 1.0)).unwrap();
    let region = Rect::new([-2.0, -2.0], [2.0, 2.0]);
    for i in 0..8 {
        for j in 0..8 {
            let z = region.cell_center(i, j, 8, 8);
            let f = forms_from_partials(&m.partials(z)).unwrap();
            assert!((f.g22 - 1.0).abs() < 1e-12);
        }
    }
    assert!(m.approximation_distortion().is_err());
}

#[test]
fn invalid_parameters_are_rejected() {
    for kind in MappingKind::ALL {
        for (d, a1, a2) in [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, f64::NAN)] {
            assert!(build(&MappingConfig { name: kind, params: MappingParams::new(d, a1, a2) }, 1.0).is_err());
        }
    }
    assert!(MappingKind::parse("spiral").is_err());
}
