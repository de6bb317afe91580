//! Closed-form geometry oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use skgeom::curve::{curvature, frenet, torsion, FiniteDiffCurve, FnCurve};
use skgeom::mappings::Mapping;
use skgeom::surface::{
    metric_tensor, principal_curvatures, second_fundamental_form, Cylinder, FiniteDiff, ParametricSurface, Plane, Rect,
    Sphere, Vec2,
};

/// Exact invariants of a surface at one point; the SFF and curvatures are given for
/// one choice of normal and compared up to that sign.
pub struct SurfaceTruth {
    pub g: [f64; 3],
    pub b: [f64; 3],
    pub kappa: [f64; 2],
    pub gaussian: f64,
    pub mean: f64,
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn sphere_truth(r: f64, u: Vec2) -> SurfaceTruth {
    let s2 = u[0].sin().powi(2);
    SurfaceTruth {
        g: [r * r, 0.0, r * r * s2],
        b: [r, 0.0, r * s2],
        kappa: [1.0 / r, 1.0 / r],
        gaussian: 1.0 / (r * r),
        mean: 1.0 / r,
    }
}

pub fn cylinder_truth(r: f64) -> SurfaceTruth {
    SurfaceTruth { g: [r * r, 0.0, 1.0], b: [r, 0.0, 0.0], kappa: [1.0 / r, 0.0], gaussian: 0.0, mean: 0.5 / r }
}

pub fn plane_truth() -> SurfaceTruth {
    SurfaceTruth { g: [1.0, 0.0, 1.0], b: [0.0; 3], kappa: [0.0; 2], gaussian: 0.0, mean: 0.0 }
}

/// Max relative deviation of computed g, b, κ₁, κ₂, K, H from the truth.
pub fn surface_error<S: ParametricSurface + ?Sized>(s: &S, u: Vec2, t: &SurfaceTruth) -> f64 {
    let f = second_fundamental_form(s, u).expect("regular point");
    let c = principal_curvatures(&f).expect("curvatures");
    // Orientation: align the computed normal with the one of the truth.
    let sign = if f.b11 * t.b[0] + f.b22 * t.b[2] < 0.0 { -1.0 } else { 1.0 };
    let pairs = [
        (f.g11, t.g[0]),
        (f.g12, t.g[1]),
        (f.g22, t.g[2]),
        (sign * f.b11, t.b[0]),
        (sign * f.b12, t.b[1]),
        (sign * f.b22, t.b[2]),
        (sign * c.kappa1, t.kappa[0]),
        (sign * c.kappa2, t.kappa[1]),
        (c.gaussian, t.gaussian),
        (sign * c.mean, t.mean),
    ];
    pairs.iter().map(|&(a, b)| rel(a, b)).fold(0.0, f64::max)
}

pub fn oracle_points() -> Vec<Vec2> {
    vec![Vec2::new(0.4, 0.3), Vec2::new(1.1, 2.0), Vec2::new(1.9, 4.4), Vec2::new(2.7, 5.9), Vec2::new(1.5707963, 0.0)]
}

/// Worst relative error over plane, sphere (r = 1, 2), cylinder (r = 1, 2), both with
/// analytic partials and with finite differences of the embedding.
pub fn surface_oracle_error() -> f64 {
    let mut worst: f64 = 0.0;
    let plane = Plane { domain: Rect::new([-5.0, -5.0], [5.0, 5.0]) };
    for u in oracle_points() {
        let u_cyl = Vec2::new(u[1], (u[0] - 1.5) / 1.5);
        worst = worst.max(surface_error(&plane, u, &plane_truth())).max(surface_error(
            &FiniteDiff(plane),
            u,
            &plane_truth(),
        ));
        for r in [1.0, 2.0] {
            let (sp, cy) = (Sphere { r }, Cylinder { r });
            worst = worst
                .max(surface_error(&sp, u, &sphere_truth(r, u)))
                .max(surface_error(&FiniteDiff(sp), u, &sphere_truth(r, u)))
                .max(surface_error(&cy, u_cyl, &cylinder_truth(r)))
                .max(surface_error(&FiniteDiff(cy), u_cyl, &cylinder_truth(r)));
        }
    }
    worst
}

/// Worst relative error of κ, τ and the Frenet frame for the helix family
/// (r cos x, r sin x, h x): κ = r/(r²+h²), τ = h/(r²+h²).
pub fn helix_oracle_error() -> f64 {
    let mut worst: f64 = 0.0;
    for (r, h) in [(1.0, 0.0), (1.0, 0.5), (2.0, 1.0), (0.5, 2.0), (3.0, -0.7)] {
        let c = FnCurve::helix(r, h, (0.0, 10.0));
        let d = r * r + h * h;
        let (k, t) = (r / d, h / d);
        for x in [0.3, 1.7, 4.0, 9.2] {
            for (kc, tc) in [
                (curvature(&c, x), torsion(&c, x).unwrap()),
                (curvature(&FiniteDiffCurve(&c), x), torsion(&FiniteDiffCurve(&c), x).unwrap()),
            ] {
                worst = worst.max(rel(kc, k)).max(rel(tc, t));
            }
            let fr = frenet(&c, x).unwrap();
            let tangent = nalgebra::Vector3::new(-r * x.sin(), r * x.cos(), h) / d.sqrt();
            let normal = nalgebra::Vector3::new(-x.cos(), -x.sin(), 0.0);
            worst = worst.max((fr.t - tangent).norm()).max((fr.p - normal).norm());
        }
    }
    worst
}

/// Interior grid of channel points (8×8 over the central 90% of the domain),
/// skipping the spiral centre and points where the embedding is (nearly) singular.
pub fn mapping_points(m: &dyn Mapping) -> Vec<Vec2> {
    let d = m.domain();
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (0.05 + 0.9 * i as f64 / 7.0);
    (0..8)
        .flat_map(|i| (0..8).map(move |j| (i, j)))
        .map(|(i, j)| Vec2::new(lin(d.lo[0], d.hi[0], i), lin(d.lo[1], d.hi[1], j)))
        .filter(|z| z[0].abs() > 0.02 * d.hi[0])
        .filter(|z| metric_tensor(m, *z).map_or(false, |f| f.g11 > 1e-6 && f.g22 > 1e-6))
        .collect()
}

/// Max relative deviation of a mapping's closed-form metric and SFF from the forms
/// computed on its embedding (SFF compared up to the normal orientation).
pub fn closed_form_errors(m: &dyn Mapping) -> (f64, Option<f64>) {
    let (mut eg, mut eb) = (0.0f64, None::<f64>);
    for z in mapping_points(m) {
        let cf = m.closed_forms(z).expect("closed forms");
        let f = second_fundamental_form(m, z).expect("regular point");
        let g = [f.g11, f.g12, f.g22];
        eg = (0..3).map(|i| rel(cf.metric[i], g[i])).fold(eg, f64::max);
        if let Some(b) = cf.sff {
            let fb = [f.b11, f.b12, f.b22];
            let err = |s: f64| (0..3).map(|i| rel(s * b[i], fb[i])).fold(0.0, f64::max);
            eb = Some(eb.unwrap_or(0.0).max(err(1.0).min(err(-1.0))));
        }
    }
    (eg, eb)
}
