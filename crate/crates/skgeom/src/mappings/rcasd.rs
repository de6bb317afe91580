//! Rotated and Concatenated Archimedes Spirals Distortion-optimised (RCASD): a double
//! Archimedes spiral in the (x₁, x₂) plane extruded linearly along x₃.

use std::f64::consts::PI;

use super::{
    nearest_windings, symmetric_rect, ClosedForms, Mapping, MappingKind, MappingParams, SpiralAngle, TAIL_MASS,
};
use crate::channel::ChannelLaw;
use crate::distortion::uniform_approx_bound;
use crate::error::Result;
use crate::surface::{ParametricSurface, Partials, Rect, Vec2, Vec3};

/// Arm z₁ ≥ 0: (a u cos u, a u sin u, α₂z₂) with a = Δ/π, u = √(α₁|z₁|/(ηΔ));
/// arm z₁ < 0 is its point reflection in the (x₁, x₂) plane.
#[derive(Clone, Debug)]
pub struct Rcasd {
    params: MappingParams,
    sigma_x: f64,
    a: f64,
    k: f64,
    domain: Rect,
}

impl Rcasd {
    pub(super) fn new(params: MappingParams, sigma_x: f64) -> Self {
        let mut m = Self {
            params,
            sigma_x,
            a: params.delta / PI,
            k: params.alpha1 / (params.eta * params.delta),
            domain: Rect::new([0.0; 2], [0.0; 2]),
        };
        let [l1, l2] = m.laws();
        m.domain = symmetric_rect(l1.tail_bound(TAIL_MASS), l2.tail_bound(TAIL_MASS));
        m
    }

    /// Scale of the Laplace law of z₁.
    fn z1_scale(&self) -> f64 {
        2.0 * self.params.eta * PI * PI * self.sigma_x.powi(2) / (self.params.delta * self.params.alpha1)
    }

    fn laws(&self) -> [ChannelLaw; 2] {
        [
            ChannelLaw::Laplace { scale: self.z1_scale() },
            ChannelLaw::Gaussian { var: (self.sigma_x / self.params.alpha2).powi(2) },
        ]
    }

    /// Spiral angle φ = u(z₁) of the arm through z₁.
    pub fn spiral_angle(&self, z1: f64) -> f64 {
        SpiralAngle::new(self.k, z1).u
    }

    /// Exact largest principal curvature −(2+φ²)/(a(1+φ²)^{3/2}).
    pub fn kappa1(&self, z1: f64) -> f64 {
        let u2 = self.spiral_angle(z1).powi(2);
        -(2.0 + u2) / (self.a * (1.0 + u2).powf(1.5))
    }
}

impl ParametricSurface for Rcasd {
    fn point(&self, z: Vec2) -> Vec3 {
        let sp = SpiralAngle::new(self.k, z[0]);
        let r = sp.sign * self.a * sp.u;
        Vec3::new(r * sp.u.cos(), r * sp.u.sin(), self.params.alpha2 * z[1])
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn partials(&self, z: Vec2) -> Partials {
        let sp = SpiralAngle::new(self.k, z[0]);
        let (u, a) = (sp.u, self.a);
        let (s, c) = u.sin_cos();
        let p1 = Vec3::new(a * (c - u * s), a * (s + u * c), 0.0);
        let p2 = Vec3::new(a * (-2.0 * s - u * c), a * (2.0 * c - u * s), 0.0);
        Partials {
            s: self.point(z),
            s1: p1 * sp.du,
            s2: Vec3::new(0.0, 0.0, self.params.alpha2),
            s11: (p2 * (sp.du * sp.du) + p1 * sp.ddu) * sp.sign,
            s12: Vec3::zeros(),
            s22: Vec3::zeros(),
        }
    }
}

impl Mapping for Rcasd {
    fn kind(&self) -> MappingKind {
        MappingKind::Rcasd
    }

    fn params(&self) -> &MappingParams {
        &self.params
    }

    fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    fn channel_laws(&self) -> Result<[ChannelLaw; 2]> {
        Ok(self.laws())
    }

    fn channel_variances(&self) -> Result<[f64; 2]> {
        Ok([2.0 * self.z1_scale().powi(2), (self.sigma_x / self.params.alpha2).powi(2)])
    }

    fn approximation_distortion(&self) -> Result<f64> {
        Ok(uniform_approx_bound(3, 2, self.params.delta))
    }

    fn weak_channel_closed_form(&self, sigma_n2: f64) -> Result<f64> {
        let p = &self.params;
        Ok(sigma_n2 * (p.alpha1 * p.alpha1 + p.alpha2 * p.alpha2) / 3.0)
    }

    fn fold_seeds(&self, x: &Vec3) -> Vec<Vec2> {
        let r = x[0].hypot(x[1]);
        let psi = x[1].atan2(x[0]);
        let z2 = x[2] / self.params.alpha2;
        let target = r / self.a;
        let pos = nearest_windings(psi, 2.0 * PI, target, 1).into_iter().map(|u| u * u / self.k);
        let neg = nearest_windings(psi - PI, 2.0 * PI, target, 1).into_iter().map(|u| -u * u / self.k);
        pos.chain(neg).map(|z1| Vec2::new(z1, z2)).collect()
    }

    fn closed_forms(&self, z: Vec2) -> Option<ClosedForms> {
        let sp = SpiralAngle::new(self.k, z[0]);
        let (u2, d2) = (sp.u * sp.u, sp.du * sp.du);
        let a = self.a;
        Some(ClosedForms {
            metric: [a * a * d2 * (1.0 + u2), 0.0, self.params.alpha2.powi(2)],
            sff: Some([-a * d2 * (2.0 + u2) / (1.0 + u2).sqrt(), 0.0, 0.0]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::rcasd_surface;
    use crate::mappings::testutil::{closed_form_error, partials_error, random_points};
    use crate::surface::{classify_surface, metric_tensor, principal_curvatures, second_fundamental_form, Grid};

    fn sample() -> Rcasd {
        rcasd_surface(MappingParams::new(0.607, 5.54, 2.04), 1.0).unwrap()
    }

    #[test]
    fn partials_and_closed_forms() {
        let m = sample();
        let pts = random_points(&m, 200, 11);
        assert!(partials_error(&m, &pts) < 1e-5);
        let (g, b) = closed_form_error(&m, &pts);
        assert!(g < 1e-8 && b < 1e-6, "{g} {b}");
    }

    #[test]
    fn developable_with_loc_coordinates() {
        let r = classify_surface(&sample(), Grid::default()).unwrap();
        assert!(r.developable && r.coords_are_loc, "{r:?}");
    }

    #[test]
    fn metric_approaches_alpha1_squared_away_from_centre() {
        let m = sample();
        let p = *m.params();
        let cut = 40.0 * p.eta * p.delta / p.alpha1;
        let d = m.domain();
        for i in 0..400 {
            let z1 = d.lo[0] + d.width(0) * (i as f64 + 0.5) / 400.0;
            if z1.abs() < cut {
                continue;
            }
            let g = metric_tensor(&m, Vec2::new(z1, 0.1)).unwrap();
            assert!((g.g11 / (p.alpha1 * p.alpha1) - 1.0).abs() < 0.02, "z1 {z1}: {}", g.g11);
            assert!((g.g22 - p.alpha2 * p.alpha2).abs() < 1e-12 && g.g12.abs() < 1e-9);
        }
    }

    #[test]
    fn principal_curvature_matches_closed_form() {
        let m = sample();
        for z1 in [-3.0, -0.4, 0.02, 0.7, 5.0] {
            let c = principal_curvatures(&second_fundamental_form(&m, Vec2::new(z1, 0.3)).unwrap()).unwrap();
            assert!((c.kappa1.abs() - m.kappa1(z1).abs()).abs() < 1e-6 * m.kappa1(z1).abs());
            assert!(c.kappa2.abs() < 1e-9 * c.kappa1.abs());
        }
        // φ → 0: κ₁ → −2/a.
        assert!((m.kappa1(1e-14) + 2.0 * PI / 0.607).abs() < 1e-6);
    }

    #[test]
    fn arms_are_interleaved_at_fold_spacing() {
        let m = sample();
        // Along the positive x₁ axis the two arms alternate with radial spacing Δ.
        let mut radii: Vec<f64> = m
            .fold_seeds(&Vec3::new(3.0, 0.0, 0.0))
            .iter()
            .map(|&z| m.point(z))
            .filter(|p| p[1].abs() < 1e-9 && p[0] > 0.0)
            .map(|p| p[0])
            .collect();
        radii.sort_by(f64::total_cmp);
        for w in radii.windows(2) {
            assert!((w[1] - w[0] - 0.607).abs() < 1e-9, "{radii:?}");
        }
    }

    #[test]
    fn seeds_recover_surface_points() {
        let m = sample();
        for z in random_points(&m, 100, 12) {
            let x = m.point(z);
            let ok = m.fold_seeds(&x).iter().any(|s| (m.point(*s) - x).norm() < 1e-9);
            assert!(ok, "{z:?}");
        }
    }

    #[test]
    fn branches_meet_at_origin() {
        let m = sample();
        assert!((m.point(Vec2::new(1e-15, 0.0)) - m.point(Vec2::new(-1e-15, 0.0))).norm() < 1e-6);
    }
}
