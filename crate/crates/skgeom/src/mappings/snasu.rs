//! Double Snail Surface (SnaSu): two interleaved spherical spirals.
//!
//! With a = 2Δ/π, u = √(α₁|z₁|/(ηΔ)), θ = α₂z₂ + phase and
//! E(v, θ) = (sin v cos θ, cos v cos θ, −sin θ):
//! z₁ ≥ 0 gives S = a u E(u, θ), z₁ < 0 gives S = −a u E(u − π/2, θ).

use std::f64::consts::{FRAC_PI_2, PI};

use super::{nearest_windings, wrap_angle, ClosedForms, Mapping, MappingKind, MappingParams, SpiralAngle, TAIL_MASS};
use crate::channel::ChannelLaw;
use crate::distortion::uniform_approx_bound;
use crate::error::{Error, Result};
use crate::surface::{ParametricSurface, Partials, Rect, Vec2, Vec3};

const SHAPE: f64 = 1.5;

#[derive(Clone, Debug)]
pub struct Snasu {
    params: MappingParams,
    sigma_x: f64,
    a: f64,
    k: f64,
    phase: f64,
    domain: Rect,
}

fn e(v: f64, t: f64) -> Vec3 {
    Vec3::new(v.sin() * t.cos(), v.cos() * t.cos(), -t.sin())
}
fn e_v(v: f64, t: f64) -> Vec3 {
    Vec3::new(v.cos() * t.cos(), -v.sin() * t.cos(), 0.0)
}
fn e_vv(v: f64, t: f64) -> Vec3 {
    Vec3::new(-v.sin() * t.cos(), -v.cos() * t.cos(), 0.0)
}
fn e_t(v: f64, t: f64) -> Vec3 {
    Vec3::new(-v.sin() * t.sin(), -v.cos() * t.sin(), -t.cos())
}
fn e_tt(v: f64, t: f64) -> Vec3 {
    Vec3::new(-v.sin() * t.cos(), -v.cos() * t.cos(), t.sin())
}
fn e_vt(v: f64, t: f64) -> Vec3 {
    Vec3::new(-v.cos() * t.sin(), v.sin() * t.sin(), 0.0)
}

impl Snasu {
    pub(super) fn new(params: MappingParams, sigma_x: f64) -> Result<Self> {
        let phase = params.extras.phase.unwrap_or(FRAC_PI_2);
        if phase.abs() > 1e-12 && (phase - FRAC_PI_2).abs() > 1e-12 {
            return Err(Error::Unsupported(format!("snail-surface phase must be 0 or π/2 (got {phase})")));
        }
        let mut m = Self {
            params,
            sigma_x,
            a: 2.0 * params.delta / PI,
            k: params.alpha1 / (params.eta * params.delta),
            phase,
            domain: Rect::new([0.0; 2], [0.0; 2]),
        };
        let t1 = m.z1_law().tail_bound(TAIL_MASS);
        let t2 = PI / params.alpha2;
        m.domain = Rect::new([-t1, -t2], [t1, t2]);
        Ok(m)
    }

    /// Gamma scale of |z₁|: ηπ²σx²/(2Δα₁).
    pub fn z1_gamma_scale(&self) -> f64 {
        let p = &self.params;
        p.eta * PI * PI * self.sigma_x.powi(2) / (2.0 * p.delta * p.alpha1)
    }

    fn z1_law(&self) -> ChannelLaw {
        ChannelLaw::DoubleGamma { shape: SHAPE, scale: self.z1_gamma_scale() }
    }

    fn z2_law(&self) -> ChannelLaw {
        ChannelLaw::Sine { alpha: self.params.alpha2, phase: self.phase }
    }

    fn frame(&self, z: Vec2) -> (SpiralAngle, f64, f64) {
        let sp = SpiralAngle::new(self.k, z[0]);
        let v = if sp.sign > 0.0 { sp.u } else { sp.u - FRAC_PI_2 };
        (sp, v, self.params.alpha2 * z[1] + self.phase)
    }

    /// E{g₁₁} and E{g₂₂} under the channel laws, with E{1/|z₁|} supplied.
    fn metric_means(&self, mean_inv_z1: f64) -> (f64, f64) {
        let p = &self.params;
        let ak = self.a * self.a * self.k;
        let eg11 = ak / 4.0 * mean_inv_z1 + ak * self.k / 4.0 * (2.0 / 3.0);
        let eg22 = ak * p.alpha2 * p.alpha2 * SHAPE * self.z1_gamma_scale();
        (eg11, eg22)
    }

    /// Weak channel distortion with the exact E{1/|z₁|} = 2/b of the gamma law.
    pub fn weak_channel_exact(&self, sigma_n2: f64) -> f64 {
        let (g11, g22) = self.metric_means(self.z1_law().mean_inverse_abs());
        sigma_n2 * (g11 + g22) / 3.0
    }
}

impl ParametricSurface for Snasu {
    fn point(&self, z: Vec2) -> Vec3 {
        let (sp, v, t) = self.frame(z);
        e(v, t) * (sp.sign * self.a * sp.u)
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn partials(&self, z: Vec2) -> Partials {
        let (sp, v, t) = self.frame(z);
        let (a, u, a2, sg) = (self.a, sp.u, self.params.alpha2, sp.sign);
        let d = (e(v, t) + e_v(v, t) * u) * a;
        let d_u = (e_v(v, t) * 2.0 + e_vv(v, t) * u) * a;
        Partials {
            s: e(v, t) * (sg * a * u),
            s1: d * sp.du,
            s2: e_t(v, t) * (sg * a * u * a2),
            s11: (d * sp.ddu + d_u * (sp.du * sp.du)) * sg,
            s12: (e_t(v, t) + e_vt(v, t) * u) * (a * a2 * sp.du),
            s22: e_tt(v, t) * (sg * a * u * a2 * a2),
        }
    }
}

impl Mapping for Snasu {
    fn kind(&self) -> MappingKind {
        MappingKind::Snasu
    }

    fn params(&self) -> &MappingParams {
        &self.params
    }

    fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    fn channel_laws(&self) -> Result<[ChannelLaw; 2]> {
        Ok([self.z1_law(), self.z2_law()])
    }

    fn channel_variances(&self) -> Result<[f64; 2]> {
        let p = &self.params;
        let v1 = 15.0 * (p.eta * PI * PI * self.sigma_x.powi(2)).powi(2) / (16.0 * (p.alpha1 * p.delta).powi(2));
        Ok([v1, self.z2_law().variance()])
    }

    fn approximation_distortion(&self) -> Result<f64> {
        Ok(uniform_approx_bound(3, 2, self.params.delta))
    }

    /// Closed form with the third-order series E{1/z₁} ≈ 4(1 + σz₁²).
    fn weak_channel_closed_form(&self, sigma_n2: f64) -> Result<f64> {
        let p = &self.params;
        let sz1 = self.channel_variances()?[0];
        let (eta, pi2) = (p.eta, PI * PI);
        let t1 = 4.0 * p.alpha1 * p.delta / (eta * pi2) * (1.0 + sz1);
        let t2 = 2.0 * p.alpha1 * p.alpha1 / (3.0 * pi2 * eta * eta);
        let t3 = 3.0 * p.alpha2 * p.alpha2 * self.sigma_x.powi(2);
        Ok(sigma_n2 / 3.0 * (t1 + t2 + t3))
    }

    fn z2_period(&self) -> Option<f64> {
        Some(2.0 * PI / self.params.alpha2)
    }

    fn fold_seeds(&self, x: &Vec3) -> Vec<Vec2> {
        let rho = x.norm();
        if rho < 1e-300 {
            return vec![Vec2::zeros()];
        }
        let d = x / rho;
        let beta = d[1].atan2(d[0]);
        let target = rho / self.a;
        let a2 = self.params.alpha2;
        let z2_of = |t: f64| wrap_angle(t - self.phase) / a2;
        let pos = nearest_windings(FRAC_PI_2 - beta, PI, target, 1).into_iter().map(|u| {
            let t = (-d[2]).atan2(d[0] * u.sin() + d[1] * u.cos());
            Vec2::new(u * u / self.k, z2_of(t))
        });
        let neg = nearest_windings(-beta, PI, target, 1).into_iter().map(|u| {
            let t = d[2].atan2(d[0] * u.cos() - d[1] * u.sin());
            Vec2::new(-u * u / self.k, z2_of(t))
        });
        pos.chain(neg).collect()
    }

    fn closed_forms(&self, z: Vec2) -> Option<ClosedForms> {
        let (sp, _, t) = self.frame(z);
        let (a, u, du, a2) = (self.a, sp.u, sp.du, self.params.alpha2);
        let (st, ct) = t.sin_cos();
        let q = 1.0 + u * u * ct * ct;
        let rq = q.sqrt();
        Some(ClosedForms {
            metric: [a * a * du * du * q, 0.0, (a * a2 * u).powi(2)],
            sff: Some([
                -a * du * du * ct * (2.0 + u * u * ct * ct) / rq,
                sp.sign * a * a2 * u * du * st / rq,
                -a * a2 * a2 * u * u * ct / rq,
            ]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::rcasd_surface;
    use crate::mappings::testutil::{closed_form_error, partials_error, random_points};
    use crate::mappings::{snasu_surface, Extras};
    use crate::surface::{classify_surface, principal_curvatures, second_fundamental_form, Grid};

    fn sample(phase: f64) -> Snasu {
        let extras = Extras { phase: Some(phase), ..Extras::default() };
        snasu_surface(MappingParams::new(0.539, 4.76, 2.57).with_extras(extras), 1.0).unwrap()
    }

    #[test]
    fn partials_and_closed_forms_both_phases() {
        for ph in [0.0, FRAC_PI_2] {
            let m = sample(ph);
            let pts: Vec<Vec2> =
                random_points(&m, 400, 31).into_iter().filter(|z| z[0].abs() > 1e-3).take(200).collect();
            assert!(partials_error(&m, &pts) < 1e-5);
            let (g, b) = closed_form_error(&m, &pts);
            assert!(g < 1e-8 && b < 1e-6, "phase {ph}: {g} {b}");
        }
    }

    #[test]
    fn off_diagonal_sff_vanishes_on_equator() {
        let m = sample(FRAC_PI_2);
        let z2 = -FRAC_PI_2 / 2.57;
        let f = second_fundamental_form(&m, Vec2::new(0.8, z2)).unwrap();
        assert!(f.b12.abs() < 1e-9 * (f.b11.abs() + f.b22.abs()));
        let f = second_fundamental_form(&m, Vec2::new(0.8, 0.3)).unwrap();
        assert!(f.b12.abs() > 1e-3);
    }

    #[test]
    fn not_loc_and_not_geodesic() {
        let r = classify_surface(&sample(FRAC_PI_2), Grid::default()).unwrap();
        assert!(!r.coords_are_loc && !r.coords_are_geodesic && !r.developable && !r.minimal, "{r:?}");
    }

    #[test]
    fn branches_join_at_origin() {
        let m = sample(FRAC_PI_2);
        for z2 in [-1.0, 0.0, 0.7] {
            let l = m.point(Vec2::new(-1e-14, z2));
            let r = m.point(Vec2::new(1e-14, z2));
            assert!((l - r).norm() < 1e-6);
        }
    }

    #[test]
    fn seeds_recover_surface_points() {
        let m = sample(FRAC_PI_2);
        for z in random_points(&m, 100, 32) {
            let x = m.point(z);
            let ok = m.fold_seeds(&x).iter().any(|s| (m.point(*s) - x).norm() < 1e-9);
            assert!(ok, "{z:?}");
        }
    }

    #[test]
    fn shells_are_spaced_by_delta() {
        let m = sample(FRAC_PI_2);
        let x = Vec3::new(0.3, -1.2, 0.8);
        let mut radii: Vec<f64> = m
            .fold_seeds(&x)
            .iter()
            .map(|&z| m.point(z))
            .filter(|p| (p.normalize() - x.normalize()).norm() < 1e-9)
            .map(|p| p.norm())
            .collect();
        radii.sort_by(f64::total_cmp);
        assert!(radii.len() >= 3);
        for w in radii.windows(2) {
            assert!((w[1] - w[0] - 0.539).abs() < 1e-9, "{radii:?}");
        }
    }

    #[test]
    fn curvature_at_least_rcasd() {
        let p = MappingParams::new(0.539, 4.76, 2.57);
        let s = snasu_surface(p, 1.0).unwrap();
        let r = rcasd_surface(p, 1.0).unwrap();
        let max_k = |m: &dyn Mapping| {
            random_points(m, 500, 33)
                .into_iter()
                .filter_map(|z| second_fundamental_form(m, z).ok())
                .filter_map(|f| principal_curvatures(&f).ok())
                .map(|c| c.kappa1.abs())
                .fold(0.0, f64::max)
        };
        assert!(max_k(&s) >= max_k(&r));
    }
}
