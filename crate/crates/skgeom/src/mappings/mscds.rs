//! Monge surface with cylindrical directrix (MS-CDS), restricted to θ₀ = ±π/2.
//!
//! With A = Δ/π, y = α₂z₂ and K = A(α₀ − φ) − a y² sin θ₀:
//! S = (A cos φ − K sin φ, A sin φ + K cos φ, B y sin θ₀), φ the signed spiral angle.
//! The surface is singular where K = 0 (the spiral radius vanishes).

use std::f64::consts::{FRAC_PI_2, PI};

use super::{symmetric_rect, wrap_angle, ClosedForms, Mapping, MappingKind, MappingParams, SpiralAngle, TAIL_MASS};
use crate::channel::ChannelLaw;
use crate::distortion::uniform_approx_bound;
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::surface::{ParametricSurface, Partials, Rect, Vec2, Vec3};

#[derive(Clone, Debug)]
pub struct Mscds {
    params: MappingParams,
    sigma_x: f64,
    big_a: f64,
    k: f64,
    a: f64,
    alpha0: f64,
    b: f64,
    /// sin θ₀ = ±1.
    st: f64,
    domain: Rect,
}

impl Mscds {
    pub(super) fn new(params: MappingParams, sigma_x: f64) -> Result<Self> {
        let e = params.extras;
        let theta0 = e.theta0.unwrap_or(-FRAC_PI_2);
        let st = if (theta0 - FRAC_PI_2).abs() < 1e-12 {
            1.0
        } else if (theta0 + FRAC_PI_2).abs() < 1e-12 {
            -1.0
        } else {
            return Err(Error::Unsupported(format!("MS-CDS requires θ₀ = ±π/2 (got {theta0})")));
        };
        let (a, alpha0, b) = (e.a.unwrap_or(0.1), e.alpha0.unwrap_or(0.0), e.b.unwrap_or(1.0));
        if !(a >= 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) || !alpha0.is_finite() {
            return Err(Error::Domain(format!("invalid MS-CDS extras a={a}, B={b}, α₀={alpha0}")));
        }
        let mut m = Self {
            params,
            sigma_x,
            big_a: params.delta / std::f64::consts::PI,
            k: params.alpha1 / (params.eta * params.delta),
            a,
            alpha0,
            b,
            st,
            domain: Rect::new([0.0; 2], [0.0; 2]),
        };
        let [l1, l2] = m.laws();
        m.domain = symmetric_rect(l1.tail_bound(TAIL_MASS), l2.tail_bound(TAIL_MASS));
        Ok(m)
    }

    fn laws(&self) -> [ChannelLaw; 2] {
        let p = &self.params;
        let scale = 2.0 * p.eta * std::f64::consts::PI.powi(2) * self.sigma_x.powi(2) / (p.delta * p.alpha1);
        [ChannelLaw::Laplace { scale }, ChannelLaw::Gaussian { var: (self.sigma_x / (p.alpha2 * self.b)).powi(2) }]
    }

    fn radius_term(&self, phi: f64, z2: f64) -> f64 {
        let y = self.params.alpha2 * z2;
        self.big_a * (self.alpha0 - phi) - self.a * y * y * self.st
    }

    /// φ at which the radius term equals `kk`.
    fn phi_for_radius_term(&self, kk: f64, z2: f64) -> f64 {
        let y = self.params.alpha2 * z2;
        self.alpha0 - (kk + self.a * y * y * self.st) / self.big_a
    }

    /// Polar angle of the (x₁, x₂) projection, φ + atan2(K, A); non-decreasing in φ.
    fn polar_angle(&self, phi: f64, z2: f64) -> f64 {
        phi + self.radius_term(phi, z2).atan2(self.big_a)
    }

    /// φ with `polar_angle(φ) = t`; the solution lies within π/2 of t.
    fn solve_angle(&self, t: f64, z2: f64) -> f64 {
        let (mut lo, mut hi) = (t - FRAC_PI_2, t + FRAC_PI_2);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.polar_angle(mid, z2) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// ∫ g₂₂ f dz₂ = α₂²(B² + 4a²σx²/B²).
    pub fn i2(&self) -> f64 {
        let a2 = self.params.alpha2;
        a2 * a2 * (self.b * self.b + 4.0 * self.a * self.a * self.sigma_x.powi(2) / (self.b * self.b))
    }

    /// ∫∫ g₁₁ f dz by quadrature over z₁ (z₂ moments exact), restricted to |φ| ≥ 1:
    /// φ′² ∝ 1/|z₁| makes the full integral diverge logarithmically at the centre
    /// unless a = α₀ = 0. Integrated in u = √(k|z₁|), where the integrand is smooth.
    pub fn i1(&self) -> f64 {
        let [l1, _] = self.laws();
        let (ey2, ey4) = self.y_moments();
        let (aa, a, st, k) = (self.big_a, self.a, self.st, self.k);
        let side = |sign: f64| {
            move |u: f64| {
                let c = aa * (self.alpha0 - sign * u);
                let k2 = c * c - 2.0 * c * a * st * ey2 + a * a * ey4;
                k / (2.0 * u) * k2 * l1.pdf(u * u / k)
            }
        };
        let u_max = (k * l1.tail_bound(1e-14)).sqrt().max(2.0);
        let gl = GaussLegendre::new(16);
        gl.composite(side(1.0), 1.0, u_max, 24) + gl.composite(side(-1.0), 1.0, u_max, 24)
    }

    /// E{y²}, E{y⁴} with y = α₂z₂.
    fn y_moments(&self) -> (f64, f64) {
        let a2 = self.params.alpha2.powi(2);
        let v = self.laws()[1].variance();
        (a2 * v, 3.0 * a2 * a2 * v * v)
    }
}

impl ParametricSurface for Mscds {
    fn point(&self, z: Vec2) -> Vec3 {
        let sp = SpiralAngle::new(self.k, z[0]);
        let phi = sp.sign * sp.u;
        let kk = self.radius_term(phi, z[1]);
        let (s, c) = phi.sin_cos();
        let aa = self.big_a;
        Vec3::new(aa * c - kk * s, aa * s + kk * c, self.b * self.params.alpha2 * z[1] * self.st)
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn partials(&self, z: Vec2) -> Partials {
        let sp = SpiralAngle::new(self.k, z[0]);
        let phi = sp.sign * sp.u;
        let (d1, d2) = (sp.du, sp.sign * sp.ddu);
        let kk = self.radius_term(phi, z[1]);
        let a2 = self.params.alpha2;
        let k2 = -2.0 * self.a * a2 * a2 * z[1] * self.st;
        let k22 = -2.0 * self.a * a2 * a2 * self.st;
        let (s, c) = phi.sin_cos();
        let aa = self.big_a;
        let s_phi = Vec3::new(-kk * c, -kk * s, 0.0);
        let s_phiphi = Vec3::new(aa * c + kk * s, aa * s - kk * c, 0.0);
        Partials {
            s: self.point(z),
            s1: s_phi * d1,
            s2: Vec3::new(-k2 * s, k2 * c, self.b * a2 * self.st),
            s11: s_phi * d2 + s_phiphi * (d1 * d1),
            s12: Vec3::new(-k2 * c, -k2 * s, 0.0) * d1,
            s22: Vec3::new(-k22 * s, k22 * c, 0.0),
        }
    }
}

impl Mapping for Mscds {
    fn kind(&self) -> MappingKind {
        MappingKind::Mscds
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
        let [l1, l2] = self.laws();
        Ok([l1.variance(), l2.variance()])
    }

    fn approximation_distortion(&self) -> Result<f64> {
        Ok(uniform_approx_bound(3, 2, self.params.delta))
    }

    fn weak_channel_closed_form(&self, sigma_n2: f64) -> Result<f64> {
        Ok(sigma_n2 * (self.i1() + self.i2()) / 3.0)
    }

    fn fold_seeds(&self, x: &Vec3) -> Vec<Vec2> {
        let z2 = x[2] / (self.b * self.params.alpha2 * self.st);
        let psi = x[1].atan2(x[0]);
        let k_abs = (x[0] * x[0] + x[1] * x[1] - self.big_a * self.big_a).max(0.0).sqrt();
        let to_z1 = |phi: f64| phi.signum() * phi * phi / self.k;
        let centre = self.phi_for_radius_term(0.0, z2);
        let mut seeds = vec![Vec2::new(to_z1(centre), z2), Vec2::new(1e-9, z2), Vec2::new(-1e-9, z2)];
        for k_sign in [1.0, -1.0] {
            let phi0 = self.phi_for_radius_term(k_sign * k_abs, z2);
            let g0 = self.polar_angle(phi0, z2);
            let t0 = g0 + wrap_angle(psi - g0);
            for n in -1..=1 {
                let phi = self.solve_angle(t0 + 2.0 * PI * n as f64, z2);
                seeds.push(Vec2::new(to_z1(phi), z2));
            }
        }
        seeds
    }

    fn closed_forms(&self, z: Vec2) -> Option<ClosedForms> {
        let sp = SpiralAngle::new(self.k, z[0]);
        let kk = self.radius_term(sp.sign * sp.u, z[1]);
        let a2 = self.params.alpha2;
        let g22 = (self.b * a2).powi(2) + 4.0 * (self.a * a2 * a2 * z[1]).powi(2);
        let rg = g22.sqrt();
        let b11 = -sp.du * sp.du * kk.abs() * self.b * a2 * self.st / rg;
        let b22 = -2.0 * kk.signum() * self.a * self.b * a2.powi(3) / rg;
        Some(ClosedForms { metric: [(sp.du * kk).powi(2), 0.0, g22], sff: Some([b11, 0.0, b22]) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::testutil::{closed_form_error, partials_error, random_points};
    use crate::mappings::{mscds_surface, rcasd_surface, Extras};
    use crate::surface::{classify_surface, metric_tensor, Grid};

    fn with(a: f64, alpha0: f64, b: f64, theta0: f64) -> Result<Mscds> {
        let extras = Extras { a: Some(a), alpha0: Some(alpha0), b: Some(b), theta0: Some(theta0), ..Extras::default() };
        mscds_surface(MappingParams::new(0.6, 5.0, 2.0).with_extras(extras), 1.0)
    }

    fn regular_points(m: &Mscds, n: usize, seed: u64) -> Vec<Vec2> {
        random_points(m, 4 * n, seed)
            .into_iter()
            .filter(|z| {
                let sp = SpiralAngle::new(m.k, z[0]);
                sp.u > 0.3 && m.radius_term(sp.sign * sp.u, z[1]).abs() > 0.05 * m.big_a
            })
            .take(n)
            .collect()
    }

    #[test]
    fn partials_and_closed_forms() {
        for t0 in [-FRAC_PI_2, FRAC_PI_2] {
            let m = with(0.2, -0.5, 1.5, t0).unwrap();
            let pts = regular_points(&m, 200, 21);
            assert!(pts.len() == 200);
            assert!(partials_error(&m, &pts) < 1e-5);
            let (g, b) = closed_form_error(&m, &pts);
            assert!(g < 1e-8 && b < 1e-6, "{g} {b}");
        }
    }

    #[test]
    fn third_coordinate_and_g22_at_zero() {
        let m = with(0.2, -0.5, 1.5, -FRAC_PI_2).unwrap();
        for z in random_points(&m, 20, 22) {
            assert!((m.point(z)[2] + 1.5 * 2.0 * z[1]).abs() < 1e-14);
        }
        let g = metric_tensor(&m, Vec2::new(1.0, 0.0)).unwrap();
        assert!((g.g22 - (1.5f64 * 2.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn seeds_recover_surface_points() {
        for t0 in [-FRAC_PI_2, FRAC_PI_2] {
            let m = with(0.1, 0.0, 1.0, t0).unwrap();
            for z in random_points(&m, 200, 23) {
                let x = m.point(z);
                let best = m.fold_seeds(&x).into_iter().map(|s| (m.point(s) - x).norm()).fold(f64::MAX, f64::min);
                assert!(best < 1e-9, "{z:?} {best}");
            }
        }
    }

    #[test]
    fn rejects_other_tilts() {
        assert!(matches!(with(0.2, 0.0, 1.0, 0.3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn developable_only_without_parabolic_term() {
        let flat = with(0.0, 0.0, 1.0, FRAC_PI_2).unwrap();
        assert!(classify_surface(&flat, Grid::default()).unwrap().developable);
        let bent = with(0.2, 0.0, 1.0, FRAC_PI_2).unwrap();
        let region = Rect::new([0.5, -0.5], [2.0, 0.5]);
        let r = classify_surface(&bent, Grid { region: Some(region), ..Grid::default() }).unwrap();
        assert!(!r.developable && r.coords_are_loc);
    }

    #[test]
    fn reduced_case_tracks_rcasd() {
        let m = with(0.0, 0.0, 1.0, FRAC_PI_2).unwrap();
        let r = rcasd_surface(*m.params(), 1.0).unwrap();
        let z1max = m.domain().hi[0];
        let mut last = f64::MAX;
        for z1 in [0.05 * z1max, 0.2 * z1max, 0.8 * z1max] {
            let z = Vec2::new(z1, 0.7);
            assert!((m.point(z)[2] - r.point(z)[2]).abs() < 1e-12);
            let (gm, gr) = (metric_tensor(&m, z).unwrap(), metric_tensor(&r, z).unwrap());
            assert!((gm.g22 - gr.g22).abs() < 1e-12);
            let rel = (gm.g11 / gr.g11 - 1.0).abs();
            assert!(rel < last);
            last = rel;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn power_and_i2() {
        let m = with(0.2, -0.5, 1.5, -FRAC_PI_2).unwrap();
        let v = m.channel_variances().unwrap();
        assert!((v[1] - 1.0 / (2.0 * 1.5f64).powi(2)).abs() < 1e-14);
        assert!((m.i2() - 4.0 * (2.25 + 4.0 * 0.04 / 2.25)).abs() < 1e-12);
        assert!(m.i1() > 0.0 && m.i1().is_finite());
    }

    #[test]
    fn i1_matches_adaptive_quadrature_in_z1() {
        for (a, alpha0) in [(0.2, -0.5), (0.1, 0.0), (0.0, 0.3)] {
            let m = with(a, alpha0, 1.2, FRAC_PI_2).unwrap();
            let l1 = m.laws()[0];
            let (ey2, ey4) = m.y_moments();
            let f = |z1: f64| {
                let phi = z1.signum() * (m.k * z1.abs()).sqrt();
                let c = m.big_a * (m.alpha0 - phi);
                let k2 = c * c - 2.0 * c * m.a * m.st * ey2 + m.a * m.a * ey4;
                m.k / (4.0 * z1.abs()) * k2 * l1.pdf(z1)
            };
            let (lo, hi) = (1.0 / m.k, l1.tail_bound(1e-14));
            let want =
                crate::quad::adaptive_simpson(f, lo, hi, 1e-12) + crate::quad::adaptive_simpson(f, -hi, -lo, 1e-12);
            assert!((m.i1() / want - 1.0).abs() < 1e-8, "{} {want}", m.i1());
        }
    }
}
