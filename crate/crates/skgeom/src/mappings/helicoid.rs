//! Helicoid ("Archimedes' screw") and its arc-length reparametrised variant.

use std::f64::consts::PI;

use super::{symmetric_rect, ClosedForms, Mapping, MappingKind, MappingParams, TAIL_MASS};
use crate::channel::ChannelLaw;
use crate::distortion::helicoid_approx_fit;
use crate::error::{Error, Result};
use crate::surface::{ParametricSurface, Partials, Rect, Vec2, Vec3};

/// S = (w z₁ cos α₂z₂, w z₁ sin α₂z₂, h z₂), w = Rα₁/π, h = Δα₂/π.
#[derive(Clone, Debug)]
pub struct Helicoid {
    params: MappingParams,
    sigma_x: f64,
    radius: f64,
    w: f64,
    h: f64,
    domain: Rect,
}

impl Helicoid {
    pub(super) fn new(params: MappingParams, sigma_x: f64) -> Result<Self> {
        let radius = params.extras.radius.unwrap_or(PI);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("helicoid radius must be positive (got {radius})")));
        }
        let mut m = Self {
            params,
            sigma_x,
            radius,
            w: radius * params.alpha1 / PI,
            h: params.delta * params.alpha2 / PI,
            domain: Rect::new([0.0; 2], [0.0; 2]),
        };
        let [l1, l2] = m.laws();
        m.domain = symmetric_rect(l1.tail_bound(TAIL_MASS), l2.tail_bound(TAIL_MASS));
        Ok(m)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn z2_variance(&self) -> f64 {
        let p = &self.params;
        let corr = if p.extras.var_correction.unwrap_or(true) { 0.5 } else { 0.0 };
        ((PI * self.sigma_x / p.delta).powi(2) + corr) / (p.alpha2 * p.alpha2)
    }

    fn laws(&self) -> [ChannelLaw; 2] {
        [ChannelLaw::DoubleRayleigh { scale: self.sigma_x / self.w }, ChannelLaw::Gaussian { var: self.z2_variance() }]
    }
}

impl ParametricSurface for Helicoid {
    fn point(&self, z: Vec2) -> Vec3 {
        let t = self.params.alpha2 * z[1];
        Vec3::new(self.w * z[0] * t.cos(), self.w * z[0] * t.sin(), self.h * z[1])
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn partials(&self, z: Vec2) -> Partials {
        let a2 = self.params.alpha2;
        let (s, c) = (a2 * z[1]).sin_cos();
        let w = self.w;
        Partials {
            s: self.point(z),
            s1: Vec3::new(w * c, w * s, 0.0),
            s2: Vec3::new(-w * z[0] * a2 * s, w * z[0] * a2 * c, self.h),
            s11: Vec3::zeros(),
            s12: Vec3::new(-w * a2 * s, w * a2 * c, 0.0),
            s22: Vec3::new(-w * z[0] * a2 * a2 * c, -w * z[0] * a2 * a2 * s, 0.0),
        }
    }
}

impl Mapping for Helicoid {
    fn kind(&self) -> MappingKind {
        MappingKind::Helicoid
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
        Ok([2.0 * (self.sigma_x / self.w).powi(2), self.z2_variance()])
    }

    fn approximation_distortion(&self) -> Result<f64> {
        let sx = self.sigma_x;
        Ok(sx * sx * helicoid_approx_fit(self.params.delta / sx)?)
    }

    fn weak_channel_closed_form(&self, sigma_n2: f64) -> Result<f64> {
        let p = &self.params;
        let sz1 = self.channel_variances()?[0];
        let ra = self.radius * p.alpha1;
        Ok(sigma_n2 / (3.0 * PI * PI) * ((p.delta * p.alpha2).powi(2) + ra * ra * (1.0 + p.alpha2 * p.alpha2 * sz1)))
    }

    fn fold_seeds(&self, x: &Vec3) -> Vec<Vec2> {
        let a2 = self.params.alpha2;
        let rho = x[0].hypot(x[1]);
        let beta = x[1].atan2(x[0]);
        let kc = ((PI * x[2] / self.params.delta - beta) / PI).floor() as i64;
        (kc - 1..=kc + 2)
            .map(|k| {
                let z1 = if k.rem_euclid(2) == 0 { rho / self.w } else { -rho / self.w };
                Vec2::new(z1, (beta + k as f64 * PI) / a2)
            })
            .collect()
    }

    fn closed_forms(&self, z: Vec2) -> Option<ClosedForms> {
        let a2 = self.params.alpha2;
        let g22 = (self.w * a2 * z[0]).powi(2) + self.h * self.h;
        Some(ClosedForms {
            metric: [self.w * self.w, 0.0, g22],
            sff: Some([0.0, -self.w * self.h * a2 / g22.sqrt(), 0.0]),
        })
    }
}

/// Alternative closed form of g₁₁ for the arc-length variant (R = Δ = 1).
/// Agrees with the embedding only at z₁z₂ = 0; kept for reference.
pub fn helicoid_arclength_g11_alt(z1: f64, z2: f64) -> f64 {
    let q = 1.0 + z1 * z1;
    (z1.powi(4) + (z1 * z2).powi(2) + 2.0 * z1 * z1 + 1.0) / (q * q * PI * PI)
}

/// Unit-amplification helicoid B(z₁, v) with the second coordinate rescaled by the
/// pitch-circle speed φ(z₁) = √(Δ² + R²z₁²)/π, so that g₂₂ ≡ 1.
#[derive(Clone, Debug)]
pub struct HelicoidArcLength {
    params: MappingParams,
    radius: f64,
}

const ARCLENGTH_BOX: f64 = 3.0;

impl HelicoidArcLength {
    pub(super) fn new(params: MappingParams) -> Result<Self> {
        let radius = params.extras.radius.unwrap_or(1.0);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("helicoid radius must be positive (got {radius})")));
        }
        Ok(Self { params, radius })
    }

    /// φ, φ′, φ″ at z₁.
    fn speed(&self, z1: f64) -> (f64, f64, f64) {
        let (r2, d) = (self.radius * self.radius, self.params.delta);
        let phi = (d * d + r2 * z1 * z1).sqrt() / PI;
        let d1 = r2 * z1 / (PI * PI * phi);
        let d2 = r2 / (PI * PI * phi) * (1.0 - z1 * d1 / phi);
        (phi, d1, d2)
    }
}

impl ParametricSurface for HelicoidArcLength {
    fn point(&self, z: Vec2) -> Vec3 {
        self.partials(z).s
    }

    fn domain(&self) -> Rect {
        symmetric_rect(ARCLENGTH_BOX, ARCLENGTH_BOX)
    }

    fn partials(&self, z: Vec2) -> Partials {
        let (w, h) = (self.radius / PI, self.params.delta / PI);
        let (phi, p1, p2) = self.speed(z[0]);
        let v = z[1] / phi;
        let (s, c) = v.sin_cos();
        let z1 = z[0];
        let b = Vec3::new(w * z1 * c, w * z1 * s, h * v);
        let b1 = Vec3::new(w * c, w * s, 0.0);
        let bv = Vec3::new(-w * z1 * s, w * z1 * c, h);
        let b1v = Vec3::new(-w * s, w * c, 0.0);
        let bvv = Vec3::new(-w * z1 * c, -w * z1 * s, 0.0);
        let v1 = -z[1] * p1 / (phi * phi);
        let v2 = 1.0 / phi;
        let v11 = -z[1] * (p2 / (phi * phi) - 2.0 * p1 * p1 / phi.powi(3));
        let v12 = -p1 / (phi * phi);
        Partials {
            s: b,
            s1: b1 + bv * v1,
            s2: bv * v2,
            s11: b1v * (2.0 * v1) + bvv * (v1 * v1) + bv * v11,
            s12: b1v * v2 + bvv * (v1 * v2) + bv * v12,
            s22: bvv * (v2 * v2),
        }
    }
}

impl Mapping for HelicoidArcLength {
    fn kind(&self) -> MappingKind {
        MappingKind::HelicoidArclength
    }

    fn params(&self) -> &MappingParams {
        &self.params
    }

    fn sigma_x(&self) -> f64 {
        1.0
    }

    fn channel_laws(&self) -> Result<[ChannelLaw; 2]> {
        Err(Error::Unsupported("no channel model for the arc-length helicoid".into()))
    }

    fn channel_variances(&self) -> Result<[f64; 2]> {
        self.channel_laws().map(|_| [0.0; 2])
    }

    fn approximation_distortion(&self) -> Result<f64> {
        Err(Error::Unsupported("no distortion model for the arc-length helicoid".into()))
    }

    fn weak_channel_closed_form(&self, _sigma_n2: f64) -> Result<f64> {
        Err(Error::Unsupported("no distortion model for the arc-length helicoid".into()))
    }

    fn closed_forms(&self, z: Vec2) -> Option<ClosedForms> {
        let w = self.radius / PI;
        let (phi, p1, _) = self.speed(z[0]);
        let v1 = -z[1] * p1 / (phi * phi);
        let v2 = 1.0 / phi;
        Some(ClosedForms { metric: [w * w + phi * phi * v1 * v1, phi * phi * v1 * v2, 1.0], sff: None })
    }
}
