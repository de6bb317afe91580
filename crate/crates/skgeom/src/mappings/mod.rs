//! Concrete 3:2 Shannon–Kotel'nikov mappings: embeddings S(z₁, z₂) of the channel
//! plane into source space, with analytic partials, channel-signal laws, power and
//! closed-form distortion models.

mod bpam;
mod helicoid;
mod mscds;
mod rcasd;
mod snasu;

use std::f64::consts::PI;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub use bpam::Bpam;
pub use helicoid::{helicoid_arclength_g11_alt, Helicoid, HelicoidArcLength};
pub use mscds::Mscds;
pub use rcasd::Rcasd;
pub use snasu::Snasu;

use crate::channel::ChannelLaw;
use crate::error::{Error, Result};
use crate::surface::{ParametricSurface, Rect, Vec2, Vec3};

/// Probability mass allowed outside the truncated channel domain.
pub const TAIL_MASS: f64 = 1e-6;

pub const DEFAULT_ETA: f64 = 0.16;

fn default_eta() -> f64 {
    DEFAULT_ETA
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingKind {
    Helicoid,
    HelicoidArclength,
    Rcasd,
    Mscds,
    Snasu,
    Bpam,
}

impl MappingKind {
    pub const ALL: [MappingKind; 6] =
        [Self::Helicoid, Self::HelicoidArclength, Self::Rcasd, Self::Mscds, Self::Snasu, Self::Bpam];

    pub fn name(self) -> &'static str {
        match self {
            Self::Helicoid => "helicoid",
            Self::HelicoidArclength => "helicoid-arclength",
            Self::Rcasd => "rcasd",
            Self::Mscds => "mscds",
            Self::Snasu => "snasu",
            Self::Bpam => "bpam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config(format!("unknown mapping '{s}'")))
    }
}

impl std::fmt::Display for MappingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Mapping-specific parameters; unset fields take the documented defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extras {
    /// Helicoid radius scale R (default π).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// MS-CDS parabola coefficient a (default 0.1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// MS-CDS angular offset α₀ (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    /// MS-CDS vertical scale B (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// MS-CDS tilt θ₀ ∈ {−π/2, π/2} (default −π/2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    /// Snail-surface latitude phase ∈ {0, π/2} (default π/2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    /// Helicoid empirical +½ correction of the z₂ variance (default on).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_correction: Option<bool>,
}

impl Extras {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Compact `key=value;…` rendering used in CSV output.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        let mut push = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                parts.push(format!("{k}={}", crate::experiment::fmt_sig(v)));
            }
        };
        push("R", self.radius);
        push("a", self.a);
        push("alpha0", self.alpha0);
        push("B", self.b);
        push("theta0", self.theta0);
        push("phase", self.phase);
        if let Some(c) = self.var_correction {
            parts.push(format!("var_correction={c}"));
        }
        parts.join(";")
    }
}

/// Fold spacing Δ, channel amplification α₁, α₂, spiral constant η and extras.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingParams {
    pub delta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Extras::is_empty")]
    pub extras: Extras,
}

impl MappingParams {
    pub fn new(delta: f64, alpha1: f64, alpha2: f64) -> Self {
        Self { delta, alpha1, alpha2, eta: DEFAULT_ETA, extras: Extras::default() }
    }

    pub fn with_extras(mut self, extras: Extras) -> Self {
        self.extras = extras;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("alpha1", self.alpha1), ("alpha2", self.alpha2), ("eta", self.eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite (got {v})")));
            }
        }
        Ok(())
    }
}

/// Declarative mapping record: a name plus parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    pub name: MappingKind,
    #[serde(flatten)]
    pub params: MappingParams,
}

/// Exact first (and when known, second) fundamental form coefficients `[x11, x12, x22]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForms {
    pub metric: [f64; 3],
    pub sff: Option<[f64; 3]>,
}

/// A 3:2 mapping: a regular embedding of the channel rectangle into ℝ³ plus the
/// statistical model of the channel signals it induces on a Gaussian source.
pub trait Mapping: ParametricSurface + Send + Sync + Debug {
    fn kind(&self) -> MappingKind;
    fn params(&self) -> &MappingParams;
    fn sigma_x(&self) -> f64;

    /// Law of (z₁, z₂) under projection of an i.i.d. N(0, σx²) source.
    fn channel_laws(&self) -> Result<[ChannelLaw; 2]>;

    /// Closed-form channel variances (σz₁², σz₂²).
    fn channel_variances(&self) -> Result<[f64; 2]>;

    /// Power per channel dimension, ½(σz₁² + σz₂²).
    fn power(&self) -> Result<f64> {
        let v = self.channel_variances()?;
        Ok(0.5 * (v[0] + v[1]))
    }

    /// Approximation distortion per source component.
    fn approximation_distortion(&self) -> Result<f64>;

    /// Closed-form weak-noise channel distortion per source component.
    fn weak_channel_closed_form(&self, sigma_n2: f64) -> Result<f64>;

    /// Period of z₂ when the embedding is periodic in it.
    fn z2_period(&self) -> Option<f64> {
        None
    }

    /// Candidate channel points near the projection of `x` (one per nearby fold).
    fn fold_seeds(&self, _x: &Vec3) -> Vec<Vec2> {
        Vec::new()
    }

    fn closed_forms(&self, _z: Vec2) -> Option<ClosedForms> {
        None
    }

    /// Map a received point into the domain: wrap periodic coordinates, clamp the
    /// rest. The flag reports whether clamping was needed.
    fn normalize_z(&self, z: Vec2) -> (Vec2, bool) {
        let d = self.domain();
        let mut z = z;
        if let Some(p) = self.z2_period() {
            z[1] = (z[1] - d.lo[1]).rem_euclid(p) + d.lo[1];
        }
        let c = d.clamp(z);
        (c, c != z)
    }

    /// Receiver: source estimate from a noisy channel point.
    fn decode(&self, z: Vec2, _noise_var: f64) -> (Vec3, bool) {
        let (z, clamped) = self.normalize_z(z);
        (self.point(z), clamped)
    }
}

/// Builds the mapping named in `config` for a source of standard deviation `sigma_x`.
pub fn build(config: &MappingConfig, sigma_x: f64) -> Result<Box<dyn Mapping>> {
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(Error::Domain(format!("sigma_x must be positive (got {sigma_x})")));
    }
    let p = config.params;
    Ok(match config.name {
        MappingKind::Helicoid => Box::new(helicoid_surface(p, sigma_x)?),
        MappingKind::HelicoidArclength => Box::new(helicoid_arclength_variant(p)?),
        MappingKind::Rcasd => Box::new(rcasd_surface(p, sigma_x)?),
        MappingKind::Mscds => Box::new(mscds_surface(p, sigma_x)?),
        MappingKind::Snasu => Box::new(snasu_surface(p, sigma_x)?),
        MappingKind::Bpam => Box::new(bpam_linear(p, sigma_x, 3, 2)?),
    })
}

pub fn helicoid_surface(params: MappingParams, sigma_x: f64) -> Result<Helicoid> {
    params.validate()?;
    Helicoid::new(params, sigma_x)
}

pub fn helicoid_arclength_variant(params: MappingParams) -> Result<HelicoidArcLength> {
    params.validate()?;
    HelicoidArcLength::new(params)
}

pub fn rcasd_surface(params: MappingParams, sigma_x: f64) -> Result<Rcasd> {
    params.validate()?;
    Ok(Rcasd::new(params, sigma_x))
}

pub fn mscds_surface(params: MappingParams, sigma_x: f64) -> Result<Mscds> {
    params.validate()?;
    Mscds::new(params, sigma_x)
}

pub fn snasu_surface(params: MappingParams, sigma_x: f64) -> Result<Snasu> {
    params.validate()?;
    Snasu::new(params, sigma_x)
}

/// Linear baseline; only the 3:2 reduction is provided as a surface.
pub fn bpam_linear(params: MappingParams, sigma_x: f64, m: usize, n: usize) -> Result<Bpam> {
    if (m, n) != (3, 2) {
        return Err(Error::Unsupported(format!("BPAM surface for {m}:{n} (only 3:2)")));
    }
    params.validate()?;
    Ok(Bpam::new(params, sigma_x))
}

/// Spiral angle u = √(k|z₁|) with k = α₁/(ηΔ), and its first two z₁-derivatives
/// (of the signed branch parameter), floored away from the singular origin.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SpiralAngle {
    pub u: f64,
    pub sign: f64,
    /// du/d|z₁| = k/(2u).
    pub du: f64,
    /// d²u/d|z₁|² = −k²/(4u³).
    pub ddu: f64,
}

impl SpiralAngle {
    pub fn new(k: f64, z1: f64) -> Self {
        let u = (k * z1.abs()).sqrt().max(1e-12);
        Self { u, sign: if z1 < 0.0 { -1.0 } else { 1.0 }, du: k / (2.0 * u), ddu: -k * k / (4.0 * u * u * u) }
    }
}

/// Spiral parameter values u ≥ 0 congruent to `u0` modulo `period` nearest `target`.
pub(crate) fn nearest_windings(u0: f64, period: f64, target: f64, count: i64) -> Vec<f64> {
    let k0 = ((target - u0) / period).round() as i64;
    (k0 - count..=k0 + count).map(|k| u0 + period * k as f64).filter(|&u| u >= 0.0).collect()
}

pub(crate) fn wrap_angle(t: f64) -> f64 {
    (t + PI).rem_euclid(2.0 * PI) - PI
}

pub(crate) fn symmetric_rect(t1: f64, t2: f64) -> Rect {
    Rect::new([-t1, -t2], [t1, t2])
}

#[cfg(test)]
pub(crate) mod testutil {
    use rand::Rng;

    use super::*;
    use crate::channel::stream_rng;
    use crate::surface::{fd_partials, forms_from_partials, Partials};

    pub fn random_points(m: &dyn Mapping, n: usize, seed: u64) -> Vec<Vec2> {
        let d = m.domain();
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| Vec2::new(rng.gen_range(d.lo[0]..d.hi[0]), rng.gen_range(d.lo[1]..d.hi[1]))).collect()
    }

    fn rel(a: Vec3, b: Vec3, scale: f64) -> f64 {
        (a - b).norm() / (b.norm() + scale)
    }

    /// Max relative error of analytic vs finite-difference partials.
    pub fn partials_error(m: &dyn Mapping, pts: &[Vec2]) -> f64 {
        let mut worst: f64 = 0.0;
        for &z in pts {
            let a: Partials = m.partials(z);
            let f = fd_partials(m, z);
            let s1 = a.s1.norm().max(a.s2.norm());
            // Second derivatives: central differences of the analytic first partials.
            let h = [1e-6 * z[0].abs().max(1.0), 1e-6 * z[1].abs().max(1.0)];
            let d = |i: usize| {
                let e = if i == 0 { Vec2::new(h[0], 0.0) } else { Vec2::new(0.0, h[1]) };
                let (p, q) = (m.partials(z + e), m.partials(z - e));
                ((p.s1 - q.s1) / (2.0 * h[i]), (p.s2 - q.s2) / (2.0 * h[i]))
            };
            let ((d11, d21), (d12, d22)) = (d(0), d(1));
            let f = Partials { s11: d11, s12: 0.5 * (d21 + d12), s22: d22, ..f };
            worst = worst
                .max(rel(a.s, m.point(z), 1e-12))
                .max(rel(a.s1, f.s1, 1e-3 * s1))
                .max(rel(a.s2, f.s2, 1e-3 * s1))
                .max(rel(a.s11, f.s11, 1e-3 * s1))
                .max(rel(a.s12, f.s12, 1e-3 * s1))
                .max(rel(a.s22, f.s22, 1e-3 * s1));
        }
        worst
    }

    /// Max relative mismatch of the closed-form metric and (sign-aligned) SFF
    /// against forms computed from the partials.
    pub fn closed_form_error(m: &dyn Mapping, pts: &[Vec2]) -> (f64, f64) {
        let (mut gm, mut bm): (f64, f64) = (0.0, 0.0);
        for &z in pts {
            let cf = m.closed_forms(z).expect("closed forms");
            let f = forms_from_partials(&m.partials(z)).expect("regular");
            let g = [f.g11, f.g12, f.g22];
            let gs = g[0].abs() + g[2].abs();
            for i in 0..3 {
                gm = gm.max((cf.metric[i] - g[i]).abs() / gs);
            }
            if let Some(b) = cf.sff {
                let bn = [f.b11, f.b12, f.b22];
                let bs = bn.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
                let plus = (0..3).map(|i| (b[i] - bn[i]).abs()).fold(0.0, f64::max);
                let minus = (0..3).map(|i| (b[i] + bn[i]).abs()).fold(0.0, f64::max);
                bm = bm.max(plus.min(minus) / bs);
            }
        }
        (gm, bm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_is_lossless() {
        let cfg = MappingConfig {
            name: MappingKind::Mscds,
            params: MappingParams::new(0.6, 3.3, 1.7).with_extras(Extras {
                a: Some(0.2),
                alpha0: Some(-0.5),
                b: Some(4.0),
                theta0: Some(-PI / 2.0),
                ..Extras::default()
            }),
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: MappingConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let minimal: MappingConfig =
            toml::from_str("name = \"rcasd\"\ndelta = 0.6\nalpha1 = 5.0\nalpha2 = 2.0\n").unwrap();
        assert_eq!(minimal.params.eta, DEFAULT_ETA);
        assert!(toml::from_str::<MappingConfig>("name = \"torus\"\ndelta = 1.0\nalpha1 = 1.0\nalpha2 = 1.0\n").is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(rcasd_surface(MappingParams::new(-1.0, 1.0, 1.0), 1.0).is_err());
        assert!(snasu_surface(MappingParams::new(1.0, 0.0, 1.0), 1.0).is_err());
        assert!(matches!(bpam_linear(MappingParams::new(1.0, 1.0, 1.0), 1.0, 4, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kind_names_parse() {
        for k in MappingKind::ALL {
            assert_eq!(MappingKind::parse(k.name()).unwrap(), k);
        }
        assert!(MappingKind::parse("nope").is_err());
    }

    #[test]
    fn origin_encodes_to_origin() {
        let p = MappingParams::new(0.6, 3.0, 2.0);
        let maps: Vec<Box<dyn Mapping>> = vec![
            Box::new(helicoid_surface(p, 1.0).unwrap()),
            Box::new(rcasd_surface(p, 1.0).unwrap()),
            Box::new(snasu_surface(p, 1.0).unwrap()),
            Box::new(bpam_linear(p, 1.0, 3, 2).unwrap()),
        ];
        for m in maps {
            let seeds = m.fold_seeds(&Vec3::zeros());
            assert!(seeds.iter().any(|z| z.norm() < 1e-12), "{:?}", m.kind());
            assert!(m.point(Vec2::zeros()).norm() < 1e-12);
        }
    }
}
