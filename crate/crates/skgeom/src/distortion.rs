//! Analytical performance models: OPTA, linear baseline, weak-noise and curvature
//! distortion terms, approximation distortion, high-SNR laws, and numeric
//! estimators of the channel distortion of a mapping.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{pairwise_sum, stream_rng, ChannelLaw};
use crate::error::{Error, Result};
use crate::mappings::{Mapping, MappingKind, MappingParams, Snasu};
use crate::quad::GaussLegendre;
use crate::surface::{forms_from_partials, Vec2};

pub fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Optimal performance theoretically attainable, SDR = (1 + snr)^{N/M}.
pub fn opta_sdr(snr: f64, m: usize, n: usize) -> f64 {
    (1.0 + snr).powf(n as f64 / m as f64)
}

/// SDR of linear M:N reduction (N ≤ M) with MMSE reception:
/// M / ((M − N) + N/(1 + snr)).
pub fn bpam_sdr(snr: f64, m: usize, n: usize) -> f64 {
    let (mf, nf) = (m as f64, n.min(m) as f64);
    mf / ((mf - nf) + nf / (1.0 + snr))
}

/// Channel distortion of a 1:N-style curve decoded in scaled arc length:
/// g₁₁σn² + ¾κ²σn⁴ + (5/12)κ²τ²σn⁶.
pub fn m1_channel_distortion_3rd(g11: f64, kappa: f64, tau: f64, sigma_n: f64) -> f64 {
    let s2 = sigma_n * sigma_n;
    g11 * s2 + 0.75 * kappa * kappa * s2 * s2 + 5.0 / 12.0 * kappa * kappa * tau * tau * s2 * s2 * s2
}

/// Weak-noise distortion of a 1:N expansion: (σn²/g₁₁)(1 + ¼σn²κ² [+ (5/48)σn⁴κ⁴]).
pub fn one_n_weak_noise_2nd(g11: f64, kappa: f64, sigma_n: f64, third: bool) -> f64 {
    let s2 = sigma_n * sigma_n;
    let k2 = kappa * kappa;
    let mut corr = 1.0 + 0.25 * s2 * k2;
    if third {
        corr += 5.0 / 48.0 * s2 * s2 * k2 * k2;
    }
    s2 / g11 * corr
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MnMode {
    Expansion,
    Reduction,
}

/// Pointwise M:N distortion density from orthogonal-coordinate metrics (g_ii, κ_i):
/// expansion (σn²/M)Σ(1/g_ii)(1 + ¼σn²κ_i²), reduction (σn²/M)Σ(g_ii + ¾σn²κ_i²).
pub fn mn_pointwise_distortion(dirs: &[(f64, f64)], sigma_n: f64, mode: MnMode, m: usize) -> Result<f64> {
    if dirs.is_empty() {
        return Err(Error::Domain("no coordinate directions supplied".into()));
    }
    let s2 = sigma_n * sigma_n;
    let sum: f64 = dirs
        .iter()
        .map(|&(g, k)| match mode {
            MnMode::Expansion => (1.0 + 0.25 * s2 * k * k) / g,
            MnMode::Reduction => g + 0.75 * s2 * k * k,
        })
        .sum();
    Ok(s2 / m as f64 * sum)
}

/// Dominant high-SNR distortion exponent of a split M:N system:
/// reduction → 1/m, expansion → n.
pub fn splitting_slope(m: usize, n: usize, mode: MnMode) -> f64 {
    match mode {
        MnMode::Reduction => 1.0 / m as f64,
        MnMode::Expansion if m == n => 1.0 / m as f64,
        MnMode::Expansion => n as f64,
    }
}

/// Lower bound on the approximation distortion of a uniform M:N reduction with
/// fold spacing Δ: (M−N)/(4M(M−N+2))·Δ².
pub fn uniform_approx_bound(m: usize, n: usize, delta: f64) -> f64 {
    let (mf, d) = (m as f64, (m - n) as f64);
    d / (4.0 * mf * (d + 2.0)) * delta * delta
}

/// Empirical cubic model of the helicoid approximation distortion (unit source
/// variance), valid for Δ ∈ [0, 3].
pub fn helicoid_approx_fit(delta: f64) -> Result<f64> {
    if !(0.0..=3.0).contains(&delta) {
        return Err(Error::Range(format!("helicoid distortion fit valid for Δ ∈ [0, 3] (got {delta})")));
    }
    Ok(((-0.0036 * delta + 0.024) * delta + 0.0056) * delta)
}

/// κ = 2(2ηπ²σx²)², the constant of the RCASD channel-1 power σz₁² = κ/(α₁Δ)².
pub fn rcasd_kappa(sigma_x: f64, eta: f64) -> f64 {
    2.0 * (2.0 * eta * PI * PI * sigma_x * sigma_x).powi(2)
}

/// High-SNR approximation Δ ≈ (6κ/SNR)^{1/4} of the optimal RCASD fold spacing.
pub fn rcasd_high_snr_delta(snr: f64, sigma_x: f64, eta: f64) -> f64 {
    (6.0 * rcasd_kappa(sigma_x, eta) / snr).powf(0.25)
}

/// Positive root of Δ⁴/18 − √κσx²Δ/(3 SNR) − κ/(3 SNR) = 0 (bisection).
pub fn rcasd_optimal_delta_exact(snr: f64, sigma_x: f64, eta: f64) -> f64 {
    let k = rcasd_kappa(sigma_x, eta);
    let f = |d: f64| d.powi(4) / 18.0 - k.sqrt() * sigma_x * sigma_x * d / (3.0 * snr) - k / (3.0 * snr);
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Boundary value of α₁ for the RCASD at full power: α₁² = α₂²κ/(Δ²(2α₂²Pmax − σx²)).
pub fn rcasd_boundary_alpha1(delta: f64, alpha2: f64, p_max: f64, sigma_x: f64, eta: f64) -> Result<f64> {
    let den = delta * delta * (2.0 * alpha2 * alpha2 * p_max - sigma_x * sigma_x);
    if !(den > 0.0) {
        return Err(Error::Infeasible(format!("channel 2 alone exceeds the power budget (α₂ = {alpha2})")));
    }
    Ok((alpha2 * alpha2 * rcasd_kappa(sigma_x, eta) / den).sqrt())
}

/// Density of the snail-surface channel coordinate z₁ (double gamma, shape 3/2).
pub fn snasu_z1_pdf(params: MappingParams, sigma_x: f64, z: f64) -> Result<f64> {
    Ok(snasu_law(params, sigma_x)?[0].pdf(z))
}

/// Density of the snail-surface channel coordinate z₂ (sine law).
pub fn snasu_z2_pdf(params: MappingParams, z: f64) -> Result<f64> {
    Ok(snasu_law(params, 1.0)?[1].pdf(z))
}

fn snasu_law(params: MappingParams, sigma_x: f64) -> Result<[ChannelLaw; 2]> {
    let m: Snasu = crate::mappings::snasu_surface(params, sigma_x)?;
    m.channel_laws()
}

/// Numeric evaluation strategy for the weak channel distortion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeakMethod {
    /// Tensorised Gauss–Legendre quadrature of E{tr G} with the z₁ = ±t² substitution.
    Quadrature { panels: usize },
    /// Monte-Carlo mean of tr G over channel-law samples.
    MonteCarlo { samples: usize, seed: u64 },
    /// Monte-Carlo mean of ‖S(z + n) − S(z)‖² with n ~ N(0, σn² I); includes the
    /// curvature terms and stays finite where E{tr G} diverges.
    FiniteNoise { samples: usize, seed: u64 },
}

/// (σn²/M)·E{Σ g_ii} evaluated from the embedding (generic metric) under the
/// mapping's channel laws.
pub fn weak_channel_distortion_integral(mapping: &dyn Mapping, sigma_n2: f64, method: WeakMethod) -> Result<f64> {
    let laws = mapping.channel_laws()?;
    let trace = |z: Vec2| -> f64 {
        let p = mapping.partials(z);
        p.s1.norm_squared() + p.s2.norm_squared()
    };
    match method {
        WeakMethod::Quadrature { panels } => {
            let gl = GaussLegendre::new(8);
            let t1 = laws[0].tail_bound(1e-12).sqrt();
            let t2 = laws[1].tail_bound(1e-12);
            let mut nodes2 = Vec::new();
            for k in 0..panels {
                let lo = -t2 + 2.0 * t2 * k as f64 / panels as f64;
                let hi = lo + 2.0 * t2 / panels as f64;
                push_nodes(&gl, lo, hi, &mut nodes2);
            }
            let mut nodes1 = Vec::new();
            for k in 0..panels {
                let lo = t1 * k as f64 / panels as f64;
                push_nodes(&gl, lo, lo + t1 / panels as f64, &mut nodes1);
            }
            let rows: Vec<(f64, f64)> = nodes1
                .par_iter()
                .flat_map_iter(|&(t, wt)| [1.0, -1.0].map(move |s| (s * t * t, 2.0 * t * wt)))
                .map(|(z1, w1)| {
                    let f1 = laws[0].pdf(z1) * w1;
                    let mut mass = 0.0;
                    let mut acc = 0.0;
                    for &(z2, w2) in &nodes2 {
                        let f = f1 * laws[1].pdf(z2) * w2;
                        if f != 0.0 {
                            mass += f;
                            acc += f * trace(Vec2::new(z1, z2));
                        }
                    }
                    (mass, acc)
                })
                .collect();
            let mass = pairwise_sum(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
            if (mass - 1.0).abs() > 1e-3 {
                return Err(Error::Inconsistent(format!("channel pdf integrates to {mass}")));
            }
            let acc = pairwise_sum(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
            Ok(sigma_n2 * acc / 3.0)
        }
        WeakMethod::MonteCarlo { samples, seed } => {
            let v: Vec<f64> = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i);
                    trace(Vec2::new(laws[0].sample(&mut rng), laws[1].sample(&mut rng)))
                })
                .collect();
            Ok(sigma_n2 * pairwise_sum(&v) / samples as f64 / 3.0)
        }
        WeakMethod::FiniteNoise { samples, seed } => {
            let noise = Normal::new(0.0, sigma_n2.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
            let v: Vec<f64> = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i);
                    let z = Vec2::new(laws[0].sample(&mut rng), laws[1].sample(&mut rng));
                    let n = Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng));
                    (mapping.point(z + n) - mapping.point(z)).norm_squared()
                })
                .collect();
            Ok(pairwise_sum(&v) / samples as f64 / 3.0)
        }
    }
}

fn push_nodes(gl: &GaussLegendre, lo: f64, hi: f64, out: &mut Vec<(f64, f64)>) {
    out.extend(gl.nodes(lo, hi));
}

/// Expected second-order (curvature) channel term (σn⁴/M)·¾·E{Σ b_ii²}, averaged over
/// the channel laws at points where the noise tube stays inside the local radius of
/// curvature (σn|b_ii|/√g_ii < 1); the expansion is meaningless elsewhere.
pub fn second_order_channel_term(mapping: &dyn Mapping, sigma_n2: f64, samples: usize, seed: u64) -> Result<f64> {
    let laws = mapping.channel_laws()?;
    let sn = sigma_n2.sqrt();
    let v: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let z = Vec2::new(laws[0].sample(&mut rng), laws[1].sample(&mut rng));
            match forms_from_partials(&mapping.partials(z)) {
                Ok(f) => [(f.b11, f.g11), (f.b22, f.g22)]
                    .iter()
                    .filter(|(b, g)| sn * b.abs() / g.sqrt() < 1.0)
                    .map(|(b, _)| b * b)
                    .sum(),
                Err(_) => 0.0,
            }
        })
        .collect();
    Ok(0.75 * sigma_n2 * sigma_n2 * pairwise_sum(&v) / samples as f64 / 3.0)
}

/// Distortion split into approximation, first-order channel and curvature terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionBreakdown {
    pub eps_approx: f64,
    pub eps_ch_weak: f64,
    pub eps_ch_2nd: f64,
    pub total: f64,
}

impl DistortionBreakdown {
    pub fn new(eps_approx: f64, eps_ch_weak: f64, eps_ch_2nd: f64) -> Self {
        Self { eps_approx, eps_ch_weak, eps_ch_2nd, total: eps_approx + eps_ch_weak + eps_ch_2nd }
    }

    /// SDR in dB for a source of variance σx², using approximation + weak channel terms.
    pub fn sdr_db(&self, sigma_x: f64) -> f64 {
        db(sigma_x * sigma_x / (self.eps_approx + self.eps_ch_weak))
    }
}

pub const SECOND_ORDER_SAMPLES: usize = 20_000;
pub const SECOND_ORDER_SEED: u64 = 0x5EED_20D0;

/// Closed-form approximation and weak channel distortion plus the Monte-Carlo
/// curvature term, at channel noise variance σn².
pub fn analytic_breakdown(mapping: &dyn Mapping, sigma_n2: f64) -> Result<DistortionBreakdown> {
    let approx = mapping.approximation_distortion()?;
    let weak = mapping.weak_channel_closed_form(sigma_n2)?;
    let second = if mapping.kind() == MappingKind::Bpam {
        0.0
    } else {
        second_order_channel_term(mapping, sigma_n2, SECOND_ORDER_SAMPLES, SECOND_ORDER_SEED)?
    };
    Ok(DistortionBreakdown::new(approx, weak, second))
}
