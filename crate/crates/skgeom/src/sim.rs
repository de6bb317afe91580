//! End-to-end Monte-Carlo simulation: Gaussian source → nearest-point projection
//! onto the mapping → AWGN → decoding through the mapping → SDR.

use nalgebra::{Matrix2, Vector2};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{pairwise_sum, stream_rng};
use crate::distortion::{analytic_breakdown, db, DistortionBreakdown};
use crate::error::{Error, Result};
use crate::mappings::{Mapping, MappingKind};
use crate::surface::{Vec2, Vec3};

/// Coarse-search and refinement settings of the projection encoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    /// Points per axis of the fallback grid search.
    pub grid_size: usize,
    pub refine_iters: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { grid_size: 96, refine_iters: 20 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Channel SNR in dB; `+∞` gives a noiseless chain.
    pub snr_db: f64,
    pub sigma_x: f64,
    pub p_max: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub projection: ProjectionConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            snr_db: 30.0,
            sigma_x: 1.0,
            p_max: 1.0,
            n_samples: 100_000,
            seed: 1,
            projection: ProjectionConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn noise_var(&self) -> f64 {
        self.p_max / 10f64.powf(self.snr_db / 10.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub snr_db: f64,
    pub sdr_db: f64,
    /// E‖x − x̂‖²/M.
    pub mse: f64,
    pub empirical_power: [f64; 2],
    pub analytical_power: Option<f64>,
    /// Fraction of samples whose channel-induced error exceeds 3× its linearised
    /// (weak-noise) prediction ‖J n‖².
    pub anomaly_rate: f64,
    pub clamped_rate: f64,
    pub unconverged_rate: f64,
    pub breakdown: Option<DistortionBreakdown>,
    pub warnings: Vec<String>,
    pub n_samples: usize,
}

/// Result of projecting a source vector onto a mapping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Encoded {
    pub z: Vec2,
    /// ‖x − S(z)‖.
    pub residual: f64,
    /// Stationarity ‖Jᵀ(x − S(z))‖ reached the tolerance within the iteration budget.
    pub converged: bool,
}

fn grad_tol(x: &Vec3) -> f64 {
    1e-8 * (1.0 + x.norm())
}

/// Damped Newton refinement of ½‖S(z) − x‖² from `z0` (full Hessian with the
/// residual-curvature term, Levenberg damping when it is not positive definite).
pub fn refine(mapping: &dyn Mapping, x: &Vec3, z0: Vec2, iters: usize) -> Encoded {
    let (mut z, _) = mapping.normalize_z(z0);
    let mut r = mapping.point(z) - x;
    let mut f = r.norm_squared();
    let tol = grad_tol(x);
    for _ in 0..iters {
        if f.sqrt() < 1e-14 * (1.0 + x.norm()) {
            return Encoded { z, residual: f.sqrt(), converged: true };
        }
        let p = mapping.partials(z);
        let g = Vector2::new(p.s1.dot(&r), p.s2.dot(&r));
        if g.norm() < tol {
            return Encoded { z, residual: f.sqrt(), converged: true };
        }
        let jtj = Matrix2::new(p.s1.dot(&p.s1), p.s1.dot(&p.s2), p.s1.dot(&p.s2), p.s2.dot(&p.s2));
        let h = jtj + Matrix2::new(r.dot(&p.s11), r.dot(&p.s12), r.dot(&p.s12), r.dot(&p.s22));
        let scale = jtj.trace().max(1e-300);
        let mut lambda = 0.0;
        let mut accepted = false;
        for _ in 0..30 {
            let m = h + Matrix2::identity() * lambda;
            if let Some(ch) = m.cholesky() {
                let step = ch.solve(&(-g));
                let (zn, _) = mapping.normalize_z(z + step);
                let rn = mapping.point(zn) - x;
                let fn_ = rn.norm_squared();
                if fn_.is_finite() && fn_ <= f {
                    let small = (zn - z).norm() <= 1e-15 * (1.0 + z.norm());
                    z = zn;
                    r = rn;
                    f = fn_;
                    accepted = !small;
                    break;
                }
            }
            lambda = if lambda == 0.0 { 1e-6 * scale } else { lambda * 10.0 };
        }
        if !accepted {
            break;
        }
    }
    let p = mapping.partials(z);
    let g = Vector2::new(p.s1.dot(&r), p.s2.dot(&r));
    Encoded { z, residual: f.sqrt(), converged: g.norm() < tol || f.sqrt() < 1e-14 * (1.0 + x.norm()) }
}

/// Best `count` grid cells, keeping only one candidate per basin (cells more than
/// two grid steps apart).
fn grid_candidates(mapping: &dyn Mapping, x: &Vec3, n: usize, count: usize) -> Vec<Vec2> {
    let d = mapping.domain();
    let mut cells: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| ((mapping.point(d.cell_center(i, j, n, n)) - x).norm_squared(), i, j))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for &(_, i, j) in &cells {
        if picked.iter().all(|&(pi, pj)| pi.abs_diff(i) > 2 || pj.abs_diff(j) > 2) {
            picked.push((i, j));
            if picked.len() == count {
                break;
            }
        }
    }
    picked.into_iter().map(|(i, j)| d.cell_center(i, j, n, n)).collect()
}

/// Nearest-point projection z = argmin ‖x − S(z)‖: the mapping's fold seeds (or the
/// best three grid basins when it has none), each refined, global best returned.
pub fn encode(mapping: &dyn Mapping, x: &Vec3, proj: &ProjectionConfig) -> Encoded {
    let mut seeds = mapping.fold_seeds(x);
    if seeds.is_empty() {
        seeds = grid_candidates(mapping, x, proj.grid_size, 3);
    }
    let mut best: Option<Encoded> = None;
    for s in seeds {
        let e = refine(mapping, x, s, proj.refine_iters);
        let better = match &best {
            None => true,
            Some(b) => e.residual < b.residual || (e.residual == b.residual && e.converged && !b.converged),
        };
        if better {
            best = Some(e);
        }
    }
    best.expect("at least one seed")
}

/// Dense-grid argmin of ‖x − S(z)‖ over the domain (`n × n` cell centres).
pub fn grid_argmin(mapping: &dyn Mapping, x: &Vec3, n: usize) -> Vec2 {
    let d = mapping.domain();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let z = d.cell_center(i, j, n, n);
                    ((mapping.point(z) - x).norm_squared(), i, j)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("non-empty")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i, j)| d.cell_center(i, j, n, n))
        .expect("non-empty grid")
}

/// Receiver: x̂ from the received channel point (clamped/wrapped into the domain).
pub fn decode(mapping: &dyn Mapping, z_received: Vec2, noise_var: f64) -> (Vec3, bool) {
    mapping.decode(z_received, noise_var)
}

#[derive(Clone, Copy, Default)]
struct Sample {
    err: f64,
    z1sq: f64,
    z2sq: f64,
    anomalous: bool,
    clamped: bool,
    unconverged: bool,
}

fn simulate_one(mapping: &dyn Mapping, cfg: &SimConfig, noise: Option<&Normal<f64>>, index: u64) -> Sample {
    let mut rng = stream_rng(cfg.seed, index);
    let src = Normal::new(0.0, cfg.sigma_x).expect("positive sigma_x");
    let x = Vec3::new(src.sample(&mut rng), src.sample(&mut rng), src.sample(&mut rng));
    let enc = encode(mapping, &x, &cfg.projection);
    let n = noise.map_or(Vec2::zeros(), |nd| Vec2::new(nd.sample(&mut rng), nd.sample(&mut rng)));
    let nv = cfg.noise_var().max(0.0);
    let (xh, clamped) = decode(mapping, enc.z + n, if noise.is_some() { nv } else { 0.0 });
    let anomalous = if noise.is_some() && mapping.kind() != MappingKind::Bpam {
        let p = mapping.partials(enc.z);
        let lin = (p.s1 * n[0] + p.s2 * n[1]).norm_squared();
        (xh - mapping.point(enc.z)).norm_squared() > 3.0 * lin
    } else {
        false
    };
    Sample {
        err: (x - xh).norm_squared(),
        z1sq: enc.z[0] * enc.z[0],
        z2sq: enc.z[1] * enc.z[1],
        anomalous,
        clamped,
        unconverged: !enc.converged,
    }
}

/// Monte-Carlo SDR estimate. Deterministic for a given seed regardless of the number
/// of worker threads (per-sample random streams, pairwise reduction).
pub fn run_simulation(mapping: &dyn Mapping, cfg: &SimConfig) -> Result<SimResult> {
    if cfg.n_samples < 1000 {
        return Err(Error::Config(format!("n_samples must be at least 1000 (got {})", cfg.n_samples)));
    }
    if !(cfg.sigma_x > 0.0 && cfg.p_max > 0.0) {
        return Err(Error::Config("sigma_x and p_max must be positive".into()));
    }
    let nv = cfg.noise_var();
    let noise =
        if nv > 0.0 { Some(Normal::new(0.0, nv.sqrt()).map_err(|e| Error::Config(e.to_string()))?) } else { None };
    let samples: Vec<Sample> =
        (0..cfg.n_samples as u64).into_par_iter().map(|i| simulate_one(mapping, cfg, noise.as_ref(), i)).collect();
    if let Some((i, _)) = samples.iter().enumerate().find(|(_, s)| !s.err.is_finite()) {
        return Err(Error::Simulation(format!("non-finite reconstruction error at sample {i}")));
    }
    let n = cfg.n_samples as f64;
    let sum = |f: fn(&Sample) -> f64| pairwise_sum(&samples.iter().map(f).collect::<Vec<_>>());
    let mse = sum(|s| s.err) / (3.0 * n);
    let empirical_power = [sum(|s| s.z1sq) / n, sum(|s| s.z2sq) / n];
    let rate = |f: fn(&Sample) -> bool| samples.iter().filter(|s| f(s)).count() as f64 / n;

    let mut warnings = Vec::new();
    let analytical_power = mapping.power().ok();
    if let Some(p) = analytical_power {
        let emp = 0.5 * (empirical_power[0] + empirical_power[1]);
        if (emp / p - 1.0).abs() > 0.05 {
            warnings.push(format!("empirical power {emp:.6} differs from model {p:.6} by more than 5%"));
        }
    }
    let unconverged_rate = rate(|s| s.unconverged);
    if unconverged_rate > 0.0 {
        warnings.push(format!(
            "projection did not reach the gradient tolerance for {:.3}% of samples",
            100.0 * unconverged_rate
        ));
    }
    let breakdown = analytic_breakdown(mapping, nv).ok();
    Ok(SimResult {
        snr_db: cfg.snr_db,
        sdr_db: db(cfg.sigma_x * cfg.sigma_x / mse),
        mse,
        empirical_power,
        analytical_power,
        anomaly_rate: rate(|s| s.anomalous),
        clamped_rate: rate(|s| s.clamped),
        unconverged_rate,
        breakdown,
        warnings,
        n_samples: cfg.n_samples,
    })
}

/// Empirical variance of the projected channel coordinates of `samples` source vectors.
pub fn empirical_channel_power(mapping: &dyn Mapping, samples: usize, seed: u64) -> [f64; 2] {
    let src = Normal::new(0.0, mapping.sigma_x()).expect("positive sigma_x");
    let proj = ProjectionConfig::default();
    let zs: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let x = Vec3::new(src.sample(&mut rng), src.sample(&mut rng), src.sample(&mut rng));
            let z = encode(mapping, &x, &proj).z;
            (z[0] * z[0], z[1] * z[1])
        })
        .collect();
    let n = samples as f64;
    [
        pairwise_sum(&zs.iter().map(|v| v.0).collect::<Vec<_>>()) / n,
        pairwise_sum(&zs.iter().map(|v| v.1).collect::<Vec<_>>()) / n,
    ]
}

/// Least-squares slope of y against x.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// High-SNR slope of SDR (dB) versus SNR (dB): least squares over the upper half of
/// the SNR grid. Needs at least 4 points spanning at least 15 dB.
pub fn slope_estimate(points: &[(f64, f64)]) -> Result<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 4 || pts[pts.len() - 1].0 - pts[0].0 < 15.0 {
        return Err(Error::Domain("slope estimate needs ≥ 4 points spanning ≥ 15 dB".into()));
    }
    Ok(ls_slope(&pts[pts.len() / 2..]))
}

/// Convenience: (snr_db, sdr_db) pairs from simulation results.
pub fn sdr_points(results: &[SimResult]) -> Vec<(f64, f64)> {
    results.iter().map(|r| (r.snr_db, r.sdr_db)).collect()
}
