//! Per-SNR minimisation of the modelled distortion ε̄_a² + ε̄_ch² over (Δ, α₁, α₂)
//! subject to the channel power constraint P ≤ Pmax.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::stream_rng;
use crate::distortion::db;
use crate::error::{Error, Result};
use crate::mappings::{build, Extras, Mapping, MappingConfig, MappingKind, MappingParams, DEFAULT_ETA};

/// Box bounds of the free parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub delta: (f64, f64),
    pub alpha: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self { delta: (0.01, 3.0), alpha: (0.01, 50.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptProblem {
    pub kind: MappingKind,
    /// Fixed mapping-specific parameters (Helicoid R, MS-CDS shape, SnaSu phase).
    pub extras: Extras,
    pub eta: f64,
    pub sigma_x: f64,
    pub p_max: f64,
    pub bounds: Bounds,
    pub starts: usize,
    pub seed: u64,
}

impl OptProblem {
    pub fn new(kind: MappingKind) -> Self {
        Self {
            kind,
            extras: Extras::default(),
            eta: DEFAULT_ETA,
            sigma_x: 1.0,
            p_max: 1.0,
            bounds: Bounds::default(),
            starts: 16,
            seed: 0x0_5EED,
        }
    }

    fn params(&self, x: [f64; 3]) -> MappingParams {
        MappingParams { delta: x[0], alpha1: x[1], alpha2: x[2], eta: self.eta, extras: self.extras }
    }

    pub fn mapping(&self, x: [f64; 3]) -> Result<Box<dyn Mapping>> {
        build(&MappingConfig { name: self.kind, params: self.params(x) }, self.sigma_x)
    }

    fn lo(&self) -> [f64; 3] {
        [self.bounds.delta.0, self.bounds.alpha.0, self.bounds.alpha.0]
    }

    fn hi(&self) -> [f64; 3] {
        [self.bounds.delta.1, self.bounds.alpha.1, self.bounds.alpha.1]
    }

    /// (distortion, power) at x; errors (e.g. out-of-range fits) map to +∞.
    fn eval(&self, x: [f64; 3], sigma_n2: f64) -> (f64, f64) {
        let Ok(m) = self.mapping(x) else { return (f64::INFINITY, f64::INFINITY) };
        let d = m.approximation_distortion().and_then(|a| m.weak_channel_closed_form(sigma_n2).map(|w| a + w));
        match (d, m.power()) {
            (Ok(d), Ok(p)) if d.is_finite() && p.is_finite() => (d, p),
            _ => (f64::INFINITY, f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub kind: MappingKind,
    pub snr_db: f64,
    pub params: MappingParams,
    pub d_total: f64,
    pub eps_approx: f64,
    pub eps_ch_weak: f64,
    pub power: f64,
    /// Lagrange multiplier of the power constraint.
    pub lambda: f64,
    /// Scaled stationarity residual ‖∇D + λ∇P‖/(‖∇D‖ + λ‖∇P‖) over free coordinates.
    pub kkt_residual: f64,
    pub active_constraint: bool,
    /// Modelled SDR, σx²/D.
    pub sdr_db: f64,
}

/// Minimal Nelder–Mead simplex minimiser.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = simplex[1..].iter().map(|v| dist(v, &simplex[0])).fold(0.0, f64::max);
        if spread <= ftol * (vals[0].abs() + 1e-300) && size < 1e-10 {
            break;
        }
        if size < 1e-13 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty simplex");
    (simplex[best].clone(), vals[best])
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

struct Solver<'a> {
    prob: &'a OptProblem,
    sigma_n2: f64,
}

impl Solver<'_> {
    fn to_x(&self, y: &[f64]) -> [f64; 3] {
        let (lo, hi) = (self.prob.lo(), self.prob.hi());
        [0, 1, 2].map(|i| y[i].exp().clamp(lo[i], hi[i]))
    }

    fn penalised(&self, y: &[f64], mu: f64) -> f64 {
        let (d, p) = self.prob.eval(self.to_x(y), self.sigma_n2);
        let v = (p / self.prob.p_max - 1.0).max(0.0);
        if d.is_finite() {
            d + mu * v * v
        } else {
            1e300
        }
    }

    fn violation(&self, x: [f64; 3]) -> f64 {
        (self.prob.eval(x, self.sigma_n2).1 / self.prob.p_max - 1.0).max(0.0)
    }

    /// α₁ putting the power exactly on the budget for given (Δ, α₂); None when no α₁
    /// in the bounds reaches it (the power decreases monotonically in α₁).
    fn boundary_alpha1(&self, delta: f64, alpha2: f64) -> Option<f64> {
        let (lo, hi) = self.prob.bounds.alpha;
        let p = |a1: f64| self.prob.eval([delta, a1, alpha2], self.sigma_n2).1 - self.prob.p_max;
        if !(p(hi) <= 0.0) || p(lo) <= 0.0 {
            return None;
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if p(m.exp()) > 0.0 {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        Some(b.exp())
    }

    fn reduced(&self, y: &[f64]) -> (f64, Option<[f64; 3]>) {
        let (lo, hi) = (self.prob.lo(), self.prob.hi());
        let delta = y[0].exp().clamp(lo[0], hi[0]);
        let a2 = y[1].exp().clamp(lo[2], hi[2]);
        match self.boundary_alpha1(delta, a2) {
            Some(a1) => {
                let x = [delta, a1, a2];
                (self.prob.eval(x, self.sigma_n2).0, Some(x))
            }
            None => (1e300, None),
        }
    }

    /// Penalty rounds (μ ×10 until the violation is below 1e-8) from one start.
    fn local(&self, y0: [f64; 3]) -> [f64; 3] {
        let mut y = y0.to_vec();
        let mut mu = 10.0;
        for _ in 0..14 {
            let (yn, _) = nelder_mead(|v| self.penalised(v, mu), &y, 0.3, 3000, 1e-14);
            y = yn;
            if self.violation(self.to_x(&y)) < 1e-8 {
                break;
            }
            mu *= 10.0;
        }
        self.to_x(&y)
    }

    /// Boundary polish on P = Pmax (α₁ eliminated), or a barrier refinement when
    /// the constraint is inactive.
    fn polish(&self, x: [f64; 3]) -> [f64; 3] {
        let (_, p) = self.prob.eval(x, self.sigma_n2);
        let mut best = x;
        let mut best_d = if self.violation(x) <= 1e-12 { self.prob.eval(x, self.sigma_n2).0 } else { f64::INFINITY };
        if p >= self.prob.p_max * (1.0 - 1e-4) || !best_d.is_finite() {
            let mut y = vec![x[0].ln(), x[2].ln()];
            for step in [0.1, 0.01, 0.001] {
                y = nelder_mead(|v| self.reduced(v).0, &y, step, 4000, 1e-15).0;
            }
            if let (d, Some(xb)) = self.reduced(&y) {
                if d < best_d {
                    best = xb;
                    best_d = d;
                }
            }
        }
        let barrier = |v: &[f64]| {
            let xv = self.to_x(v);
            if self.violation(xv) > 0.0 {
                1e300
            } else {
                self.prob.eval(xv, self.sigma_n2).0
            }
        };
        if best_d.is_finite() {
            let y: Vec<f64> = best.iter().map(|v| v.ln()).collect();
            let (yn, d) = nelder_mead(barrier, &y, 0.01, 4000, 1e-15);
            if d < best_d {
                best = self.to_x(&yn);
            }
        }
        best
    }

    fn grad(&self, x: [f64; 3], which: usize) -> [f64; 3] {
        [0, 1, 2].map(|i| {
            let h = 1e-6 * x[i];
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            let fa = self.prob.eval(a, self.sigma_n2);
            let fb = self.prob.eval(b, self.sigma_n2);
            let (va, vb) = if which == 0 { (fa.0, fb.0) } else { (fa.1, fb.1) };
            (va - vb) / (2.0 * h)
        })
    }

    fn result(&self, x: [f64; 3], snr_db: f64) -> Result<OptResult> {
        let m = self.prob.mapping(x)?;
        let eps_approx = m.approximation_distortion()?;
        let eps_ch_weak = m.weak_channel_closed_form(self.sigma_n2)?;
        let power = m.power()?;
        let active = power >= self.prob.p_max * (1.0 - 1e-6);
        let gd = self.grad(x, 0);
        let gp = self.grad(x, 1);
        let (lo, hi) = (self.prob.lo(), self.prob.hi());
        // Coordinates pinned at a box bound with the gradient pushing outwards carry
        // their own multiplier and are excluded from the stationarity check.
        let free: Vec<usize> = (0..3)
            .filter(|&i| {
                let at_lo = x[i] <= lo[i] * (1.0 + 1e-9);
                let at_hi = x[i] >= hi[i] * (1.0 - 1e-9);
                !(at_lo && gd[i] > 0.0 || at_hi && gd[i] < 0.0)
            })
            .collect();
        let dot = |a: &[f64; 3], b: &[f64; 3]| free.iter().map(|&i| a[i] * b[i]).sum::<f64>();
        let lambda = if active && dot(&gp, &gp) > 0.0 { (-dot(&gd, &gp) / dot(&gp, &gp)).max(0.0) } else { 0.0 };
        let res: f64 = free.iter().map(|&i| (gd[i] + lambda * gp[i]).powi(2)).sum::<f64>().sqrt();
        let scale = dot(&gd, &gd).sqrt() + lambda * dot(&gp, &gp).sqrt();
        let d_total = eps_approx + eps_ch_weak;
        Ok(OptResult {
            kind: self.prob.kind,
            snr_db,
            params: self.prob.params(x),
            d_total,
            eps_approx,
            eps_ch_weak,
            power,
            lambda,
            kkt_residual: if scale > 0.0 { res / scale } else { 0.0 },
            active_constraint: active,
            sdr_db: db(self.prob.sigma_x.powi(2) / d_total),
        })
    }
}

/// Latin-hypercube starting points in log-parameter space.
fn lhs_starts(prob: &OptProblem) -> Vec<[f64; 3]> {
    let n = prob.starts.max(1);
    let mut rng = stream_rng(prob.seed, 0);
    let (lo, hi) = (prob.lo(), prob.hi());
    let cols: Vec<Vec<usize>> = (0..3)
        .map(|_| {
            let mut v: Vec<usize> = (0..n).collect();
            v.shuffle(&mut rng);
            v
        })
        .collect();
    (0..n)
        .map(|k| {
            [0, 1, 2].map(|i| {
                let s = (cols[i][k] as f64 + rng.gen::<f64>()) / n as f64;
                (lo[i].ln() + s * (hi[i].ln() - lo[i].ln())).exp()
            })
        })
        .collect()
}

fn fixed_bpam(prob: &OptProblem, snr_db: f64) -> Result<OptResult> {
    let g = prob.p_max.sqrt() / prob.sigma_x;
    let solver = Solver { prob, sigma_n2: prob.p_max / 10f64.powf(snr_db / 10.0) };
    let mut r = solver.result([1.0, g, g], snr_db)?;
    r.lambda = 0.0;
    r.kkt_residual = 0.0;
    Ok(r)
}

fn optimize_from(prob: &OptProblem, snr_db: f64, extra: Option<[f64; 3]>) -> Result<OptResult> {
    if !(0.0..=60.0).contains(&snr_db) {
        return Err(Error::Domain(format!("snr_db must lie in [0, 60] (got {snr_db})")));
    }
    if !(prob.p_max > 0.0 && prob.sigma_x > 0.0) {
        return Err(Error::Config("p_max and sigma_x must be positive".into()));
    }
    match prob.kind {
        MappingKind::Bpam => return fixed_bpam(prob, snr_db),
        MappingKind::HelicoidArclength => {
            return Err(Error::Unsupported("the arc-length helicoid has no distortion model".into()))
        }
        _ => {}
    }
    let solver = Solver { prob, sigma_n2: prob.p_max / 10f64.powf(snr_db / 10.0) };
    let mut starts = lhs_starts(prob);
    starts.extend(extra);
    let candidates: Vec<([f64; 3], f64)> = starts
        .par_iter()
        .map(|&s| {
            let x = solver.polish(solver.local(s.map(f64::ln)));
            let (d, _) = prob.eval(x, solver.sigma_n2);
            let feasible = solver.violation(x) <= 1e-12;
            (x, if feasible { d } else { f64::INFINITY })
        })
        .collect();
    let best = candidates
        .into_iter()
        .filter(|c| c.1.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)))
        .ok_or_else(|| Error::Infeasible(format!("no feasible start for {} at {snr_db} dB", prob.kind)))?;
    solver.result(best.0, snr_db)
}

/// Multi-start constrained minimisation at one SNR.
pub fn optimize(prob: &OptProblem, snr_db: f64) -> Result<OptResult> {
    optimize_from(prob, snr_db, None)
}

#[derive(Debug)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub result: Result<OptResult>,
}

/// Warm-started sweep: each SNR adds the previous optimum to its starting set.
/// Failures are recorded per point and the sweep continues.
pub fn sweep(prob: &OptProblem, snrs: &[f64]) -> Vec<SweepPoint> {
    let mut prev: Option<[f64; 3]> = None;
    snrs.iter()
        .map(|&s| {
            let result = optimize_from(prob, s, prev);
            if let Ok(r) = &result {
                prev = Some([r.params.delta, r.params.alpha1, r.params.alpha2]);
            }
            SweepPoint { snr_db: s, result }
        })
        .collect()
}
