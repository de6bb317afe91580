//! Curves in ℝᴺ: Frenet apparatus, arc length, osculating sphere and canal (tube) tests.

use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, GaussLegendre, Pchip};

/// Curvature below which the principal normal and binormal are undefined.
pub const DEGENERATE_KAPPA: f64 = 1e-12;

const ARC_TOL: f64 = 1e-10;
const TABLE_POINTS: usize = 2048;

pub(crate) fn step1(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}
pub(crate) fn step2(x: f64) -> f64 {
    1e-4 * x.abs().max(1.0)
}
pub(crate) fn step3(x: f64) -> f64 {
    1e-3 * x.abs().max(1.0)
}

/// Central first difference.
pub fn fd1<F: Fn(f64) -> DVector<f64>>(f: F, x: f64) -> DVector<f64> {
    let h = step1(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central second difference.
pub fn fd2<F: Fn(f64) -> DVector<f64>>(f: F, x: f64) -> DVector<f64> {
    let h = step2(x);
    (f(x + h) - f(x) * 2.0 + f(x - h)) / (h * h)
}

/// Central third difference.
pub fn fd3<F: Fn(f64) -> DVector<f64>>(f: F, x: f64) -> DVector<f64> {
    let h = step3(x);
    (f(x + 2.0 * h) - f(x + h) * 2.0 + f(x - h) * 2.0 - f(x - 2.0 * h)) / (2.0 * h * h * h)
}

/// A map ℝ → ℝᴺ on a closed parameter interval.
///
/// Derivatives default to central finite differences; implementors with closed forms
/// should override them.
pub trait ParametricCurve: Sync {
    fn dim(&self) -> usize;
    fn domain(&self) -> (f64, f64);
    fn eval(&self, x: f64) -> DVector<f64>;
    fn d1(&self, x: f64) -> DVector<f64> {
        fd1(|t| self.eval(t), x)
    }
    fn d2(&self, x: f64) -> DVector<f64> {
        fd2(|t| self.eval(t), x)
    }
    fn d3(&self, x: f64) -> DVector<f64> {
        fd3(|t| self.eval(t), x)
    }
}

impl<C: ParametricCurve + ?Sized> ParametricCurve for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn eval(&self, x: f64) -> DVector<f64> {
        (**self).eval(x)
    }
    fn d1(&self, x: f64) -> DVector<f64> {
        (**self).d1(x)
    }
    fn d2(&self, x: f64) -> DVector<f64> {
        (**self).d2(x)
    }
    fn d3(&self, x: f64) -> DVector<f64> {
        (**self).d3(x)
    }
}

type VecFn = Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Curve built from closures; derivatives without closures fall back to finite differences.
pub struct FnCurve {
    dim: usize,
    domain: (f64, f64),
    f: VecFn,
    derivs: [Option<VecFn>; 3],
}

impl FnCurve {
    pub fn new<F>(dim: usize, domain: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self { dim, domain, f: Box::new(f), derivs: [None, None, None] }
    }

    /// Supplies the analytical derivative of order `order` (1, 2 or 3).
    pub fn with_derivative<F>(mut self, order: usize, f: F) -> Self
    where
        F: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        assert!((1..=3).contains(&order));
        self.derivs[order - 1] = Some(Box::new(f));
        self
    }

    /// Straight line `p + x·d`.
    pub fn line(p: &[f64], d: &[f64], domain: (f64, f64)) -> Self {
        let p = DVector::from_column_slice(p);
        let d = DVector::from_column_slice(d);
        let n = p.len();
        let (p1, d1) = (p.clone(), d.clone());
        Self::new(n, domain, move |x| &p1 + &d1 * x)
            .with_derivative(1, move |_| d.clone())
            .with_derivative(2, move |_| DVector::zeros(n))
            .with_derivative(3, move |_| DVector::zeros(n))
    }

    /// Plane circle of radius `r` about the origin.
    pub fn circle(r: f64, domain: (f64, f64)) -> Self {
        Self::new(2, domain, move |x| DVector::from_vec(vec![r * x.cos(), r * x.sin()]))
            .with_derivative(1, move |x| DVector::from_vec(vec![-r * x.sin(), r * x.cos()]))
            .with_derivative(2, move |x| DVector::from_vec(vec![-r * x.cos(), -r * x.sin()]))
            .with_derivative(3, move |x| DVector::from_vec(vec![r * x.sin(), -r * x.cos()]))
    }

    /// Circular helix `(r cos x, r sin x, h x)`.
    pub fn helix(r: f64, h: f64, domain: (f64, f64)) -> Self {
        Self::new(3, domain, move |x| DVector::from_vec(vec![r * x.cos(), r * x.sin(), h * x]))
            .with_derivative(1, move |x| DVector::from_vec(vec![-r * x.sin(), r * x.cos(), h]))
            .with_derivative(2, move |x| DVector::from_vec(vec![-r * x.cos(), -r * x.sin(), 0.0]))
            .with_derivative(3, move |x| DVector::from_vec(vec![r * x.sin(), -r * x.cos(), 0.0]))
    }
}

impl ParametricCurve for FnCurve {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn eval(&self, x: f64) -> DVector<f64> {
        (self.f)(x)
    }
    fn d1(&self, x: f64) -> DVector<f64> {
        match &self.derivs[0] {
            Some(d) => d(x),
            None => fd1(|t| self.eval(t), x),
        }
    }
    fn d2(&self, x: f64) -> DVector<f64> {
        match &self.derivs[1] {
            Some(d) => d(x),
            None => fd2(|t| self.eval(t), x),
        }
    }
    fn d3(&self, x: f64) -> DVector<f64> {
        match &self.derivs[2] {
            Some(d) => d(x),
            None => fd3(|t| self.eval(t), x),
        }
    }
}

/// Forces finite-difference derivatives on any curve (used as an oracle).
pub struct FiniteDiffCurve<C>(pub C);

impl<C: ParametricCurve> ParametricCurve for FiniteDiffCurve<C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn domain(&self) -> (f64, f64) {
        self.0.domain()
    }
    fn eval(&self, x: f64) -> DVector<f64> {
        self.0.eval(x)
    }
}

fn check_in_domain<C: ParametricCurve + ?Sized>(curve: &C, x: f64) -> Result<()> {
    let (lo, hi) = curve.domain();
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if !x.is_finite() || x < lo - slack || x > hi + slack {
        return Err(Error::Domain(format!("parameter {x} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// Signed arc length ∫‖S′‖ from `x0` to `x1` (adaptive Simpson, absolute tolerance 1e-10).
pub fn arc_length<C: ParametricCurve + ?Sized>(curve: &C, x0: f64, x1: f64) -> Result<f64> {
    check_in_domain(curve, x0)?;
    check_in_domain(curve, x1)?;
    let v = adaptive_simpson(|x| curve.d1(x).norm(), x0, x1, ARC_TOL);
    if !v.is_finite() {
        return Err(Error::Domain(format!("non-finite speed on [{x0}, {x1}]")));
    }
    Ok(v)
}

/// Curve re-parametrised by arc length: `y(ℓ) = S(x(ℓ))`, ‖y′‖ ≡ 1.
pub struct ArcLengthCurve<C> {
    base: C,
    xs: Vec<f64>,
    ls: Vec<f64>,
    inverse: Pchip,
    gl: GaussLegendre,
}

/// Builds the arc-length parametrisation from a cumulative-length table with a monotone
/// cubic inverse refined by Newton steps.
pub fn reparametrize_by_arc_length<C: ParametricCurve>(curve: C) -> Result<ArcLengthCurve<C>> {
    let (lo, hi) = curve.domain();
    if !(hi > lo) {
        return Err(Error::Domain(format!("empty domain [{lo}, {hi}]")));
    }
    let gl = GaussLegendre::new(5);
    let n = TABLE_POINTS;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let speed = |x: f64| curve.d1(x).norm();
    let mut ls = Vec::with_capacity(n);
    ls.push(0.0);
    for w in xs.windows(2) {
        for x in [w[0], 0.5 * (w[0] + w[1])] {
            let s = speed(x);
            if !(s > 1e-12) || !s.is_finite() {
                return Err(Error::Singular(format!("speed {s:e} at x = {x}")));
            }
        }
        let seg = gl.integrate(speed, w[0], w[1]);
        ls.push(ls.last().copied().unwrap_or(0.0) + seg);
    }
    let s_end = speed(hi);
    if !(s_end > 1e-12) {
        return Err(Error::Singular(format!("speed {s_end:e} at x = {hi}")));
    }
    let inverse = Pchip::new(ls.clone(), xs.clone());
    Ok(ArcLengthCurve { base: curve, xs, ls, inverse, gl })
}

impl<C: ParametricCurve> ArcLengthCurve<C> {
    pub fn total_length(&self) -> f64 {
        *self.ls.last().unwrap_or(&0.0)
    }

    pub fn base(&self) -> &C {
        &self.base
    }

    /// Original parameter x(ℓ).
    pub fn parameter_at(&self, ell: f64) -> f64 {
        let n = self.ls.len();
        let mut x = self.inverse.eval(ell);
        let (lo, hi) = self.base.domain();
        for _ in 0..2 {
            let i = match self.xs.partition_point(|&xi| xi <= x) {
                0 => 0,
                k if k >= n => n - 2,
                k => k - 1,
            };
            let len = self.ls[i] + self.gl.integrate(|t| self.base.d1(t).norm(), self.xs[i], x);
            let s = self.base.d1(x).norm();
            x -= (len - ell) / s;
            x = x.clamp(lo - (hi - lo), hi + (hi - lo));
        }
        x
    }
}

impl<C: ParametricCurve> ParametricCurve for ArcLengthCurve<C> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, self.total_length())
    }
    fn eval(&self, ell: f64) -> DVector<f64> {
        self.base.eval(self.parameter_at(ell))
    }
    fn d1(&self, ell: f64) -> DVector<f64> {
        let d = self.base.d1(self.parameter_at(ell));
        let s = d.norm();
        d / s
    }
    fn d2(&self, ell: f64) -> DVector<f64> {
        let x = self.parameter_at(ell);
        let d1 = self.base.d1(x);
        let d2 = self.base.d2(x);
        let s2 = d1.norm_squared();
        let t = &d1 / s2.sqrt();
        (&d2 - &t * d2.dot(&t)) / s2
    }
    fn d3(&self, ell: f64) -> DVector<f64> {
        let h = step2(ell);
        (self.d2(ell + h) - self.d2(ell - h)) / (2.0 * h)
    }
}

/// Unit tangent t(x) of a curve, itself viewed as a curve (generator of a tangent surface).
pub struct UnitTangent<C>(pub C);

impl<C: ParametricCurve> ParametricCurve for UnitTangent<C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn domain(&self) -> (f64, f64) {
        self.0.domain()
    }
    fn eval(&self, x: f64) -> DVector<f64> {
        let d = self.0.d1(x);
        let n = d.norm();
        d / n
    }
    fn d1(&self, x: f64) -> DVector<f64> {
        let d1 = self.0.d1(x);
        let d2 = self.0.d2(x);
        let s = d1.norm();
        let t = &d1 / s;
        (&d2 - &t * d2.dot(&t)) / s
    }
}

/// Unit binormal b(x) of a space curve, viewed as a curve (generator of a binormal surface).
pub struct Binormal<C>(pub C);

impl<C: ParametricCurve> ParametricCurve for Binormal<C> {
    fn dim(&self) -> usize {
        3
    }
    fn domain(&self) -> (f64, f64) {
        self.0.domain()
    }
    fn eval(&self, x: f64) -> DVector<f64> {
        let a = to3(&self.0.d1(x));
        let b = to3(&self.0.d2(x));
        let c = a.cross(&b);
        let n = c.norm();
        DVector::from_column_slice((c / n).as_slice())
    }
}

/// Moving trihedron with curvature and torsion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrenetFrame {
    pub t: Vector3<f64>,
    pub p: Vector3<f64>,
    pub b: Vector3<f64>,
    pub kappa: f64,
    pub tau: f64,
}

pub(crate) fn to3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], if v.len() > 2 { v[2] } else { 0.0 })
}

/// Curvature √(‖S′‖²‖S″‖² − (S′·S″)²)/‖S′‖³ for any ambient dimension.
pub fn curvature<C: ParametricCurve + ?Sized>(curve: &C, x: f64) -> f64 {
    let a = curve.d1(x);
    let b = curve.d2(x);
    let a2 = a.norm_squared();
    let num = (a2 * b.norm_squared() - a.dot(&b).powi(2)).max(0.0).sqrt();
    num / (a2 * a2.sqrt())
}

/// Torsion |S′ S″ S‴| / ‖S′ × S″‖² (zero for plane curves given in ℝ²).
pub fn torsion<C: ParametricCurve + ?Sized>(curve: &C, x: f64) -> Result<f64> {
    match curve.dim() {
        2 => Ok(0.0),
        3 => {
            let a = to3(&curve.d1(x));
            let b = to3(&curve.d2(x));
            let c = to3(&curve.d3(x));
            let cr = a.cross(&b);
            let n2 = cr.norm_squared();
            if n2 == 0.0 {
                return Err(Error::DegenerateFrame { kappa: 0.0 });
            }
            Ok(cr.dot(&c) / n2)
        }
        n => Err(Error::Unsupported(format!("Frenet frame in dimension {n}"))),
    }
}

/// Frenet frame at `x` for curves in ℝ² (embedded in the plane z = 0) or ℝ³.
pub fn frenet<C: ParametricCurve + ?Sized>(curve: &C, x: f64) -> Result<FrenetFrame> {
    let dim = curve.dim();
    if dim != 2 && dim != 3 {
        return Err(Error::Unsupported(format!("Frenet frame in dimension {dim}")));
    }
    let kappa = curvature(curve, x);
    if !(kappa >= DEGENERATE_KAPPA) {
        return Err(Error::DegenerateFrame { kappa });
    }
    let a = to3(&curve.d1(x));
    let bb = to3(&curve.d2(x));
    let t = a.normalize();
    let p = (bb - t * bb.dot(&t)).normalize();
    let b = t.cross(&p);
    let tau = torsion(curve, x)?;
    Ok(FrenetFrame { t, p, b, kappa, tau })
}

/// Canonical local representation `[ℓ, κ₀ℓ²/2, κ₀τ₀ℓ³/6]` in the Frenet frame.
pub fn canonical_form(kappa0: f64, tau0: f64, ell: f64) -> Vector3<f64> {
    Vector3::new(ell, 0.5 * kappa0 * ell * ell, kappa0 * tau0 * ell.powi(3) / 6.0)
}

/// Osculating sphere (or circle when the torsion vanishes).
#[derive(Clone, Copy, Debug)]
pub struct OsculatingSphere {
    pub center: Vector3<f64>,
    pub radius: f64,
    /// Set when τ ≈ 0 but ρ̇ ≠ 0, so the sphere is replaced by the osculating circle.
    pub circle_fallback: bool,
}

/// Centre `s + ρp + (ρ̇/τ)b`, radius `√(ρ² + (ρ̇/τ)²)`, with ρ̇ = −κ̇/κ² along arc length.
pub fn osculating_sphere<C: ParametricCurve + ?Sized>(curve: &C, x: f64) -> Result<OsculatingSphere> {
    let fr = frenet(curve, x)?;
    let s = to3(&curve.eval(x));
    let rho = 1.0 / fr.kappa;
    let h = step3(x);
    let kdot = (curvature(curve, x + h) - curvature(curve, x - h)) / (2.0 * h) / curve.d1(x).norm();
    let rho_dot = -kdot / (fr.kappa * fr.kappa);
    if fr.tau.abs() < 1e-9 {
        return Ok(OsculatingSphere { center: s + fr.p * rho, radius: rho, circle_fallback: rho_dot.abs() > 1e-6 });
    }
    let q = rho_dot / fr.tau;
    Ok(OsculatingSphere {
        center: s + fr.p * rho + fr.b * q,
        radius: (rho * rho + q * q).sqrt(),
        circle_fallback: false,
    })
}

/// Spine curve with a tube of constant radius.
pub struct CanalSurfaceSpec<C> {
    pub spine: C,
    pub tube_radius: f64,
}

impl<C: ParametricCurve> CanalSurfaceSpec<C> {
    pub fn new(spine: C, tube_radius: f64) -> Result<Self> {
        if !(tube_radius > 0.0) {
            return Err(Error::Domain(format!("tube radius {tube_radius} must be positive")));
        }
        let (lo, hi) = spine.domain();
        if !(hi > lo) {
            return Err(Error::Domain("degenerate spine domain".into()));
        }
        Ok(Self { spine, tube_radius })
    }
}

/// Outcome of the tube self-intersection test.
#[derive(Clone, Copy, Debug)]
pub struct CanalReport {
    pub safe: bool,
    /// `min ρ_s − r` (infinite for a straight spine).
    pub worst_margin: f64,
    pub min_radius_of_curvature: f64,
    /// Minimum distance between spine points more than 4r apart in arc length.
    pub min_fold_distance: f64,
}

const FOLD_POINTS: usize = 512;

/// Tube is free of characteristic points and fold overlaps iff min ρ_s > r and the
/// distance between distinct folds is at least 2r.
pub fn canal_self_intersection_test<C: ParametricCurve>(
    spec: &CanalSurfaceSpec<C>,
    samples: usize,
) -> Result<CanalReport> {
    let spine = &spec.spine;
    let r = spec.tube_radius;
    let (lo, hi) = spine.domain();
    let samples = samples.max(2);
    let mut min_rho = f64::INFINITY;
    for i in 0..samples {
        let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let k = curvature(spine, x);
        if k > 0.0 {
            min_rho = min_rho.min(1.0 / k);
        }
    }
    let xs: Vec<f64> = (0..FOLD_POINTS).map(|i| lo + (hi - lo) * i as f64 / (FOLD_POINTS - 1) as f64).collect();
    let pts: Vec<DVector<f64>> = xs.iter().map(|&x| spine.eval(x)).collect();
    let gl = GaussLegendre::new(5);
    let mut ell = vec![0.0; FOLD_POINTS];
    for i in 1..FOLD_POINTS {
        ell[i] = ell[i - 1] + gl.integrate(|t| spine.d1(t).norm(), xs[i - 1], xs[i]);
    }
    let mut min_fold = f64::INFINITY;
    for i in 0..FOLD_POINTS {
        for j in i + 1..FOLD_POINTS {
            if ell[j] - ell[i] > 4.0 * r {
                min_fold = min_fold.min((&pts[j] - &pts[i]).norm());
            }
        }
    }
    Ok(CanalReport {
        safe: min_rho > r && min_fold >= 2.0 * r,
        worst_margin: min_rho - r,
        min_radius_of_curvature: min_rho,
        min_fold_distance: min_fold,
    })
}

/// Tube radius at which the canal test switches from safe to unsafe, by bisection
/// on `[lo, hi]` (safe at `lo`, unsafe at `hi`) down to `tol`.
pub fn canal_critical_radius<C: ParametricCurve>(spine: &C, samples: usize, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let safe = |r: f64| canal_self_intersection_test(&CanalSurfaceSpec::new(spine, r)?, samples).map(|c| c.safe);
    if !(tol > 0.0) || !(hi > lo) {
        return Err(Error::Domain(format!("bad bisection bracket [{lo}, {hi}] / tol {tol}")));
    }
    if !safe(lo)? || safe(hi)? {
        return Err(Error::Domain(format!("[{lo}, {hi}] does not bracket the safe/unsafe transition")));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if safe(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Noise-sphere radius `√((N−1)/N · b_n σ_n²)`.
pub fn noise_tube_radius(sigma_n: f64, n: usize, b_n: f64) -> f64 {
    let nf = n as f64;
    ((nf - 1.0) / nf * b_n * sigma_n * sigma_n).sqrt()
}
