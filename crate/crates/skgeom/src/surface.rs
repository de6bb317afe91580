//! Two-parameter surfaces: fundamental forms, curvature, Christoffel symbols and
//! classification predicates.

use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::curve::{to3, ParametricCurve};
use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Axis-aligned parameter rectangle `[lo₀, hi₀] × [lo₁, hi₁]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, u: Vec2) -> bool {
        (0..2).all(|i| u[i] >= self.lo[i] && u[i] <= self.hi[i])
    }

    pub fn clamp(&self, u: Vec2) -> Vec2 {
        Vec2::new(u[0].clamp(self.lo[0], self.hi[0]), u[1].clamp(self.lo[1], self.hi[1]))
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Centre of cell `(i, j)` of an `n₀ × n₁` partition.
    pub fn cell_center(&self, i: usize, j: usize, n0: usize, n1: usize) -> Vec2 {
        Vec2::new(
            self.lo[0] + self.width(0) * (i as f64 + 0.5) / n0 as f64,
            self.lo[1] + self.width(1) * (j as f64 + 0.5) / n1 as f64,
        )
    }
}

/// Point and partial derivatives up to second order.
#[derive(Clone, Copy, Debug)]
pub struct Partials {
    pub s: Vec3,
    pub s1: Vec3,
    pub s2: Vec3,
    pub s11: Vec3,
    pub s12: Vec3,
    pub s22: Vec3,
}

impl Partials {
    pub fn second(&self, a: usize, b: usize) -> Vec3 {
        match (a, b) {
            (0, 0) => self.s11,
            (1, 1) => self.s22,
            _ => self.s12,
        }
    }

    pub fn first(&self, a: usize) -> Vec3 {
        if a == 0 {
            self.s1
        } else {
            self.s2
        }
    }
}

/// A map S(u¹, u²) into ℝ³. Partials default to central finite differences.
pub trait ParametricSurface: Sync {
    fn point(&self, u: Vec2) -> Vec3;
    fn domain(&self) -> Rect;
    fn partials(&self, u: Vec2) -> Partials {
        fd_partials(self, u)
    }
}

impl<S: ParametricSurface + ?Sized> ParametricSurface for &S {
    fn point(&self, u: Vec2) -> Vec3 {
        (**self).point(u)
    }
    fn domain(&self) -> Rect {
        (**self).domain()
    }
    fn partials(&self, u: Vec2) -> Partials {
        (**self).partials(u)
    }
}

impl<S: ParametricSurface + ?Sized> ParametricSurface for Box<S> {
    fn point(&self, u: Vec2) -> Vec3 {
        (**self).point(u)
    }
    fn domain(&self) -> Rect {
        (**self).domain()
    }
    fn partials(&self, u: Vec2) -> Partials {
        (**self).partials(u)
    }
}

/// Finite-difference partials: step 1e-6 (first) and 1e-4 (second), scaled by |u|.
pub fn fd_partials<S: ParametricSurface + ?Sized>(s: &S, u: Vec2) -> Partials {
    let f = |a: f64, b: f64| s.point(Vec2::new(a, b));
    let (x, y) = (u[0], u[1]);
    let h1 = [1e-6 * x.abs().max(1.0), 1e-6 * y.abs().max(1.0)];
    let h2 = [1e-4 * x.abs().max(1.0), 1e-4 * y.abs().max(1.0)];
    let c = f(x, y);
    Partials {
        s: c,
        s1: (f(x + h1[0], y) - f(x - h1[0], y)) / (2.0 * h1[0]),
        s2: (f(x, y + h1[1]) - f(x, y - h1[1])) / (2.0 * h1[1]),
        s11: (f(x + h2[0], y) - 2.0 * c + f(x - h2[0], y)) / (h2[0] * h2[0]),
        s22: (f(x, y + h2[1]) - 2.0 * c + f(x, y - h2[1])) / (h2[1] * h2[1]),
        s12: (f(x + h2[0], y + h2[1]) - f(x + h2[0], y - h2[1]) - f(x - h2[0], y + h2[1]) + f(x - h2[0], y - h2[1]))
            / (4.0 * h2[0] * h2[1]),
    }
}

/// Wrapper that ignores analytical partials and uses finite differences (test oracle).
pub struct FiniteDiff<S>(pub S);

impl<S: ParametricSurface> ParametricSurface for FiniteDiff<S> {
    fn point(&self, u: Vec2) -> Vec3 {
        self.0.point(u)
    }
    fn domain(&self) -> Rect {
        self.0.domain()
    }
}

/// First and (when available) second fundamental form at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalForms {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
    /// det of the metric.
    pub g: f64,
    /// det of the second fundamental form.
    pub b: f64,
    /// Contravariant metric g^αβ.
    pub ginv: Matrix2<f64>,
    /// False when only the metric part is populated.
    pub has_sff: bool,
}

impl FundamentalForms {
    fn from_parts(g: Matrix2<f64>, b: Option<Matrix2<f64>>) -> Result<Self> {
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(0, 1)];
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Singular(format!("metric determinant {det:e}")));
        }
        let ginv = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(0, 1)], g[(0, 0)]) / det;
        let bm = b.unwrap_or_else(Matrix2::zeros);
        Ok(Self {
            g11: g[(0, 0)],
            g12: g[(0, 1)],
            g22: g[(1, 1)],
            b11: bm[(0, 0)],
            b12: bm[(0, 1)],
            b22: bm[(1, 1)],
            g: det,
            b: bm[(0, 0)] * bm[(1, 1)] - bm[(0, 1)] * bm[(0, 1)],
            ginv,
            has_sff: b.is_some(),
        })
    }

    pub fn metric(&self) -> Matrix2<f64> {
        Matrix2::new(self.g11, self.g12, self.g12, self.g22)
    }

    pub fn sff(&self) -> Matrix2<f64> {
        Matrix2::new(self.b11, self.b12, self.b12, self.b22)
    }

    /// Gaussian curvature b/g.
    pub fn gaussian_curvature(&self) -> f64 {
        self.b / self.g
    }

    /// Mean curvature ½ b_αβ g^αβ.
    pub fn mean_curvature(&self) -> f64 {
        0.5 * (self.sff() * self.ginv).trace()
    }
}

const RANK_TOL: f64 = 1e-10;

/// Metric tensor G = JᵀJ for a Jacobian with two columns in ℝᴺ.
pub fn metric_from_jacobian(jac: &DMatrix<f64>) -> Result<FundamentalForms> {
    if jac.ncols() != 2 {
        return Err(Error::Unsupported(format!("{} parameters (expected 2)", jac.ncols())));
    }
    let g = jac.transpose() * jac;
    FundamentalForms::from_parts(Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]), None)
}

fn metric_of(p: &Partials) -> Result<Matrix2<f64>> {
    if !(p.s1.cross(&p.s2).norm() > RANK_TOL) {
        return Err(Error::Singular("Jacobian rank below 2".into()));
    }
    let g12 = p.s1.dot(&p.s2);
    Ok(Matrix2::new(p.s1.norm_squared(), g12, g12, p.s2.norm_squared()))
}

/// First fundamental form g_αβ = S_α·S_β (SFF fields left at zero).
pub fn metric_tensor<S: ParametricSurface + ?Sized>(surface: &S, u: Vec2) -> Result<FundamentalForms> {
    FundamentalForms::from_parts(metric_of(&surface.partials(u))?, None)
}

/// Unit normal n = S₁ × S₂ / ‖S₁ × S₂‖.
pub fn unit_normal(p: &Partials) -> Vec3 {
    p.s1.cross(&p.s2).normalize()
}

/// Both fundamental forms, b_αβ = |S₁ S₂ S_αβ| / √g.
pub fn forms_from_partials(p: &Partials) -> Result<FundamentalForms> {
    let g = metric_of(p)?;
    let n = unit_normal(p);
    let b12 = n.dot(&p.s12);
    let b = Matrix2::new(n.dot(&p.s11), b12, b12, n.dot(&p.s22));
    FundamentalForms::from_parts(g, Some(b))
}

/// Both fundamental forms at `u`.
pub fn second_fundamental_form<S: ParametricSurface + ?Sized>(surface: &S, u: Vec2) -> Result<FundamentalForms> {
    forms_from_partials(&surface.partials(u))
}

/// Principal curvatures, Gaussian/mean curvature and principal directions.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureReport {
    /// Root of larger magnitude.
    pub kappa1: f64,
    pub kappa2: f64,
    pub gaussian: f64,
    pub mean: f64,
    /// Parameter-space directions normalised so that dᵀ G d = 1.
    pub principal_dirs: [Vec2; 2],
    pub is_umbilic: bool,
}

/// Roots of κ² − b_αβ g^αβ κ + b/g = 0 with principal directions from the null space of b − κg.
pub fn principal_curvatures(forms: &FundamentalForms) -> Result<CurvatureReport> {
    if !forms.has_sff {
        return Err(Error::Unsupported("second fundamental form not available".into()));
    }
    let h = forms.mean_curvature();
    let k = forms.gaussian_curvature();
    let mut disc = h * h - k;
    if disc < 0.0 {
        if disc < -1e-12 * (1.0 + h * h) {
            return Err(Error::Inconsistent(format!("negative discriminant {disc:e}")));
        }
        disc = 0.0;
    }
    let sq = disc.sqrt();
    let (r1, r2) = (h + sq, h - sq);
    let (kappa1, kappa2) = if r1.abs() >= r2.abs() { (r1, r2) } else { (r2, r1) };
    let is_umbilic = (kappa1 - kappa2).abs() < 1e-9 * (1.0 + kappa1.abs());
    let g = forms.metric();
    let normalize = |d: Vec2| d / (d.dot(&(g * d))).sqrt();
    let principal_dirs = if is_umbilic {
        let e1 = normalize(Vec2::new(1.0, 0.0));
        let ge1 = g * e1;
        let e2 = normalize(Vec2::new(-ge1[1], ge1[0]));
        [e1, e2]
    } else {
        let b = forms.sff();
        let dir = |kap: f64| {
            let m = b - g * kap;
            let r0 = Vec2::new(-m[(0, 1)], m[(0, 0)]);
            let r1 = Vec2::new(-m[(1, 1)], m[(1, 0)]);
            normalize(if r0.norm() >= r1.norm() { r0 } else { r1 })
        };
        [dir(kappa1), dir(kappa2)]
    };
    Ok(CurvatureReport { kappa1, kappa2, gaussian: k, mean: h, principal_dirs, is_umbilic })
}

/// κ_n = b_αβ du^α du^β / g_αβ du^α du^β.
pub fn normal_curvature(forms: &FundamentalForms, du: Vec2) -> Result<f64> {
    if du.norm() == 0.0 || !du.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("zero or non-finite direction".into()));
    }
    Ok(du.dot(&(forms.sff() * du)) / du.dot(&(forms.metric() * du)))
}

/// Christoffel symbols of both kinds.
#[derive(Clone, Copy, Debug)]
pub struct Christoffel {
    /// Γ_αβλ indexed `[α][β][λ]`.
    pub first: [[[f64; 2]; 2]; 2],
    /// Γ^γ_αβ indexed `[γ][α][β]`.
    pub second: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    /// Γ^γ_αβ with zero-based indices.
    pub fn gamma(&self, g: usize, a: usize, b: usize) -> f64 {
        self.second[g][a][b]
    }
}

const METRIC_STEP: f64 = 1e-5;

/// Christoffel symbols from a metric callback (intrinsic: no embedding needed).
pub fn christoffel_from_metric<F>(metric: F, u: Vec2) -> Result<Christoffel>
where
    F: Fn(Vec2) -> Result<Matrix2<f64>>,
{
    let g0 = metric(u)?;
    let det = g0.determinant();
    if !(det > 0.0) {
        return Err(Error::Singular(format!("metric determinant {det:e}")));
    }
    let ginv = g0.try_inverse().ok_or_else(|| Error::Singular("metric not invertible".into()))?;
    let mut dg = [Matrix2::zeros(); 2];
    for (k, d) in dg.iter_mut().enumerate() {
        let mut e = Vec2::zeros();
        e[k] = METRIC_STEP * u[k].abs().max(1.0);
        *d = (metric(u + e)? - metric(u - e)?) / (2.0 * e[k]);
    }
    let mut first = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for l in 0..2 {
                first[a][b][l] = 0.5 * (dg[a][(b, l)] + dg[b][(l, a)] - dg[l][(a, b)]);
            }
        }
    }
    let mut second = [[[0.0; 2]; 2]; 2];
    for g in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                second[g][a][b] = (0..2).map(|l| ginv[(g, l)] * first[a][b][l]).sum();
            }
        }
    }
    Ok(Christoffel { first, second })
}

/// Christoffel symbols of a surface (metric from its partials, derivatives by central differences).
pub fn christoffel_symbols<S: ParametricSurface + ?Sized>(surface: &S, u: Vec2) -> Result<Christoffel> {
    christoffel_from_metric(|v| metric_of(&surface.partials(v)), u)
}

/// Geodesic curvatures of the coordinate curves u² = const and u¹ = const.
pub fn coordinate_geodesic_curvatures(forms: &FundamentalForms, ch: &Christoffel) -> [f64; 2] {
    let sg = forms.g.sqrt();
    [sg * ch.gamma(1, 0, 0) / forms.g11.powf(1.5), -sg * ch.gamma(0, 1, 1) / forms.g22.powf(1.5)]
}

/// Sampling grid for classification (cell centres of an `n₀ × n₁` partition).
#[derive(Clone, Copy, Debug)]
pub struct Grid {
    pub n0: usize,
    pub n1: usize,
    /// Sub-rectangle to sample; the surface domain when `None`.
    pub region: Option<Rect>,
}

impl Default for Grid {
    fn default() -> Self {
        Self { n0: 16, n1: 16, region: None }
    }
}

/// Predicate outcomes with their maximal scaled violation over the grid.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClassificationReport {
    pub developable: bool,
    pub minimal: bool,
    pub coords_are_loc: bool,
    pub coords_are_geodesic: bool,
    pub max_developable_violation: f64,
    pub max_minimal_violation: f64,
    pub max_loc_violation: f64,
    pub max_geodesic_violation: f64,
    pub max_abs_gaussian: f64,
    pub max_abs_kappa1: f64,
    pub points: usize,
}

const CLASSIFY_TOL: f64 = 1e-6;

/// Developable/minimal/LoC/geodesic-coordinate predicates on a grid; each predicate holds
/// when its quantity is below 1e-6·(1+|κ₁|) at every grid point.
pub fn classify_surface<S: ParametricSurface + ?Sized>(surface: &S, grid: Grid) -> Result<ClassificationReport> {
    if grid.n0 < 8 || grid.n1 < 8 {
        return Err(Error::Domain("classification grid must be at least 8×8".into()));
    }
    let region = grid.region.unwrap_or_else(|| surface.domain());
    let mut rep = ClassificationReport::default();
    for i in 0..grid.n0 {
        for j in 0..grid.n1 {
            let u = region.cell_center(i, j, grid.n0, grid.n1);
            let f = second_fundamental_form(surface, u)?;
            let c = principal_curvatures(&f)?;
            let ch = christoffel_symbols(surface, u)?;
            let scale = 1.0 + c.kappa1.abs();
            let root = (f.g11 * f.g22).sqrt();
            let kg = coordinate_geodesic_curvatures(&f, &ch);
            let dev = c.kappa2.abs() / scale;
            let min = c.mean.abs() / scale;
            let loc = (f.g12.abs() / root).max(f.b12.abs() / root / scale);
            let geo = kg[0].abs().max(kg[1].abs()) / scale;
            rep.max_developable_violation = rep.max_developable_violation.max(dev);
            rep.max_minimal_violation = rep.max_minimal_violation.max(min);
            rep.max_loc_violation = rep.max_loc_violation.max(loc);
            rep.max_geodesic_violation = rep.max_geodesic_violation.max(geo);
            rep.max_abs_gaussian = rep.max_abs_gaussian.max(c.gaussian.abs());
            rep.max_abs_kappa1 = rep.max_abs_kappa1.max(c.kappa1.abs());
            rep.points += 1;
        }
    }
    rep.developable = rep.max_developable_violation < CLASSIFY_TOL;
    rep.minimal = rep.max_minimal_violation < CLASSIFY_TOL;
    rep.coords_are_loc = rep.max_loc_violation < CLASSIFY_TOL;
    rep.coords_are_geodesic = rep.max_geodesic_violation < CLASSIFY_TOL;
    Ok(rep)
}

/// Ruled surface y(ℓ) + v·z(ℓ) is developable iff |ẏ z ż| = 0 (checked at 256 samples).
pub fn ruled_developable_test<Y, Z>(indicatrix: &Y, generator: &Z) -> bool
where
    Y: ParametricCurve + ?Sized,
    Z: ParametricCurve + ?Sized,
{
    let (lo, hi) = indicatrix.domain();
    let n = 256;
    (0..n).all(|i| {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        let yd = to3(&indicatrix.d1(x));
        let z = to3(&generator.eval(x));
        let zd = to3(&generator.d1(x));
        yd.dot(&z.cross(&zd)).abs() < 1e-8
    })
}

/// Weingarten residual max_α ‖n_α + b_α^β S_β‖ with n_α by central differences.
pub fn weingarten_residual<S: ParametricSurface + ?Sized>(surface: &S, u: Vec2) -> Result<f64> {
    let p = surface.partials(u);
    let f = forms_from_partials(&p)?;
    let mixed = f.sff() * f.ginv; // b_α^β
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        let mut e = Vec2::zeros();
        e[a] = 1e-6 * u[a].abs().max(1.0);
        let np = unit_normal(&surface.partials(u + e));
        let nm = unit_normal(&surface.partials(u - e));
        let na = (np - nm) / (2.0 * e[a]);
        let r = na + p.s1 * mixed[(a, 0)] + p.s2 * mixed[(a, 1)];
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Gauss-formula residual max_αβ ‖S_αβ − Γ^γ_αβ S_γ − b_αβ n‖ with S_αβ by central differences.
pub fn gauss_formula_residual<S: ParametricSurface + ?Sized>(surface: &S, u: Vec2) -> Result<f64> {
    let p = surface.partials(u);
    let fdp = fd_partials(surface, u);
    let f = forms_from_partials(&p)?;
    let ch = christoffel_symbols(surface, u)?;
    let n = unit_normal(&p);
    let b = f.sff();
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        for bb in a..2 {
            let r = fdp.second(a, bb) - p.s1 * ch.gamma(0, a, bb) - p.s2 * ch.gamma(1, a, bb) - n * b[(a, bb)];
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

/// Covariant transformation ḡ = Jᵀ g J (and likewise for b) under a change of parameters.
pub fn covariant_metric_transform(forms: &FundamentalForms, jac: &Matrix2<f64>) -> Result<FundamentalForms> {
    let d = jac.determinant();
    if !(d.abs() > 1e-14) {
        return Err(Error::Singular(format!("coordinate change Jacobian determinant {d:e}")));
    }
    let g = jac.transpose() * forms.metric() * jac;
    let b = forms.has_sff.then(|| jac.transpose() * forms.sff() * jac);
    FundamentalForms::from_parts(g, b)
}

/// The plane S = (u¹, u², 0).
#[derive(Clone, Copy, Debug)]
pub struct Plane {
    pub domain: Rect,
}

impl ParametricSurface for Plane {
    fn point(&self, u: Vec2) -> Vec3 {
        Vec3::new(u[0], u[1], 0.0)
    }
    fn domain(&self) -> Rect {
        self.domain
    }
    fn partials(&self, u: Vec2) -> Partials {
        Partials {
            s: self.point(u),
            s1: Vec3::x(),
            s2: Vec3::y(),
            s11: Vec3::zeros(),
            s12: Vec3::zeros(),
            s22: Vec3::zeros(),
        }
    }
}

/// The plane in polar coordinates S = (u¹ cos u², u¹ sin u², 0).
#[derive(Clone, Copy, Debug)]
pub struct PolarPlane {
    pub domain: Rect,
}

impl ParametricSurface for PolarPlane {
    fn point(&self, u: Vec2) -> Vec3 {
        Vec3::new(u[0] * u[1].cos(), u[0] * u[1].sin(), 0.0)
    }
    fn domain(&self) -> Rect {
        self.domain
    }
    fn partials(&self, u: Vec2) -> Partials {
        let (s, c) = u[1].sin_cos();
        let r = u[0];
        Partials {
            s: self.point(u),
            s1: Vec3::new(c, s, 0.0),
            s2: Vec3::new(-r * s, r * c, 0.0),
            s11: Vec3::zeros(),
            s12: Vec3::new(-s, c, 0.0),
            s22: Vec3::new(-r * c, -r * s, 0.0),
        }
    }
}

/// Sphere of radius `r` in colatitude/longitude coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Sphere {
    pub r: f64,
}

impl ParametricSurface for Sphere {
    fn point(&self, u: Vec2) -> Vec3 {
        let (st, ct) = u[0].sin_cos();
        let (sp, cp) = u[1].sin_cos();
        self.r * Vec3::new(st * cp, st * sp, ct)
    }
    fn domain(&self) -> Rect {
        Rect::new([0.1, 0.0], [std::f64::consts::PI - 0.1, 2.0 * std::f64::consts::PI])
    }
    fn partials(&self, u: Vec2) -> Partials {
        let r = self.r;
        let (st, ct) = u[0].sin_cos();
        let (sp, cp) = u[1].sin_cos();
        Partials {
            s: r * Vec3::new(st * cp, st * sp, ct),
            s1: r * Vec3::new(ct * cp, ct * sp, -st),
            s2: r * Vec3::new(-st * sp, st * cp, 0.0),
            s11: r * Vec3::new(-st * cp, -st * sp, -ct),
            s12: r * Vec3::new(-ct * sp, ct * cp, 0.0),
            s22: r * Vec3::new(-st * cp, -st * sp, 0.0),
        }
    }
}

/// Circular cylinder of radius `r`: S = (r cos u¹, r sin u¹, u²).
#[derive(Clone, Copy, Debug)]
pub struct Cylinder {
    pub r: f64,
}

impl ParametricSurface for Cylinder {
    fn point(&self, u: Vec2) -> Vec3 {
        Vec3::new(self.r * u[0].cos(), self.r * u[0].sin(), u[1])
    }
    fn domain(&self) -> Rect {
        Rect::new([0.0, -1.0], [2.0 * std::f64::consts::PI, 1.0])
    }
    fn partials(&self, u: Vec2) -> Partials {
        let r = self.r;
        let (s, c) = u[0].sin_cos();
        Partials {
            s: self.point(u),
            s1: Vec3::new(-r * s, r * c, 0.0),
            s2: Vec3::z(),
            s11: Vec3::new(-r * c, -r * s, 0.0),
            s12: Vec3::zeros(),
            s22: Vec3::zeros(),
        }
    }
}
