//! Fundamental forms, principal curvatures, Christoffel symbols and classification
//! of reference surfaces.

use skgeom::surface::{
    christoffel_symbols, classify_surface, principal_curvatures, second_fundamental_form, Cylinder, Grid,
    ParametricSurface, Plane, Rect, Sphere, Vec2,
};

fn describe<S: ParametricSurface>(name: &str, s: &S, u: Vec2) -> skgeom::Result<()> {
    let f = second_fundamental_form(s, u)?;
    let c = principal_curvatures(&f)?;
    let ch = christoffel_symbols(s, u)?;
    let cls = classify_surface(s, Grid::default())?;
    println!("{name} at ({}, {})", u[0], u[1]);
    println!("  g = [{:.6}, {:.6}, {:.6}]  b = [{:.6}, {:.6}, {:.6}]", f.g11, f.g12, f.g22, f.b11, f.b12, f.b22);
    println!("  κ₁ = {:.6}, κ₂ = {:.6}, K = {:.6}, H = {:.6}", c.kappa1, c.kappa2, c.gaussian, c.mean);
    println!("  Γ¹₂₂ = {:.6}, Γ²₁₂ = {:.6}", ch.gamma(0, 1, 1), ch.gamma(1, 0, 1));
    println!(
        "  developable = {}, minimal = {}, lines-of-curvature coordinates = {}, geodesic coordinates = {}",
        cls.developable, cls.minimal, cls.coords_are_loc, cls.coords_are_geodesic
    );
    Ok(())
}

fn main() -> skgeom::Result<()> {
    let u = Vec2::new(1.1, 0.7);
    describe("plane", &Plane { domain: Rect::new([-2.0, -2.0], [2.0, 2.0]) }, u)?;
    describe("sphere r = 2", &Sphere { r: 2.0 }, u)?;
    describe("cylinder r = 1", &Cylinder { r: 1.0 }, u)?;
    Ok(())
}
