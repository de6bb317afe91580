//! Curvature, torsion, Frenet frame, arc length and canal-surface checks on a helix
//! and a circular spine.

use std::f64::consts::PI;

use skgeom::curve::{
    arc_length, canal_critical_radius, canal_self_intersection_test, curvature, frenet, noise_tube_radius,
    osculating_sphere, reparametrize_by_arc_length, torsion, CanalSurfaceSpec, FnCurve,
};

fn main() -> skgeom::Result<()> {
    let (r, h) = (1.0, 0.5);
    let helix = FnCurve::helix(r, h, (0.0, 4.0 * PI));
    let x = 1.3;
    println!("helix r={r} h={h}");
    println!("  κ = {:.8} (closed form {:.8})", curvature(&helix, x), r / (r * r + h * h));
    println!("  τ = {:.8} (closed form {:.8})", torsion(&helix, x)?, h / (r * r + h * h));
    let f = frenet(&helix, x)?;
    println!("  t = {:.5?}\n  p = {:.5?}\n  b = {:.5?}", f.t.as_slice(), f.p.as_slice(), f.b.as_slice());
    println!(
        "  length over two turns = {:.8} (closed form {:.8})",
        arc_length(&helix, 0.0, 4.0 * PI)?,
        4.0 * PI * (r * r + h * h).sqrt()
    );
    let o = osculating_sphere(&helix, x)?;
    println!("  osculating sphere radius = {:.6}", o.radius);

    let unit = reparametrize_by_arc_length(FnCurve::helix(r, h, (0.0, 2.0 * PI)))?;
    println!("  unit-speed reparametrisation: total length {:.6}", unit.total_length());

    println!("canal surfaces on a quarter circle of radius 1");
    let arc = FnCurve::circle(1.0, (0.0, 0.5 * PI));
    for tube in [0.5, 0.99, 1.01] {
        let rep = canal_self_intersection_test(&CanalSurfaceSpec::new(&arc, tube)?, 256)?;
        println!("  tube radius {tube}: safe = {}, margin = {:+.4}", rep.safe, rep.worst_margin);
    }
    println!("  critical tube radius by bisection = {:.9}", canal_critical_radius(&arc, 256, 0.1, 1.5, 1e-9)?);
    let sigma_n = 10f64.powf(-30.0 / 20.0);
    println!("noise-sphere radius at 30 dB (N = 2, b_n = 4): {:.6}", noise_tube_radius(sigma_n, 2, 4.0));
    Ok(())
}
