//! The 3:2 mappings: closed-form metric against the embedding, classification,
//! channel laws and projection of a source vector.

use skgeom::mappings::{build, MappingConfig, MappingKind, MappingParams};
use skgeom::sim::{encode, ProjectionConfig};
use skgeom::surface::{classify_surface, second_fundamental_form, Grid, Vec2, Vec3};

fn main() -> skgeom::Result<()> {
    let params = MappingParams::new(0.6, 5.0, 2.0);
    let z = Vec2::new(1.2, 0.4);
    let x = Vec3::new(0.3, -0.8, 0.5);
    for kind in [MappingKind::Helicoid, MappingKind::Rcasd, MappingKind::Mscds, MappingKind::Snasu, MappingKind::Bpam] {
        let m = build(&MappingConfig { name: kind, params }, 1.0)?;
        println!("{kind} (Δ = {}, α₁ = {}, α₂ = {})", params.delta, params.alpha1, params.alpha2);
        let f = second_fundamental_form(m.as_ref(), z)?;
        println!("  embedding: g = [{:.6}, {:.6}, {:.6}]", f.g11, f.g12, f.g22);
        if let Some(cf) = m.closed_forms(z) {
            println!("  closed form: g = [{:.6}, {:.6}, {:.6}]", cf.metric[0], cf.metric[1], cf.metric[2]);
        }
        let c = classify_surface(m.as_ref(), Grid::default())?;
        println!("  developable = {}, minimal = {}, LoC coordinates = {}", c.developable, c.minimal, c.coords_are_loc);
        let [l1, l2] = m.channel_laws()?;
        println!(
            "  channel laws: z₁ {} (var {:.5}), z₂ {} (var {:.5}); power {:.5}",
            l1.family(),
            l1.variance(),
            l2.family(),
            l2.variance(),
            m.power()?
        );
        let e = encode(m.as_ref(), &x, &ProjectionConfig::default());
        println!("  projection of {:?}: z = ({:.5}, {:.5}), residual {:.5}", x.as_slice(), e.z[0], e.z[1], e.residual);
    }
    Ok(())
}
