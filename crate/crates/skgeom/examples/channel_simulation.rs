//! Monte-Carlo transmission over the AWGN channel at fixed parameters.

use skgeom::mappings::{snasu_surface, MappingParams};
use skgeom::sim::{run_simulation, SimConfig};

fn main() -> skgeom::Result<()> {
    let m = snasu_surface(MappingParams::new(0.49, 2.77, 1.98), 1.0)?;
    println!("snr_db  sdr_sim_db  sdr_model_db  anomaly_rate  power");
    for snr_db in [20.0, 25.0, 30.0, 35.0, f64::INFINITY] {
        let r = run_simulation(&m, &SimConfig { snr_db, n_samples: 20_000, seed: 7, ..SimConfig::default() })?;
        let model = r.breakdown.map_or(f64::NAN, |b| b.sdr_db(1.0));
        let p = 0.5 * (r.empirical_power[0] + r.empirical_power[1]);
        println!("{snr_db:6.1} {:11.4} {model:13.4} {:13.5} {p:7.4}", r.sdr_db, r.anomaly_rate);
        for w in &r.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
