//! Power-constrained parameter optimisation and a warm-started SNR sweep.

use skgeom::experiment::fmt_sig;
use skgeom::mappings::MappingKind;
use skgeom::optim::{sweep, OptProblem};

fn main() {
    for kind in [MappingKind::Rcasd, MappingKind::Snasu, MappingKind::Helicoid] {
        println!("{kind}");
        println!("  snr_db  delta  alpha1  alpha2  sdr_db  lambda  kkt_residual");
        for p in sweep(&OptProblem::new(kind), &[20.0, 30.0, 40.0, 50.0]) {
            match p.result {
                Ok(r) => println!(
                    "  {} {} {} {} {} {} {}",
                    p.snr_db,
                    fmt_sig(r.params.delta),
                    fmt_sig(r.params.alpha1),
                    fmt_sig(r.params.alpha2),
                    fmt_sig(r.sdr_db),
                    fmt_sig(r.lambda),
                    fmt_sig(r.kkt_residual)
                ),
                Err(e) => println!("  {}: {e}", p.snr_db),
            }
        }
    }
}
