//! Configuration-driven sweep written as CSV to stdout.

use skgeom::experiment::{cmd_sweep, write_rows, ExperimentConfig};

const CONFIG: &str = r#"
mapping = ["rcasd", "snasu", "bpam"]
snr = "20:40:10"
n_samples = 5000
seed = 42
"#;

fn main() -> skgeom::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let outcome = cmd_sweep(&cfg)?;
    for f in &outcome.failures {
        eprintln!("failed: {f}");
    }
    write_rows(std::io::stdout().lock(), &outcome.rows)
}
