use std::path::Path;
use std::process::{Command, Output};

use skgeom::experiment::{read_rows, CSV_HEADER};

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_skgeom"));
    c.args(args).env_remove("SKGEOM_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let sweep = |out: &Path, threads: &str| {
        let out = out.to_str().unwrap();
        let args =
            ["sweep", "--mapping", "rcasd,bpam", "--snr", "20:30:10", "--samples", "2000", "--seed", "7", "--out", out];
        code(&run(&args, &[("SKGEOM_THREADS", threads)]))
    };
    assert_eq!(sweep(&a, "1"), 0);
    assert_eq!(sweep(&b, "2"), 0);
    let (ta, tb) = (read(&a), read(&b));
    assert_eq!(ta, tb);
    assert!(!ta.contains('\r'));
    assert_eq!(ta.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_rows(ta.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!((rows[0].snr_db, rows[0].mapping.name()), (20.0, "rcasd"));
    assert_eq!((rows[1].snr_db, rows[1].mapping.name()), (20.0, "bpam"));
    assert!(rows.iter().all(|r| r.sdr_simulated_db.is_some() && r.sdr_analytical_db.is_some()));
}

#[test]
fn config_file_drives_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("opt.csv");
    std::fs::write(&cfg, format!("mapping = [\"snasu\"]\nsnr = \"30\"\nout = \"{}\"\n", out.display())).unwrap();
    let o = run(&["optimize", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(read(&out).as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].delta.is_some() && rows[0].sdr_simulated_db.is_none());
}

#[test]
fn baselines_to_stdout() {
    let o = run(&["baselines", "--snr", "0:20:10"], &[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,") || lines[1].starts_with("0.0"), "{}", lines[1]);
}

#[test]
fn failed_point_gives_partial_exit_code() {
    let o = run(&["simulate", "--mapping", "helicoid", "--params", "3.5,1,1", "--snr", "30", "--samples", "1000"], &[]);
    assert_eq!(code(&o), 2);
    let rows = read_rows(&o.stdout[..]).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].sdr_analytical_db.is_none() && rows[0].sdr_simulated_db.is_some());
}

#[test]
fn usage_and_io_errors_exit_one() {
    assert_eq!(code(&run(&["sweep"], &[])), 1);
    assert_eq!(code(&run(&["sweep", "--mapping", "nope"], &[])), 1);
    assert_eq!(code(&run(&["sweep", "--mapping", "bpam", "--snr", "1:2:0"], &[])), 1);
    assert_eq!(code(&run(&["baselines"], &[("SKGEOM_THREADS", "zero")])), 1);
    assert_eq!(code(&run(&["bogus"], &[])), 1);
    let o =
        run(&["sweep", "--mapping", "bpam", "--snr", "10", "--samples", "0", "--out", "/nonexistent/dir/x.csv"], &[]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&run(&["--help"], &[])), 0);
}

#[test]
fn empty_grid_writes_header_only() {
    let o = run(&["sweep", "--mapping", "bpam", "--snr", "30:20:5", "--samples", "0"], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
}

#[test]
fn analyze_reports_classification() {
    let o = run(&["analyze", "--mapping", "rcasd", "--params", "0.6,5.5,2.0", "--snr", "30"], &[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("developable"), "{text}");
}
