use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use skgeom::curve::noise_tube_radius;
use skgeom::distortion::from_db;
use skgeom::experiment::{
    cmd_analyze, cmd_baselines, cmd_optimize, cmd_simulate, cmd_sweep, configure_threads, emit_rows, fmt_sig,
    kappa_grid, linspace, optimized_config, write_baselines, write_kappa_grid, ExperimentConfig, Outcome, SnrGrid,
};
use skgeom::mappings::{MappingConfig, MappingKind, MappingParams};
use skgeom::surface::Grid;
use skgeom::{Error, Result};

/// Geometry, optimisation and simulation of 3:2 Shannon–Kotel'nikov mappings.
#[derive(Parser)]
#[command(name = "skgeom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classification, curvature and canal margin of a mapping; optional κ₁(Δ, α₁) grid CSV.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Fixed parameters "delta,alpha1,alpha2" (default: optimised at the first SNR, 30 dB if unset).
        #[arg(long)]
        params: Option<String>,
        /// Noise radius for the canal margin (default: noise-sphere radius at the SNR, b_n = 4).
        #[arg(long)]
        noise_radius: Option<f64>,
        /// Classification grid points per axis.
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
    /// Optimised parameters and modelled performance per SNR.
    Optimize(Common),
    /// Monte-Carlo runs at fixed parameters.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Fixed parameters "delta,alpha1,alpha2" (overrides the config).
        #[arg(long)]
        params: Option<String>,
    },
    /// Optimizer and simulator over the SNR grid.
    Sweep(Common),
    /// OPTA and BPAM reference curves.
    Baselines {
        /// Source and channel dimensions "M:N".
        #[arg(long, default_value = "3:2")]
        dims: String,
        #[arg(long)]
        snr: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mapping name(s), comma separated.
    #[arg(long)]
    mapping: Option<String>,
    /// SNR grid "start:stop:step" in dB.
    #[arg(long)]
    snr: Option<String>,
    /// Monte-Carlo samples per point (0 skips the simulation).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match (&self.config, &self.mapping) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(_)) => ExperimentConfig::new(Vec::new()),
            (None, None) => return Err(Error::Config("either --config or --mapping is required".into())),
        };
        if let Some(m) = &self.mapping {
            c.mapping = m.split(',').map(|s| MappingKind::parse(s.trim())).collect::<Result<_>>()?;
        }
        if let Some(s) = &self.snr {
            c.snr = s.parse()?;
        }
        if let Some(n) = self.samples {
            c.n_samples = n;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_params(s: &str, base: Option<MappingParams>) -> Result<MappingParams> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad --params '{s}'"))))
        .collect::<Result<_>>()?;
    let [delta, alpha1, alpha2] = v[..] else {
        return Err(Error::Config(format!("--params needs delta,alpha1,alpha2 (got '{s}')")));
    };
    Ok(MappingParams { delta, alpha1, alpha2, ..base.unwrap_or_else(|| MappingParams::new(delta, alpha1, alpha2)) })
}

fn finish(cfg: &ExperimentConfig, o: Outcome) -> Result<i32> {
    for f in &o.failures {
        eprintln!("failed: {f}");
    }
    emit_rows(cfg.out.as_deref(), &o.rows)?;
    Ok(o.exit_code())
}

fn analyze(common: &Common, params: Option<&str>, noise_radius: Option<f64>, n: usize) -> Result<i32> {
    let cfg = common.config()?;
    let snr_db = if common.snr.is_some() {
        *cfg.snr.points().first().ok_or_else(|| Error::Config("empty SNR grid".into()))?
    } else {
        30.0
    };
    let grid = Grid { n0: n, n1: n, region: None };
    let radius = noise_radius.unwrap_or_else(|| noise_tube_radius((cfg.p_max / from_db(snr_db)).sqrt(), 2, 4.0));
    let mut kgrid = Vec::new();
    for &kind in &cfg.mapping {
        let mc = match params.map(|p| parse_params(p, cfg.params)).transpose()?.or(cfg.params) {
            Some(p) => MappingConfig { name: kind, params: p },
            None => optimized_config(&cfg, kind, snr_db)?,
        };
        println!("{}\n", cmd_analyze(&mc, cfg.sigma_x, grid, radius)?);
        if cfg.out.is_some() {
            kgrid.extend(kappa_grid(&mc, cfg.sigma_x, &linspace(0.1, 2.0, 20), &linspace(1.0, 10.0, 19), grid)?);
        }
    }
    if let Some(p) = &cfg.out {
        write_kappa_grid(std::fs::File::create(p)?, &kgrid)?;
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { common, params, noise_radius, grid } => {
            analyze(&common, params.as_deref(), noise_radius, grid)
        }
        Command::Optimize(common) => {
            let cfg = common.config()?;
            let o = cmd_optimize(&cfg)?;
            for r in &o.optima {
                eprintln!(
                    "{} {} dB: delta={} alpha1={} alpha2={} D={} lambda={} kkt={} active={}",
                    r.kind,
                    fmt_sig(r.snr_db),
                    fmt_sig(r.params.delta),
                    fmt_sig(r.params.alpha1),
                    fmt_sig(r.params.alpha2),
                    fmt_sig(r.d_total),
                    fmt_sig(r.lambda),
                    fmt_sig(r.kkt_residual),
                    r.active_constraint
                );
            }
            finish(&cfg, o)
        }
        Command::Simulate { common, params } => {
            let mut cfg = common.config()?;
            if let Some(p) = params {
                cfg.params = Some(parse_params(&p, cfg.params)?);
            }
            let o = cmd_simulate(&cfg)?;
            finish(&cfg, o)
        }
        Command::Sweep(common) => {
            let cfg = common.config()?;
            let o = cmd_sweep(&cfg)?;
            finish(&cfg, o)
        }
        Command::Baselines { dims, snr, out } => {
            let (m, n) = dims
                .split_once(':')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Error::Config(format!("bad --dims '{dims}', expected M:N")))?;
            let grid: SnrGrid = snr.as_deref().map(str::parse).transpose()?.unwrap_or_default();
            let rows = cmd_baselines(m, n, &grid)?;
            match out {
                Some(p) => write_baselines(std::fs::File::create(p)?, &rows)?,
                None => write_baselines(std::io::stdout().lock(), &rows)?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
