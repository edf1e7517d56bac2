//! `anglescan`: run, sweep, check and verify angular-scan storage simulations.
//!
//! Exit codes: 0 success, 1 check or oracle failure, 2 configuration error,
//! 3 numerical failure.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anglescan::advisor::{check_conditions, Status};
use anglescan::config::RunConfig;
use anglescan::oracle::{dense_oracle, field_deviation, spin_deviation};
use anglescan::rays::{aggregate_metrics, field_map, run_bundle, FieldKind};
use anglescan::solver::run_ray;
use anglescan::sweep::{run_sweep, SweepMode};
use anglescan::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Oracle pass threshold on the max-abs field deviation.
const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "anglescan", version, about = "Quantum storage by angular scanning of a Raman control field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "ANGLESCAN_OUT", default_value = "anglescan_out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    #[value(name = "theta0")]
    Theta0,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "const_dtheta")]
    ConstDtheta,
    #[value(name = "const_dtheta_sin")]
    ConstDthetaSin,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the ray bundle and write field maps, metrics and conditions.
    Run(Common),
    /// Sweep the average angle and write one aggregate row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "theta0")]
        param: Param,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "const_dtheta")]
        mode: Mode,
    },
    /// Print the operating-condition report.
    Check {
        config: PathBuf,
    },
    /// Compare the stepping scheme with the dense direct solve on one ray.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 24)]
        nz: usize,
        #[arg(long, default_value_t = 96)]
        nt: usize,
        /// Ray position in units of the transverse half-width R.
        #[arg(long, default_value_t = 1.0)]
        x_over_r: f64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::NumericalBlowup { .. } => 3,
            _ => 2,
        };
        Self::new(code, e.to_string())
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::new(2, format!("cannot write {}: {e}", path.display()))
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    Ok(RunConfig::load(&common.config)?.with_grid_overrides(common.nz, common.nt, common.nx))
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(Failure::new(2, "--workers must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure::new(2, format!("cannot start worker pool: {e}"))),
    }
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(io_failure(dir))
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let grid = cfg.build_grid()?;
    let report = check_conditions(&cfg.params, &cfg.scan, &cfg.geom, &cfg.pulse);
    let bundle = with_workers(common.workers, || {
        run_bundle(&cfg.params, &cfg.scan, &cfg.geom, &cfg.pulse, &grid)
    })??;
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    let metrics = aggregate_metrics(&bundle)?;

    let out = &common.out;
    prepare_out(out)?;
    for (name, kind) in [
        ("field_in.csv", FieldKind::Input),
        ("field_trans.csv", FieldKind::Transmitted),
        ("field_out.csv", FieldKind::Output),
    ] {
        let path = out.join(name);
        output::write_field_map(&path, &field_map(&bundle, kind)).map_err(io_failure(&path))?;
    }
    let path = out.join("spin_snapshot.csv");
    output::write_spin_snapshot(&path, &bundle).map_err(io_failure(&path))?;
    let path = out.join("metrics.txt");
    output::write_metrics(&path, &metrics, &bundle).map_err(io_failure(&path))?;
    let path = out.join("conditions.txt");
    output::write_text(&path, &report.to_kv()).map_err(io_failure(&path))?;

    for (k, v) in output::metrics_lines(&metrics) {
        println!("{k} = {}", output::num(v));
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_sweep(common: &Common, from: f64, to: f64, steps: usize, mode: Mode) -> Result<(), Failure> {
    let cfg = load(common)?;
    let mode = match mode {
        Mode::ConstDtheta => SweepMode::ConstDtheta,
        Mode::ConstDthetaSin => SweepMode::ConstDthetaSin,
    };
    let points = with_workers(common.workers, || run_sweep(&cfg, from, to, steps, mode))??;
    prepare_out(&common.out)?;
    let path = common.out.join("sweep.csv");
    output::write_sweep(&path, &points).map_err(io_failure(&path))?;
    for p in &points {
        println!(
            "theta0 = {}  eta = {}  F_prime = {}",
            output::num(p.theta0),
            output::num(p.metrics.eta),
            output::num(p.metrics.f_prime)
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_check(config: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let report = check_conditions(&cfg.params, &cfg.scan, &cfg.geom, &cfg.pulse);
    print!("{}", report.to_text());
    if report.summary() == Status::Fail {
        return Err(Failure::new(1, "operating conditions violated"));
    }
    Ok(())
}

fn cmd_oracle(config: &Path, nz: usize, nt: usize, x_over_r: f64) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(config)?;
    cfg.grid = cfg.grid.with_resolution(nz, nt, 1).underresolved();
    let grid = cfg.build_grid()?;
    let x = x_over_r * cfg.geom.half_width();
    let direct = dense_oracle(x, &cfg.params, &cfg.scan, &cfg.pulse, &grid)?;
    let stepped = run_ray(x, &cfg.params, &cfg.scan, &cfg.pulse, &grid)?;
    let dev = field_deviation(&stepped, &direct);
    let kappa_length = cfg.params.kappa() * cfg.geom.length();
    println!("grid: nz = {nz}, nt = {nt}, x = {} m", output::num(x));
    println!("max_abs_field_deviation = {}", output::num(dev));
    println!("max_abs_spin_deviation = {}", output::num(spin_deviation(&stepped, &direct, kappa_length)));
    let phase = grid.spin_phase_per_cell(&cfg.scan);
    let dtau_ratio = grid.dtau() / cfg.pulse.duration();
    println!(
        "resolution: spin phase per cell = {} (needs < pi/4), dtau/dt = {} (needs <= 1/20)",
        output::num(phase),
        output::num(dtau_ratio)
    );
    if phase >= std::f64::consts::FRAC_PI_4 || dtau_ratio > 0.05 {
        println!("note: grid is under-resolved for physics; the comparison checks the discrete scheme only");
    }
    if !(dev < ORACLE_TOLERANCE) {
        return Err(Failure::new(1, format!("deviation {} exceeds {ORACLE_TOLERANCE:e}", output::num(dev))));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Sweep { common, param: Param::Theta0, from, to, steps, mode } => {
            cmd_sweep(common, *from, *to, *steps, *mode)
        }
        Command::Check { config } => cmd_check(config),
        Command::Oracle { config, nz, nt, x_over_r } => cmd_oracle(config, *nz, *nt, *x_over_r),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
