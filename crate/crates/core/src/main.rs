use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use lgns::driver::{DtLaw, RunConfig};
use lgns::report::{run_case, run_sweep, CsvSink, SweepRow, CSV_HEADER};
use lgns::Error;

#[derive(Parser, Debug)]
#[command(
    name = "lgns",
    version,
    about = "Stabilized Lagrange-Galerkin P1/P1 Navier-Stokes solver"
)]
struct Cli {
    /// TOML file with run parameters; flags and LGNS_* variables override it.
    #[arg(long, global = true, env = "LGNS_CONFIG")]
    config: Option<PathBuf>,

    #[arg(long, short, global = true, env = "LGNS_VERBOSE")]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one configuration and report Er1/Er2.
    Run(RunArgs),
    /// Solve a sequence of meshes (and viscosities) and report slopes.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long, env = "LGNS_DIM")]
    dim: Option<usize>,
    #[arg(long, env = "LGNS_DT_LAW", value_parser = ["linear", "quadratic"])]
    dt_law: Option<String>,
    /// Coefficient of the time-step law (4 for linear, 256 for quadratic by default).
    #[arg(long, env = "LGNS_GAMMA")]
    gamma: Option<f64>,
    #[arg(long, env = "LGNS_DELTA0")]
    delta0: Option<f64>,
    #[arg(long, env = "LGNS_T_END")]
    t_end: Option<f64>,
    /// Relative residual tolerance of MINRES.
    #[arg(long, env = "LGNS_TOL")]
    tol: Option<f64>,
    /// Scale MINRES with the absolute diagonal.
    #[arg(long, env = "LGNS_JACOBI")]
    jacobi: bool,
    /// Leave n = 0 out of the l∞(L²) velocity error.
    #[arg(long, env = "LGNS_EXCLUDE_INITIAL")]
    exclude_initial: bool,
    #[arg(long, env = "LGNS_CFL_WARN")]
    cfl_warn: Option<f64>,
    #[arg(long, env = "LGNS_CFL_ABORT")]
    cfl_abort: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "LGNS_N")]
    n: Option<usize>,
    #[arg(long, env = "LGNS_NU")]
    nu: Option<f64>,
    /// Report file: CSV if the name ends in `.csv`, JSON otherwise.
    #[arg(long, env = "LGNS_OUT")]
    out: Option<PathBuf>,
    /// CSV of the final velocity and pressure at the vertices.
    #[arg(long, env = "LGNS_EXPORT_FIELDS")]
    export_fields: Option<PathBuf>,
    /// Legacy VTK file of the mesh.
    #[arg(long, env = "LGNS_EXPORT_MESH")]
    export_mesh: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "LGNS_N_LIST", value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, env = "LGNS_NU_LIST", value_delimiter = ',')]
    nu_list: Vec<f64>,
    /// CSV file; rows are appended as each run finishes.
    #[arg(long, env = "LGNS_OUT")]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn apply_common(cfg: &mut RunConfig, c: &Common) -> Result<(), Error> {
    if let Some(d) = c.dim {
        cfg.dim = d;
    }
    if let Some(law) = &c.dt_law {
        cfg.dt_law = law.parse::<DtLaw>()?;
    }
    if c.gamma.is_some() {
        cfg.gamma = c.gamma;
    }
    if let Some(v) = c.delta0 {
        cfg.delta0 = v;
    }
    if let Some(v) = c.t_end {
        cfg.t_end = v;
    }
    if let Some(v) = c.tol {
        cfg.solver.tol = v;
    }
    if c.jacobi {
        cfg.solver.jacobi = true;
    }
    if c.exclude_initial {
        cfg.include_initial_error = false;
    }
    if let Some(v) = c.cfl_warn {
        cfg.cfl_warn = v;
    }
    if let Some(v) = c.cfl_abort {
        cfg.cfl_abort = v;
    }
    Ok(())
}

fn print_row(row: &SweepRow) {
    let s = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
    println!(
        "d={} nu={:e} N={:<4} dt={:.5} Er1={:.3e} ({}) Er2={:.3e} ({}) steps={} wall={:.1}s iters={:.0}",
        row.d,
        row.nu,
        row.n,
        row.dt,
        row.er1,
        s(row.er1_slope),
        row.er2,
        s(row.er2_slope),
        row.steps,
        row.wall_s,
        row.minres_iters_avg
    );
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Run(args) => {
            apply_common(&mut cfg, &args.common)?;
            if let Some(n) = args.n {
                cfg.n = n;
            }
            if let Some(nu) = args.nu {
                cfg.nu = nu;
            }
            if args.out.is_some() {
                cfg.out = args.out;
            }
            if args.export_fields.is_some() {
                cfg.export_fields = args.export_fields;
            }
            if args.export_mesh.is_some() {
                cfg.export_mesh = args.export_mesh;
            }
            cfg.validate()?;
            info!("config: {cfg:?}");
            let report = run_case(&cfg)?;
            print_row(&SweepRow::from_report(&report, None)?);
            if let Some(out) = &cfg.out {
                if out.extension().is_some_and(|e| e == "csv") {
                    let line = SweepRow::from_report(&report, None)?.csv_line();
                    std::fs::write(out, format!("{CSV_HEADER}\n{line}\n"))?;
                } else {
                    report.write_json(out)?;
                }
            }
        }
        Command::Sweep(args) => {
            apply_common(&mut cfg, &args.common)?;
            let nus = if args.nu_list.is_empty() {
                vec![cfg.nu]
            } else {
                args.nu_list
            };
            let mut sink = args.out.as_deref().map(CsvSink::open).transpose()?;
            for nu in nus {
                let base = RunConfig {
                    nu,
                    n: args.n_list[0],
                    ..cfg.clone()
                };
                base.validate()?;
                run_sweep(&base, &args.n_list, |row| {
                    print_row(row);
                    match sink.as_mut() {
                        Some(s) => s.write(row),
                        None => Ok(()),
                    }
                })?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Cfl { .. } | Error::FootOutside { .. } => 3,
                Error::Solve(_) | Error::NotConverged { .. } => 4,
                Error::Config(_) | Error::Dimension(_) | Error::Divisions(_) => 2,
                _ => 1,
            })
        }
    }
}
