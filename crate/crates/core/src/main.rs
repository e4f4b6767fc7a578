use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::thread;

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use grp_gfm::fvm::FluxMode;
use grp_gfm::gfm::GfmMode;
use grp_gfm::io;
use grp_gfm::riemann::{self, RiemannInput};
use grp_gfm::sim::{self, rankine_hugoniot_post_shock, ShockStrength, Simulation, Snapshot};
use grp_gfm::{Error, MaterialEos, Primitive, Result};

#[derive(Parser)]
#[command(
    name = "grp-gfm",
    version,
    about = "Two-medium compressible flow with RP- and GRP-based fluxes and ghost fluid states"
)]
struct Cli {
    /// Seed for the randomized oracle batches.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a scenario file and writes snapshots and a report.
    Run(RunArgs),
    /// Prints a built-in scenario as a scenario file.
    Scenario {
        /// One of the built-in scenario names.
        name: String,
    },
    /// Module-level solves for scripted verification; results go to stdout as JSON.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long, value_parser = parse_flux)]
    flux: Option<FluxMode>,
    #[arg(long, value_parser = parse_gfm)]
    gfm: Option<GfmMode>,
    /// Grid override, e.g. 275x45.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Snapshot times replacing the scenario's list, comma separated.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Oracle {
    /// Post-shock state for a shock entering a pre-shock state.
    Rh {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        p_inf: f64,
        /// Pre-shock density, normal velocity and pressure.
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        pre: (f64, f64, f64),
        #[arg(long, conflicts_with = "post_pressure", required_unless_present = "post_pressure")]
        mach: Option<f64>,
        #[arg(long)]
        post_pressure: Option<f64>,
        /// Direction of shock motion, +1 or -1.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        direction: f64,
    },
    /// Exact star state of a two-material Riemann problem, or a random batch.
    Riemann {
        /// Left density, normal velocity and pressure.
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, required_unless_present = "random")]
        left: Option<(f64, f64, f64)>,
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, required_unless_present = "random")]
        right: Option<(f64, f64, f64)>,
        #[arg(long, default_value_t = 1.4)]
        gamma_left: f64,
        #[arg(long, default_value_t = 0.0)]
        p_inf_left: f64,
        #[arg(long, default_value_t = 1.4)]
        gamma_right: f64,
        #[arg(long, default_value_t = 0.0)]
        p_inf_right: f64,
        /// Solve this many random problems drawn from `--seed`, one JSON line each.
        #[arg(long, conflicts_with_all = ["left", "right"])]
        random: Option<usize>,
    },
}

fn parse_flux(s: &str) -> std::result::Result<FluxMode, String> {
    match s {
        "rp" => Ok(FluxMode::Rp),
        "grp" => Ok(FluxMode::Grp),
        _ => Err(format!("expected rp or grp, got '{s}'")),
    }
}

fn parse_gfm(s: &str) -> std::result::Result<GfmMode, String> {
    match s {
        "rp" => Ok(GfmMode::Rp),
        "grp" => Ok(GfmMode::Grp),
        _ => Err(format!("expected rp or grp, got '{s}'")),
    }
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got '{s}'"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid size '{t}': {e}"));
    Ok((n(a)?, n(b)?))
}

fn parse_triple(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected three comma-separated numbers, got '{s}'")),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_scenario_error() {
        2
    } else if e.is_io_error() {
        4
    } else {
        3
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn snapshot_path(out: &Path, index: usize, s: &Snapshot, ext: &str) -> PathBuf {
    out.join(format!("snapshot_{index:03}_t{:.6e}.{ext}", s.time))
}

fn run(args: RunArgs) -> Result<()> {
    let mut sc = io::parse_scenario(&args.scenario)?;
    if let Some(f) = args.flux {
        sc.numerics.flux = f;
    }
    if let Some(g) = args.gfm {
        sc.numerics.gfm = g;
    }
    if let Some((nx, ny)) = args.grid {
        sc.grid = sim::GridSpec { nx, ny };
    }
    if let Some(t) = args.snapshots {
        sc.output.snapshots = t;
    }
    sc.validate()?;
    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    info!("{}: {}x{} cells, flux {}, gfm {}", sc.name, sc.grid.nx, sc.grid.ny, sc.numerics.flux, sc.numerics.gfm);

    let (tx, rx) = mpsc::sync_channel::<Snapshot>(4);
    let out = args.out.clone();
    let (vtk, k) = (sc.output.vtk, sc.output.schlieren_k);
    let writer = thread::spawn(move || -> Result<usize> {
        let mut n = 0;
        for s in rx {
            let path = snapshot_path(&out, n, &s, "dat");
            io::write_snapshot(&s, &path)?;
            if vtk {
                io::write_vtk(&s, k, &snapshot_path(&out, n, &s, "vtk"))?;
            }
            info!("wrote {}", path.display());
            n += 1;
        }
        Ok(n)
    });

    let mut simulation = Simulation::new(sc.clone())?;
    let outcome = simulation.run(|s| tx.send(s.clone()).map_err(|_| Error::Internal("snapshot writer stopped".into())));
    drop(tx);
    let written = writer.join().map_err(|_| Error::Internal("snapshot writer panicked".into()))?;
    let report = match (outcome, written) {
        (Err(e), Err(w)) => {
            error!("{w}");
            return Err(e);
        }
        (Err(e), _) => return Err(e),
        (_, Err(w)) => return Err(w),
        (Ok(r), Ok(_)) => r,
    };
    let path = args.out.join("report.json");
    let doc = json!({ "scenario": sc, "report": report });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    info!(
        "{} steps to t = {:e} in {:.1} s; clamps {}, report {}",
        report.steps,
        report.final_time,
        report.wall_seconds,
        report.clamps,
        path.display()
    );
    Ok(())
}

fn star_json(inp: &RiemannInput) -> serde_json::Value {
    match riemann::solve_star(inp) {
        Ok(s) => json!({
            "p_star": s.p_star,
            "u_star": s.u_star,
            "rho_star_left": s.rho_star_left,
            "rho_star_right": s.rho_star_right,
            "left_wave": format!("{:?}", s.left_wave).to_lowercase(),
            "right_wave": format!("{:?}", s.right_wave).to_lowercase(),
        }),
        Err(Error::Vacuum { du, critical }) => json!({ "vacuum": true, "du": du, "critical": critical }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn side((rho, u, p): (f64, f64, f64)) -> Primitive {
    Primitive::new(rho, u, 0.0, p)
}

/// Bad oracle arguments are input errors, not solver failures.
fn input(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Scenario(m),
        e => e,
    }
}

fn oracle(o: Oracle, seed: u64) -> Result<()> {
    match o {
        Oracle::Rh { gamma, p_inf, pre, mach, post_pressure, direction } => {
            let eos = MaterialEos::new(gamma, p_inf).map_err(input)?;
            let strength = match (mach, post_pressure) {
                (Some(m), _) => ShockStrength::Mach(m),
                (None, Some(p)) => ShockStrength::PostPressure(p),
                (None, None) => return Err(Error::Scenario("one of --mach or --post-pressure is required".into())),
            };
            let j = rankine_hugoniot_post_shock(pre, strength, direction, &eos)?;
            let doc = json!({ "rho": j.rho, "u": j.u, "p": j.p, "shock_speed": j.shock_speed, "piston_speed": j.piston_speed });
            println!("{doc}");
        }
        Oracle::Riemann { left, right, gamma_left, p_inf_left, gamma_right, p_inf_right, random } => {
            if let Some(n) = random {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..n {
                    let mut draw = || {
                        let eos = MaterialEos {
                            gamma: rng.gen_range(1.1..5.0),
                            p_inf: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1e3) },
                        };
                        let w = Primitive::new(
                            10f64.powf(rng.gen_range(-3.0..1.0)),
                            rng.gen_range(-10.0..10.0),
                            0.0,
                            10f64.powf(rng.gen_range(-2.0..4.0)),
                        );
                        (w, eos)
                    };
                    let ((l, el), (r, er)) = (draw(), draw());
                    let inp = RiemannInput::new(l, r, el, er);
                    let doc = json!({
                        "left": [l.rho, l.ux, l.p], "gamma_left": el.gamma, "p_inf_left": el.p_inf,
                        "right": [r.rho, r.ux, r.p], "gamma_right": er.gamma, "p_inf_right": er.p_inf,
                        "star": star_json(&inp),
                    });
                    println!("{doc}");
                }
            } else {
                let (Some(l), Some(r)) = (left, right) else {
                    return Err(Error::Scenario("--left and --right are required".into()));
                };
                let inp = RiemannInput::new(
                    side(l),
                    side(r),
                    MaterialEos::new(gamma_left, p_inf_left).map_err(input)?,
                    MaterialEos::new(gamma_right, p_inf_right).map_err(input)?,
                );
                inp.validate().map_err(input)?;
                println!("{}", star_json(&inp));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Scenario { name } => {
            sim::build_scenario(&name, None).and_then(|sc| io::print_scenario(&sc)).map(|t| print!("{t}"))
        }
        Command::Oracle(o) => oracle(o, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
