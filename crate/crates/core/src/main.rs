use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use eventjet::eventmap::{detect, fit_event_net, FitConfig, TriangleMesh};
use eventjet::harness::{
    mc_to_event, mesh_event_samples, order_sweep_study, Config, HarnessError,
};
use eventjet::jetflow::{integrate, Stop};
use eventjet::polyalg::TaylorMap;
use eventjet::uncert::{per_state_radius_sweep, propagate_moments, requirement_check};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "eventjet", version, about = "Taylor maps of closed-loop flows to event manifolds")]
struct Cli {
    /// Study configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured expansion order.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the event transition map and write its coefficients.
    Expand,
    /// Per-state convergence-radius sweep of the event map.
    Radius,
    /// Propagate moments through the event map, with the configured
    /// requirement check if any.
    Moments,
    /// Monte Carlo baseline to the event.
    Mc {
        /// Overrides the configured sample count.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Compare propagated and Monte Carlo covariances over orders.
    Compare {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Fit a neural event manifold to a mesh altitude surface.
    FitEvent {
        #[arg(long)]
        mesh: PathBuf,
        /// Altitude of the event surface above the mesh.
        #[arg(long, default_value_t = 0.0)]
        altitude: f64,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        /// Half-width of the sampled band around the surface.
        #[arg(long)]
        band: f64,
    },
    /// Integrate the nominal trajectory to the event (or the horizon).
    Simulate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(cli: &Cli) -> Result<Config, HarnessError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::Config("--config is required for this command".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(k) = cli.order {
        cfg.run.order = k;
    }
    Ok(cfg)
}

fn emit(cli: &Cli, file: &str, content: &str) -> Result<(), HarnessError> {
    match &cli.out {
        Some(dir) => {
            let io = |source| HarnessError::Io {
                path: dir.display().to_string(),
                source,
            };
            std::fs::create_dir_all(dir).map_err(io)?;
            let path = dir.join(file);
            std::fs::write(&path, content).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })
        }
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(content.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(HarnessError::Io {
                    path: "stdout".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn ext(cli: &Cli) -> &'static str {
    match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn map_csv(map: &TaylorMap) -> String {
    let mut out = String::from("component,exponents,coefficient\n");
    for (name, p) in map.component_names().iter().zip(map.components()) {
        for (a, c) in p.terms().filter(|(_, c)| *c != 0.0) {
            let e: Vec<String> = a.exponents().iter().map(u32::to_string).collect();
            writeln!(out, "{name},{},{c:e}", e.join(" ")).unwrap();
        }
    }
    out
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Expand => {
            let cfg = load(cli)?;
            let map = cfg.problem()?.event_map(cfg.run.order)?;
            let body = match cli.format {
                Format::Csv => map_csv(&map),
                Format::Json => map.to_json(),
            };
            emit(cli, &format!("event_map.{}", ext(cli)), &body)
        }
        Command::Radius => {
            let cfg = load(cli)?;
            let map = cfg.problem()?.event_map(cfg.run.order)?;
            let sweep = per_state_radius_sweep(&map, cfg.run.order)?;
            let body = match cli.format {
                Format::Csv => sweep.to_csv(),
                Format::Json => sweep.to_json(),
            };
            emit(cli, &format!("radius.{}", ext(cli)), &body)
        }
        Command::Moments => {
            let cfg = load(cli)?;
            let problem = cfg.problem()?;
            let comps = cfg.components(&problem)?;
            let map = problem.event_map(cfg.run.order)?.select(&comps)?;
            let m = propagate_moments(&map, &problem.bx, cfg.moment_order()?)?;
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            let body = match cli.format {
                Format::Csv => m.to_csv(),
                Format::Json => m.to_json(),
            };
            emit(cli, &format!("moments.{}", ext(cli)), &body)?;
            if let Some(req) = &cfg.requirement {
                let idx = req
                    .components
                    .iter()
                    .map(|n| {
                        m.labels
                            .iter()
                            .position(|l| l == n)
                            .ok_or_else(|| HarnessError::Config(format!("requirement component `{n}` is not among run.components")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let r = requirement_check(&m, &idx, &req.predicate, req.samples, cfg.run.seed)?;
                let body = match cli.format {
                    Format::Csv => format!(
                        "fraction,std_error,n,assumption\n{},{},{},{}\n",
                        r.fraction, r.std_error, r.n, r.assumption
                    ),
                    Format::Json => serde_json::to_string_pretty(&r).expect("serializable"),
                };
                emit(cli, &format!("requirement.{}", ext(cli)), &body)?;
            }
            Ok(())
        }
        Command::Mc { samples } => {
            let cfg = load(cli)?;
            let problem = cfg.problem()?;
            let n = samples.unwrap_or(cfg.run.samples);
            let r = mc_to_event(&problem, n, cfg.run.seed)?;
            let c = r.counts();
            eprintln!(
                "hit {} missed {} failed {} filtered {} of {}",
                c.hit, c.missed, c.failed, c.filtered, n
            );
            let body = match cli.format {
                Format::Csv => r.to_csv(),
                Format::Json => serde_json::to_string_pretty(&r).expect("serializable"),
            };
            emit(cli, &format!("mc.{}", ext(cli)), &body)
        }
        Command::Compare { samples } => {
            let cfg = load(cli)?;
            let problem = cfg.problem()?;
            let comps = cfg.components(&problem)?;
            let n = samples.unwrap_or(cfg.run.samples);
            let study = order_sweep_study(&problem, &cfg.run.orders, n, cfg.run.seed, &comps)?;
            match cli.format {
                Format::Csv => {
                    emit(cli, "compare.csv", &study.to_csv())?;
                    if cli.out.is_some() {
                        emit(cli, "compare_timings.csv", &study.timings_csv())?;
                    }
                    Ok(())
                }
                Format::Json => emit(cli, "compare.json", &study.to_json()),
            }
        }
        Command::FitEvent {
            mesh,
            altitude,
            samples,
            band,
        } => {
            let mut fit = match &cli.config {
                Some(_) => load(cli)?.fit.unwrap_or_default(),
                None => FitConfig::default(),
            };
            if let Some(s) = cli.seed {
                fit.seed = s;
            }
            let m = TriangleMesh::load(Path::new(mesh))?;
            let pts = mesh_event_samples(&m, *altitude, *samples, *band, fit.seed)?;
            let report = fit_event_net(&pts, &fit)?;
            eprintln!(
                "train mse {:e}, holdout rmse {:e} over {} points",
                report.train_mse, report.holdout_rmse, report.holdout_count
            );
            emit(cli, "event_net.json", &report.net.to_json())
        }
        Command::Simulate => {
            let cfg = load(cli)?;
            let problem = cfg.problem()?;
            let traj = integrate(
                &problem.system,
                &problem.y0,
                0.0,
                Stop::Event {
                    spec: &problem.spec,
                    t_max: problem.t_max,
                },
                &problem.tol,
            )?;
            match detect(&traj, &problem.spec) {
                Ok(c) => eprintln!("event at t = {:e} s", c.t * problem.system.model().scaling().time),
                Err(e) => eprintln!("note: {e}"),
            }
            emit(cli, "trajectory.csv", &traj.to_csv())
        }
    }
}
