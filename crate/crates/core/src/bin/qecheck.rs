use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qecheck::cli::{catalog, load_config, render_text, run, CheckSpec, OutputFormat, RunConfig, FIXTURES};
use qecheck::quasi_einstein::IdentityId;

#[derive(Parser)]
#[command(name = "qecheck", version, about = "Verify quasi-Einstein metrics numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check listed in a configuration.
    Verify(Target),
    /// Run selected identities on the configured instance.
    Identities {
        #[command(flatten)]
        target: Target,
        /// Comma-separated identity names, e.g. E1,E4,TRACE.
        #[arg(long, value_delimiter = ',', required = true)]
        ids: Vec<String>,
    },
    /// Lift the instance to a warped product and test the Einstein side.
    WarpLift(Target),
    /// Profile ODE reductions.
    Ode {
        #[command(subcommand)]
        mode: OdeMode,
    },
    /// Kähler structure and splitting-mechanism checks.
    Kahler(Target),
    /// List the built-in fixtures, or print one as a configuration.
    Catalog {
        name: Option<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Subcommand)]
enum OdeMode {
    /// Integrate, lift and check the configured `ode_lift` entries.
    Solve(Target),
    /// Closed-surface shooting scan.
    Shoot(Target),
}

#[derive(Args)]
struct Target {
    config: PathBuf,
    /// Override every check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Number of sample points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

enum Failure {
    Config(String),
}

fn load(t: &Target) -> Result<RunConfig, Failure> {
    let mut cfg = load_config(&t.config).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(n) = t.points {
        cfg.sample.count = n;
    }
    if let Some(s) = t.seed {
        cfg.sample.seed = s;
    }
    if let Some(f) = t.format {
        cfg.output.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Text => OutputFormat::Text,
        };
    }
    if let Some(p) = &t.out {
        cfg.output.path = Some(p.display().to_string());
    }
    Ok(cfg)
}

fn keep(cfg: &mut RunConfig, names: &[&str], fallback: &[&str]) {
    cfg.checks.retain(|c| names.contains(&c.name.as_str()));
    if cfg.checks.is_empty() {
        cfg.checks = fallback.iter().map(|n| CheckSpec::named(n)).collect();
    }
}

fn execute(t: &Target, adjust: impl FnOnce(&mut RunConfig) -> Result<(), Failure>) -> Result<bool, Failure> {
    let mut cfg = load(t)?;
    adjust(&mut cfg)?;
    if let Some(tol) = t.tol {
        cfg.checks.iter_mut().for_each(|c| c.tol = Some(tol));
    }
    let report = run(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
    let body = match cfg.output.format {
        OutputFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        OutputFormat::Text => render_text(&report),
    };
    match &cfg.output.path {
        Some(path) => std::fs::write(path, body).map_err(|e| Failure::Config(format!("cannot write {}: {}", path, e)))?,
        None => print!("{}", body),
    }
    Ok(report.pass)
}

const KAHLER_CHECKS: [&str; 5] = ["kahler", "phi_antisymmetry", "wedge", "directional_hessian", "parallel_transport"];

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Verify(t) => execute(&t, |_| Ok(())),
        Command::Identities { target, ids } => execute(&target, |cfg| {
            let mut checks = Vec::new();
            for id in &ids {
                let id: IdentityId = id.trim().parse().map_err(Failure::Config)?;
                checks.push(CheckSpec::named(id.name()));
            }
            cfg.checks = checks;
            Ok(())
        }),
        Command::WarpLift(t) => execute(&t, |cfg| {
            keep(cfg, &["warp_lift"], &["warp_lift"]);
            Ok(())
        }),
        Command::Ode { mode: OdeMode::Solve(t) } => execute(&t, |cfg| {
            keep(cfg, &["ode_lift"], &[]);
            if cfg.checks.is_empty() {
                return Err(Failure::Config("configuration declares no ode_lift checks".into()));
            }
            Ok(())
        }),
        Command::Ode { mode: OdeMode::Shoot(t) } => execute(&t, |cfg| {
            keep(cfg, &["shoot_closed_surface"], &["shoot_closed_surface"]);
            Ok(())
        }),
        Command::Kahler(t) => execute(&t, |cfg| {
            keep(cfg, &KAHLER_CHECKS, &KAHLER_CHECKS);
            Ok(())
        }),
        Command::Catalog { name: None, format } => {
            match format {
                Some(Format::Json) => println!("{}", serde_json::to_string_pretty(FIXTURES).expect("serializes")),
                _ => {
                    for f in FIXTURES {
                        let kind = if f.positive { "positive".to_string() } else { format!("breaks {}", f.expected_failures.join(",")) };
                        println!("{:<34} {:<60} {}", f.name, f.description, kind);
                    }
                }
            }
            Ok(true)
        }
        Command::Catalog { name: Some(name), .. } => {
            let (fixture, _) = catalog(&name).map_err(|e| Failure::Config(e.to_string()))?;
            print!("{}", fixture.source);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
