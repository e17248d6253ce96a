use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use proj_interior::config::RunConfig;
use proj_interior::output::{write_gaps_csv, write_json, write_scan_csv};
use proj_interior::perturb::PerturbationFile;
use proj_interior::pipeline::{self, Built, Searched, Setup};
use proj_interior::raster::Raster;
use proj_interior::recurrence::certify::projection_gaps;
use proj_interior::Error;

/// Randomly perturbed self-similar sets and interval certificates for their
/// projections.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the configuration's `out`, else `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Direction for `certify` and `verify`, in radians.
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Overrides the scale ρ.
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Overrides the search budget (number of sampled assignments).
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the similarity dimension and the open set test.
    Dimension,
    /// Write the per-direction L² scan as CSV.
    Scan {
        /// Also write the attractor raster.
        #[arg(long)]
        raster: bool,
    },
    /// Build the direction set, slices and thickened candidate.
    BuildL,
    /// Search for an assignment that returns every net line.
    Search,
    /// Check a stored assignment against a freshly built candidate.
    Verify { omega: PathBuf },
    /// Full run: build, search and projection certificates.
    Certify,
    /// Write the attractor raster.
    Render,
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn code_for(e: &Error, otherwise: u8) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        _ => otherwise,
    }
}

/// Errors while reading the configuration and preparing the system.
fn config_err(e: Error) -> Failure {
    Failure {
        code: code_for(&e, 2),
        err: e.into(),
    }
}

/// Errors once the run is under way.
fn run_err(e: impl Into<anyhow::Error>) -> Failure {
    let err = e.into();
    let code = err.downcast_ref::<Error>().map_or(1, |e| code_for(e, 1));
    Failure { code, err }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let path = cli.config.as_deref().ok_or_else(|| Failure {
        code: 2,
        err: anyhow::anyhow!("--config is required"),
    })?;
    let mut cfg = RunConfig::load(path).map_err(|e| Failure {
        code: 2,
        err: anyhow::Error::new(e).context(format!("reading {}", path.display())),
    })?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.rho {
        cfg.constants.rho = r;
    }
    if let Some(b) = cli.budget {
        cfg.grid.search_budget = b;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(run_err)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(run_err)
}

fn json_to(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<(), Failure> {
    write_json(value, create(dir, name)?).map_err(run_err)?;
    eprintln!("wrote {}", dir.join(name).display());
    Ok(())
}

fn timed<T>(label: &str, start: Instant, r: Result<T, Failure>) -> Result<T, Failure> {
    eprintln!("{label}: {:.1}s", start.elapsed().as_secs_f64());
    r
}

fn prepare(cfg: RunConfig) -> Result<(Setup, Built), Failure> {
    let start = Instant::now();
    let setup = Setup::new(cfg).map_err(config_err)?;
    let built = timed("build", start, pipeline::build(&setup).map_err(run_err))?;
    Ok((setup, built))
}

fn search(setup: &Setup, built: &Built) -> Result<Searched, Failure> {
    let start = Instant::now();
    timed("search", start, pipeline::search(setup, built).map_err(run_err))
}

fn thetas(cli: &Cli, setup: &Setup, built: &Built) -> Vec<f64> {
    match cli.theta {
        Some(t) => vec![pipeline::normalize_theta(t)],
        None => built.sample_directions(setup.config.grid.certify_samples),
    }
}

fn write_raster(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let spec = cfg.ifs_spec().map_err(config_err)?;
    let raster = Raster::attractor(&spec, cfg.grid.raster_size, cfg.grid.stopping_budget).map_err(run_err)?;
    let mut w = create(dir, "attractor.pgm")?;
    raster.write_pgm(&mut w).map_err(run_err)?;
    eprintln!("wrote {}", dir.join("attractor.pgm").display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Dimension => {
            let spec = cfg.ifs_spec().map_err(config_err)?;
            let osc = proj_interior::ifs::check_osc_unit_square(&spec);
            println!("d = {:.12}", spec.dimension());
            if osc.verified {
                println!("OSC (O = open unit square): verified");
            } else {
                let pairs: Vec<String> = osc.overlapping_pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                println!(
                    "OSC (O = open unit square): not verified; escaping [{}], overlapping [{}]",
                    osc.escaping.join(", "),
                    pairs.join(", ")
                );
            }
        }
        Command::Scan { raster } => {
            let dir = out_dir(&cfg)?;
            let start = Instant::now();
            let e = timed("scan", start, pipeline::scan(&cfg).map_err(config_err))?;
            write_scan_csv(&e, create(&dir, "scan.csv")?).map_err(run_err)?;
            eprintln!("wrote {}", dir.join("scan.csv").display());
            println!(
                "directions = {}, in E = {}, c5 = {}, excluded_fraction = {}",
                e.len(),
                e.member_count(),
                e.c5,
                e.excluded_fraction
            );
            if *raster {
                write_raster(&cfg, &dir)?;
            }
        }
        Command::Render => {
            let dir = out_dir(&cfg)?;
            write_raster(&cfg, &dir)?;
        }
        Command::BuildL => {
            let dir = out_dir(&cfg)?;
            let (setup, built) = prepare(cfg)?;
            let report = pipeline::build_report(&setup, &built);
            json_to(&dir, "build.json", &report)?;
            println!(
                "zero set = {}, net = {}, min |L(theta)| = {}",
                report.candidate.zero_points, report.candidate.delta_points, report.slices.min_measure
            );
        }
        Command::Search => {
            let dir = out_dir(&cfg)?;
            println!("seed = {}", cfg.seed);
            let (setup, built) = prepare(cfg)?;
            let searched = search(&setup, &built)?;
            json_to(&dir, "search.json", &searched.report)?;
            write_omega(&setup, &searched, &dir)?;
            println!("{} after {} attempts", searched.report.status, searched.report.attempts);
        }
        Command::Certify => {
            let dir = out_dir(&cfg)?;
            println!("seed = {}", cfg.seed);
            let (setup, built) = prepare(cfg)?;
            let searched = search(&setup, &built)?;
            let thetas = thetas(cli, &setup, &built);
            let start = Instant::now();
            let certs = timed(
                "certify",
                start,
                pipeline::certify(&setup, &built, &searched, &thetas).map_err(run_err),
            )?;
            if let Some(spec) = &searched.perturbed {
                let g = &setup.config.grid;
                let gaps = projection_gaps(spec, &thetas, g.certify_resolution, g.certify_budget).map_err(run_err)?;
                let gaps: Vec<_> = thetas.iter().copied().zip(gaps).collect();
                write_gaps_csv(&gaps, create(&dir, "gaps.csv")?).map_err(run_err)?;
            }
            let report = pipeline::certify_report(&setup, &built, &searched, certs);
            json_to(&dir, "certify.json", &report)?;
            write_omega(&setup, &searched, &dir)?;
            println!(
                "{}; certified {}/{} directions",
                report.search.status,
                report.certified,
                report.certificates.len()
            );
        }
        Command::Verify { omega } => {
            let dir = out_dir(&cfg)?;
            let text = fs::read_to_string(omega)
                .with_context(|| format!("reading {}", omega.display()))
                .map_err(|err| Failure { code: 2, err })?;
            let file: PerturbationFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", omega.display()))
                .map_err(|err| Failure { code: 2, err })?;
            let (setup, built) = prepare(cfg)?;
            let thetas = thetas(cli, &setup, &built);
            let report = pipeline::verify(&setup, &built, &file, &thetas).map_err(config_err)?;
            json_to(&dir, "verify.json", &report)?;
            println!(
                "net returns = {}, recurrence {}/{}, certified {}/{}",
                report.omega_zero_on_net,
                report.recurrence.recurred,
                report.recurrence.total,
                report.certificates.iter().filter(|c| c.certified()).count(),
                report.certificates.len()
            );
        }
    }
    Ok(())
}

/// The accepted assignment as `omega0.json`; without one, the best-coverage
/// assignment as `best_omega.json`.
fn write_omega(setup: &Setup, searched: &Searched, dir: &Path) -> Result<(), Failure> {
    let Some(omega) = &searched.omega else {
        return Ok(());
    };
    let name = if searched.outcome.omega0.is_some() {
        "omega0.json"
    } else {
        "best_omega.json"
    };
    let file = PerturbationFile::new(&setup.working, omega, &setup.law(), Some(setup.seed()));
    json_to(dir, name, &file)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
