use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use surf_rd::cli::config::{load_config, parse_method, parse_solver, ConfigError, FileConfig, MeshSpec};
use surf_rd::cli::runner::{check_mesh_file, run, sweep, verify, RunOptions, RunSettings, SweepOptions};
use surf_rd::cli::{sci, CliError, Experiment, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use surf_rd::mesh::{generate_fibonacci_delaunay, generate_icosphere, write_off};
use surf_rd::timestepper::MassMode;

#[derive(Parser)]
#[command(name = "surf-rd", version, about = "Lumped surface FEM for reaction-diffusion on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or check meshes.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Run one experiment on one mesh.
    Run(RunArgs),
    /// Run one experiment on a range of icosphere levels.
    Sweep(SweepArgs),
    /// Matrix-property and angle-condition checks on an icosphere.
    Verify {
        #[arg(long)]
        level: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshKind {
    Icosphere,
    Fibonacci,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a sphere mesh as OFF.
    Gen {
        #[arg(long, value_enum)]
        kind: MeshKind,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate an OFF mesh and test the angle condition.
    Check { mesh: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    /// OFF mesh to use instead of an icosphere.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tfinal: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// VTK snapshot every N steps (0: initial and final state only).
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// Linear solver: cg or gauss-seidel.
    #[arg(long)]
    solver: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    experiment: String,
    /// Inclusive range `A..B`.
    #[arg(long)]
    levels: String,
    #[arg(long)]
    method: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

fn arg_error(msg: impl Into<String>) -> CliError {
    ConfigError::Argument(msg.into()).into()
}

fn parse_experiment(s: &str) -> Result<Experiment, CliError> {
    s.parse().map_err(arg_error)
}

fn parse_mode(s: &str) -> Result<MassMode, CliError> {
    parse_method(s).map_err(arg_error)
}

fn parse_levels(s: &str) -> Result<std::ops::RangeInclusive<u32>, CliError> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| arg_error(format!("levels '{s}' must look like A..B")))?;
    let b = b.trim_start_matches('=');
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| arg_error(format!("bad level '{t}'")));
    Ok(parse(a)?..=parse(b)?)
}

fn run_command(args: RunArgs) -> Result<i32, CliError> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let experiment = match args.experiment.as_deref() {
        Some(e) => parse_experiment(e)?,
        None => file.experiment.ok_or_else(|| arg_error("--experiment is required"))?,
    };
    let method = match args.method.as_deref() {
        Some(m) => parse_mode(m)?,
        None => file.method.ok_or_else(|| arg_error("--method is required"))?,
    };
    let mesh = match (args.level, &args.mesh) {
        (Some(_), Some(_)) => return Err(arg_error("--level and --mesh are mutually exclusive")),
        (Some(level), None) => MeshSpec::Icosphere(level),
        (None, Some(path)) => MeshSpec::File(path.clone()),
        (None, None) => file.mesh.clone().ok_or_else(|| arg_error("--level or --mesh is required"))?,
    };
    let out = args
        .out
        .clone()
        .or(file.out.clone())
        .ok_or_else(|| arg_error("--out is required"))?;
    let solver = match args.solver.as_deref() {
        Some(s) => Some(parse_solver(s).map_err(arg_error)?),
        None => file.solver,
    };
    let settings = RunSettings {
        tau: args.tau.or(file.tau),
        t_final: args.tfinal.or(file.t_final),
        diffusion: file.diffusion.clone(),
        solver,
        tol: file.tol,
        max_iter: file.max_iter,
    };
    for (name, v) in [("tau", settings.tau), ("tfinal", settings.t_final)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(arg_error(format!("--{name} must be positive, got {v}")));
            }
        }
    }
    let opts = RunOptions {
        experiment,
        mesh,
        method,
        settings,
        out,
        snapshot_stride: args.snapshot_stride.or(file.snapshot_stride).unwrap_or(0),
    };
    let outcome = run(&opts)?;
    print!(
        "{}",
        surf_rd::cli::runner::summary_text(&outcome, &surf_rd::cli::preset(experiment).component_names)
    );
    if outcome.blow_up() {
        eprintln!("blow-up detected");
    }
    Ok(outcome.exit_code())
}

fn sweep_command(args: SweepArgs) -> Result<i32, CliError> {
    let opts = SweepOptions {
        experiment: parse_experiment(&args.experiment)?,
        levels: parse_levels(&args.levels)?,
        method: parse_mode(&args.method)?,
        settings: RunSettings::default(),
        out: args.out,
        threads: args.threads,
    };
    let report = sweep(&opts)?;
    print!("{}", report.table);
    if let Some(rate) = report.mean_last_rates(3) {
        println!("mean rate over last three refinements: {}", sci(rate));
    }
    Ok(EXIT_OK)
}

fn mesh_command(command: MeshCommand) -> Result<i32, CliError> {
    match command {
        MeshCommand::Gen {
            kind,
            level,
            points,
            out,
        } => {
            let mesh = match (kind, level, points) {
                (MeshKind::Icosphere, Some(l), None) => generate_icosphere(l)?,
                (MeshKind::Fibonacci, None, Some(p)) => generate_fibonacci_delaunay(p)?,
                (MeshKind::Icosphere, _, _) => return Err(arg_error("icosphere needs --level (and no --points)")),
                (MeshKind::Fibonacci, _, _) => return Err(arg_error("fibonacci needs --points (and no --level)")),
            };
            write_off(&mesh, &out)?;
            println!(
                "wrote {}: {} vertices, {} triangles, h = {}",
                out.display(),
                mesh.n_vertices(),
                mesh.n_triangles(),
                sci(mesh.mesh_size())
            );
            Ok(EXIT_OK)
        }
        MeshCommand::Check { mesh } => {
            let (text, valid) = check_mesh_file(&mesh)?;
            print!("{text}");
            Ok(if valid { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let result = match cli.command {
        Command::Mesh { command } => mesh_command(command),
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
        Command::Verify { level } => verify(level).map(|report| {
            print!("{}", report.text());
            if report.pass() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
