use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod outcome;

use outcome::{Failure, Status};

#[derive(Parser, Debug)]
#[command(
    name = "translator-lab",
    version,
    about = "Experiments with λ-translators of the Gauss curvature flow"
)]
pub struct Cli {
    /// key = value file with the same keys as the long flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for comma-separated λ sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate a rotational profile and classify it.
    Profile(ProfileArgs),
    /// Singular-point report and sampled phase portrait.
    Portrait(PortraitArgs),
    /// Residual witnesses of the surface families.
    Verify(VerifyArgs),
    /// OBJ mesh of a profile or a family member.
    Mesh(MeshArgs),
    /// Fixed-point solution near the axis.
    Picard(PicardArgs),
    /// Gauss–Bonnet quadrature on a closed test surface.
    GaussBonnet(GaussBonnetArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Axis,
    Equator,
    Custom,
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// λ, or a comma-separated list for a sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Start::Axis)]
    pub start: Start,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub z0: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Arc-length budget (per direction for equator starts).
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Trajectory CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PortraitArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub lambda: Vec<f64>,
    /// Extra seed `x,theta`; repeatable.
    #[arg(long = "seed", allow_hyphen_values = true)]
    pub seeds: Vec<String>,
    #[arg(long, default_value_t = 20.0)]
    pub budget: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub theta_min: f64,
    #[arg(long, default_value_t = std::f64::consts::PI - 1e-6)]
    pub theta_max: f64,
    /// Prefix for `<prefix>_trajectories.csv` and `<prefix>_field.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Check a single family member instead of the default suite.
    #[arg(long)]
    pub family: Option<String>,
    /// Family parameter `key=value`; repeatable.
    #[arg(long = "param", allow_hyphen_values = true)]
    pub params: Vec<String>,
    /// Replace the member's λ.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Add to the member's λ.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_shift: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshSource {
    Profile,
    Family,
    Sphere,
}

#[derive(Args, Debug, Clone)]
pub struct MeshArgs {
    #[arg(long, value_enum, default_value_t = MeshSource::Profile)]
    pub source: MeshSource,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = Start::Axis)]
    pub start: Start,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Angular steps for surfaces of revolution.
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long = "param", allow_hyphen_values = true)]
    pub params: Vec<String>,
    /// Grid nodes per direction for family patches.
    #[arg(long, default_value_t = 32)]
    pub res: usize,
    /// OBJ path; the scalar channel goes to `<stem>.csv` alongside.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct PicardArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// CSV of `r,u,u_prime`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedSurface {
    Sphere,
    Torus,
    Ellipsoid,
}

#[derive(Args, Debug, Clone)]
pub struct GaussBonnetArgs {
    #[arg(long, value_enum, default_value_t = ClosedSurface::Sphere)]
    pub surface: ClosedSurface,
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
    /// Speed `vx,vy,vz`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0, 1.0])]
    pub speed: Vec<f64>,
    /// Per-cell quadrature CSV.
    #[arg(long)]
    pub cells: Option<PathBuf>,
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    args.iter()
        .enumerate()
        .find_map(|(i, a)| match a.strip_prefix("--config") {
            Some("") => args.get(i + 1).map(PathBuf::from),
            Some(rest) => rest.strip_prefix('=').map(PathBuf::from),
            None => None,
        })
}

fn parse_args(args: Vec<String>) -> Result<Cli, Failure> {
    let args = match config_path(&args) {
        Some(path) => config::merge(&args, &path)?,
        None => args,
    };
    Cli::try_parse_from(args).map_err(clap_failure)
}

fn clap_failure(e: clap::Error) -> Failure {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            Failure {
                status: Status::Ok,
                message: String::new(),
            }
        }
        _ => Failure::usage(e.render().to_string()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("TRANSLATOR_LAB_LOG", "error"))
        .format_timestamp(None)
        .init();
    let cli = match parse_args(std::env::args().collect()) {
        Ok(cli) => cli,
        Err(f) => {
            if !f.message.is_empty() {
                eprint!("{}", f.message);
                if !f.message.ends_with('\n') {
                    eprintln!();
                }
            }
            return f.status.into();
        }
    };
    let report = commands::run(&cli);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(report.stdout.as_bytes());
    let _ = out.flush();
    for m in &report.errors {
        eprintln!("error: {m}");
    }
    report.status.into()
}
