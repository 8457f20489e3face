use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use translator_core::families::{FamilyRegistry, Params, WitnessKind, WITNESS_GRID, WITNESS_TOL};
use translator_core::geom::Vec3;
use translator_core::global::{self, ClosedPatch};
use translator_core::mesh::{self, GridChannel, MeshData};
use translator_core::phaseplane::{self, Rectangle};
use translator_core::profile::{self, ProfileState, StartMode, Trajectory};
use translator_core::singular::{self, PicardConfig};

use crate::outcome::{Failure, Status};
use crate::{
    Cli, ClosedSurface, Command, GaussBonnetArgs, MeshArgs, MeshSource, PicardArgs, PortraitArgs, ProfileArgs, Start,
    VerifyArgs,
};

/// Everything a command produced, flushed by `main` in a fixed order.
pub struct Report {
    pub stdout: String,
    pub errors: Vec<String>,
    pub status: Status,
}

struct JobOut {
    stdout: String,
    files: Vec<(PathBuf, String)>,
    status: Status,
}

impl JobOut {
    fn ok(stdout: String) -> Self {
        JobOut {
            stdout,
            files: Vec::new(),
            status: Status::Ok,
        }
    }
}

pub fn run(cli: &Cli) -> Report {
    let results = match &cli.command {
        Command::Profile(a) => sweep(cli.jobs, &a.lambda, |l, multi| profile_job(a, l, multi)),
        Command::Portrait(a) => sweep(cli.jobs, &a.lambda, |l, multi| portrait_job(a, l, multi)),
        Command::Picard(a) => sweep(cli.jobs, &a.lambda, |l, multi| picard_job(a, l, multi)),
        Command::Verify(a) => vec![verify_job(a)],
        Command::Mesh(a) => vec![mesh_job(a)],
        Command::GaussBonnet(a) => vec![gauss_bonnet_job(a)],
    };
    let mut report = Report {
        stdout: String::new(),
        errors: Vec::new(),
        status: Status::Ok,
    };
    for (i, r) in results.into_iter().enumerate() {
        if i > 0 {
            report.stdout.push('\n');
        }
        match r {
            Ok(job) => {
                report.stdout.push_str(&job.stdout);
                report.status = report.status.max(job.status);
                for (path, body) in job.files {
                    if let Err(e) = std::fs::write(&path, body) {
                        report.errors.push(format!("cannot write {}: {e}", path.display()));
                        report.status = report.status.max(Status::Runtime);
                    }
                }
            }
            Err(f) => {
                report.errors.push(f.message);
                report.status = report.status.max(f.status);
            }
        }
    }
    report
}

fn sweep<F>(jobs: usize, lambdas: &[f64], job: F) -> Vec<Result<JobOut, Failure>>
where
    F: Fn(f64, bool) -> Result<JobOut, Failure> + Sync,
{
    let multi = lambdas.len() > 1;
    if jobs <= 1 || !multi {
        return lambdas.iter().map(|&l| job(l, multi)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| lambdas.par_iter().map(|&l| job(l, multi)).collect()),
        Err(e) => vec![Err(Failure::runtime(format!("thread pool: {e}")))],
    }
}

/// `dir/stem_lambda<λ>.ext` for sweeps, the path itself otherwise.
fn sweep_path(path: &Path, lambda: f64, multi: bool) -> PathBuf {
    if !multi {
        return path.to_path_buf();
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_lambda{lambda}.{}", ext.to_string_lossy()),
        None => format!("{stem}_lambda{lambda}"),
    };
    path.with_file_name(name)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn picard_config(lambda: f64, epsilon: Option<f64>, grid_n: Option<usize>) -> Result<PicardConfig, Failure> {
    let mut cfg = match epsilon {
        Some(e) => PicardConfig::with_epsilon(lambda, e)?,
        None => PicardConfig::new(lambda)?,
    };
    if let Some(n) = grid_n {
        if n < 64 {
            return Err(Failure::usage(format!("grid-n must be at least 64, got {n}")));
        }
        cfg.grid_n = n;
    }
    Ok(cfg)
}

fn start_mode(start: Start) -> StartMode {
    match start {
        Start::Axis => StartMode::AxisOrthogonal,
        _ => StartMode::Equator,
    }
}

fn profile_job(a: &ProfileArgs, lambda: f64, multi: bool) -> Result<JobOut, Failure> {
    info!("profile λ = {lambda}, start = {:?}", a.start);
    let (stdout, traj) = match a.start {
        Start::Axis | Start::Equator => {
            let mode = start_mode(a.start);
            let budget = a.s_max.unwrap_or_else(|| profile::default_budget(lambda, mode));
            let cfg =
                if mode == StartMode::AxisOrthogonal && lambda >= -1.0 && (a.epsilon.is_some() || a.grid_n.is_some()) {
                    Some(picard_config(lambda, a.epsilon, a.grid_n)?)
                } else {
                    None
                };
            let report = profile::classify_with(lambda, mode, budget, a.tol, cfg.as_ref())?;
            (report.summary(), report.trajectory)
        }
        Start::Custom => {
            let start = ProfileState {
                s: 0.0,
                x: a.x0,
                z: a.z0,
                theta: a.theta0,
                j: 0.0,
            };
            let budget = a.s_max.unwrap_or(50.0);
            let traj = profile::integrate(lambda, start, budget, a.tol)?;
            (custom_summary(&traj), traj)
        }
    };
    let mut out = JobOut::ok(stdout);
    if let Some(path) = &a.output {
        out.files.push((sweep_path(path, lambda, multi), traj.to_csv()));
    }
    Ok(out)
}

fn custom_summary(traj: &Trajectory) -> String {
    let mut out = String::new();
    let a = traj.anchor;
    let end = traj.forward_end;
    writeln!(out, "lambda={:.16e}", traj.lambda).unwrap();
    writeln!(out, "start=custom").unwrap();
    writeln!(out, "regime=none").unwrap();
    writeln!(out, "forward_end={}", end.kind.as_str()).unwrap();
    writeln!(out, "s_end={:.16e}", end.state.s).unwrap();
    writeln!(out, "theta_end={:.16e}", end.state.theta).unwrap();
    writeln!(out, "x0={:.16e}", a.x).unwrap();
    writeln!(out, "x_max={:.16e}", traj.x_max()).unwrap();
    writeln!(out, "z0={:.16e}", a.z).unwrap();
    out
}

fn parse_seed(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::usage(format!("seed must be x,theta: {text:?}"));
    let (x, t) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        t.trim().parse().map_err(|_| bad())?,
    ))
}

fn portrait_job(a: &PortraitArgs, lambda: f64, multi: bool) -> Result<JobOut, Failure> {
    info!("portrait λ = {lambda}");
    let seeds = a.seeds.iter().map(|s| parse_seed(s)).collect::<Result<Vec<_>, _>>()?;
    let rect = Rectangle::new(a.x_min, a.x_max, a.theta_min, a.theta_max)?;
    let report = phaseplane::linearize(lambda);
    let grid = phaseplane::sample_portrait(lambda, rect, &seeds, a.budget)?;
    let mut stdout = report.summary();
    writeln!(stdout, "trajectories={}", grid.trajectories.len()).unwrap();
    writeln!(stdout, "field_points={}", grid.field.len()).unwrap();
    let mut out = JobOut::ok(stdout);
    if let Some(prefix) = &a.output {
        let prefix = sweep_path(prefix, lambda, multi);
        out.files
            .push((with_suffix(&prefix, "_trajectories.csv"), grid.trajectories_csv()));
        out.files.push((with_suffix(&prefix, "_field.csv"), grid.field_csv()));
    }
    Ok(out)
}

fn parse_params(items: &[String]) -> Result<Params, Failure> {
    let mut p = Params::new();
    for item in items {
        let bad = || Failure::usage(format!("parameter must be key=value: {item:?}"));
        let (k, v) = item.split_once('=').ok_or_else(bad)?;
        p.insert(k.trim().to_string(), v.trim().parse().map_err(|_| bad())?);
    }
    Ok(p)
}

fn verify_job(a: &VerifyArgs) -> Result<JobOut, Failure> {
    let reg = FamilyRegistry::default();
    let mut stdout = String::new();
    let mut failed = 0usize;
    let mut line = |name: &str, kind: WitnessKind, value: f64, threshold: f64, passed: bool| {
        let kind = match kind {
            WitnessKind::Positive => "positive",
            WitnessKind::Negative => "negative",
        };
        let verdict = if passed { "PASS" } else { "FAIL" };
        writeln!(
            stdout,
            "{verdict} {kind} {name} value={value:.16e} threshold={threshold:.16e}"
        )
        .unwrap();
        if !passed {
            failed += 1;
        }
    };
    match &a.family {
        None => {
            for w in translator_core::families::witness_suite(&reg)? {
                line(&w.name, w.kind, w.value, w.threshold, w.passed());
            }
        }
        Some(name) => {
            let mut inst = reg.build(name, &parse_params(&a.params)?)?;
            if let Some(l) = a.lambda {
                inst.descriptor.lambda = Some(l);
            }
            if let Some(d) = a.lambda_shift {
                inst.descriptor.lambda = inst.descriptor.lambda.map(|l| l + d);
            }
            match inst.max_residual(WITNESS_GRID)? {
                Some(r) => line(name, WitnessKind::Positive, r, WITNESS_TOL, r < WITNESS_TOL),
                None => {
                    let spread = inst.residual_spread(WITNESS_GRID)?;
                    let floor = translator_core::families::NEGATIVE_FLOOR;
                    line(name, WitnessKind::Negative, spread, floor, spread > floor);
                }
            }
        }
    }
    writeln!(stdout, "failed={failed}").unwrap();
    let mut out = JobOut::ok(stdout);
    if failed > 0 {
        out.status = Status::VerifyFailed;
    }
    Ok(out)
}

fn circle_states(n: usize) -> Vec<ProfileState> {
    (0..=n)
        .map(|i| {
            let s = PI * i as f64 / n as f64;
            ProfileState {
                s,
                x: s.sin(),
                z: -s.cos(),
                theta: s,
                j: 1.0 - s.cos(),
            }
        })
        .collect()
}

fn mesh_job(a: &MeshArgs) -> Result<JobOut, Failure> {
    info!("mesh from {:?}", a.source);
    let mesh: MeshData = match a.source {
        MeshSource::Sphere => mesh::revolve_states(&circle_states(64), a.steps)?,
        MeshSource::Profile => {
            let mode = start_mode(a.start);
            if a.start == Start::Custom {
                return Err(Failure::usage("mesh supports axis and equator starts"));
            }
            let budget = a.s_max.unwrap_or_else(|| profile::default_budget(a.lambda, mode));
            let traj = match mode {
                StartMode::AxisOrthogonal => profile::integrate_from_axis(a.lambda, budget, a.tol, 1.0)?,
                StartMode::Equator => {
                    profile::integrate_two_sided(a.lambda, ProfileState::equator(), budget, budget, a.tol)?
                }
            };
            mesh::revolve(&traj, a.steps)?
        }
        MeshSource::Family => {
            let name = a
                .family
                .as_deref()
                .ok_or_else(|| Failure::usage("--family is required with --source family"))?;
            let inst = FamilyRegistry::default().build(name, &parse_params(&a.params)?)?;
            let channel = match inst.lambda() {
                Some(lambda) => GridChannel::Residual { v: inst.v(), lambda },
                None => GridChannel::GaussCurvature,
            };
            mesh::grid_mesh(&inst.patch, a.res, channel)?
        }
    };
    let mut stdout = String::new();
    writeln!(stdout, "vertices={}", mesh.vertices.len()).unwrap();
    writeln!(stdout, "faces={}", mesh.faces.len()).unwrap();
    let mut out = JobOut::ok(String::new());
    out.files.push((a.output.clone(), mesh.to_obj()));
    if let (Some(csv), Some(ch)) = (mesh.channel_csv(), mesh.channel.as_ref()) {
        let side = a.output.with_extension("csv");
        writeln!(stdout, "channel={} sidecar={}", ch.name, side.display()).unwrap();
        out.files.push((side, csv));
    }
    out.stdout = stdout;
    Ok(out)
}

fn picard_job(a: &PicardArgs, lambda: f64, multi: bool) -> Result<JobOut, Failure> {
    info!("picard λ = {lambda}");
    if lambda < -1.0 {
        return Err(profile::ProfileError::NoSolution(lambda).into());
    }
    let cfg = picard_config(lambda, a.epsilon, a.grid_n)?;
    let sol = singular::solve_picard(&cfg)?;
    let mut stdout = String::new();
    writeln!(stdout, "lambda={lambda:.16e}").unwrap();
    writeln!(stdout, "epsilon={:.16e}", sol.config.epsilon).unwrap();
    writeln!(stdout, "radius={:.16e}", sol.radius()).unwrap();
    writeln!(stdout, "grid_n={}", sol.config.grid_n).unwrap();
    writeln!(stdout, "iterations={}", sol.iterations).unwrap();
    writeln!(stdout, "radius_halvings={}", sol.radius_halvings).unwrap();
    writeln!(stdout, "last_step={:.16e}", sol.last_step).unwrap();
    writeln!(
        stdout,
        "second_derivative_at_axis={:.16e}",
        sol.second_derivative_at_axis()
    )
    .unwrap();
    writeln!(stdout, "expected_second_derivative={:.16e}", (1.0 + lambda).sqrt()).unwrap();
    let mut out = JobOut::ok(stdout);
    if let Some(path) = &a.output {
        out.files.push((sweep_path(path, lambda, multi), sol.to_csv()));
    }
    Ok(out)
}

fn gauss_bonnet_job(a: &GaussBonnetArgs) -> Result<JobOut, Failure> {
    let [vx, vy, vz] = a.speed[..] else {
        return Err(Failure::usage("speed needs three components"));
    };
    let v = Vec3::new(vx, vy, vz);
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Failure::usage(format!(
            "speed must be a unit vector, got norm {}",
            v.norm()
        )));
    }
    if a.resolution == 0 {
        return Err(Failure::usage("resolution must be positive"));
    }
    let closed: ClosedPatch = match a.surface {
        ClosedSurface::Sphere => global::sphere(1.0),
        ClosedSurface::Torus => global::torus(2.0, 1.0),
        ClosedSurface::Ellipsoid => global::ellipsoid(1.0, 1.0, 2.0),
    };
    let report = global::gauss_bonnet_probe(&closed, v, a.resolution)?;
    let mut out = JobOut::ok(report.summary());
    if let Some(path) = &a.cells {
        let cells = global::quadrature_cells(&closed, v, a.resolution)?;
        out.files.push((path.clone(), global::cells_csv(&cells)));
    }
    Ok(out)
}
