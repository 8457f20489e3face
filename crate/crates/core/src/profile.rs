//! Generating curves of rotational λ-translators in arc-length form:
//! `x′ = cos θ`, `z′ = sin θ`, `θ′ = x(cos θ + λ)/sin θ`, integrated together
//! with `J = ∫ x ds`. Along any solution `cos θ + λ = (cos θ₀ + λ) e^{−(J−J₀)}`
//! and `−cos θ − x²/2 − λJ` is constant.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ode::{self, Crossing, Event, OdeSystem, RhsFailure, RunEnd, StepOptions};
use crate::singular::{self, PicardConfig, SingularError};

/// `|sin θ|` below which the angle equation is treated as singular.
pub const SIN_FLOOR: f64 = 1e-12;
/// Threshold of the singular-angle event on `|sin θ|`.
pub const SINGULAR_EVENT_SIN: f64 = 1e-6;
pub const BLOW_UP: f64 = 1e6;
/// `|cos θ + λ|` below which a direct curvature evaluation is roundoff.
pub const GAP_FLOOR: f64 = 1e-13;
/// `|x|` below which a sample is treated as lying on the axis.
pub const AXIS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("singular angle: sin θ ≈ 0 at x = {x}, θ = {theta}")]
    SingularAngle { x: f64, theta: f64 },
    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepFailure { s: f64, h: f64 },
    #[error("first integral needs a start on the axis: x = z = θ = 0 at s = 0")]
    WrongInitialConditions,
    #[error("no profile meets the axis orthogonally for λ = {0} < −1")]
    NoSolution(f64),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("tolerance {0:e} outside [1e-13, 1e-3]")]
    BadTolerance(f64),
    #[error(transparent)]
    Singular(SingularError),
}

impl From<SingularError> for ProfileError {
    fn from(e: SingularError) -> Self {
        match e {
            SingularError::NoSolution(l) => ProfileError::NoSolution(l),
            other => ProfileError::Singular(other),
        }
    }
}

/// Point of a generating curve. `j` is `∫ x ds` from the curve's start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileState {
    pub s: f64,
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    pub j: f64,
}

impl ProfileState {
    /// `(x, z, θ) = (1, 0, π/2)` at `s = 0`.
    pub fn equator() -> Self {
        ProfileState {
            s: 0.0,
            x: 1.0,
            z: 0.0,
            theta: FRAC_PI_2,
            j: 0.0,
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.x, self.z, self.theta, self.j]
    }

    fn from_array(s: f64, y: [f64; 4]) -> Self {
        ProfileState {
            s,
            x: y[0],
            z: y[1],
            theta: y[2],
            j: y[3],
        }
    }
}

/// `cos θ + λ` without cancellation near `θ = 0` and `θ = π`.
pub fn angle_gap(lambda: f64, theta: f64) -> f64 {
    let c = theta.cos();
    if c >= 0.0 {
        let h = (0.5 * theta).sin();
        (1.0 + lambda) - 2.0 * h * h
    } else {
        let h = (0.5 * theta).cos();
        (lambda - 1.0) + 2.0 * h * h
    }
}

/// `θ′ = x(cos θ + λ)/sin θ`. At `λ = ∓1` the singularity at `θ = 0` or
/// `θ = π` is removable and the closed forms `−x tan(θ/2)`, `x cot(θ/2)`
/// are used there.
pub fn theta_rate(lambda: f64, x: f64, theta: f64) -> Result<f64, ProfileError> {
    let (sn, cs) = theta.sin_cos();
    if sn.abs() < SIN_FLOOR {
        if lambda == -1.0 && cs > 0.0 {
            return Ok(-x * (0.5 * theta).tan());
        }
        if lambda == 1.0 && cs < 0.0 {
            return Ok(x / (0.5 * theta).tan());
        }
        return Err(ProfileError::SingularAngle { x, theta });
    }
    Ok(x * angle_gap(lambda, theta) / sn)
}

/// `(dx, dz, dθ)` of the generating-curve system.
pub fn rhs(lambda: f64, state: &ProfileState) -> Result<[f64; 3], ProfileError> {
    let (sn, cs) = state.theta.sin_cos();
    Ok([cs, sn, theta_rate(lambda, state.x, state.theta)?])
}

/// `|∂θ′/∂θ| = |x(1 + λ cos θ)|/sin²θ`.
fn theta_stiffness(lambda: f64, x: f64, theta: f64) -> f64 {
    let (sn, cs) = theta.sin_cos();
    let num = if cs >= 0.0 {
        let h = (0.5 * theta).sin();
        (1.0 + lambda) - 2.0 * lambda * h * h
    } else {
        let h = (0.5 * theta).cos();
        (1.0 - lambda) + 2.0 * lambda * h * h
    };
    if num == 0.0 {
        return 0.0;
    }
    (x * num).abs() / (sn * sn)
}

struct Trig {
    lambda: f64,
}

impl OdeSystem<4> for Trig {
    fn rhs(&self, _s: f64, y: &[f64; 4]) -> Result<[f64; 4], RhsFailure> {
        let (sn, cs) = y[2].sin_cos();
        let dtheta = theta_rate(self.lambda, y[0], y[2]).map_err(|e| RhsFailure(e.to_string()))?;
        Ok([cs, sn, dtheta, y[0]])
    }

    // keeps the linearized angle step inside (0, 1) so the sign of
    // cos θ + λ is preserved step to step
    fn step_limit(&self, y: &[f64; 4]) -> f64 {
        let k = theta_stiffness(self.lambda, y[0], y[2]);
        if k > 0.0 && k.is_finite() {
            1.0 / k
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    AxisCrossing,
    Equator,
    SingularAngle,
    BlowUp,
    Budget,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::AxisCrossing => "axis_crossing",
            EventKind::Equator => "equator",
            EventKind::SingularAngle => "singular_angle",
            EventKind::BlowUp => "blow_up",
            EventKind::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEvent {
    pub kind: EventKind,
    pub state: ProfileState,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Starts on the axis at the origin, orthogonally.
    Axis,
    Regular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lambda: f64,
    /// Strictly increasing in `s`.
    pub samples: Vec<ProfileState>,
    pub events: Vec<ProfileEvent>,
    pub origin: Origin,
    /// State where the curve was started; reference for the conserved quantities.
    pub anchor: ProfileState,
    pub forward_end: ProfileEvent,
    pub backward_end: Option<ProfileEvent>,
}

fn check_tol(tol: f64) -> Result<(), ProfileError> {
    if (1e-13..=1e-3).contains(&tol) {
        Ok(())
    } else {
        Err(ProfileError::BadTolerance(tol))
    }
}

struct Branch {
    samples: Vec<ProfileState>,
    events: Vec<ProfileEvent>,
    end: ProfileEvent,
}

fn run_branch(lambda: f64, start: ProfileState, s_end: f64, tol: f64) -> Result<Branch, ProfileError> {
    let sys = Trig { lambda };
    let events = vec![
        Event::new(EventKind::AxisCrossing, Crossing::Falling, |_s, y: &[f64; 4]| y[0]).terminal(),
        Event::new(EventKind::Equator, Crossing::Either, |_s, y: &[f64; 4]| y[2].cos())
            .guarded(move |_s, y: &[f64; 4]| theta_rate(lambda, y[0], y[2]).is_ok_and(|r| r.abs() > 1e-8)),
        Event::new(EventKind::SingularAngle, Crossing::Falling, |_s, y: &[f64; 4]| {
            y[2].sin().abs() - SINGULAR_EVENT_SIN
        })
        .terminal()
        .guarded(move |_s, y: &[f64; 4]| angle_gap(lambda, y[2]).abs() > SINGULAR_EVENT_SIN),
        Event::new(EventKind::BlowUp, Crossing::Falling, |_s, y: &[f64; 4]| {
            BLOW_UP - y[0].abs().max(y[1].abs())
        })
        .terminal(),
    ];
    let opts = StepOptions::with_tol(tol);
    let run = ode::integrate(&sys, start.s, start.to_array(), s_end, &opts, &events);
    let samples: Vec<ProfileState> = run.steps.iter().map(|&(s, y)| ProfileState::from_array(s, y)).collect();
    let mut evs: Vec<ProfileEvent> = run
        .events
        .iter()
        .map(|h| ProfileEvent {
            kind: h.label,
            state: ProfileState::from_array(h.s, h.y),
            terminal: h.terminal,
        })
        .collect();
    let last = *samples.last().expect("run keeps the start");
    let end = match run.end {
        RunEnd::Terminal(_) => *evs.last().expect("terminal event recorded"),
        RunEnd::Reached | RunEnd::MaxSteps => {
            let e = ProfileEvent {
                kind: EventKind::Budget,
                state: last,
                terminal: true,
            };
            evs.push(e);
            e
        }
        RunEnd::StepFailure { s, h } => {
            if last.theta.sin().abs() < 1e-3 {
                let e = ProfileEvent {
                    kind: EventKind::SingularAngle,
                    state: last,
                    terminal: true,
                };
                evs.push(e);
                e
            } else {
                return Err(ProfileError::StepFailure { s, h });
            }
        }
    };
    Ok(Branch {
        samples,
        events: evs,
        end,
    })
}

/// Integrates forward from `start` up to `s_max` or the first terminal
/// event (axis crossing, singular angle, blow-up).
pub fn integrate(lambda: f64, start: ProfileState, s_max: f64, tol: f64) -> Result<Trajectory, ProfileError> {
    check_tol(tol)?;
    rhs(lambda, &start)?;
    let b = run_branch(lambda, start, s_max.max(start.s), tol)?;
    Ok(Trajectory {
        lambda,
        samples: b.samples,
        events: b.events,
        origin: Origin::Regular,
        anchor: start,
        forward_end: b.end,
        backward_end: None,
    })
}

/// Integrates in both directions from `start`, over `[start.s − s_back, start.s + s_fwd]`.
pub fn integrate_two_sided(
    lambda: f64,
    start: ProfileState,
    s_back: f64,
    s_fwd: f64,
    tol: f64,
) -> Result<Trajectory, ProfileError> {
    check_tol(tol)?;
    rhs(lambda, &start)?;
    let back = run_branch(lambda, start, start.s - s_back.abs(), tol)?;
    let fwd = run_branch(lambda, start, start.s + s_fwd.abs(), tol)?;
    let mut samples: Vec<ProfileState> = back.samples.into_iter().rev().collect();
    samples.extend(fwd.samples.into_iter().skip(1));
    let mut events: Vec<ProfileEvent> = back.events.into_iter().rev().collect();
    events.extend(fwd.events);
    Ok(Trajectory {
        lambda,
        samples,
        events,
        origin: Origin::Regular,
        anchor: start,
        forward_end: fwd.end,
        backward_end: Some(back.end),
    })
}

/// Profile leaving the axis orthogonally at the origin. The axis piece
/// comes from the Picard solution; sign `−1` selects the reflected branch.
pub fn integrate_from_axis(lambda: f64, s_max: f64, tol: f64, sign: f64) -> Result<Trajectory, ProfileError> {
    check_tol(tol)?;
    if lambda < -1.0 {
        return Err(ProfileError::NoSolution(lambda));
    }
    let cfg = PicardConfig {
        sign: if sign < 0.0 { -1.0 } else { 1.0 },
        ..PicardConfig::new(lambda)?
    };
    integrate_from_axis_with(&cfg, s_max, tol)
}

/// As [`integrate_from_axis`] with an explicit Picard configuration.
pub fn integrate_from_axis_with(cfg: &PicardConfig, s_max: f64, tol: f64) -> Result<Trajectory, ProfileError> {
    check_tol(tol)?;
    let lambda = cfg.lambda;
    if lambda < -1.0 {
        return Err(ProfileError::NoSolution(lambda));
    }
    let cfg = cfg.clone();
    let sol = singular::solve_picard(&cfg)?;
    let handoff = singular::handoff(&sol)?;
    let mut samples = sol.profile_states(cfg.grid_n / 32);
    samples.pop();
    let b = run_branch(lambda, handoff, s_max.max(handoff.s), tol)?;
    samples.extend(b.samples);
    Ok(Trajectory {
        lambda,
        samples,
        events: b.events,
        origin: Origin::Axis,
        anchor: ProfileState {
            s: 0.0,
            x: 0.0,
            z: 0.0,
            theta: 0.0,
            j: 0.0,
        },
        forward_end: b.end,
        backward_end: None,
    })
}

impl Trajectory {
    /// Finite end of the maximal domain, when a geometric terminal event was reached.
    pub fn omega(&self) -> Option<f64> {
        match self.forward_end.kind {
            EventKind::Budget => None,
            _ => Some(self.forward_end.state.s),
        }
    }

    pub fn last(&self) -> ProfileState {
        *self.samples.last().expect("non-empty trajectory")
    }

    /// Largest `x` over samples and located events.
    pub fn x_max(&self) -> f64 {
        let events = self.events.iter().map(|e| &e.state);
        self.samples
            .iter()
            .chain(events)
            .fold(f64::NEG_INFINITY, |m, p| m.max(p.x))
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &ProfileEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    fn axis_limit_rate(&self) -> f64 {
        let sign = if self.samples.get(1).map_or(1.0, |p| p.theta) < 0.0 {
            -1.0
        } else {
            1.0
        };
        sign * (1.0 + self.lambda).max(0.0).sqrt()
    }

    /// `dθ/ds` at every sample by direct evaluation. The axis point uses its
    /// limit `±√(1+λ)`; singular points give NaN.
    pub fn theta_rates(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|p| {
                if self.origin == Origin::Axis && p.x == 0.0 && p.theta == 0.0 {
                    self.axis_limit_rate()
                } else {
                    theta_rate(self.lambda, p.x, p.theta).unwrap_or(f64::NAN)
                }
            })
            .collect()
    }

    /// `(1 − cos θ) − x²/2 − λ∫x ds` at every sample, for axis starts.
    pub fn first_integral_residual(&self) -> Result<Vec<f64>, ProfileError> {
        let first = self.samples[0];
        if self.origin != Origin::Axis || first.s != 0.0 || first.x != 0.0 || first.z != 0.0 || first.theta != 0.0 {
            return Err(ProfileError::WrongInitialConditions);
        }
        Ok(self.conserved_drift())
    }

    /// Change of `−cos θ − x²/2 − λJ` relative to the anchor. Equals the
    /// first-integral residual for axis starts.
    pub fn conserved_drift(&self) -> Vec<f64> {
        let a = self.anchor;
        let l = self.lambda;
        self.samples
            .iter()
            .map(|p| {
                // cos θ₀ − cos θ = 2 sin((θ+θ₀)/2) sin((θ−θ₀)/2)
                let dcos = 2.0 * (0.5 * (p.theta + a.theta)).sin() * (0.5 * (p.theta - a.theta)).sin();
                dcos - 0.5 * (p.x * p.x - a.x * a.x) - l * (p.j - a.j)
            })
            .collect()
    }

    /// `ln|θ′|` and the sign of `θ′` from `cos θ + λ = δ₀ e^{−(J−J₀)}`; free
    /// of underflow where the direct value is below roundoff.
    pub fn certified_rate(&self, p: &ProfileState) -> (f64, f64) {
        let d0 = angle_gap(self.lambda, self.anchor.theta);
        let sn = p.theta.sin();
        let sign = d0.signum() * p.x.signum() * sn.signum();
        let log = p.x.abs().ln() + d0.abs().ln() - (p.j - self.anchor.j) - sn.abs().ln();
        (log, sign)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "s,x,z,theta,dtheta_ds,first_integral_residual").unwrap();
        let rates = self.theta_rates();
        let drift = self.conserved_drift();
        for (i, p) in self.samples.iter().enumerate() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                p.s, p.x, p.z, p.theta, rates[i], drift[i]
            )
            .unwrap();
        }
        for e in &self.events {
            let p = e.state;
            writeln!(
                out,
                "#event {} s={:.16e} x={:.16e} z={:.16e} theta={:.16e}",
                e.kind.as_str(),
                p.s,
                p.x,
                p.z,
                p.theta
            )
            .unwrap();
        }
        out
    }
}

/// True iff `dθ/ds > 0` at every sample. Where `|cos θ + λ|` is at roundoff
/// level the sign comes from the exponential identity instead.
pub fn convexity_check(traj: &Trajectory) -> bool {
    let rates = traj.theta_rates();
    traj.samples.iter().zip(rates).all(|(p, rate)| {
        let regular = angle_gap(traj.lambda, p.theta).abs() > GAP_FLOOR && p.x.abs() >= AXIS_TOL && rate.is_finite();
        if regular || (traj.origin == Origin::Axis && p.x == 0.0 && p.theta == 0.0) {
            rate > 0.0
        } else if p.x.abs() < AXIS_TOL {
            // endpoint on the axis: sign of the curvature of the closing arc
            angle_gap(traj.lambda, traj.anchor.theta).signum() * p.theta.sin().signum() > 0.0
        } else {
            let (log, sign) = traj.certified_rate(p);
            sign > 0.0 && log.is_finite()
        }
    })
}

/// Reflection `z ↦ −z`, `θ ↦ −θ`; the image solves the same system.
pub fn mirror(traj: &Trajectory) -> Trajectory {
    let flip = |p: &ProfileState| ProfileState {
        z: -p.z,
        theta: -p.theta,
        ..*p
    };
    let flip_event = |e: &ProfileEvent| ProfileEvent {
        state: flip(&e.state),
        ..*e
    };
    Trajectory {
        lambda: traj.lambda,
        samples: traj.samples.iter().map(flip).collect(),
        events: traj.events.iter().map(flip_event).collect(),
        origin: traj.origin,
        anchor: flip(&traj.anchor),
        forward_end: flip_event(&traj.forward_end),
        backward_end: traj.backward_end.as_ref().map(flip_event),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    AxisOrthogonal,
    Equator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ReintersectsAxisNonorthogonal,
    AsymptoticToCylinder,
    EntireConvexGraph,
    LambdaMinusOneGraph,
    SaddleBounded,
    HorizontalPlane,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ReintersectsAxisNonorthogonal => "reintersects_axis_nonorthogonal",
            Regime::AsymptoticToCylinder => "asymptotic_to_cylinder",
            Regime::EntireConvexGraph => "entire_convex_graph",
            Regime::LambdaMinusOneGraph => "lambda_minus_one_graph",
            Regime::SaddleBounded => "saddle_bounded",
            Regime::HorizontalPlane => "horizontal_plane",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub lambda: f64,
    pub start: StartMode,
    /// `None` for equator starts with `λ > −1`, which no regime describes.
    pub regime: Option<Regime>,
    pub witnesses: BTreeMap<&'static str, f64>,
    pub trajectory: Trajectory,
}

impl ClassificationReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "lambda={:.16e}", self.lambda).unwrap();
        let start = match self.start {
            StartMode::AxisOrthogonal => "axis",
            StartMode::Equator => "equator",
        };
        writeln!(out, "start={start}").unwrap();
        writeln!(out, "regime={}", self.regime.map_or("none", Regime::as_str)).unwrap();
        writeln!(out, "forward_end={}", self.trajectory.forward_end.kind.as_str()).unwrap();
        if let Some(b) = self.trajectory.backward_end {
            writeln!(out, "backward_end={}", b.kind.as_str()).unwrap();
        }
        for (k, v) in &self.witnesses {
            writeln!(out, "{k}={v:.16e}").unwrap();
        }
        out
    }
}

/// Variation `max − min` of `f` over samples with `s` in the trailing 20%
/// of `[s_lo, s_hi]`.
fn trailing_variation(traj: &Trajectory, s_lo: f64, s_hi: f64, f: impl Fn(&ProfileState) -> f64) -> f64 {
    let cut = s_hi - 0.2 * (s_hi - s_lo);
    let vals = traj.samples.iter().filter(|p| p.s >= cut).map(f);
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Variation of `z` over samples whose `x` lies in the last decade `[X/10, X]`
/// of the forward branch, `X` its final `x`.
pub fn last_decade_z_variation(traj: &Trajectory) -> f64 {
    let x_end = traj.forward_end.state.x;
    let vals = traj
        .samples
        .iter()
        .filter(|p| p.s >= traj.anchor.s && p.x >= 0.1 * x_end)
        .map(|p| p.z);
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

pub const ASYMPTOTE_TOL: f64 = 1e-4;

/// Runs the profile and reads off its regime from the event pattern.
pub fn classify(lambda: f64, start: StartMode, budget: f64, tol: f64) -> Result<ClassificationReport, ProfileError> {
    classify_with(lambda, start, budget, tol, None)
}

/// As [`classify`]; axis starts use `picard` when given.
pub fn classify_with(
    lambda: f64,
    start: StartMode,
    budget: f64,
    tol: f64,
    picard: Option<&PicardConfig>,
) -> Result<ClassificationReport, ProfileError> {
    let mut w = BTreeMap::new();
    let (traj, regime) = match start {
        StartMode::AxisOrthogonal => {
            let traj = match picard {
                Some(cfg) => integrate_from_axis_with(cfg, budget, tol)?,
                None => integrate_from_axis(lambda, budget, tol, 1.0)?,
            };
            let end = traj.forward_end;
            w.insert("x_max", traj.x_max());
            w.insert("s_end", end.state.s);
            w.insert("theta_end", end.state.theta);
            let regime = if lambda == -1.0 {
                w.insert("z_max_abs", traj.samples.iter().fold(0.0f64, |m, p| m.max(p.z.abs())));
                Regime::HorizontalPlane
            } else if lambda > 0.0 {
                if end.kind != EventKind::AxisCrossing {
                    return Err(ProfileError::Inconclusive(format!(
                        "no axis crossing within s ≤ {budget} (ended by {})",
                        end.kind.as_str()
                    )));
                }
                if let Some(eq) = traj.events_of(EventKind::Equator).next() {
                    w.insert("s_equator", eq.state.s);
                    w.insert("x_equator", eq.state.x);
                }
                Regime::ReintersectsAxisNonorthogonal
            } else {
                if end.kind != EventKind::Budget {
                    return Err(ProfileError::Inconclusive(format!(
                        "run ended early by {} at s = {}",
                        end.kind.as_str(),
                        end.state.s
                    )));
                }
                if lambda == 0.0 {
                    let var = trailing_variation(&traj, 0.0, budget, |p| p.x);
                    w.insert("trailing_x_variation", var);
                    w.insert("limit_radius", end.state.x);
                    if var >= ASYMPTOTE_TOL {
                        return Err(ProfileError::Inconclusive(format!("x still varies by {var:e}")));
                    }
                    Regime::AsymptoticToCylinder
                } else {
                    let var = trailing_variation(&traj, 0.0, budget, |p| p.theta);
                    w.insert("trailing_theta_variation", var);
                    w.insert("limit_angle", end.state.theta);
                    w.insert("expected_angle", (-lambda).acos());
                    w.insert("x_end", end.state.x);
                    w.insert("z_end", end.state.z);
                    if var >= ASYMPTOTE_TOL {
                        return Err(ProfileError::Inconclusive(format!("θ still varies by {var:e}")));
                    }
                    Regime::EntireConvexGraph
                }
            };
            (traj, Some(regime))
        }
        StartMode::Equator => {
            let traj = integrate_two_sided(lambda, ProfileState::equator(), budget, budget, tol)?;
            let fwd = traj.forward_end;
            let back = traj.backward_end.expect("two-sided run");
            w.insert("s_forward_end", fwd.state.s);
            w.insert("s_backward_end", back.state.s);
            w.insert("x_max", traj.x_max());
            w.insert("theta_forward_end", fwd.state.theta);
            w.insert("theta_backward_end", back.state.theta);
            let finite = |e: &ProfileEvent| e.kind != EventKind::Budget && e.kind != EventKind::BlowUp;
            let regime = if lambda == -1.0 {
                let zvar = last_decade_z_variation(&traj);
                w.insert("x_forward_end", fwd.state.x);
                w.insert("last_decade_z_variation", zvar);
                if fwd.kind == EventKind::Budget && finite(&back) && fwd.state.theta < traj.anchor.theta {
                    Some(Regime::LambdaMinusOneGraph)
                } else {
                    return Err(ProfileError::Inconclusive("λ = −1 branch pattern not observed".into()));
                }
            } else if lambda < -1.0 {
                if finite(&fwd) && finite(&back) {
                    Some(Regime::SaddleBounded)
                } else {
                    return Err(ProfileError::Inconclusive("a branch did not end at finite s".into()));
                }
            } else {
                None
            };
            (traj, regime)
        }
    };
    Ok(ClassificationReport {
        lambda,
        start,
        regime,
        witnesses: w,
        trajectory: traj,
    })
}

/// Default arc-length budget for [`classify`].
pub fn default_budget(lambda: f64, start: StartMode) -> f64 {
    match start {
        StartMode::AxisOrthogonal if lambda < 0.0 => 100.0,
        _ => 50.0,
    }
}

pub fn limit_radius_lambda_zero() -> f64 {
    SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{rotational_patch, ProfileJet};
    use crate::geom::{translator_residual, Vec3};
    use std::f64::consts::PI;

    #[test]
    fn rhs_examples() {
        let eq = ProfileState::equator();
        let r = rhs(0.0, &eq).unwrap();
        assert!(r[0].abs() < 1e-15 && r[1] == 1.0 && r[2].abs() < 1e-15);
        let axis = ProfileState { x: 0.0, ..eq };
        let r = rhs(3.0, &axis).unwrap();
        assert!(r[0].abs() < 1e-16 && r[1] == 1.0 && r[2] == 0.0);
        assert!((rhs(2.0, &eq).unwrap()[2] - 2.0).abs() < 1e-15);
        let near = ProfileState { theta: 1e-9, ..eq };
        assert!(rhs(0.5, &near).unwrap()[2] > 1e8);
        let sing = ProfileState { theta: 0.0, ..eq };
        assert!(matches!(rhs(0.5, &sing), Err(ProfileError::SingularAngle { .. })));
        // removable at λ = −1
        assert_eq!(rhs(-1.0, &sing).unwrap()[2], 0.0);
    }

    #[test]
    fn angle_gap_is_accurate() {
        for &t in &[1e-9, 0.3, 1.5, 2.9, PI - 1e-9] {
            assert!((angle_gap(0.25, t) - (t.cos() + 0.25)).abs() < 1e-15);
        }
        assert!(angle_gap(-1.0, 1e-9) < 0.0);
    }

    #[test]
    fn axis_run_lambda_one_reaches_axis() {
        let traj = integrate_from_axis(1.0, 20.0, 1e-10, 1.0).unwrap();
        assert_eq!(traj.forward_end.kind, EventKind::AxisCrossing);
        let th = traj.forward_end.state.theta;
        assert!(th > FRAC_PI_2 && th < PI);
        assert!(traj.x_max() < SQRT_2);
        let fi = traj.first_integral_residual().unwrap();
        let worst = fi
            .iter()
            .zip(&traj.samples)
            .map(|(r, p)| r.abs() / (1.0 + p.s))
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst:e}");
        assert!(convexity_check(&traj));
    }

    #[test]
    fn flat_solution_for_lambda_minus_one() {
        let traj = integrate_from_axis(-1.0, 10.0, 1e-10, 1.0).unwrap();
        assert!(traj.samples.iter().all(|p| p.z == 0.0 && p.theta == 0.0));
        assert_eq!(traj.forward_end.kind, EventKind::Budget);
    }

    #[test]
    fn regular_start_has_no_first_integral() {
        let traj = integrate(0.5, ProfileState::equator(), 1.0, 1e-10).unwrap();
        assert!(matches!(
            traj.first_integral_residual(),
            Err(ProfileError::WrongInitialConditions)
        ));
        assert!(traj.conserved_drift().iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn tolerance_range_enforced() {
        assert!(matches!(
            integrate(0.0, ProfileState::equator(), 1.0, 1e-2),
            Err(ProfileError::BadTolerance(_))
        ));
    }

    #[test]
    fn mirror_is_involution_and_solves_same_system() {
        let traj = integrate(
            0.7,
            ProfileState {
                theta: 1.0,
                ..ProfileState::equator()
            },
            2.0,
            1e-10,
        )
        .unwrap();
        let m = mirror(&traj);
        assert_eq!(mirror(&m), traj);
        for p in m.samples.iter().step_by(7) {
            let state = *p;
            // local quadratic profile through the sample, exact second jet
            let rate = theta_rate(0.7, state.x, state.theta).unwrap();
            let patch = rotational_patch(state.s - 0.1, state.s + 0.1, move |s| {
                let d = s - state.s;
                let (sn, cs) = state.theta.sin_cos();
                ProfileJet {
                    x: [
                        state.x + cs * d - 0.5 * sn * rate * d * d,
                        cs - sn * rate * d,
                        -sn * rate,
                    ],
                    z: [
                        state.z + sn * d + 0.5 * cs * rate * d * d,
                        sn + cs * rate * d,
                        cs * rate,
                    ],
                }
            });
            let r = translator_residual(&patch, Vec3::E3, 0.7, state.s, 0.4).unwrap();
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let traj = integrate_from_axis(1.0, 20.0, 1e-8, 1.0).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "s,x,z,theta,dtheta_ds,first_integral_residual");
        assert!(csv.lines().any(|l| l.starts_with("#event axis_crossing")));
        assert_eq!(
            csv.lines().filter(|l| !l.starts_with('#')).count(),
            traj.samples.len() + 1
        );
    }

    #[test]
    fn samples_strictly_increasing() {
        let traj = integrate_two_sided(-2.0, ProfileState::equator(), 20.0, 20.0, 1e-10).unwrap();
        assert!(traj.samples.windows(2).all(|w| w[1].s > w[0].s));
    }
}
