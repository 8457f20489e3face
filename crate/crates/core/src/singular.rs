//! Start of a rotational profile on the axis. The radial graph `u(r)` with
//! `u(0) = u′(0) = 0` is the fixed point of the integral operator
//! `(Tu)′(r) = f⁻¹(√(∫₀ʳ t g(u′(t)) dt))`, found by Picard iteration on a
//! uniform grid, then handed to the arc-length integrator away from the axis.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ode::{integrate, OdeSystem, RhsFailure, RunEnd, StepOptions};
use crate::profile::ProfileState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SingularError {
    #[error("ball radius ε = {epsilon} not admissible for λ = {lambda}")]
    BadEpsilon { lambda: f64, epsilon: f64 },
    #[error("f⁻¹ is only defined on (−1, 1), got {0}")]
    InverseDomain(f64),
    #[error("negative radicand {value:e} at r = {r}")]
    NegativeRadicand { r: f64, value: f64 },
    #[error("no solution meets the axis orthogonally for λ = {0} < −1")]
    NoSolution(f64),
    #[error("Picard iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error("handoff requested from an unconverged solution")]
    NotConverged,
    #[error("grid needs at least 64 intervals, got {0}")]
    GridTooCoarse(usize),
}

/// `f(x) = x/√(1+x²)`.
pub fn auxiliary_f(x: f64) -> f64 {
    x / (1.0 + x * x).sqrt()
}

/// `g(x) = 2/√(1+x²) + 2λ`.
pub fn auxiliary_g(lambda: f64, x: f64) -> f64 {
    2.0 / (1.0 + x * x).sqrt() + 2.0 * lambda
}

/// `f⁻¹(y) = y/√(1−y²)` on `(−1, 1)`.
pub fn auxiliary_f_inv(y: f64) -> Result<f64, SingularError> {
    if !(y.abs() < 1.0) {
        return Err(SingularError::InverseDomain(y));
    }
    Ok(y / (1.0 - y * y).sqrt())
}

pub const DEFAULT_EPSILON: f64 = 0.3;
pub const DEFAULT_GRID: usize = 2048;

/// Largest admissible ball radius bound `√(1−λ²)/(−λ)` for `λ ∈ (−1, 0)`.
fn epsilon_cap(lambda: f64) -> f64 {
    if lambda < 0.0 && lambda > -1.0 {
        (1.0 - lambda * lambda).sqrt() / -lambda
    } else {
        f64::INFINITY
    }
}

/// `0.9·min{1/√M, ε/2, √2 ε/√(M(4+ε²))}` with `M = 2 + 2λ`.
pub fn picard_radius(lambda: f64, epsilon: f64) -> Result<f64, SingularError> {
    if lambda < -1.0 {
        return Err(SingularError::NoSolution(lambda));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) || epsilon >= epsilon_cap(lambda) {
        return Err(SingularError::BadEpsilon { lambda, epsilon });
    }
    let m = 2.0 + 2.0 * lambda;
    let b1 = 1.0 / m.sqrt();
    let b2 = epsilon / 2.0;
    let b3 = 2f64.sqrt() * epsilon / (m * (4.0 + epsilon * epsilon)).sqrt();
    Ok(0.9 * b1.min(b2).min(b3))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub radius: f64,
    pub grid_n: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// `+1` for `u″(0) = +√(1+λ)`, `−1` for the reflected branch.
    pub sign: f64,
}

impl PicardConfig {
    /// Defaults: ε = 0.3 (shrunk to 0.9·√(1−λ²)/(−λ) when that is smaller),
    /// R from [`picard_radius`], 2048 intervals.
    pub fn new(lambda: f64) -> Result<Self, SingularError> {
        let epsilon = DEFAULT_EPSILON.min(0.9 * epsilon_cap(lambda));
        Self::with_epsilon(lambda, epsilon)
    }

    pub fn with_epsilon(lambda: f64, epsilon: f64) -> Result<Self, SingularError> {
        let radius = picard_radius(lambda, epsilon)?;
        Ok(PicardConfig {
            lambda,
            epsilon,
            radius,
            grid_n: DEFAULT_GRID,
            max_iter: 200,
            tol: 1e-13,
            sign: 1.0,
        })
    }

    pub fn m(&self) -> f64 {
        2.0 + 2.0 * self.lambda
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.radius / self.grid_n as f64;
        (0..=self.grid_n).map(|i| i as f64 * h).collect()
    }
}

/// Values and derivatives of a grid function on `r_i = iR/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl GridFunction {
    pub fn zero(n: usize) -> Self {
        GridFunction {
            u: vec![0.0; n + 1],
            du: vec![0.0; n + 1],
        }
    }

    /// `‖u‖_∞ + ‖u′‖_∞`.
    pub fn c1_norm(&self) -> f64 {
        let a = self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b = self.du.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a + b
    }

    pub fn c1_distance(&self, other: &GridFunction) -> f64 {
        let a = self
            .u
            .iter()
            .zip(&other.u)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let b = self
            .du
            .iter()
            .zip(&other.du)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        a + b
    }
}

fn cumulative_trapezoid(h: f64, values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// One application of the operator, both integrals by composite trapezoid.
pub fn apply_t(u: &GridFunction, cfg: &PicardConfig) -> Result<GridFunction, SingularError> {
    let n = cfg.grid_n;
    let h = cfg.radius / n as f64;
    let integrand: Vec<f64> = (0..=n)
        .map(|i| i as f64 * h * auxiliary_g(cfg.lambda, u.du[i]))
        .collect();
    let inner = cumulative_trapezoid(h, &integrand);
    let mut du = Vec::with_capacity(n + 1);
    for (i, &value) in inner.iter().enumerate() {
        if value < 0.0 {
            return Err(SingularError::NegativeRadicand { r: i as f64 * h, value });
        }
        du.push(cfg.sign * auxiliary_f_inv(value.sqrt())?);
    }
    let u = cumulative_trapezoid(h, &du);
    Ok(GridFunction { u, du })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub config: PicardConfig,
    pub r: Vec<f64>,
    pub values: GridFunction,
    pub iterations: usize,
    /// `‖u_{k+1} − u_k‖/‖u_k − u_{k−1}‖` for successive iterates.
    pub contraction_factors: Vec<f64>,
    /// Final successive-iterate C¹ distance.
    pub last_step: f64,
    /// Halvings of R needed before the iteration converged.
    pub radius_halvings: usize,
}

impl PicardSolution {
    pub fn converged(&self) -> bool {
        self.last_step < self.config.tol
    }

    pub fn radius(&self) -> f64 {
        self.config.radius
    }

    /// `u′(r₁)/r₁`, a first-order-in-h² estimate of `u″(0)`.
    pub fn second_derivative_at_axis(&self) -> f64 {
        self.values.du[1] / self.r[1]
    }

    /// `‖u − Tu‖` in the C¹ norm.
    pub fn fixed_point_residual(&self) -> Result<f64, SingularError> {
        Ok(apply_t(&self.values, &self.config)?.c1_distance(&self.values))
    }

    /// Arc length `∫₀ʳ √(1+u′²)` and moment `∫₀ʳ t√(1+u′²)` at each node.
    pub fn arc_length_and_moment(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.config.radius / self.config.grid_n as f64;
        let speed: Vec<f64> = self.values.du.iter().map(|d| (1.0 + d * d).sqrt()).collect();
        let moment: Vec<f64> = speed.iter().zip(&self.r).map(|(v, r)| v * r).collect();
        (cumulative_trapezoid(h, &speed), cumulative_trapezoid(h, &moment))
    }

    /// Profile states at every `stride`-th node, plus the last node.
    pub fn profile_states(&self, stride: usize) -> Vec<ProfileState> {
        let (s, j) = self.arc_length_and_moment();
        let n = self.config.grid_n;
        let mut idx: Vec<usize> = (0..=n).step_by(stride.max(1)).collect();
        if *idx.last().unwrap() != n {
            idx.push(n);
        }
        idx.into_iter()
            .map(|i| ProfileState {
                s: s[i],
                x: self.r[i],
                z: self.values.u[i],
                theta: self.values.du[i].atan(),
                j: j[i],
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# lambda={:.16e}", self.config.lambda).unwrap();
        writeln!(out, "# epsilon={:.16e}", self.config.epsilon).unwrap();
        writeln!(out, "# radius={:.16e}", self.config.radius).unwrap();
        writeln!(out, "# sign={}", if self.config.sign < 0.0 { -1 } else { 1 }).unwrap();
        writeln!(out, "# iterations_used={}", self.iterations).unwrap();
        writeln!(out, "# radius_halvings={}", self.radius_halvings).unwrap();
        writeln!(out, "# last_step={:.16e}", self.last_step).unwrap();
        let factors: Vec<String> = self.contraction_factors.iter().map(|f| format!("{f:.16e}")).collect();
        writeln!(out, "# contraction_factors={}", factors.join(";")).unwrap();
        writeln!(out, "r,u,u_prime").unwrap();
        for (i, r) in self.r.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", r, self.values.u[i], self.values.du[i]).unwrap();
        }
        out
    }
}

fn iterate(cfg: &PicardConfig) -> Result<PicardSolution, SingularError> {
    let mut current = GridFunction::zero(cfg.grid_n);
    let mut factors = Vec::new();
    let mut prev_step = f64::NAN;
    let mut last_step = f64::INFINITY;
    for k in 1..=cfg.max_iter {
        let next = apply_t(&current, cfg)?;
        last_step = next.c1_distance(&current);
        if prev_step.is_finite() && prev_step > 0.0 {
            factors.push(last_step / prev_step);
        }
        prev_step = last_step;
        current = next;
        if last_step < cfg.tol {
            return Ok(PicardSolution {
                config: cfg.clone(),
                r: cfg.grid(),
                values: current,
                iterations: k,
                contraction_factors: factors,
                last_step,
                radius_halvings: 0,
            });
        }
    }
    Err(SingularError::NoConvergence {
        iterations: cfg.max_iter,
        last_step,
    })
}

/// Fixed point of the operator from `u₀ ≡ 0`; on non-convergence the radius
/// is halved, up to five times. `λ = −1` returns `u ≡ 0` directly.
pub fn solve_picard(cfg: &PicardConfig) -> Result<PicardSolution, SingularError> {
    if cfg.lambda < -1.0 {
        return Err(SingularError::NoSolution(cfg.lambda));
    }
    if cfg.grid_n < 64 {
        return Err(SingularError::GridTooCoarse(cfg.grid_n));
    }
    if cfg.lambda == -1.0 {
        return Ok(PicardSolution {
            config: cfg.clone(),
            r: cfg.grid(),
            values: GridFunction::zero(cfg.grid_n),
            iterations: 0,
            contraction_factors: Vec::new(),
            last_step: 0.0,
            radius_halvings: 0,
        });
    }
    let mut cfg = cfg.clone();
    let mut last_err = None;
    for halvings in 0..=5 {
        match iterate(&cfg) {
            Ok(mut sol) => {
                sol.radius_halvings = halvings;
                return Ok(sol);
            }
            Err(e @ SingularError::NoConvergence { .. }) => {
                log::debug!("Picard iteration stalled at R = {}, halving", cfg.radius);
                last_err = Some(e);
                cfg.radius *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Maximum of `‖Tu − Tw‖/‖u − w‖` over random pairs in the ε-ball. The
/// samples are polynomials `Σ c_k (r/R)^k`, `k = 2..=5`, scaled into the ball.
pub fn contraction_probe(cfg: &PicardConfig, trials: usize, seed: u64) -> Result<f64, SingularError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = cfg.grid();
    let sample = |rng: &mut ChaCha8Rng| {
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale: f64 = rng.gen_range(0.05..0.99);
        let mut f = GridFunction {
            u: r.iter()
                .map(|&x| {
                    let q = x / cfg.radius;
                    coeffs.iter().enumerate().map(|(k, c)| c * q.powi(k as i32 + 2)).sum()
                })
                .collect(),
            du: r
                .iter()
                .map(|&x| {
                    let q = x / cfg.radius;
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * (k as f64 + 2.0) * q.powi(k as i32 + 1) / cfg.radius)
                        .sum()
                })
                .collect(),
        };
        let norm = f.c1_norm();
        if norm > 0.0 {
            let k = scale * cfg.epsilon / norm;
            f.u.iter_mut().for_each(|v| *v *= k);
            f.du.iter_mut().for_each(|v| *v *= k);
        }
        f
    };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = sample(&mut rng);
        let w = sample(&mut rng);
        let d = u.c1_distance(&w);
        if d == 0.0 {
            continue;
        }
        let ratio = apply_t(&u, cfg)?.c1_distance(&apply_t(&w, cfg)?) / d;
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Regular profile state at `r = R`, ready for the arc-length integrator.
pub fn handoff(sol: &PicardSolution) -> Result<ProfileState, SingularError> {
    if !sol.converged() {
        return Err(SingularError::NotConverged);
    }
    Ok(*sol.profile_states(sol.config.grid_n).last().expect("grid is non-empty"))
}

/// `u″ = r(1+u′²)²(1/√(1+u′²) + λ)/u′`, regular away from the axis.
struct RadialGraph {
    lambda: f64,
}

impl OdeSystem<2> for RadialGraph {
    fn rhs(&self, r: f64, y: &[f64; 2]) -> Result<[f64; 2], RhsFailure> {
        let p = y[1];
        if p.abs() < 1e-14 {
            return Err(RhsFailure("u′ = 0 in radial graph equation".into()));
        }
        let w = 1.0 + p * p;
        Ok([p, r * w * w * (1.0 / w.sqrt() + self.lambda) / p])
    }
}

/// `(u(R), u′(R))` obtained by integrating the radial graph equation from
/// `R/2` with the Picard data there.
pub fn radial_continuation(sol: &PicardSolution, tol: f64) -> Option<(f64, f64)> {
    let n = sol.config.grid_n;
    let mid = n / 2;
    let run = integrate::<_, (), 2>(
        &RadialGraph {
            lambda: sol.config.lambda,
        },
        sol.r[mid],
        [sol.values.u[mid], sol.values.du[mid]],
        sol.r[n],
        &StepOptions::with_tol(tol),
        &[],
    );
    match run.end {
        RunEnd::Reached => {
            let y = run.last().1;
            Some((y[0], y[1]))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auxiliary_functions() {
        assert_eq!(auxiliary_f(0.0), 0.0);
        assert_eq!(auxiliary_f_inv(0.0).unwrap(), 0.0);
        assert_eq!(auxiliary_g(0.7, 0.0), 2.0 + 2.0 * 0.7);
        let y = auxiliary_f(auxiliary_f_inv(0.6).unwrap());
        assert!((y - 0.6).abs() < 1e-15);
        assert!(matches!(auxiliary_f_inv(1.0), Err(SingularError::InverseDomain(_))));
        assert!(matches!(auxiliary_f_inv(-1.5), Err(SingularError::InverseDomain(_))));
    }

    #[test]
    fn radius_bounds() {
        // λ = 3, ε = 0.5: bounds 0.35355, 0.25, 0.12127
        let r = picard_radius(3.0, 0.5).unwrap();
        assert!((r - 0.9 * 0.121_267_812_518_166_4).abs() < 1e-12);
        let r0 = picard_radius(0.0, 0.5).unwrap();
        assert!((r0 - 0.9 * 0.242_535_625_036_332_8).abs() < 1e-12);
        // M → 0: only ε/2 remains
        let r_edge = picard_radius(-1.0 + 1e-12, 0.5f64.min(0.9 * epsilon_cap(-1.0 + 1e-12))).unwrap();
        assert!(r_edge <= 0.9 * 0.25);
        assert!(matches!(picard_radius(0.0, 1.0), Err(SingularError::BadEpsilon { .. })));
        assert!(matches!(
            picard_radius(-0.9, 0.5),
            Err(SingularError::BadEpsilon { .. })
        ));
        assert!(matches!(picard_radius(-2.0, 0.5), Err(SingularError::NoSolution(_))));
    }

    #[test]
    fn first_iterate_for_lambda_zero() {
        // g(0) = 2 so the inner integral is r² and (T0)′(r) = f⁻¹(r)
        let cfg = PicardConfig::new(0.0).unwrap();
        let t0 = apply_t(&GridFunction::zero(cfg.grid_n), &cfg).unwrap();
        for (i, r) in cfg.grid().iter().enumerate() {
            assert!((t0.du[i] - r / (1.0 - r * r).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn lambda_minus_one_is_flat() {
        let cfg = PicardConfig::new(-1.0).unwrap();
        let zero = GridFunction::zero(cfg.grid_n);
        assert_eq!(apply_t(&zero, &cfg).unwrap(), zero);
        let sol = solve_picard(&cfg).unwrap();
        assert!(sol.values.u.iter().all(|&v| v == 0.0));
        let st = handoff(&sol).unwrap();
        assert_eq!((st.z, st.theta), (0.0, 0.0));
    }

    #[test]
    fn no_solution_below_minus_one() {
        let mut cfg = PicardConfig::new(0.0).unwrap();
        cfg.lambda = -2.0;
        assert!(matches!(solve_picard(&cfg), Err(SingularError::NoSolution(_))));
    }

    #[test]
    fn converges_with_axis_curvature() {
        for (lambda, expected) in [(0.0, 1.0), (3.0, 2.0), (-0.5, 0.5f64.sqrt())] {
            let sol = solve_picard(&PicardConfig::new(lambda).unwrap()).unwrap();
            assert!(sol.converged());
            assert!(sol.values.c1_norm() <= sol.config.epsilon);
            assert!((sol.second_derivative_at_axis() - expected).abs() < 1e-4);
            assert!(sol.fixed_point_residual().unwrap() < 1e-12);
        }
    }

    #[test]
    fn negative_branch_is_reflection() {
        let cfg = PicardConfig::new(1.0).unwrap();
        let up = solve_picard(&cfg).unwrap();
        let down = solve_picard(&PicardConfig { sign: -1.0, ..cfg }).unwrap();
        for i in 0..up.r.len() {
            assert_eq!(down.values.u[i], -up.values.u[i]);
        }
    }

    #[test]
    fn contraction_is_strong() {
        let cfg = PicardConfig::new(2.0).unwrap();
        let ratio = contraction_probe(&cfg, 50, 7).unwrap();
        assert!(ratio > 0.0 && ratio <= 0.55, "ratio {ratio}");
        assert_eq!(ratio, contraction_probe(&cfg, 50, 7).unwrap());
    }

    #[test]
    fn radial_equation_agrees_on_outer_half() {
        let sol = solve_picard(&PicardConfig::new(1.0).unwrap()).unwrap();
        let (u, du) = radial_continuation(&sol, 1e-12).unwrap();
        let n = sol.config.grid_n;
        assert!((u - sol.values.u[n]).abs() < 1e-6);
        assert!((du - sol.values.du[n]).abs() < 1e-6);
    }

    #[test]
    fn csv_has_diagnostics_and_rows() {
        let sol = solve_picard(&PicardConfig::new(0.0).unwrap()).unwrap();
        let csv = sol.to_csv();
        assert!(csv.contains("# iterations_used="));
        assert!(csv.lines().any(|l| l == "r,u,u_prime"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), sol.r.len() + 1);
    }
}
