//! The autonomous system `x′ = cos θ`, `θ′ = x(cos θ + λ)/sin θ` on `ℝ × (0, π)`,
//! its singular point `(0, π/2)` and sampled portraits.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use nalgebra::{Complex, Matrix2};
use thiserror::Error;

use crate::profile::{self, ProfileError, ProfileState};

/// Required `sin θ` margin from the domain boundary.
pub const DOMAIN_MARGIN: f64 = 1e-6;
/// Offset of the near-axis canonical seed.
pub const AXIS_SEED_OFFSET: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("θ = {theta} within {DOMAIN_MARGIN:e} of the domain boundary")]
    DomainBoundary { theta: f64 },
    #[error("rectangle must lie in ℝ × (0, π) with positive extent")]
    BadRectangle,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

pub fn vector_field(lambda: f64, x: f64, theta: f64) -> Result<(f64, f64), PhaseError> {
    let sn = theta.sin();
    if !(theta > 0.0 && theta < PI) || sn < DOMAIN_MARGIN {
        return Err(PhaseError::DomainBoundary { theta });
    }
    let dtheta = profile::theta_rate(lambda, x, theta).map_err(|_| PhaseError::DomainBoundary { theta })?;
    Ok((theta.cos(), dtheta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Center,
    Saddle,
    Degenerate,
    NodeLike,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Center => "center",
            PointKind::Saddle => "saddle",
            PointKind::Degenerate => "degenerate",
            PointKind::NodeLike => "node_like",
        }
    }

    /// Standard planar classification from a pair of eigenvalues.
    pub fn from_eigenvalues(ev: [Complex<f64>; 2], tol: f64) -> Self {
        let [a, b] = ev;
        if a.norm() <= tol && b.norm() <= tol {
            PointKind::Degenerate
        } else if a.im.abs() > tol && a.re.abs() <= tol && b.re.abs() <= tol {
            PointKind::Center
        } else if a.im.abs() <= tol && b.im.abs() <= tol && a.re * b.re < 0.0 {
            PointKind::Saddle
        } else {
            PointKind::NodeLike
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPointReport {
    pub lambda: f64,
    /// `(x, θ)`.
    pub point: (f64, f64),
    /// `[[0, −1], [λ, 0]]`.
    pub jacobian: Matrix2<f64>,
    /// `±√(−λ)`, ordered by descending real part, then imaginary part.
    pub eigenvalues: [Complex<f64>; 2],
    pub kind: PointKind,
    /// Central-difference Jacobian of [`vector_field`] at the point.
    pub fd_jacobian: Matrix2<f64>,
    /// Eigenvalues of `fd_jacobian` from a numeric decomposition, same ordering.
    pub numeric_eigenvalues: [Complex<f64>; 2],
}

fn order(mut ev: [Complex<f64>; 2]) -> [Complex<f64>; 2] {
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    ev
}

/// Eigenvalues `±√(−λ)` of `[[0, −1], [λ, 0]]`.
pub fn closed_form_eigenvalues(lambda: f64) -> [Complex<f64>; 2] {
    let r = Complex::new(-lambda, 0.0).sqrt();
    order([r, -r])
}

pub fn linearize(lambda: f64) -> SingularPointReport {
    let (x0, t0) = (0.0, FRAC_PI_2);
    let jacobian = Matrix2::new(0.0, -1.0, lambda, 0.0);
    let eigenvalues = closed_form_eigenvalues(lambda);
    let f = |x: f64, t: f64| vector_field(lambda, x, t).expect("interior point");
    let (fxp, fxm) = (f(x0 + FD_STEP, t0), f(x0 - FD_STEP, t0));
    let (ftp, ftm) = (f(x0, t0 + FD_STEP), f(x0, t0 - FD_STEP));
    let h2 = 2.0 * FD_STEP;
    let fd_jacobian = Matrix2::new(
        (fxp.0 - fxm.0) / h2,
        (ftp.0 - ftm.0) / h2,
        (fxp.1 - fxm.1) / h2,
        (ftp.1 - ftm.1) / h2,
    );
    let ne = fd_jacobian.complex_eigenvalues();
    let numeric_eigenvalues = order([ne[0], ne[1]]);
    SingularPointReport {
        lambda,
        point: (x0, t0),
        jacobian,
        eigenvalues,
        kind: PointKind::from_eigenvalues(eigenvalues, 1e-12),
        fd_jacobian,
        numeric_eigenvalues,
    }
}

impl SingularPointReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "lambda={:.16e}", self.lambda).unwrap();
        writeln!(out, "point=({:.16e},{:.16e})", self.point.0, self.point.1).unwrap();
        let j = &self.jacobian;
        writeln!(
            out,
            "jacobian=[[{:.16e},{:.16e}],[{:.16e},{:.16e}]]",
            j[(0, 0)],
            j[(0, 1)],
            j[(1, 0)],
            j[(1, 1)]
        )
        .unwrap();
        for (i, e) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "eigenvalue{}={:.16e}{:+.16e}i", i, e.re, e.im).unwrap();
        }
        writeln!(out, "kind={}", self.kind.as_str()).unwrap();
        out
    }
}

/// `[x0, x1] × [θ0, θ1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub theta0: f64,
    pub theta1: f64,
}

impl Rectangle {
    pub fn new(x0: f64, x1: f64, theta0: f64, theta1: f64) -> Result<Self, PhaseError> {
        if !(x1 > x0 && theta1 > theta0 && theta0 > 0.0 && theta1 < PI) {
            return Err(PhaseError::BadRectangle);
        }
        Ok(Rectangle { x0, x1, theta0, theta1 })
    }

    pub fn contains(&self, x: f64, theta: f64) -> bool {
        x >= self.x0 && x <= self.x1 && theta >= self.theta0 && theta <= self.theta1
    }
}

impl Default for Rectangle {
    fn default() -> Self {
        Rectangle {
            x0: -3.0,
            x1: 3.0,
            theta0: DOMAIN_MARGIN,
            theta1: PI - DOMAIN_MARGIN,
        }
    }
}

/// The seeds drawn in every portrait: near the axis start and the equator start.
pub fn canonical_seeds() -> Vec<(f64, f64)> {
    vec![(AXIS_SEED_OFFSET, AXIS_SEED_OFFSET), (1.0, FRAC_PI_2)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitTrajectory {
    pub seed: (f64, f64),
    /// `(s, x, θ)`, increasing in `s`, clipped to the rectangle.
    pub samples: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitGrid {
    pub lambda: f64,
    pub rect: Rectangle,
    pub seeds: Vec<(f64, f64)>,
    pub trajectories: Vec<PortraitTrajectory>,
    /// `(x, θ, dx, dθ)` on a regular grid.
    pub field: Vec<(f64, f64, f64, f64)>,
}

pub const FIELD_NODES: usize = 21;
const PORTRAIT_TOL: f64 = 1e-10;

fn trace(lambda: f64, rect: &Rectangle, seed: (f64, f64), budget: f64) -> Result<PortraitTrajectory, PhaseError> {
    vector_field(lambda, seed.0, seed.1)?;
    let start = ProfileState {
        s: 0.0,
        x: seed.0,
        z: 0.0,
        theta: seed.1,
        j: 0.0,
    };
    let traj = profile::integrate_two_sided(lambda, start, budget, budget, PORTRAIT_TOL)?;
    let centre = traj.samples.iter().position(|p| p.s == 0.0).expect("seed is a sample");
    let inside = |p: &ProfileState| rect.contains(p.x, p.theta) && p.theta.sin() >= DOMAIN_MARGIN;
    let mut lo = centre;
    while lo > 0 && inside(&traj.samples[lo - 1]) {
        lo -= 1;
    }
    let mut hi = centre;
    while hi + 1 < traj.samples.len() && inside(&traj.samples[hi + 1]) {
        hi += 1;
    }
    let samples = traj.samples[lo..=hi].iter().map(|p| (p.s, p.x, p.theta)).collect();
    Ok(PortraitTrajectory { seed, samples })
}

/// Integrates forward and backward from each seed and the canonical seeds.
pub fn sample_portrait(
    lambda: f64,
    rect: Rectangle,
    seeds: &[(f64, f64)],
    budget: f64,
) -> Result<PortraitGrid, PhaseError> {
    let mut all = canonical_seeds();
    for &s in seeds {
        if !all.contains(&s) {
            all.push(s);
        }
    }
    let trajectories = all
        .iter()
        .map(|&seed| trace(lambda, &rect, seed, budget))
        .collect::<Result<Vec<_>, _>>()?;
    let mut field = Vec::with_capacity(FIELD_NODES * FIELD_NODES);
    let n = (FIELD_NODES - 1) as f64;
    for i in 0..FIELD_NODES {
        let x = rect.x0 + (rect.x1 - rect.x0) * i as f64 / n;
        for j in 0..FIELD_NODES {
            let t = rect.theta0 + (rect.theta1 - rect.theta0) * j as f64 / n;
            if let Ok((dx, dt)) = vector_field(lambda, x, t) {
                field.push((x, t, dx, dt));
            }
        }
    }
    Ok(PortraitGrid {
        lambda,
        rect,
        seeds: all,
        trajectories,
        field,
    })
}

impl PortraitGrid {
    /// All trajectories in one CSV; a `#seed` comment line opens each.
    pub fn trajectories_csv(&self) -> String {
        let mut out = String::from("s,x,theta\n");
        for t in &self.trajectories {
            writeln!(out, "#seed x={:.16e} theta={:.16e}", t.seed.0, t.seed.1).unwrap();
            for (s, x, th) in &t.samples {
                writeln!(out, "{s:.16e},{x:.16e},{th:.16e}").unwrap();
            }
        }
        out
    }

    pub fn field_csv(&self) -> String {
        let mut out = String::from("x,theta,dx,dtheta\n");
        for (x, t, dx, dt) in &self.field {
            writeln!(out, "{x:.16e},{t:.16e},{dx:.16e},{dt:.16e}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_examples() {
        let (dx, dt) = vector_field(0.7, 0.0, FRAC_PI_2).unwrap();
        assert!(dx.abs() < 1e-16 && dt == 0.0);
        let (dx, dt) = vector_field(2.0, 1.0, FRAC_PI_2).unwrap();
        assert!(dx.abs() < 1e-16 && (dt - 2.0).abs() < 1e-15);
        let theta = 2.0f64;
        let (_, dt) = vector_field(-theta.cos(), 1.3, theta).unwrap();
        assert!(dt.abs() < 1e-15);
        assert!(matches!(
            vector_field(0.0, 1.0, 1e-7),
            Err(PhaseError::DomainBoundary { .. })
        ));
        assert!(matches!(
            vector_field(0.0, 1.0, -0.5),
            Err(PhaseError::DomainBoundary { .. })
        ));
    }

    #[test]
    fn linearization_kinds() {
        let r = linearize(4.0);
        assert_eq!(r.kind, PointKind::Center);
        assert_eq!(r.eigenvalues, [Complex::new(0.0, 2.0), Complex::new(0.0, -2.0)]);
        let r = linearize(-4.0);
        assert_eq!(r.kind, PointKind::Saddle);
        assert_eq!(r.eigenvalues, [Complex::new(2.0, 0.0), Complex::new(-2.0, 0.0)]);
        assert_eq!(linearize(0.0).kind, PointKind::Degenerate);
        assert_eq!(linearize(-1.0).kind, PointKind::Saddle);
    }

    #[test]
    fn rectangle_validation() {
        assert!(Rectangle::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(Rectangle::new(0.0, 1.0, 0.5, 3.5).is_err());
        assert!(Rectangle::new(0.0, 1.0, 0.5, 2.5).is_ok());
    }

    #[test]
    fn portrait_has_canonical_seeds_and_respects_margin() {
        let p = sample_portrait(1.0, Rectangle::default(), &[(0.5, 1.0)], 10.0).unwrap();
        assert_eq!(p.trajectories.len(), 3);
        for t in &p.trajectories {
            assert!(t.samples.iter().all(|&(_, _, th)| th.sin() >= DOMAIN_MARGIN));
            assert!(t.samples.windows(2).all(|w| w[1].0 > w[0].0));
        }
        assert!(p.field_csv().starts_with("x,theta,dx,dtheta\n"));
        assert!(p.trajectories_csv().starts_with("s,x,theta\n#seed"));
    }
}
