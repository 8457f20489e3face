//! Meshes of surfaces of revolution and of parameter patches, with OBJ output.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geom::{fundamental_forms, GeomError, SurfacePatch, Vec3};
use crate::profile::{ProfileState, Trajectory};

/// Rings with radius below this collapse to a pole vertex.
pub const POLE_RADIUS: f64 = 1e-9;
pub const MIN_FACE_AREA: f64 = 1e-14;
/// Profile samples closer than this (in the x–z plane) to the previous kept
/// sample are skipped.
const MIN_SPACING: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("negative radius x = {x} at s = {s}")]
    NegativeRadius { s: f64, x: f64 },
    #[error("need at least 8 angular steps, got {0}")]
    TooFewSteps(usize),
    #[error("need at least two profile samples")]
    TooFewSamples,
    #[error("need a grid resolution of at least 2, got {0}")]
    BadResolution(usize),
    #[error("face {0} is degenerate")]
    DegenerateFace(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarChannel {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshData {
    pub vertices: Vec<Vec3>,
    /// Zero-based vertex indices; triangles or quads.
    pub faces: Vec<Vec<usize>>,
    pub channel: Option<ScalarChannel>,
}

fn face_area(v: &[Vec3], f: &[usize]) -> f64 {
    let p0 = v[f[0]];
    let mut acc = Vec3::ZERO;
    for k in 1..f.len() - 1 {
        acc += (v[f[k]] - p0).cross(v[f[k + 1]] - p0);
    }
    0.5 * acc.norm()
}

impl MeshData {
    /// Checks index ranges and face areas.
    pub fn validate(&self) -> Result<(), MeshError> {
        for (i, f) in self.faces.iter().enumerate() {
            if f.len() < 3
                || f.iter().any(|&k| k >= self.vertices.len())
                || face_area(&self.vertices, f) <= MIN_FACE_AREA
            {
                return Err(MeshError::DegenerateFace(i));
            }
        }
        Ok(())
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for p in &self.vertices {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).unwrap();
        }
        for f in &self.faces {
            out.push('f');
            for &k in f {
                write!(out, " {}", k + 1).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar CSV of the scalar channel; indices match the OBJ (one-based).
    pub fn channel_csv(&self) -> Option<String> {
        let ch = self.channel.as_ref()?;
        let mut out = String::from("vertex_index,value\n");
        for (i, v) in ch.values.iter().enumerate() {
            writeln!(out, "{},{:.16e}", i + 1, v).unwrap();
        }
        Some(out)
    }
}

/// `dθ/ds` by three-point differences on the (non-uniform) sample grid.
fn angle_derivative(samples: &[ProfileState]) -> Vec<f64> {
    let n = samples.len();
    (0..n)
        .map(|i| {
            let (a, b, c) = match i {
                0 => (0, 1, 2.min(n - 1)),
                _ if i == n - 1 => (n.saturating_sub(3), n - 2, n - 1),
                _ => (i - 1, i, i + 1),
            };
            if a == c || c == b {
                let (p, q) = (&samples[a], &samples[c.max(b)]);
                return (q.theta - p.theta) / (q.s - p.s);
            }
            let (pa, pb, pc) = (&samples[a], &samples[b], &samples[c]);
            let (h1, h2) = (pb.s - pa.s, pc.s - pb.s);
            let x = samples[i].s;
            // derivative of the quadratic interpolant at x
            let da = (2.0 * x - pb.s - pc.s) / (h1 * (h1 + h2));
            let db = (2.0 * x - pa.s - pc.s) / (-h1 * h2);
            let dc = (2.0 * x - pa.s - pb.s) / (h2 * (h1 + h2));
            da * pa.theta + db * pb.theta + dc * pc.theta
        })
        .collect()
}

/// Surface of revolution of the profile samples about the z-axis, with a
/// Gauss curvature channel `K = sin θ·θ′/x` (`θ′²` at orthogonal poles).
pub fn revolve_states(samples: &[ProfileState], angular_steps: usize) -> Result<MeshData, MeshError> {
    if angular_steps < 8 {
        return Err(MeshError::TooFewSteps(angular_steps));
    }
    if let Some(p) = samples.iter().find(|p| p.x < -POLE_RADIUS) {
        return Err(MeshError::NegativeRadius { s: p.s, x: p.x });
    }
    let mut kept: Vec<ProfileState> = Vec::with_capacity(samples.len());
    for (i, p) in samples.iter().enumerate() {
        let last = i + 1 == samples.len();
        match kept.last() {
            Some(q) if (p.x - q.x).hypot(p.z - q.z) < MIN_SPACING => {
                if last {
                    *kept.last_mut().unwrap() = *p;
                }
            }
            _ => kept.push(*p),
        }
    }
    if kept.len() < 2 {
        return Err(MeshError::TooFewSamples);
    }
    let rates = angle_derivative(&kept);
    let m = angular_steps;
    let angles: Vec<(f64, f64)> = (0..m).map(|k| (TAU * k as f64 / m as f64).sin_cos()).collect();
    let mut vertices = Vec::new();
    let mut curvature = Vec::new();
    // ring start index and whether it is a pole
    let mut rings: Vec<(usize, bool)> = Vec::with_capacity(kept.len());
    let ring_k = |i: usize| {
        let p = &kept[i];
        p.theta.sin() * rates[i] / p.x
    };
    for (i, (p, rate)) in kept.iter().zip(&rates).enumerate() {
        let start = vertices.len();
        if p.x.abs() < POLE_RADIUS {
            vertices.push(Vec3::new(0.0, 0.0, p.z));
            // orthogonal meeting: K → θ′²; otherwise the limit along the profile
            let k = if p.theta.sin().abs() < 1e-3 {
                rate * rate
            } else if i > 0 {
                ring_k(i - 1)
            } else {
                ring_k(1)
            };
            curvature.push(k);
            rings.push((start, true));
        } else {
            let k = p.theta.sin() * rate / p.x;
            for &(sn, cs) in &angles {
                vertices.push(Vec3::new(p.x * cs, p.x * sn, p.z));
                curvature.push(k);
            }
            rings.push((start, false));
        }
    }
    let mut faces = Vec::new();
    for w in rings.windows(2) {
        let ((a, pa), (b, pb)) = (w[0], w[1]);
        for k in 0..m {
            let k1 = (k + 1) % m;
            match (pa, pb) {
                (true, true) => {}
                (true, false) => faces.push(vec![a, b + k, b + k1]),
                (false, true) => faces.push(vec![a + k, a + k1, b]),
                (false, false) => faces.push(vec![a + k, a + k1, b + k1, b + k]),
            }
        }
    }
    let mesh = MeshData {
        vertices,
        faces,
        channel: Some(ScalarChannel {
            name: "gauss_curvature".into(),
            values: curvature,
        }),
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn revolve(traj: &Trajectory, angular_steps: usize) -> Result<MeshData, MeshError> {
    revolve_states(&traj.samples, angular_steps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridChannel {
    None,
    GaussCurvature,
    /// `K − ⟨N, v⟩ − λ`.
    Residual {
        v: Vec3,
        lambda: f64,
    },
}

/// Regular `res × res` node grid over the patch rectangle, quad faces.
pub fn grid_mesh(patch: &SurfacePatch, res: usize, channel: GridChannel) -> Result<MeshData, MeshError> {
    if res < 2 {
        return Err(MeshError::BadResolution(res));
    }
    let rect = patch.rect();
    let mut vertices = Vec::with_capacity(res * res);
    let mut values = Vec::with_capacity(res * res);
    for i in 0..res {
        for j in 0..res {
            let (s, t) = rect.node(i, res, j, res);
            let ff = fundamental_forms(patch, s, t)?;
            vertices.push(patch.position(s, t));
            values.push(match channel {
                GridChannel::None => 0.0,
                GridChannel::GaussCurvature => ff.gauss_curvature(),
                GridChannel::Residual { v, lambda } => ff.gauss_curvature() - ff.normal.dot(v) - lambda,
            });
        }
    }
    let mut faces = Vec::with_capacity((res - 1) * (res - 1));
    for i in 0..res - 1 {
        for j in 0..res - 1 {
            let a = i * res + j;
            faces.push(vec![a, a + res, a + res + 1, a + 1]);
        }
    }
    let channel = match channel {
        GridChannel::None => None,
        GridChannel::GaussCurvature => Some(ScalarChannel {
            name: "gauss_curvature".into(),
            values,
        }),
        GridChannel::Residual { .. } => Some(ScalarChannel {
            name: "residual".into(),
            values,
        }),
    };
    let mesh = MeshData {
        vertices,
        faces,
        channel,
    };
    mesh.validate()?;
    Ok(mesh)
}
