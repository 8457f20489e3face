use std::f64::consts::TAU;

use crate::geom::{ParamRect, PatchJet, SurfacePatch, Vec3};

/// Value, first and second derivative of the two profile coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub x: [f64; 3],
    pub z: [f64; 3],
}

/// Surface of revolution `(x(s) cos t, x(s) sin t, z(s))` about the z-axis.
/// With `x > 0` the normal is `(−z′ cos t, −z′ sin t, x′)/|(x′, z′)|`.
pub fn rotational_patch<F>(s0: f64, s1: f64, profile: F) -> SurfacePatch
where
    F: Fn(f64) -> ProfileJet + Send + Sync + 'static,
{
    SurfacePatch::from_jet(ParamRect::new(s0, s1, 0.0, TAU), move |s, t| {
        let p = profile(s);
        let [x0, x1, x2] = p.x;
        let [z0, z1, z2] = p.z;
        let (st, ct) = t.sin_cos();
        PatchJet {
            position: Vec3::new(x0 * ct, x0 * st, z0),
            ds: Vec3::new(x1 * ct, x1 * st, z1),
            dt: Vec3::new(-x0 * st, x0 * ct, 0.0),
            dss: Vec3::new(x2 * ct, x2 * st, z2),
            dst: Vec3::new(-x1 * st, x1 * ct, 0.0),
            dtt: Vec3::new(-x0 * ct, -x0 * st, 0.0),
        }
    })
}

/// Straight profile through `(offset, 0)` at angle `theta0` from the
/// horizontal, arc-length parametrized.
pub fn line_profile(offset: f64, theta0: f64) -> impl Fn(f64) -> ProfileJet + Send + Sync + Clone {
    let (sn, cs) = theta0.sin_cos();
    move |s| ProfileJet {
        x: [offset + s * cs, cs, 0.0],
        z: [s * sn, sn, 0.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{gauss_curvature, unit_normal};

    #[test]
    fn normal_matches_profile_formula() {
        let patch = rotational_patch(0.1, 1.0, |s| ProfileJet {
            x: [s.cos() + 1.0, -s.sin(), -s.cos()],
            z: [s.sin(), s.cos(), -s.sin()],
        });
        for &(s, t) in &[(0.2, 0.5), (0.9, 4.0)] {
            let n = unit_normal(&patch, s, t).unwrap();
            let expected = Vec3::new(-s.cos() * t.cos(), -s.cos() * t.sin(), -s.sin());
            assert!((n - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn torus_tube_curvature() {
        // tube of radius 1 around a circle of radius 2: K = cos φ/(2 + cos φ)
        let patch = rotational_patch(0.0, TAU, |s| ProfileJet {
            x: [2.0 + s.cos(), -s.sin(), -s.cos()],
            z: [s.sin(), s.cos(), -s.sin()],
        });
        for &s in &[0.0, 1.0, 2.5, 4.0] {
            let k = gauss_curvature(&patch, s, 0.3).unwrap();
            assert!((k - s.cos() / (2.0 + s.cos())).abs() < 1e-12);
        }
    }
}
