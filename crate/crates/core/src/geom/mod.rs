//! Ambient vector algebra, curve frames, parametrized surfaces and the
//! pointwise translator residual `K − ⟨N, v⟩ − λ`.

mod curve;
mod patch;
mod vec3;

pub use curve::{circular_helix, frenet_frame, CurveJet, FrenetFrame, SpaceCurve};
pub use patch::{ParamRect, PatchJet, SurfacePatch};
pub use vec3::Vec3;

use thiserror::Error;

/// Threshold on `|∂s × ∂t|` and on curve curvature below which a point is
/// treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate surface point at ({s}, {t}): |∂s × ∂t| = {cross_norm:e}")]
    DegeneratePoint { s: f64, t: f64, cross_norm: f64 },
    #[error("parameter ({s}, {t}) outside the patch rectangle")]
    OutsideDomain { s: f64, t: f64 },
    #[error("curvature {kappa:e} too small for a Frenet frame")]
    VanishingCurvature { kappa: f64 },
    #[error("curve is not regular (zero velocity)")]
    SingularCurve,
    #[error("speed vector must be a unit vector, got norm {0}")]
    NonUnitSpeed(f64),
}

/// Finite-difference step used throughout: `1e-4·(1+|x|)`.
pub(crate) fn fd_step(x: f64) -> f64 {
    1e-4 * (1.0 + x.abs())
}

/// First and second fundamental forms at a point, with the unit normal used
/// to project the second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub normal: Vec3,
}

impl FundamentalForms {
    pub fn from_jet(jet: &PatchJet, orientation: f64, s: f64, t: f64) -> Result<Self, GeomError> {
        let cross = jet.ds.cross(jet.dt);
        let cross_norm = cross.norm();
        if !(cross_norm >= DEGENERACY_TOL) {
            return Err(GeomError::DegeneratePoint { s, t, cross_norm });
        }
        let normal = cross * (orientation / cross_norm);
        Ok(FundamentalForms {
            e: jet.ds.dot(jet.ds),
            f: jet.ds.dot(jet.dt),
            g: jet.dt.dot(jet.dt),
            l: jet.dss.dot(normal),
            m: jet.dst.dot(normal),
            n: jet.dtt.dot(normal),
            normal,
        })
    }

    /// `EG − F²`, the squared area element.
    pub fn metric_determinant(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    pub fn area_element(&self) -> f64 {
        self.metric_determinant().max(0.0).sqrt()
    }

    pub fn gauss_curvature(&self) -> f64 {
        (self.l * self.n - self.m * self.m) / self.metric_determinant()
    }
}

fn check_domain(patch: &SurfacePatch, s: f64, t: f64) -> Result<(), GeomError> {
    if patch.rect().contains(s, t) {
        Ok(())
    } else {
        Err(GeomError::OutsideDomain { s, t })
    }
}

pub fn fundamental_forms(patch: &SurfacePatch, s: f64, t: f64) -> Result<FundamentalForms, GeomError> {
    check_domain(patch, s, t)?;
    FundamentalForms::from_jet(&patch.jet(s, t), patch.orientation(), s, t)
}

/// Gauss curvature `(LN − M²)/(EG − F²)`.
pub fn gauss_curvature(patch: &SurfacePatch, s: f64, t: f64) -> Result<f64, GeomError> {
    Ok(fundamental_forms(patch, s, t)?.gauss_curvature())
}

pub fn unit_normal(patch: &SurfacePatch, s: f64, t: f64) -> Result<Vec3, GeomError> {
    check_domain(patch, s, t)?;
    let jet = patch.jet(s, t);
    let cross = jet.ds.cross(jet.dt);
    let cross_norm = cross.norm();
    if !(cross_norm >= DEGENERACY_TOL) {
        return Err(GeomError::DegeneratePoint { s, t, cross_norm });
    }
    Ok(cross * (patch.orientation() / cross_norm))
}

/// `K − ⟨N, v⟩ − λ`; vanishes exactly where the surface satisfies the
/// translator equation for speed `v` with the patch orientation.
pub fn translator_residual(patch: &SurfacePatch, v: Vec3, lambda: f64, s: f64, t: f64) -> Result<f64, GeomError> {
    let vn = v.norm();
    if (vn - 1.0).abs() > 1e-9 {
        return Err(GeomError::NonUnitSpeed(vn));
    }
    let ff = fundamental_forms(patch, s, t)?;
    Ok(ff.gauss_curvature() - ff.normal.dot(v) - lambda)
}

/// Maximum of `|translator_residual|` over a uniform `n × n` grid of the
/// patch rectangle.
pub fn max_abs_residual(patch: &SurfacePatch, v: Vec3, lambda: f64, n: usize) -> Result<f64, GeomError> {
    let rect = patch.rect();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let (s, t) = rect.node(i, n, j, n);
            worst = worst.max(translator_residual(patch, v, lambda, s, t)?.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_sphere() -> SurfacePatch {
        SurfacePatch::from_position(ParamRect::new(0.1, PI - 0.1, 0.0, 2.0 * PI), |s, t| {
            Vec3::new(s.sin() * t.cos(), s.sin() * t.sin(), s.cos())
        })
    }

    fn profile_patch(x: fn(f64) -> (f64, f64, f64), z: fn(f64) -> (f64, f64, f64), rect: ParamRect) -> SurfacePatch {
        SurfacePatch::from_jet(rect, move |s, t| {
            let (x0, x1, x2) = x(s);
            let (z0, z1, z2) = z(s);
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

    #[test]
    fn sphere_forms() {
        let sphere = unit_sphere();
        for &(s, t) in &[(0.5, 0.3), (1.2, 4.0), (2.9, 6.0)] {
            let ff = fundamental_forms(&sphere, s, t).unwrap();
            assert!(ff.metric_determinant() > 0.0);
            let k = ff.gauss_curvature();
            assert!((k - 1.0).abs() < 1e-6, "K = {k}");
        }
    }

    #[test]
    fn plane_has_zero_second_form_and_up_normal() {
        let plane = SurfacePatch::from_position(ParamRect::new(-1.0, 1.0, -1.0, 1.0), |s, t| Vec3::new(s, t, 0.0));
        let ff = fundamental_forms(&plane, 0.2, -0.4).unwrap();
        assert_eq!((ff.l, ff.m, ff.n), (0.0, 0.0, 0.0));
        assert_eq!(unit_normal(&plane, 0.2, -0.4).unwrap(), Vec3::E3);
    }

    #[test]
    fn circle_profile_revolves_to_unit_sphere() {
        // x = cos s, z = sin s: K = (z'/x)κ = (cos s / cos s)·1 = 1.
        let patch = profile_patch(
            |s| (s.cos(), -s.sin(), -s.cos()),
            |s| (s.sin(), s.cos(), -s.sin()),
            ParamRect::new(-1.4, 1.4, 0.0, 2.0 * PI),
        );
        for i in 0..15 {
            let s = -1.3 + 0.18 * i as f64;
            let t = 0.4 * i as f64;
            assert!((gauss_curvature(&patch, s, t).unwrap() - 1.0).abs() < 1e-12);
            let fd = patch.without_derivatives();
            assert!((gauss_curvature(&fd, s, t).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rotational_normal_formula() {
        // N = (−z' cos t, −z' sin t, x') for the profile x = 1 + s², z = s.
        let patch = profile_patch(
            |s| (1.0 + s * s, 2.0 * s, 2.0),
            |s| (s, 1.0, 0.0),
            ParamRect::new(-1.0, 1.0, 0.0, 2.0 * PI),
        );
        for &(s, t) in &[(0.3f64, 1.0f64), (-0.7, 5.0)] {
            let speed = (4.0 * s * s + 1.0f64).sqrt();
            let (x1, z1) = (2.0 * s / speed, 1.0 / speed);
            let expected = Vec3::new(-z1 * t.cos(), -z1 * t.sin(), x1);
            assert!((unit_normal(&patch, s, t).unwrap() - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn cylinder_is_flat() {
        let cyl = SurfacePatch::from_position(ParamRect::new(0.0, 2.0 * PI, -1.0, 1.0), |s, t| {
            Vec3::new(s.cos(), s.sin(), t)
        });
        assert!(gauss_curvature(&cyl, 1.0, 0.3).unwrap().abs() < 1e-7);
        assert!(translator_residual(&cyl, Vec3::E3, 0.0, 1.0, 0.3).unwrap().abs() < 1e-7);
    }

    #[test]
    fn degenerate_and_outside_points() {
        let cone_apex = SurfacePatch::from_position(ParamRect::new(0.0, 1.0, 0.0, 2.0 * PI), |s, t| {
            Vec3::new(s * t.cos(), s * t.sin(), s)
        });
        assert!(matches!(
            fundamental_forms(&cone_apex, 0.0, 1.0),
            Err(GeomError::DegeneratePoint { .. })
        ));
        assert!(matches!(
            unit_normal(&cone_apex, 2.0, 1.0),
            Err(GeomError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn orientation_covariance() {
        let patch = unit_sphere();
        let flipped = patch.clone().reversed();
        let v = Vec3::new(0.6, 0.0, 0.8);
        for &(s, t) in &[(0.4, 0.1), (FRAC_PI_2, 3.0), (2.5, 5.5)] {
            let k = gauss_curvature(&patch, s, t).unwrap();
            let r = translator_residual(&patch, v, 0.3, s, t).unwrap();
            // reversed orientation with speed −v and the same λ
            let r_flip = translator_residual(&flipped, -v, 0.3, s, t).unwrap();
            assert!((r - r_flip).abs() < 1e-12);
            // r(v, λ) + r(−v, −λ) = 2K on a fixed orientation
            let r_neg = translator_residual(&patch, -v, -0.3, s, t).unwrap();
            assert!((r + r_neg - 2.0 * k).abs() < 1e-12);
        }
    }

    #[test]
    fn non_unit_speed_rejected() {
        let patch = unit_sphere();
        assert!(matches!(
            translator_residual(&patch, Vec3::new(0.0, 0.0, 2.0), 0.0, 1.0, 1.0),
            Err(GeomError::NonUnitSpeed(_))
        ));
    }
}
