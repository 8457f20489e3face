use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::rotational::{line_profile, rotational_patch};
use super::FamilyError;
use crate::geom::{circular_helix, ParamRect, PatchJet, SurfacePatch, Vec3};

/// Margin keeping parameter rectangles away from apex and edge singularities.
pub const SINGULAR_MARGIN: f64 = 1e-3;

fn unit(v: Vec3, what: &str) -> Result<Vec3, FamilyError> {
    let n = v.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(FamilyError::NotUnit(format!("{what} has norm {n}")));
    }
    Ok(v)
}

/// Plane through `point` with unit `normal`; a translator for speed `v` with
/// `λ = −⟨normal, v⟩`.
pub fn make_plane(normal: Vec3, point: Vec3, v: Vec3) -> Result<(SurfacePatch, f64), FamilyError> {
    let normal = unit(normal, "plane normal")?;
    let v = unit(v, "speed")?;
    let (e1, e2) = normal.orthonormal_basis();
    let patch = SurfacePatch::from_jet(ParamRect::new(-1.0, 1.0, -1.0, 1.0), move |s, t| PatchJet {
        position: point + e1 * s + e2 * t,
        ds: e1,
        dt: e2,
        dss: Vec3::ZERO,
        dst: Vec3::ZERO,
        dtt: Vec3::ZERO,
    });
    Ok((patch, -normal.dot(v)))
}

/// Right cylinder over the ellipse with semi-axes `radius` and
/// `radius·aspect`, rulings along `axis`. Flat, with normals orthogonal to
/// the axis, so it is a translator with `λ = 0` for speed `axis`.
pub fn make_elliptic_cylinder(radius: f64, aspect: f64, axis: Vec3) -> Result<(SurfacePatch, f64), FamilyError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(FamilyError::NonPositiveRadius(radius));
    }
    if !(aspect > 0.0 && aspect.is_finite()) {
        return Err(FamilyError::BadParameters(format!(
            "aspect must be positive, got {aspect}"
        )));
    }
    let axis = unit(axis, "cylinder axis")?;
    let (e1, e2) = axis.orthonormal_basis();
    let (a, b) = (radius, radius * aspect);
    let patch = SurfacePatch::from_jet(ParamRect::new(0.0, TAU, -1.0, 1.0), move |s, t| {
        let (sn, cs) = s.sin_cos();
        PatchJet {
            position: e1 * (a * cs) + e2 * (b * sn) + axis * t,
            ds: e1 * (-a * sn) + e2 * (b * cs),
            dt: axis,
            dss: e1 * (-a * cs) + e2 * (-b * sn),
            dst: Vec3::ZERO,
            dtt: Vec3::ZERO,
        }
    });
    Ok((patch, 0.0))
}

pub fn make_cylinder(radius: f64, axis: Vec3) -> Result<(SurfacePatch, f64), FamilyError> {
    make_elliptic_cylinder(radius, 1.0, axis)
}

/// Cone of revolution about the z-axis whose generating lines make angle
/// `theta0` with the horizontal; `λ = −cos θ₀` for speed `(0, 0, 1)`.
pub fn make_cone(theta0: f64) -> Result<(SurfacePatch, f64), FamilyError> {
    if !(theta0 > 0.0 && theta0 < FRAC_PI_2) {
        return Err(FamilyError::BadAngle(theta0));
    }
    let patch = rotational_patch(SINGULAR_MARGIN, 2.0, line_profile(0.0, theta0));
    Ok((patch, -theta0.cos()))
}

/// Surface of revolution generated by a straight line at angle
/// `theta0 ∈ [0, π]` through `(offset, 0)`. Horizontal lines give planes
/// (`λ = ∓1`), vertical ones cylinders (`λ = 0`), the rest cone pieces.
pub fn make_rotational_line(theta0: f64, offset: f64) -> Result<(SurfacePatch, f64), FamilyError> {
    if !(0.0..=PI).contains(&theta0) {
        return Err(FamilyError::BadAngle(theta0));
    }
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(FamilyError::NonPositiveRadius(offset));
    }
    let cs = theta0.cos();
    let length = if cs < 0.0 { (0.9 * offset / -cs).min(2.0) } else { 2.0 };
    let patch = rotational_patch(0.0, length, line_profile(offset, theta0));
    Ok((patch, -cs))
}

/// Tangent developable `γ(s) + t γ′(s)` of the circular helix with radius
/// `a` and pitch parameter `b`, restricted to `t > 0`. Its normal is `−b(s)`
/// (binormal), so `λ = a/√(a²+b²)` for speed `(0, 0, 1)`.
pub fn make_tangent_of_helix(a: f64, b: f64) -> Result<(SurfacePatch, f64), FamilyError> {
    if !(a > 0.0 && a.is_finite()) || b == 0.0 || !b.is_finite() {
        return Err(FamilyError::BadParameters(format!(
            "helix needs a > 0 and b ≠ 0, got a = {a}, b = {b}"
        )));
    }
    let c = (a * a + b * b).sqrt();
    let helix = circular_helix(a, b);
    let patch = SurfacePatch::from_jet(ParamRect::new(0.0, TAU * c, SINGULAR_MARGIN, 2.0), move |s, t| {
        let j = helix.jet(s);
        PatchJet {
            position: j.position + j.d1 * t,
            ds: j.d1 + j.d2 * t,
            dt: j.d1,
            dss: j.d2 + j.d3 * t,
            dst: j.d2,
            dtt: Vec3::ZERO,
        }
    });
    Ok((patch, a / c))
}
