use std::sync::Arc;

use super::FamilyError;
use crate::geom::{ParamRect, PatchJet, SurfacePatch, Vec3, DEGENERACY_TOL};

/// Value and first two derivatives of a vector-valued function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecJet {
    pub value: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
}

type VecJetFn = dyn Fn(f64) -> VecJet + Send + Sync;

/// Ruled surface `γ(s) + t w(s)` with arc-length base curve and unit rulings.
#[derive(Clone)]
pub struct RuledSurface {
    base: Arc<VecJetFn>,
    ruling: Arc<VecJetFn>,
    rect: ParamRect,
}

impl std::fmt::Debug for RuledSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RuledSurface").field("rect", &self.rect).finish()
    }
}

const SAMPLES: usize = 16;

impl RuledSurface {
    /// Checks `|γ′| = 1` and `|w| = 1` at sample points of the s-range.
    pub fn new<B, W>(base: B, ruling: W, rect: ParamRect) -> Result<Self, FamilyError>
    where
        B: Fn(f64) -> VecJet + Send + Sync + 'static,
        W: Fn(f64) -> VecJet + Send + Sync + 'static,
    {
        let ruled = RuledSurface {
            base: Arc::new(base),
            ruling: Arc::new(ruling),
            rect,
        };
        for s in ruled.sample_params() {
            let speed = (ruled.base)(s).d1.norm();
            if (speed - 1.0).abs() > 1e-9 {
                return Err(FamilyError::NotUnit(format!("base curve speed {speed} at s = {s}")));
            }
            let len = (ruled.ruling)(s).value.norm();
            if (len - 1.0).abs() > 1e-9 {
                return Err(FamilyError::NotUnit(format!("ruling length {len} at s = {s}")));
            }
        }
        Ok(ruled)
    }

    /// Like [`RuledSurface::new`], additionally requiring `w′ ≠ 0` and the
    /// striction condition `⟨γ′, w′⟩ = 0`.
    pub fn non_cylindrical<B, W>(base: B, ruling: W, rect: ParamRect) -> Result<Self, FamilyError>
    where
        B: Fn(f64) -> VecJet + Send + Sync + 'static,
        W: Fn(f64) -> VecJet + Send + Sync + 'static,
    {
        let ruled = Self::new(base, ruling, rect)?;
        for s in ruled.sample_params() {
            let dw = (ruled.ruling)(s).d1;
            if dw.norm() <= DEGENERACY_TOL {
                return Err(FamilyError::CylindricalRuling);
            }
            let striction = (ruled.base)(s).d1.dot(dw);
            if striction.abs() > 1e-9 {
                return Err(FamilyError::StrictionViolated(striction));
            }
        }
        Ok(ruled)
    }

    fn sample_params(&self) -> impl Iterator<Item = f64> + '_ {
        (0..SAMPLES).map(move |i| self.rect.s0 + (self.rect.s1 - self.rect.s0) * i as f64 / (SAMPLES - 1) as f64)
    }

    pub fn rect(&self) -> ParamRect {
        self.rect
    }

    pub fn base(&self, s: f64) -> VecJet {
        (self.base)(s)
    }

    pub fn ruling(&self, s: f64) -> VecJet {
        (self.ruling)(s)
    }

    pub fn patch(&self) -> SurfacePatch {
        let base = Arc::clone(&self.base);
        let ruling = Arc::clone(&self.ruling);
        SurfacePatch::from_jet(self.rect, move |s, t| {
            let g = base(s);
            let w = ruling(s);
            PatchJet {
                position: g.value + w.value * t,
                ds: g.d1 + w.d1 * t,
                dt: w.value,
                dss: g.d2 + w.d2 * t,
                dst: w.d1,
                dtt: Vec3::ZERO,
            }
        })
    }
}

/// `α = det(γ′, w, w′)/|w′|²`.
pub fn ruled_alpha(ruled: &RuledSurface, s: f64) -> Result<f64, FamilyError> {
    let g = ruled.base(s);
    let w = ruled.ruling(s);
    let dw2 = w.d1.norm_squared();
    if dw2.sqrt() <= DEGENERACY_TOL {
        return Err(FamilyError::CylindricalRuling);
    }
    Ok(Vec3::triple(g.d1, w.value, w.d1) / dw2)
}

/// Gauss curvature `−α²/(α²+t²)²` and unit normal
/// `(α w′ + t w′×w)/(|w′|√(α²+t²))` of a ruled surface in striction
/// parametrization.
pub fn ruled_k_n(ruled: &RuledSurface, s: f64, t: f64) -> Result<(f64, Vec3), FamilyError> {
    let alpha = ruled_alpha(ruled, s)?;
    let q = alpha * alpha + t * t;
    if q <= DEGENERACY_TOL * DEGENERACY_TOL {
        return Err(FamilyError::StrictionPoint { s });
    }
    let w = ruled.ruling(s);
    let k = -alpha * alpha / (q * q);
    let n = (w.d1 * alpha + w.d1.cross(w.value) * t) / (w.d1.norm() * q.sqrt());
    Ok((k, n))
}

/// Non-cylindrical ruled surface with constant rulings speed `omega` and
/// base curve making constant angle `beta` with its ruling:
/// `w = (cos ωs, sin ωs, 0)`, `γ′ = cos β w + sin β e₃`, then rotated by
/// `frame` (columns are the images of e₁, e₂, e₃). Has `α = sin β/ω`.
/// `beta = π/2`, `omega = 1` with the identity frame is the helicoid.
pub fn screw_ruled(beta: f64, omega: f64, frame: [Vec3; 3], rect: ParamRect) -> Result<RuledSurface, FamilyError> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(FamilyError::CylindricalRuling);
    }
    let rot = move |v: Vec3| frame[0] * v.x + frame[1] * v.y + frame[2] * v.z;
    let (sb, cb) = beta.sin_cos();
    RuledSurface::non_cylindrical(
        move |s| {
            let (sn, cs) = (omega * s).sin_cos();
            VecJet {
                value: rot(Vec3::new(cb * sn / omega, -cb * cs / omega, sb * s)),
                d1: rot(Vec3::new(cb * cs, cb * sn, sb)),
                d2: rot(Vec3::new(-cb * omega * sn, cb * omega * cs, 0.0)),
            }
        },
        move |s| {
            let (sn, cs) = (omega * s).sin_cos();
            VecJet {
                value: rot(Vec3::new(cs, sn, 0.0)),
                d1: rot(Vec3::new(-omega * sn, omega * cs, 0.0)),
                d2: rot(Vec3::new(-omega * omega * cs, -omega * omega * sn, 0.0)),
            }
        },
        rect,
    )
}

pub const IDENTITY_FRAME: [Vec3; 3] = [Vec3::E1, Vec3::E2, Vec3::E3];

pub fn helicoid(rect: ParamRect) -> RuledSurface {
    screw_ruled(std::f64::consts::FRAC_PI_2, 1.0, IDENTITY_FRAME, rect).expect("helicoid is non-cylindrical")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{gauss_curvature, unit_normal};
    use std::f64::consts::PI;

    fn rect() -> ParamRect {
        ParamRect::new(-PI, PI, -2.0, 2.0)
    }

    #[test]
    fn helicoid_alpha_and_curvature() {
        let h = helicoid(rect());
        assert!((ruled_alpha(&h, 0.4).unwrap() - 1.0).abs() < 1e-15);
        let (k, _) = ruled_k_n(&h, 0.4, 0.0).unwrap();
        assert!((k + 1.0).abs() < 1e-15);
        let (k_far, _) = ruled_k_n(&h, 0.4, 1e4).unwrap();
        assert!(k_far.abs() < 1e-15);
    }

    #[test]
    fn tangent_developable_has_zero_alpha() {
        // rulings along the tangent of a circle
        let ruled = RuledSurface::new(
            |s: f64| VecJet {
                value: Vec3::new(s.cos(), s.sin(), 0.0),
                d1: Vec3::new(-s.sin(), s.cos(), 0.0),
                d2: Vec3::new(-s.cos(), -s.sin(), 0.0),
            },
            |s: f64| VecJet {
                value: Vec3::new(-s.sin(), s.cos(), 0.0),
                d1: Vec3::new(-s.cos(), -s.sin(), 0.0),
                d2: Vec3::new(s.sin(), -s.cos(), 0.0),
            },
            ParamRect::new(0.0, 1.0, 0.1, 1.0),
        )
        .unwrap();
        assert!(ruled_alpha(&ruled, 0.3).unwrap().abs() < 1e-15);
        assert!(matches!(
            ruled_k_n(&ruled, 0.3, 0.0),
            Err(FamilyError::StrictionPoint { .. })
        ));
    }

    #[test]
    fn constant_ruling_is_cylindrical() {
        let ruled = RuledSurface::new(
            |s: f64| VecJet {
                value: Vec3::new(s, 0.0, 0.0),
                d1: Vec3::E1,
                d2: Vec3::ZERO,
            },
            |_| VecJet {
                value: Vec3::E3,
                d1: Vec3::ZERO,
                d2: Vec3::ZERO,
            },
            rect(),
        )
        .unwrap();
        assert!(matches!(ruled_alpha(&ruled, 0.0), Err(FamilyError::CylindricalRuling)));
    }

    #[test]
    fn formulas_match_finite_differences() {
        let ruled = screw_ruled(0.7, 1.3, IDENTITY_FRAME, rect()).unwrap();
        assert!((ruled_alpha(&ruled, 0.0).unwrap() - 0.7f64.sin() / 1.3).abs() < 1e-14);
        let fd = ruled.patch().without_derivatives();
        for &(s, t) in &[(0.1, 0.2), (-1.0, 1.5), (2.0, -0.7)] {
            let (k, n) = ruled_k_n(&ruled, s, t).unwrap();
            assert!((k - gauss_curvature(&fd, s, t).unwrap()).abs() < 1e-6);
            assert!((n - unit_normal(&ruled.patch(), s, t).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn non_unit_inputs_rejected() {
        let bad = RuledSurface::new(
            |s: f64| VecJet {
                value: Vec3::new(2.0 * s, 0.0, 0.0),
                d1: Vec3::new(2.0, 0.0, 0.0),
                d2: Vec3::ZERO,
            },
            |_| VecJet {
                value: Vec3::E3,
                d1: Vec3::ZERO,
                d2: Vec3::ZERO,
            },
            rect(),
        );
        assert!(matches!(bad, Err(FamilyError::NotUnit(_))));
    }
}
