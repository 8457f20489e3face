use std::fmt;
use std::sync::Arc;

use super::{fd_step, GeomError, Vec3, DEGENERACY_TOL};

/// Position and first three derivatives of a space curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveJet {
    pub position: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
    pub d3: Vec3,
}

type JetFn = dyn Fn(f64) -> CurveJet + Send + Sync;
type PointFn = dyn Fn(f64) -> Vec3 + Send + Sync;

/// A C³ space curve, sampled either through an analytic jet or through
/// central finite differences of its position.
#[derive(Clone)]
pub struct SpaceCurve {
    position: Arc<PointFn>,
    jet: Option<Arc<JetFn>>,
}

impl fmt::Debug for SpaceCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceCurve")
            .field("analytic", &self.jet.is_some())
            .finish()
    }
}

impl SpaceCurve {
    pub fn from_jet<F>(jet: F) -> Self
    where
        F: Fn(f64) -> CurveJet + Send + Sync + 'static,
    {
        let jet = Arc::new(jet);
        let pos = Arc::clone(&jet);
        SpaceCurve {
            position: Arc::new(move |s| pos(s).position),
            jet: Some(jet),
        }
    }

    pub fn from_position<F>(position: F) -> Self
    where
        F: Fn(f64) -> Vec3 + Send + Sync + 'static,
    {
        SpaceCurve {
            position: Arc::new(position),
            jet: None,
        }
    }

    pub fn has_analytic_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn position(&self, s: f64) -> Vec3 {
        (self.position)(s)
    }

    pub fn jet(&self, s: f64) -> CurveJet {
        match &self.jet {
            Some(j) => j(s),
            None => self.fd_jet(s),
        }
    }

    /// Finite-difference jet. The third derivative uses a wider stencil
    /// (10× the base step) since its roundoff scales like h⁻³.
    pub fn fd_jet(&self, s: f64) -> CurveJet {
        let p = |u: f64| (self.position)(u);
        let h = fd_step(s);
        let (pm, p0, pp) = (p(s - h), p(s), p(s + h));
        let d1 = (pp - pm) / (2.0 * h);
        let d2 = (pp - p0 * 2.0 + pm) / (h * h);
        let h3 = 10.0 * h;
        let d3 = (p(s + 2.0 * h3) - p(s + h3) * 2.0 + p(s - h3) * 2.0 - p(s - 2.0 * h3)) / (2.0 * h3 * h3 * h3);
        CurveJet {
            position: p0,
            d1,
            d2,
            d3,
        }
    }
}

/// Moving frame of a regular curve together with its curvature and torsion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetFrame {
    pub t: Vec3,
    pub n: Vec3,
    pub b: Vec3,
    pub kappa: f64,
    pub tau: f64,
}

impl FrenetFrame {
    /// Frame from a jet; the curve need not be arc-length parametrized.
    pub fn from_jet(jet: &CurveJet) -> Result<Self, GeomError> {
        let speed = jet.d1.norm();
        if speed < DEGENERACY_TOL {
            return Err(GeomError::SingularCurve);
        }
        let c = jet.d1.cross(jet.d2);
        let c_norm = c.norm();
        let kappa = c_norm / speed.powi(3);
        if kappa < DEGENERACY_TOL {
            return Err(GeomError::VanishingCurvature { kappa });
        }
        let t = jet.d1 / speed;
        let b = c / c_norm;
        let n = b.cross(t);
        let tau = c.dot(jet.d3) / (c_norm * c_norm);
        Ok(FrenetFrame { t, n, b, kappa, tau })
    }
}

pub fn frenet_frame(curve: &SpaceCurve, s: f64) -> Result<FrenetFrame, GeomError> {
    FrenetFrame::from_jet(&curve.jet(s))
}

/// Circular helix `(a cos(s/c), a sin(s/c), b s/c)` with `c = √(a²+b²)`,
/// parametrized by arc length.
pub fn circular_helix(a: f64, b: f64) -> SpaceCurve {
    let c = (a * a + b * b).sqrt();
    SpaceCurve::from_jet(move |s| {
        let u = s / c;
        let (sn, cs) = u.sin_cos();
        CurveJet {
            position: Vec3::new(a * cs, a * sn, b * u),
            d1: Vec3::new(-a * sn, a * cs, b) / c,
            d2: Vec3::new(-a * cs, -a * sn, 0.0) / (c * c),
            d3: Vec3::new(a * sn, -a * cs, 0.0) / (c * c * c),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helix_binormal_has_constant_axial_component() {
        // Hand computation: b = (b sin u, -b cos u, a)/c, so ⟨b, e3⟩ = a/c = 3/5.
        let helix = circular_helix(3.0, 4.0);
        for i in 0..20 {
            let s = -5.0 + 0.5 * i as f64;
            let fr = frenet_frame(&helix, s).unwrap();
            assert!((fr.b.z - 0.6).abs() < 1e-12);
            assert!((fr.kappa - 3.0 / 25.0).abs() < 1e-12);
            assert!((fr.tau - 4.0 / 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn helix_frame_from_finite_differences() {
        let analytic = circular_helix(3.0, 4.0);
        let fd = SpaceCurve::from_position(move |s| analytic.position(s));
        let fr = frenet_frame(&fd, 1.3).unwrap();
        assert!((fr.b.z - 0.6).abs() < 1e-6);
        assert!((fr.tau - 0.16).abs() < 1e-5);
    }

    #[test]
    fn planar_circle() {
        let r = 2.5;
        let circle = SpaceCurve::from_jet(move |s| {
            let (sn, cs) = (s / r).sin_cos();
            CurveJet {
                position: Vec3::new(r * cs, r * sn, 0.0),
                d1: Vec3::new(-sn, cs, 0.0),
                d2: Vec3::new(-cs, -sn, 0.0) / r,
                d3: Vec3::new(sn, -cs, 0.0) / (r * r),
            }
        });
        let fr = frenet_frame(&circle, 0.7).unwrap();
        assert!((fr.kappa - 1.0 / r).abs() < 1e-14);
        assert!(fr.tau.abs() < 1e-14);
    }

    #[test]
    fn straight_line_has_no_frame() {
        let line = SpaceCurve::from_position(|s| Vec3::new(s, 2.0 * s, -s));
        assert!(matches!(
            frenet_frame(&line, 0.3),
            Err(GeomError::VanishingCurvature { .. })
        ));
    }

    #[test]
    fn frame_is_right_handed_and_satisfies_frenet_equation() {
        let helix = circular_helix(1.0, 1.0);
        for i in 0..10 {
            let s = 0.37 * i as f64;
            let fr = frenet_frame(&helix, s).unwrap();
            assert!((Vec3::triple(fr.t, fr.n, fr.b) - 1.0).abs() < 1e-9);
            let h = 1e-4;
            let tp = frenet_frame(&helix, s + h).unwrap().t;
            let tm = frenet_frame(&helix, s - h).unwrap().t;
            let dt = (tp - tm) / (2.0 * h);
            assert!((dt - fr.n * fr.kappa).norm() < 1e-5);
        }
    }
}
