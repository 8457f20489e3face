use std::sync::Arc;

use crate::geom::{ParamRect, PatchJet, SurfacePatch, Vec3};

/// `[h, h′, h″, h‴]` at a point.
pub type Jet3 = [f64; 4];
type Jet3Fn = dyn Fn(f64) -> Jet3 + Send + Sync;

/// Graph `z = f(x) + g(y)` together with a speed and λ.
#[derive(Clone)]
pub struct TranslationSurface {
    f: Arc<Jet3Fn>,
    g: Arc<Jet3Fn>,
    pub v: Vec3,
    pub lambda: f64,
}

impl std::fmt::Debug for TranslationSurface {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("TranslationSurface")
            .field("v", &self.v)
            .field("lambda", &self.lambda)
            .finish()
    }
}

pub fn make_translation_surface<F, G>(f: F, g: G, v: Vec3, lambda: f64) -> TranslationSurface
where
    F: Fn(f64) -> Jet3 + Send + Sync + 'static,
    G: Fn(f64) -> Jet3 + Send + Sync + 'static,
{
    TranslationSurface {
        f: Arc::new(f),
        g: Arc::new(g),
        v,
        lambda,
    }
}

impl TranslationSurface {
    pub fn f(&self, x: f64) -> Jet3 {
        (self.f)(x)
    }

    pub fn g(&self, y: f64) -> Jet3 {
        (self.g)(y)
    }

    /// `1 + f′² + g′²`.
    pub fn w1(&self, x: f64, y: f64) -> f64 {
        let (fp, gp) = (self.f(x)[1], self.g(y)[1]);
        1.0 + fp * fp + gp * gp
    }

    /// `−v₁f′ − v₂g′ + v₃`.
    pub fn w2(&self, x: f64, y: f64) -> f64 {
        -self.v.x * self.f(x)[1] - self.v.y * self.g(y)[1] + self.v.z
    }

    /// `f″g″/W₁² − W₂/√W₁ − λ`, the translator equation written for the graph.
    pub fn residual(&self, x: f64, y: f64) -> f64 {
        let (fj, gj) = (self.f(x), self.g(y));
        let w1 = self.w1(x, y);
        fj[2] * gj[2] / (w1 * w1) - self.w2(x, y) / w1.sqrt() - self.lambda
    }

    /// Residual after dropping the curvature term, i.e. the one-variable
    /// equation in `f′` left when `g″ ≡ 0`.
    pub fn reduced_residual(&self, x: f64, y: f64) -> f64 {
        -self.w2(x, y) / self.w1(x, y).sqrt() - self.lambda
    }

    /// Minimum and maximum residual on a uniform `n × n` grid.
    pub fn residual_range(&self, rect: ParamRect, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = rect.node(i, n, j, n);
                let r = self.residual(x, y);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    }

    /// The graph as an upward-oriented patch.
    pub fn patch(&self, rect: ParamRect) -> SurfacePatch {
        let (f, g) = (Arc::clone(&self.f), Arc::clone(&self.g));
        SurfacePatch::from_jet(rect, move |x, y| {
            let (fj, gj) = (f(x), g(y));
            PatchJet {
                position: Vec3::new(x, y, fj[0] + gj[0]),
                ds: Vec3::new(1.0, 0.0, fj[1]),
                dt: Vec3::new(0.0, 1.0, gj[1]),
                dss: Vec3::new(0.0, 0.0, fj[2]),
                dst: Vec3::ZERO,
                dtt: Vec3::new(0.0, 0.0, gj[2]),
            }
        })
    }
}

pub fn zero_jet(_: f64) -> Jet3 {
    [0.0; 4]
}

pub fn half_square_jet(x: f64) -> Jet3 {
    [0.5 * x * x, x, 1.0, 0.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::translator_residual;

    #[test]
    fn flat_graph_needs_lambda_opposite_to_vertical_speed() {
        // upward normal e3: residual is −v₃ − λ
        let v = Vec3::new(0.6, 0.0, 0.8);
        let good = make_translation_surface(zero_jet, zero_jet, v, -0.8);
        let bad = make_translation_surface(zero_jet, zero_jet, v, -0.5);
        assert_eq!(good.residual(0.3, -1.0), 0.0);
        assert!((bad.residual(0.3, -1.0) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn paraboloid_is_not_a_translator() {
        let surf = make_translation_surface(half_square_jet, half_square_jet, Vec3::E3, 0.7);
        let (lo, hi) = surf.residual_range(ParamRect::new(-1.0, 1.0, -1.0, 1.0), 10);
        assert!(hi - lo > 0.1);
    }

    #[test]
    fn graph_residual_matches_surface_residual() {
        let v = Vec3::new(0.0, 0.6, 0.8);
        let surf = make_translation_surface(|x: f64| [x.sin(), x.cos(), -x.sin(), -x.cos()], half_square_jet, v, 0.2);
        let patch = surf.patch(ParamRect::new(-2.0, 2.0, -2.0, 2.0));
        for &(x, y) in &[(0.1, 0.2), (-1.5, 1.0), (1.9, -0.4)] {
            let direct = translator_residual(&patch, v, 0.2, x, y).unwrap();
            assert!((direct - surf.residual(x, y)).abs() < 1e-13);
        }
    }

    #[test]
    fn cylindrical_case_reduces_to_one_variable() {
        let c = 0.5;
        let v = Vec3::new(0.0, 1.0, c) / (1.0 + c * c).sqrt();
        let surf = make_translation_surface(
            |x: f64| [x.sin(), x.cos(), -x.sin(), -x.cos()],
            move |y| [c * y, c, 0.0, 0.0],
            v,
            0.0,
        );
        for &(x, y) in &[(0.3, 1.0), (2.0, -3.0)] {
            assert_eq!(surf.residual(x, y), surf.reduced_residual(x, y));
            assert!(surf.residual(x, y).abs() < 1e-15);
        }
    }
}
