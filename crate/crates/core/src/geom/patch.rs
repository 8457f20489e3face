use std::fmt;
use std::sync::Arc;

use super::{fd_step, Vec3};

/// Position with first and second partial derivatives at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchJet {
    pub position: Vec3,
    pub ds: Vec3,
    pub dt: Vec3,
    pub dss: Vec3,
    pub dst: Vec3,
    pub dtt: Vec3,
}

/// Closed parameter rectangle `[s0, s1] × [t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRect {
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl ParamRect {
    pub fn new(s0: f64, s1: f64, t0: f64, t1: f64) -> Self {
        ParamRect { s0, s1, t0, t1 }
    }

    pub fn contains(&self, s: f64, t: f64) -> bool {
        s >= self.s0 && s <= self.s1 && t >= self.t0 && t <= self.t1
    }

    /// Node `(i, j)` of a uniform `n × m` grid including the rectangle edges.
    pub fn node(&self, i: usize, n: usize, j: usize, m: usize) -> (f64, f64) {
        let fs = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let ft = if m > 1 { j as f64 / (m - 1) as f64 } else { 0.5 };
        (self.s0 + fs * (self.s1 - self.s0), self.t0 + ft * (self.t1 - self.t0))
    }
}

type PositionFn = dyn Fn(f64, f64) -> Vec3 + Send + Sync;
type JetFn = dyn Fn(f64, f64) -> PatchJet + Send + Sync;

/// A parametrized surface piece. Orientation is `±(∂s × ∂t)`, with the sign
/// held in `orientation`.
#[derive(Clone)]
pub struct SurfacePatch {
    position: Arc<PositionFn>,
    jet: Option<Arc<JetFn>>,
    rect: ParamRect,
    orientation: f64,
}

impl fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("rect", &self.rect)
            .field("analytic", &self.jet.is_some())
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl SurfacePatch {
    /// Patch with derivatives taken by central finite differences.
    pub fn from_position<F>(rect: ParamRect, position: F) -> Self
    where
        F: Fn(f64, f64) -> Vec3 + Send + Sync + 'static,
    {
        SurfacePatch {
            position: Arc::new(position),
            jet: None,
            rect,
            orientation: 1.0,
        }
    }

    /// Patch with analytic first and second derivatives.
    pub fn from_jet<F>(rect: ParamRect, jet: F) -> Self
    where
        F: Fn(f64, f64) -> PatchJet + Send + Sync + 'static,
    {
        let jet = Arc::new(jet);
        let pos = Arc::clone(&jet);
        SurfacePatch {
            position: Arc::new(move |s, t| pos(s, t).position),
            jet: Some(jet),
            rect,
            orientation: 1.0,
        }
    }

    pub fn rect(&self) -> ParamRect {
        self.rect
    }

    pub fn with_rect(mut self, rect: ParamRect) -> Self {
        self.rect = rect;
        self
    }

    /// `+1` when the normal is `∂s × ∂t`, `-1` when it is reversed.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn reversed(mut self) -> Self {
        self.orientation = -self.orientation;
        self
    }

    /// Same geometry with the analytic jet dropped, so every derivative is
    /// recomputed by finite differences.
    pub fn without_derivatives(&self) -> Self {
        SurfacePatch {
            position: Arc::clone(&self.position),
            jet: None,
            rect: self.rect,
            orientation: self.orientation,
        }
    }

    pub fn has_analytic_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn position(&self, s: f64, t: f64) -> Vec3 {
        (self.position)(s, t)
    }

    pub fn jet(&self, s: f64, t: f64) -> PatchJet {
        match &self.jet {
            Some(j) => j(s, t),
            None => self.fd_jet(s, t),
        }
    }

    /// Second-order central differences with step `1e-4·(1+|param|)`.
    pub fn fd_jet(&self, s: f64, t: f64) -> PatchJet {
        let p = |a: f64, b: f64| (self.position)(a, b);
        let hs = fd_step(s);
        let ht = fd_step(t);
        let p0 = p(s, t);
        let (sp, sm) = (p(s + hs, t), p(s - hs, t));
        let (tp, tm) = (p(s, t + ht), p(s, t - ht));
        let dst = (p(s + hs, t + ht) - p(s + hs, t - ht) - p(s - hs, t + ht) + p(s - hs, t - ht)) / (4.0 * hs * ht);
        PatchJet {
            position: p0,
            ds: (sp - sm) / (2.0 * hs),
            dt: (tp - tm) / (2.0 * ht),
            dss: (sp - p0 * 2.0 + sm) / (hs * hs),
            dst,
            dtt: (tp - p0 * 2.0 + tm) / (ht * ht),
        }
    }
}
