//! Integral identities on closed surfaces and numeric extraction of the
//! polynomial identities used to rule out non-cylindrical translation and
//! ruled translators.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

use crate::families::{ruled_alpha, FamilyError, RuledSurface};
use crate::geom::{fundamental_forms, GeomError, ParamRect, PatchJet, SpaceCurve, SurfacePatch, Vec3, DEGENERACY_TOL};

pub const SEAM_TOL: f64 = 1e-9;
const SEAM_SAMPLES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlobalError {
    #[error("surface does not close up: seam mismatch {mismatch:e}")]
    OpenSurface { mismatch: f64 },
    #[error("g″ = 0: the translation identity degenerates")]
    DegenerateG,
    #[error("α = 0: tangent surface, handled by the tangent-of-helix family")]
    TangentSurfaceCase,
    #[error("ruling derivative vanishes")]
    CylindricalRuling,
    #[error("curve leaves the plane orthogonal to the ruling direction (|⟨γ′, w⟩| = {0:e})")]
    NotPlanar(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// A patch whose parameter rectangle covers a closed surface, with its genus.
#[derive(Debug, Clone)]
pub struct ClosedPatch {
    patch: SurfacePatch,
    genus: u32,
}

/// Largest gap across the two `s` edges: zero when they are identified or
/// each collapses to a single point.
fn edge_gap(a: impl Fn(f64) -> Vec3, b: impl Fn(f64) -> Vec3, u0: f64, u1: f64) -> f64 {
    let us: Vec<f64> = (0..SEAM_SAMPLES)
        .map(|k| u0 + (u1 - u0) * k as f64 / (SEAM_SAMPLES - 1) as f64)
        .collect();
    let periodic = us.iter().map(|&u| a(u).distance(b(u))).fold(0.0, f64::max);
    let (a0, b0) = (a(u0), b(u0));
    let collapsed = us
        .iter()
        .map(|&u| a(u).distance(a0).max(b(u).distance(b0)))
        .fold(0.0, f64::max);
    periodic.min(collapsed)
}

impl ClosedPatch {
    pub fn new(patch: SurfacePatch, genus: u32) -> Result<Self, GlobalError> {
        let r = patch.rect();
        let gs = edge_gap(|t| patch.position(r.s0, t), |t| patch.position(r.s1, t), r.t0, r.t1);
        let gt = edge_gap(|s| patch.position(s, r.t0), |s| patch.position(s, r.t1), r.s0, r.s1);
        let mismatch = gs.max(gt);
        if !(mismatch < SEAM_TOL) {
            return Err(GlobalError::OpenSurface { mismatch });
        }
        Ok(ClosedPatch { patch, genus })
    }

    pub fn patch(&self) -> &SurfacePatch {
        &self.patch
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }
}

/// Ellipsoid `(a sin s cos t, b sin s sin t, c cos s)` with outward normal.
pub fn ellipsoid(a: f64, b: f64, c: f64) -> ClosedPatch {
    let patch = SurfacePatch::from_jet(ParamRect::new(0.0, PI, 0.0, TAU), move |s, t| {
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        PatchJet {
            position: Vec3::new(a * ss * ct, b * ss * st, c * cs),
            ds: Vec3::new(a * cs * ct, b * cs * st, -c * ss),
            dt: Vec3::new(-a * ss * st, b * ss * ct, 0.0),
            dss: Vec3::new(-a * ss * ct, -b * ss * st, -c * cs),
            dst: Vec3::new(-a * cs * st, b * cs * ct, 0.0),
            dtt: Vec3::new(-a * ss * ct, -b * ss * st, 0.0),
        }
    });
    ClosedPatch::new(patch, 0).expect("ellipsoid closes up")
}

pub fn sphere(radius: f64) -> ClosedPatch {
    ellipsoid(radius, radius, radius)
}

/// Torus of revolution about the z-axis with outward normal.
pub fn torus(major: f64, minor: f64) -> ClosedPatch {
    let patch = SurfacePatch::from_jet(ParamRect::new(0.0, TAU, 0.0, TAU), move |s, t| {
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        let rho = major + minor * cs;
        PatchJet {
            position: Vec3::new(rho * ct, rho * st, minor * ss),
            ds: Vec3::new(-minor * ss * ct, -minor * ss * st, minor * cs),
            dt: Vec3::new(-rho * st, rho * ct, 0.0),
            dss: Vec3::new(-minor * cs * ct, -minor * cs * st, -minor * ss),
            dst: Vec3::new(minor * ss * st, -minor * ss * ct, 0.0),
            dtt: Vec3::new(-rho * ct, -rho * st, 0.0),
        }
    })
    .reversed();
    ClosedPatch::new(patch, 1).expect("torus closes up")
}

/// Midpoint-rule contribution of one parameter cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
    pub s: f64,
    pub t: f64,
    pub area: f64,
    pub curvature: f64,
    pub flux: f64,
}

pub fn quadrature_cells(closed: &ClosedPatch, v: Vec3, resolution: usize) -> Result<Vec<Cell>, GlobalError> {
    let r = closed.patch.rect();
    let n = resolution.max(1);
    let (hs, ht) = ((r.s1 - r.s0) / n as f64, (r.t1 - r.t0) / n as f64);
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        let s = r.s0 + (i as f64 + 0.5) * hs;
        for j in 0..n {
            let t = r.t0 + (j as f64 + 0.5) * ht;
            let ff = fundamental_forms(&closed.patch, s, t)?;
            let area = ff.area_element() * hs * ht;
            cells.push(Cell {
                i,
                j,
                s,
                t,
                area,
                curvature: ff.gauss_curvature() * area,
                flux: ff.normal.dot(v) * area,
            });
        }
    }
    Ok(cells)
}

pub fn cells_csv(cells: &[Cell]) -> String {
    let mut out = String::from("i,j,s,t,area,curvature,flux\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.i, c.j, c.s, c.t, c.area, c.curvature, c.flux
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSurfaceReport {
    pub genus: u32,
    pub area: f64,
    /// `∫K dΣ`.
    pub total_curvature: f64,
    /// `∫⟨N, v⟩ dΣ`.
    pub flux: f64,
    /// `∫K dΣ / area`, reported for genus zero.
    pub implied_lambda: Option<f64>,
}

impl ClosedSurfaceReport {
    /// `∫K dΣ − 4π(1 − g)`.
    pub fn gauss_bonnet_defect(&self) -> f64 {
        self.total_curvature - 4.0 * PI * (1.0 - self.genus as f64)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "genus={}", self.genus).unwrap();
        writeln!(out, "area={:.16e}", self.area).unwrap();
        writeln!(out, "total_curvature={:.16e}", self.total_curvature).unwrap();
        writeln!(out, "flux={:.16e}", self.flux).unwrap();
        writeln!(out, "gauss_bonnet_defect={:.16e}", self.gauss_bonnet_defect()).unwrap();
        match self.implied_lambda {
            Some(l) => writeln!(out, "implied_lambda={l:.16e}").unwrap(),
            None => writeln!(out, "implied_lambda=none").unwrap(),
        }
        out
    }
}

pub fn gauss_bonnet_probe(
    closed: &ClosedPatch,
    v: Vec3,
    resolution: usize,
) -> Result<ClosedSurfaceReport, GlobalError> {
    let cells = quadrature_cells(closed, v, resolution)?;
    let area: f64 = cells.iter().map(|c| c.area).sum();
    let total_curvature: f64 = cells.iter().map(|c| c.curvature).sum();
    let flux: f64 = cells.iter().map(|c| c.flux).sum();
    Ok(ClosedSurfaceReport {
        genus: closed.genus,
        area,
        total_curvature,
        flux,
        implied_lambda: (closed.genus == 0).then(|| total_curvature / area),
    })
}

pub const EXTRACTION_DEGREE: usize = 8;
const NODES: usize = EXTRACTION_DEGREE + 1;
/// Half-width of the sampling interval for polynomial extraction.
pub const NODE_SCALE: f64 = 2.0;

/// Chebyshev points on `[−2, 2]`.
pub fn extraction_nodes() -> [f64; NODES] {
    std::array::from_fn(|k| NODE_SCALE * ((2 * k + 1) as f64 * PI / (2 * NODES) as f64).cos())
}

/// Coefficients `c₀..c₈` of the degree-8 polynomial through `f` at the
/// Chebyshev nodes.
pub fn extract_coefficients(mut f: impl FnMut(f64) -> f64) -> [f64; NODES] {
    let nodes = extraction_nodes();
    let vander = SMatrix::<f64, NODES, NODES>::from_fn(|r, c| nodes[r].powi(c as i32));
    let rhs = SVector::<f64, NODES>::from_fn(|r, _| f(nodes[r]));
    let sol = vander.lu().solve(&rhs).expect("Chebyshev Vandermonde is nonsingular");
    std::array::from_fn(|k| sol[k])
}

/// `|a − b|` relative to `max(|a|, scale)`.
pub fn relative_gap(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / a.abs().max(scale).max(f64::MIN_POSITIVE)
}

/// `(g′, g″, g‴)` at a point of the second graph function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GJet {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Closed forms of the leading coefficients of the degree-8 identity in `f′`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClosedCoefficients {
    pub c8: f64,
    pub c7: f64,
    pub c6: f64,
    /// Only defined when `g‴ = 0`.
    pub c4: Option<f64>,
    pub c3: Option<f64>,
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub g: GJet,
    pub v: Vec3,
    pub lambda: f64,
    /// Reference closed forms, checked against the extraction.
    pub printed: ClosedCoefficients,
    /// The forms obtained by expanding the identity symbolically.
    pub expanded: ClosedCoefficients,
    /// `C₀..C₈` extracted from samples of the identity.
    pub extracted: [f64; NODES],
}

/// The `y`-derivative of the separated equation, scaled by `g″²` and with
/// `√W₁` replaced by `root`: `A + B·root`.
fn differentiated_identity(g: GJet, v: Vec3, lambda: f64, fp: f64, root: f64) -> f64 {
    let q = g.d3 / (g.d2 * g.d2);
    let w1 = 1.0 + fp * fp + g.d1 * g.d1;
    let w2 = -v.x * fp - v.y * g.d1 + v.z;
    -q * (w1 * root * w2 + lambda * w1 * w1) + 3.0 * g.d1 * root * w2 - v.y * w1 * root + 4.0 * g.d1 * lambda * w1
}

/// `B²W₁ − A²` as a function of `f′`.
pub fn translation_identity(g: GJet, v: Vec3, lambda: f64, fp: f64) -> f64 {
    let root = (1.0 + fp * fp + g.d1 * g.d1).sqrt();
    -differentiated_identity(g, v, lambda, fp, root) * differentiated_identity(g, v, lambda, fp, -root)
}

fn printed_translation(g: GJet, v: Vec3, lambda: f64) -> ClosedCoefficients {
    let q = g.d3 / (g.d2 * g.d2);
    let (a, l2) = (g.d1, lambda * lambda);
    let (v1, v2, v3) = (v.x, v.y, v.z);
    let flat = g.d3 == 0.0;
    ClosedCoefficients {
        c8: q * q * (v1 * v1 - l2),
        c7: -2.0 * v1 * v2 * q,
        c6: v2 * v2 - 2.0 * a * q * (3.0 * v1 * v1 - 4.0 * l2),
        c4: flat.then_some(a * a * (9.0 * v1 * v1 - 16.0 * l2)),
        c3: flat.then_some(18.0 * a * a * v1 * v3),
        c0: flat.then(|| -16.0 * l2 * (1.0 + a * a).powi(2)),
    }
}

fn expanded_translation(g: GJet, v: Vec3, lambda: f64) -> ClosedCoefficients {
    let q = g.d3 / (g.d2 * g.d2);
    let (a, l2) = (g.d1, lambda * lambda);
    let (v1, v2, v3) = (v.x, v.y, v.z);
    let flat = g.d3 == 0.0;
    let c6 = q
        * q
        * (-4.0 * a * a * l2 + 3.0 * a * a * v1 * v1 + a * a * v2 * v2 - 2.0 * a * v2 * v3 - 4.0 * l2
            + 3.0 * v1 * v1
            + v3 * v3)
        + q * (8.0 * a * l2 - 6.0 * a * v1 * v1 - 2.0 * a * v2 * v2 + 2.0 * v2 * v3)
        + v2 * v2;
    let a2 = a * a;
    ClosedCoefficients {
        c8: q * q * (v1 * v1 - l2),
        c7: 2.0 * q * v1 * (a * q * v2 - q * v3 - v2),
        c6,
        c4: flat.then_some(a2 * (9.0 * v1 * v1 + 9.0 * v2 * v2 - 16.0 * l2) - 6.0 * a * v2 * v3 + 3.0 * v2 * v2),
        c3: flat.then_some(6.0 * a * v1 * (5.0 * a2 * v2 - 3.0 * a * v3 + 2.0 * v2)),
        c0: flat.then(|| {
            (1.0 + a2)
                * (-16.0 * a2 * a2 * l2 + 16.0 * a2 * a2 * v2 * v2 - 24.0 * a2 * a * v2 * v3 - 16.0 * a2 * l2
                    + 8.0 * a2 * v2 * v2
                    + 9.0 * a2 * v3 * v3
                    - 6.0 * a * v2 * v3
                    + v2 * v2)
        }),
    }
}

pub fn translation_coefficients(g: GJet, v: Vec3, lambda: f64) -> Result<CoefficientSet, GlobalError> {
    if g.d2.abs() <= DEGENERACY_TOL {
        return Err(GlobalError::DegenerateG);
    }
    Ok(CoefficientSet {
        g,
        v,
        lambda,
        printed: printed_translation(g, v, lambda),
        expanded: expanded_translation(g, v, lambda),
        extracted: extract_coefficients(|fp| translation_identity(g, v, lambda, fp)),
    })
}

impl CoefficientSet {
    /// `(name, closed form, extracted)` for every coefficient with a closed form.
    pub fn pairs(&self, forms: &ClosedCoefficients) -> Vec<(&'static str, f64, f64)> {
        let e = &self.extracted;
        let mut out = vec![("C8", forms.c8, e[8]), ("C7", forms.c7, e[7]), ("C6", forms.c6, e[6])];
        if let (Some(c4), Some(c3), Some(c0)) = (forms.c4, forms.c3, forms.c0) {
            out.extend([("C4", c4, e[4]), ("C3", c3, e[3]), ("C0", c0, e[0])]);
        }
        out
    }

    pub fn extracted_scale(&self) -> f64 {
        self.extracted.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuledCoefficients {
    pub alpha: f64,
    /// `λ² − det(w′, w, v)²/|w′|²`.
    pub a8: f64,
    /// `−2α⟨w′, v⟩ det(w′, w, v)/|w′|²`.
    pub a7: f64,
    /// `A₀..A₈` extracted from `(α²+t²)⁴[(K − λ)² − ⟨N, v⟩²]` with `K`, `N`
    /// from the fundamental forms of the surface.
    pub extracted: [f64; NODES],
}

impl RuledCoefficients {
    /// Ratio `extracted/closed` fitted over `A₈`, `A₇` in least squares.
    pub fn normalization(&self) -> f64 {
        let num = self.extracted[8] * self.a8 + self.extracted[7] * self.a7;
        let den = self.a8 * self.a8 + self.a7 * self.a7;
        if den == 0.0 {
            1.0
        } else {
            num / den
        }
    }
}

pub fn ruled_coefficients(
    ruled: &RuledSurface,
    v: Vec3,
    lambda: f64,
    s: f64,
) -> Result<RuledCoefficients, GlobalError> {
    let alpha = ruled_alpha(ruled, s).map_err(|e| match e {
        FamilyError::CylindricalRuling => GlobalError::CylindricalRuling,
        other => GlobalError::Family(other),
    })?;
    if alpha.abs() <= DEGENERACY_TOL {
        return Err(GlobalError::TangentSurfaceCase);
    }
    let w = ruled.ruling(s);
    let dw2 = w.d1.norm_squared();
    let det = Vec3::triple(w.d1, w.value, v);
    let a8 = lambda * lambda - det * det / dw2;
    let a7 = -2.0 * alpha * w.d1.dot(v) * det / dw2;
    let h = NODE_SCALE + 1.0;
    let patch = ruled.patch().with_rect(ParamRect::new(s - 1.0, s + 1.0, -h, h));
    let mut failure = None;
    let extracted = extract_coefficients(|t| match fundamental_forms(&patch, s, t) {
        Ok(ff) => {
            let q = alpha * alpha + t * t;
            let k = ff.gauss_curvature();
            let nv = ff.normal.dot(v);
            q.powi(4) * ((k - lambda).powi(2) - nv * nv)
        }
        Err(e) => {
            failure = Some(e);
            f64::NAN
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(RuledCoefficients {
        alpha,
        a8,
        a7,
        extracted,
    })
}

/// `max |⟨n, v⟩ + λ|` over `samples` points of `[s0, s1]`, where `n` is the
/// unit normal `w × γ′/|γ′|` of the cylinder over a curve in the plane
/// orthogonal to `w`.
pub fn cylindrical_witness(
    curve: &SpaceCurve,
    range: (f64, f64),
    samples: usize,
    w: Vec3,
    v: Vec3,
    lambda: f64,
) -> Result<f64, GlobalError> {
    let n = samples.max(2);
    let mut worst = 0.0f64;
    for k in 0..n {
        let s = range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64;
        let d1 = curve.jet(s).d1;
        let speed = d1.norm();
        if speed <= DEGENERACY_TOL {
            return Err(GeomError::SingularCurve.into());
        }
        let off = d1.dot(w).abs() / speed;
        if off > 1e-9 {
            return Err(GlobalError::NotPlanar(off));
        }
        let normal = w.cross(d1) / speed;
        worst = worst.max((normal.dot(v) + lambda).abs());
    }
    Ok(worst)
}
