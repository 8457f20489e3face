//! Closed-form λ-translator families behind a name-keyed registry, plus the
//! generic ruled and translation surfaces used by the classification checks.

mod closed;
mod rotational;
mod ruled;
mod translation;

pub use closed::{
    make_cone, make_cylinder, make_elliptic_cylinder, make_plane, make_rotational_line, make_tangent_of_helix,
    SINGULAR_MARGIN,
};
pub use rotational::{line_profile, rotational_patch, ProfileJet};
pub use ruled::{helicoid, ruled_alpha, ruled_k_n, screw_ruled, RuledSurface, VecJet, IDENTITY_FRAME};
pub use translation::{half_square_jet, make_translation_surface, zero_jet, Jet3, TranslationSurface};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geom::{fundamental_forms, max_abs_residual, GeomError, ParamRect, SurfacePatch, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("angle {0} outside the admissible range")]
    BadAngle(f64),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("ruling direction is constant (cylindrical ruled surface)")]
    CylindricalRuling,
    #[error("striction point at s = {s}: α = t = 0")]
    StrictionPoint { s: f64 },
    #[error("base curve is not in striction parametrization: ⟨γ′, w′⟩ = {0:e}")]
    StrictionViolated(f64),
    #[error("expected a unit vector: {0}")]
    NotUnit(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` has no parameter `{key}`")]
    UnknownParameter { family: String, key: String },
    #[error("malformed family config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub type Params = BTreeMap<String, f64>;

/// Plain-data description of one family member: enough to rebuild it.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDescriptor {
    pub kind: String,
    /// `None` for families that are not translators for any single λ.
    pub lambda: Option<f64>,
    pub v: Vec3,
    pub params: Params,
    /// Normal flipped; the member is then a translator with speed `−v`.
    pub reversed: bool,
}

impl FamilyDescriptor {
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        writeln!(out, "kind={}", self.kind).unwrap();
        if let Some(l) = self.lambda {
            writeln!(out, "lambda={l:.16e}").unwrap();
        }
        writeln!(out, "v={:.16e},{:.16e},{:.16e}", self.v.x, self.v.y, self.v.z).unwrap();
        writeln!(out, "reversed={}", self.reversed).unwrap();
        for (k, v) in &self.params {
            writeln!(out, "{k}={v:.16e}").unwrap();
        }
        out
    }

    /// Parses `key=value` lines; `#` starts a comment line.
    pub fn from_config(text: &str) -> Result<Self, FamilyError> {
        let mut kind = None;
        let mut lambda = None;
        let mut v = Vec3::E3;
        let mut reversed = false;
        let mut params = Params::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| FamilyError::BadConfig(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| FamilyError::BadConfig(format!("line {}: `{s}` is not a number", lineno + 1)))
            };
            match key {
                "kind" => kind = Some(value.to_string()),
                "lambda" => lambda = Some(num(value)?),
                "reversed" => {
                    reversed = value
                        .parse()
                        .map_err(|_| FamilyError::BadConfig(format!("line {}: expected true/false", lineno + 1)))?
                }
                "v" => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 3 {
                        return Err(FamilyError::BadConfig(format!(
                            "line {}: v needs three components",
                            lineno + 1
                        )));
                    }
                    v = Vec3::new(num(parts[0])?, num(parts[1])?, num(parts[2])?);
                }
                _ => {
                    params.insert(key.to_string(), num(value)?);
                }
            }
        }
        let kind = kind.ok_or_else(|| FamilyError::BadConfig("missing `kind`".into()))?;
        Ok(FamilyDescriptor {
            kind,
            lambda,
            v,
            params,
            reversed,
        })
    }
}

/// What a family constructor hands back before the registry dresses it up.
pub struct Built {
    pub patch: SurfacePatch,
    pub lambda: Option<f64>,
    pub v: Vec3,
}

pub trait TranslatorFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Every accepted parameter with its default value.
    fn defaults(&self) -> &'static [(&'static str, f64)];
    fn build(&self, params: &Params) -> Result<Built, FamilyError>;
}

/// A built family member.
#[derive(Debug, Clone)]
pub struct FamilyInstance {
    pub descriptor: FamilyDescriptor,
    pub patch: SurfacePatch,
}

impl FamilyInstance {
    pub fn lambda(&self) -> Option<f64> {
        self.descriptor.lambda
    }

    pub fn v(&self) -> Vec3 {
        self.descriptor.v
    }

    /// Max `|K − ⟨N, v⟩ − λ|` over an `n × n` grid, if a λ is claimed.
    pub fn max_residual(&self, n: usize) -> Result<Option<f64>, FamilyError> {
        match self.lambda() {
            Some(l) => Ok(Some(max_abs_residual(&self.patch, self.v(), l, n)?)),
            None => Ok(None),
        }
    }

    /// `max − min` of `K − ⟨N, v⟩` over an `n × n` grid; zero exactly when
    /// some constant λ makes the patch a translator.
    pub fn residual_spread(&self, n: usize) -> Result<f64, FamilyError> {
        residual_spread(&self.patch, self.v(), n)
    }
}

pub fn residual_spread(patch: &SurfacePatch, v: Vec3, n: usize) -> Result<f64, FamilyError> {
    let rect = patch.rect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let (s, t) = rect.node(i, n, j, n);
            let ff = fundamental_forms(patch, s, t)?;
            let r = ff.gauss_curvature() - ff.normal.dot(v);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok(hi - lo)
}

fn param(params: &Params, key: &str) -> f64 {
    params[key]
}

struct PlaneFamily;
impl TranslatorFamily for PlaneFamily {
    fn name(&self) -> &'static str {
        "plane"
    }
    fn summary(&self) -> &'static str {
        "plane with normal (nx, ny, nz); λ = −⟨normal, v⟩"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("nx", 0.0), ("ny", 0.0), ("nz", 1.0), ("height", 0.0)]
    }
    fn build(&self, p: &Params) -> Result<Built, FamilyError> {
        let n = Vec3::new(param(p, "nx"), param(p, "ny"), param(p, "nz"))
            .normalized()
            .ok_or_else(|| FamilyError::BadParameters("plane normal is zero".into()))?;
        let (patch, lambda) = make_plane(n, n * param(p, "height"), Vec3::E3)?;
        Ok(Built {
            patch,
            lambda: Some(lambda),
            v: Vec3::E3,
        })
    }
}

struct CylinderFamily;
impl TranslatorFamily for CylinderFamily {
    fn name(&self) -> &'static str {
        "cylinder"
    }
    fn summary(&self) -> &'static str {
        "right cylinder over an ellipse, rulings parallel to v; λ = 0"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("radius", 1.0), ("aspect", 1.0)]
    }
    fn build(&self, p: &Params) -> Result<Built, FamilyError> {
        let (patch, lambda) = make_elliptic_cylinder(param(p, "radius"), param(p, "aspect"), Vec3::E3)?;
        Ok(Built {
            patch,
            lambda: Some(lambda),
            v: Vec3::E3,
        })
    }
}

struct ConeFamily;
impl TranslatorFamily for ConeFamily {
    fn name(&self) -> &'static str {
        "cone"
    }
    fn summary(&self) -> &'static str {
        "cone of revolution, generators at angle theta0 ∈ (0, π/2); λ = −cos theta0"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("theta0", std::f64::consts::FRAC_PI_3)]
    }
    fn build(&self, p: &Params) -> Result<Built, FamilyError> {
        let (patch, lambda) = make_cone(param(p, "theta0"))?;
        Ok(Built {
            patch,
            lambda: Some(lambda),
            v: Vec3::E3,
        })
    }
}

struct RotationalLineFamily;
impl TranslatorFamily for RotationalLineFamily {
    fn name(&self) -> &'static str {
        "rotational"
    }
    fn summary(&self) -> &'static str {
        "surface of revolution of a straight line at angle theta0 ∈ [0, π]; λ = −cos theta0"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("theta0", std::f64::consts::FRAC_PI_4), ("offset", 1.0)]
    }
    fn build(&self, p: &Params) -> Result<Built, FamilyError> {
        let (patch, lambda) = make_rotational_line(param(p, "theta0"), param(p, "offset"))?;
        Ok(Built {
            patch,
            lambda: Some(lambda),
            v: Vec3::E3,
        })
    }
}

struct TangentOfHelixFamily;
impl TranslatorFamily for TangentOfHelixFamily {
    fn name(&self) -> &'static str {
        "tangent_of_helix"
    }
    fn summary(&self) -> &'static str {
        "tangent developable of the circular helix (a, b); λ = a/√(a²+b²)"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("a", 3.0), ("b", 4.0)]
    }
    fn build(&self, p: &Params) -> Result<Built, FamilyError> {
        let (patch, lambda) = make_tangent_of_helix(param(p, "a"), param(p, "b"))?;
        Ok(Built {
            patch,
            lambda: Some(lambda),
            v: Vec3::E3,
        })
    }
}

struct TranslationFamily;
impl TranslatorFamily for TranslationFamily {
    fn name(&self) -> &'static str {
        "translation"
    }
    fn summary(&self) -> &'static str {
        "graph z = amplitude·sin x + slope·y, rulings parallel to v = (0, 1, slope)/|·|; λ = 0"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("amplitude", 1.0), ("slope", 0.5)]
    }
    fn build(&self, p: &Params) -> Result<Built, FamilyError> {
        let (amp, c) = (param(p, "amplitude"), param(p, "slope"));
        let v = Vec3::new(0.0, 1.0, c) / (1.0 + c * c).sqrt();
        let surf = make_translation_surface(
            move |x: f64| {
                let (sn, cs) = x.sin_cos();
                [amp * sn, amp * cs, -amp * sn, -amp * cs]
            },
            move |y| [c * y, c, 0.0, 0.0],
            v,
            0.0,
        );
        Ok(Built {
            patch: surf.patch(ParamRect::new(-3.0, 3.0, -3.0, 3.0)),
            lambda: Some(0.0),
            v,
        })
    }
}

struct RuledFamily;
impl TranslatorFamily for RuledFamily {
    fn name(&self) -> &'static str {
        "ruled"
    }
    fn summary(&self) -> &'static str {
        "screw ruled surface (beta, omega), α = sin beta/omega; no λ (beta = π/2, omega = 1 is the helicoid)"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("beta", std::f64::consts::FRAC_PI_2), ("omega", 1.0)]
    }
    fn build(&self, p: &Params) -> Result<Built, FamilyError> {
        let rect = ParamRect::new(-std::f64::consts::PI, std::f64::consts::PI, -2.0, 2.0);
        let ruled = screw_ruled(param(p, "beta"), param(p, "omega"), IDENTITY_FRAME, rect)?;
        Ok(Built {
            patch: ruled.patch(),
            lambda: None,
            v: Vec3::E3,
        })
    }
}

/// Families keyed by name.
pub struct FamilyRegistry {
    families: BTreeMap<&'static str, Box<dyn TranslatorFamily>>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        let mut reg = FamilyRegistry::empty();
        reg.register(Box::new(PlaneFamily));
        reg.register(Box::new(CylinderFamily));
        reg.register(Box::new(ConeFamily));
        reg.register(Box::new(RotationalLineFamily));
        reg.register(Box::new(TangentOfHelixFamily));
        reg.register(Box::new(TranslationFamily));
        reg.register(Box::new(RuledFamily));
        reg
    }
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        FamilyRegistry {
            families: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, family: Box<dyn TranslatorFamily>) {
        self.families.insert(family.name(), family);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn TranslatorFamily, FamilyError> {
        self.families
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| FamilyError::UnknownFamily(name.to_string()))
    }

    /// Builds `name` with `overrides` on top of the family defaults.
    pub fn build(&self, name: &str, overrides: &Params) -> Result<FamilyInstance, FamilyError> {
        let family = self.get(name)?;
        let mut params: Params = family.defaults().iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, v) in overrides {
            match params.get_mut(k) {
                Some(slot) => *slot = *v,
                None => {
                    return Err(FamilyError::UnknownParameter {
                        family: name.to_string(),
                        key: k.clone(),
                    })
                }
            }
        }
        let built = family.build(&params)?;
        Ok(FamilyInstance {
            descriptor: FamilyDescriptor {
                kind: name.to_string(),
                lambda: built.lambda,
                v: built.v,
                params,
                reversed: false,
            },
            patch: built.patch,
        })
    }

    /// Rebuilds a member from its descriptor. An explicit λ or `v` in the
    /// descriptor replaces the family's own claim.
    pub fn instantiate(&self, desc: &FamilyDescriptor) -> Result<FamilyInstance, FamilyError> {
        let mut inst = self.build(&desc.kind, &desc.params)?;
        if desc.reversed {
            inst = inst.reversed();
        }
        let vn = desc.v.norm();
        if (vn - 1.0).abs() > 1e-9 {
            return Err(FamilyError::NotUnit(format!("speed has norm {vn}")));
        }
        inst.descriptor.v = desc.v;
        if desc.lambda.is_some() {
            inst.descriptor.lambda = desc.lambda;
        }
        Ok(inst)
    }
}

impl FamilyInstance {
    /// Flips the normal and the speed; λ is unchanged.
    pub fn reversed(mut self) -> Self {
        self.patch = self.patch.reversed();
        self.descriptor.v = -self.descriptor.v;
        self.descriptor.reversed = !self.descriptor.reversed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// Residual must stay below the threshold.
    Positive,
    /// Residual spread must exceed the threshold.
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub name: String,
    pub kind: WitnessKind,
    pub value: f64,
    pub threshold: f64,
}

impl Witness {
    pub fn passed(&self) -> bool {
        match self.kind {
            WitnessKind::Positive => self.value < self.threshold,
            WitnessKind::Negative => self.value > self.threshold,
        }
    }
}

pub const WITNESS_GRID: usize = 32;
pub const WITNESS_TOL: f64 = 1e-8;
pub const NEGATIVE_FLOOR: f64 = 1e-2;

/// Family members checked by the default witness suite.
pub fn positive_corpus() -> Vec<(&'static str, Vec<(&'static str, f64)>)> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    vec![
        ("plane", vec![]),
        ("plane", vec![("nz", -1.0)]),
        ("plane", vec![("nx", 1.0), ("nz", 0.0)]),
        ("cylinder", vec![]),
        ("cylinder", vec![("radius", 5.0)]),
        ("cylinder", vec![("radius", 2.0), ("aspect", 0.4)]),
        ("cone", vec![]),
        ("cone", vec![("theta0", FRAC_PI_4)]),
        ("rotational", vec![("theta0", 0.0)]),
        ("rotational", vec![("theta0", FRAC_PI_2)]),
        ("rotational", vec![("theta0", 2.0 * PI / 3.0)]),
        ("rotational", vec![("theta0", PI)]),
        ("tangent_of_helix", vec![]),
        ("tangent_of_helix", vec![("a", 1.0), ("b", -2.0)]),
        ("translation", vec![]),
    ]
}

fn label(name: &str, params: &[(&str, f64)]) -> String {
    if params.is_empty() {
        return name.to_string();
    }
    let body: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{name}[{}]", body.join(","))
}

/// Residual witnesses: every positive corpus member must vanish to
/// [`WITNESS_TOL`], and the known non-translators must show a residual
/// spread above [`NEGATIVE_FLOOR`].
pub fn witness_suite(reg: &FamilyRegistry) -> Result<Vec<Witness>, FamilyError> {
    let mut out = Vec::new();
    for (name, params) in positive_corpus() {
        let overrides: Params = params.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        let inst = reg.build(name, &overrides)?;
        out.push(Witness {
            name: label(name, &params),
            kind: WitnessKind::Positive,
            value: inst.max_residual(WITNESS_GRID)?.expect("corpus members claim λ"),
            threshold: WITNESS_TOL,
        });
    }

    let mut cyl = reg.build("cylinder", &Params::new())?;
    cyl.descriptor.v = Vec3::E1;
    out.push(Witness {
        name: "cylinder[v ⊥ axis]".into(),
        kind: WitnessKind::Negative,
        value: cyl.residual_spread(WITNESS_GRID)?,
        threshold: NEGATIVE_FLOOR,
    });

    let paraboloid = make_translation_surface(half_square_jet, half_square_jet, Vec3::E3, 1.0);
    let (lo, hi) = paraboloid.residual_range(ParamRect::new(-1.0, 1.0, -1.0, 1.0), 10);
    out.push(Witness {
        name: "translation[x²/2 + y²/2]".into(),
        kind: WitnessKind::Negative,
        value: hi - lo,
        threshold: NEGATIVE_FLOOR,
    });

    let helicoid = reg.build("ruled", &Params::new())?;
    out.push(Witness {
        name: "ruled[helicoid]".into(),
        kind: WitnessKind::Negative,
        value: helicoid.residual_spread(WITNESS_GRID)?,
        threshold: NEGATIVE_FLOOR,
    });
    Ok(out)
}
