//! Numerical toolkit for λ-translating surfaces of the Gauss curvature flow:
//! surfaces whose Gauss curvature satisfies `K = ⟨N, v⟩ + λ` for a fixed
//! unit direction `v` and constant `λ`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod families;
pub mod geom;
pub mod global;
pub mod mesh;
pub mod ode;
pub mod phaseplane;
pub mod profile;
pub mod singular;
