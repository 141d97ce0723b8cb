//! Frobenius manifolds of A_n type, their natural submanifolds (discriminants
//! and caustics), curvature of diagonal metrics, and the dispersionless
//! hierarchies built on them.

pub mod a3_atlas;
pub mod cli;
pub mod frobenius_an;
pub mod geometry;
pub mod hydro;
pub mod numerics;
pub mod polyalg;
pub mod strata;
