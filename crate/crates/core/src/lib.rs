//! Numerical toolkit for paper Moebius bands.
//!
//! The crate is organised around the objects that appear when studying the
//! minimal aspect ratio of a flat, embedded Moebius band:
//!
//! - [`line_geometry`]: oriented lines, the `(g, h)` pair invariants and the
//!   dual-number (Study sphere) encoding of lines.
//! - [`strip_model`]: the flat band `M_λ`, pre-bends, sampled ruled strips,
//!   foliation validation, cutting, trimming and development.
//! - [`t_pattern`]: the sphere of bend pairs, the odd map `F = (g, h)`,
//!   winding certificates and the degree-guided zero search.
//! - [`bound`]: the vee-length inequality, `α`, `β` and the `√3` lower bound.
//! - [`constructions`]: the triangular band, its smoothed approximants and
//!   limit metrics.
//! - [`asymptotic`]: Gauss map sampling and asymptotic-curve tracing on
//!   height-field patches.
//! - [`verify`]: seeded property suites shared by the CLI and the tests.
//!
//! Data-parallel loops run through [`exec::Exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iterators otherwise.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod bound;
pub mod constructions;
pub mod exec;
pub mod format;
pub mod line_geometry;
pub mod strip_model;
pub mod t_pattern;
pub mod verify;

pub use exec::Exec;
pub use line_geometry::{DualNumber, DualVector, OrientedLine, Vec3};

/// Default tolerance used where a caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;
