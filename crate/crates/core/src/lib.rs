//! Galerkin solver for even homoclinic solutions of
//! `-(A(u) u')' + u = lambda a1(t) |u|^{q-1} + |u|^{p-1} + g(|u'|)` on the real line.
//!
//! The pipeline: regularize `g` ([`strauss`]), solve the truncated problem on
//! `(-n, n)` in an even cosine basis ([`basis`], [`galerkin`]), continue in
//! `k`, `n` and `lambda` ([`continuation`]), then check the result ([`verify`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod constants;
pub mod continuation;
pub mod error;
pub mod galerkin;
pub mod newton;
pub mod par;
pub mod problem;
pub mod quadrature;
pub mod strauss;
pub mod verify;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
