//! Generalized plane waves (GPWs) for variable-coefficient linear operators.
//!
//! A GPW centred at `(x0, y0)` is a function `exp(P)` with `P` a complex
//! bivariate polynomial, chosen so that `L exp(P)` vanishes to order `q` at
//! the centre. The crate is organised bottom-up:
//!
//! - [`taylor2d`]: truncated bivariate Taylor series, the numeric currency;
//! - [`expr`]: a small closed-form grammar used to author coefficients;
//! - [`faa`]: bivariate Faa di Bruno partitions, kept as an independent oracle;
//! - [`operator`]: the operator model, symbol factorisation and `L^A`;
//! - [`gpw`]: layer-by-layer construction of the phase polynomial and bases;
//! - [`interp`]: Taylor matrices, numeric rank and Taylor matching.

pub mod error;
pub mod expr;
pub mod faa;
pub mod gpw;
pub mod interp;
pub mod operator;
pub mod taylor2d;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use taylor2d::{MultiIndex, TaylorSeries2};

/// A point of the plane, used for expansion centres.
pub type Point = (f64, f64);
