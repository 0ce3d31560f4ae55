//! A toolkit for λBLL, a linear λ-calculus with polynomially graded bangs,
//! ground references and probabilistic function symbols.
//!
//! The crate parses and prints terms, checks them against graded effect
//! types, evaluates them exactly to rational distributions over value and
//! store pairs, certifies polynomial step bounds, and computes logical
//! distances between computations.

#![allow(clippy::result_large_err)]

pub mod bounds;
pub mod corpus;
pub mod crypto;
pub mod error;
pub mod eval;
pub mod harness;
pub mod metric;
pub mod poly;
pub mod syntax;
pub mod typing;
