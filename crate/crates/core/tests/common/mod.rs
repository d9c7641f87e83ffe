//! Test-only reference implementations and fixtures shared by the integration tests.
//!
//! The oracles deliberately avoid the library's code paths: plain loops over `Vec`s,
//! brute-force counting, and a Jacobi eigensolver.

#![allow(dead_code)]

pub mod fixtures;
pub mod oracle;
