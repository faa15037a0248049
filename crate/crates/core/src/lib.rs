//! Multiscale toolkit for the Kuramoto–Sakaguchi model with inertia and white noise.
//!
//! The crate is organised by scale:
//!
//! * [`model`] — parameters, grids, Maxwellians, the collision operator in
//!   divergence and factored form, the mean-field coupling and duality pairings.
//! * [`particles`] — the N-oscillator second-order SDE system integrated with
//!   Euler–Maruyama, histogram density estimation and order statistics.
//! * [`kinetic`] — the scaled kinetic Fokker–Planck equation advanced by Strang
//!   splitting (explicit phase transport, implicit collision).
//! * [`hydro`] — the limiting continuity system for the per-frequency densities
//!   together with residual monitors for the momentum balance.
//! * [`gci`] and [`hardy`] — the generalized collision invariant problem and the
//!   Muckenhoupt/Hardy constants of the Gaussian weight.

pub mod error;
pub mod export;
pub mod gci;
pub mod hardy;
pub mod hydro;
pub mod kinetic;
pub mod model;
pub mod particles;
pub mod stats;
pub mod study;
mod tridiag;

pub use error::{Error, Result};
