//! Certified two-sided bounds on the essential minimum of the height attached
//! to a Green function on the complex plane.
//!
//! Lower bounds come from rational dual certificates `(Q_i, a_i)` with
//! `Σ a_i deg Q_i < 1`: the infimum over ℂ of `g − Σ a_i log|Q_i|` bounds the
//! essential minimum from below. Upper bounds come from integrating `g`
//! against measures that are limits of Galois orbits of algebraic integers,
//! the pullbacks `μ_{P,Q}` of the unit-circle Haar measure under
//! `P^{deg Q + 1} / Q^{deg P}` and equilibrium measures of monic lemniscates.
//! The [`driver`] alternates both sides until the bracket is narrow enough.

pub mod driver;
pub mod error;
pub mod greens;
pub mod interval;
pub mod intpoly;
pub mod lowerbound;
pub mod lp;
pub mod measures;
pub mod modular;
pub mod roots;
pub mod upperbound;
pub mod verify;

pub use error::{Error, Result};
pub use greens::GreenFunction;
pub use intpoly::IntPoly;
pub use num_complex::Complex64;
