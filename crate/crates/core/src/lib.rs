//! Exact combinatorics of metric graphs: chip-firing ranks, admissible
//! covers of marked trees, and certified Weierstrass point counts.
//!
//! The crate is organized bottom-up:
//!
//! - [`graphs`]: graphs with legs as flag sets with a root map and an
//!   involution, plus isomorphism search, stabilization, and the standard
//!   families and tree enumerations;
//! - [`rational`]: exact rational arithmetic helpers (everything in this
//!   crate is a `BigRational`; no floats anywhere);
//! - [`divisors`]: divisors and Baker-Norine rank on metric graphs via
//!   burning/Dhar reduction on a common-denominator subdivision;
//! - [`covers`]: validated finite harmonic covers and the metrics they
//!   induce;
//! - [`hurwitz`]: genus-zero Hurwitz numbers, cover weights, stabilizers
//!   and multiplicities;
//! - [`enumeration`]: exhaustive generation of the admissible covers with
//!   the Weierstrass ramification profile;
//! - [`weierstrass`]: witnesses, marked classes, and the certified
//!   `g³ − g` count of geometric Weierstrass points;
//! - [`json`]: deterministic JSON for every value type above.

pub mod covers;
pub mod divisors;
pub mod enumeration;
pub mod error;
pub mod graphs;
pub mod hurwitz;
pub mod json;
pub mod rational;
pub mod weierstrass;

pub use covers::{Cover, MetricConvention};
pub use divisors::{Divisor, MetricGraph, Point};
pub use error::{Error, Result};
pub use graphs::{DiscreteGraph, GraphBuilder};
pub use rational::Rat;
