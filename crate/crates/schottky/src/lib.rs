//! Schottky decision and recovery for genus 4, classical and tropical.
//!
//! The tropical side works in exact rational arithmetic: lattice enumeration
//! and closest-vector search ([`exact`]), Voronoi cells and f-vectors
//! ([`polytope`], [`tropical`]), the catalog of genus-4 cographic types
//! ([`graphs`]), and the decision/recovery algorithms plus the tropical
//! Igusa machinery ([`schottky_trop`]).
//!
//! The classical side ([`theta_classical`]) evaluates Riemann theta functions
//! with characteristics in double precision, tests the Schottky–Igusa modular
//! form, and recovers the canonical curve from a singular point of the theta
//! divisor.

pub mod exact;
pub mod graphs;
pub mod polytope;
pub mod schottky_trop;
pub mod theta_classical;
pub mod tropical;

pub use exact::{IntMatrix, IntVector, QuadForm, Rational};
