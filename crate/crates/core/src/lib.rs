//! Constructive shadowing for nonautonomous dynamical systems.
//!
//! The crate computes shadowing points of pseudo-orbits of time-varying map
//! families and checks the results against independent brute-force oracles:
//!
//! * [`solver`]: unique ε-shadowing of expanding families by backward
//!   inverse-branch pullbacks, with diameter certificates and periodic
//!   shadowing.
//! * [`limit`]: limit shadowing by splicing exact preimage heads onto tails.
//! * [`average`]: asymptotic average shadowing through an invariant subset,
//!   using the density machinery in [`density`].
//! * [`product`]: product systems with the max metric and finite-horizon
//!   shadowing checkers.
//! * [`cli`]: JSON scenarios in, JSON/CSV reports out.

pub mod average;
pub mod builtins;
pub mod cli;
pub mod density;
pub mod descriptor;
pub mod error;
pub mod family;
pub mod finite;
pub mod limit;
pub mod product;
pub mod pseudo_orbit;
pub mod solver;
pub mod space;

pub use error::{Result, ShadowError};
pub use family::{MapFamily, MapKind, OrbitSegment, Schedule, Steps};

pub use space::{Point, StateSpace};
