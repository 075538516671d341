//! Verification lab for parabolic BMO on space-time cylinders: discretized
//! quasihyperbolic geometry, the parabolic rectangle algebra, geodesic
//! chains with measured certificates, oscillation functionals, exponential
//! level-set decay fits, and a positive solver for the doubly nonlinear
//! model equation.

pub mod chain;
pub mod cover;
pub mod error;
pub mod grid;
pub mod gridfn;
pub mod jn;
pub mod oscillation;
pub mod parabolic;
pub mod pde;
pub mod qh;

pub use error::{Error, Result};
