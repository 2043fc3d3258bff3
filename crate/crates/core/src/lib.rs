//! Certification engine for first- and second-order sufficient optimality
//! conditions in optimistic bilevel programs.
//!
//! Given a candidate feasible point of a bilevel program whose lower-level
//! optimal value function has computable derivatives, the crate decides
//! whether any of several sufficient conditions for strict local optimality
//! holds, and produces machine-checkable certificates or explicit
//! counterexample witnesses. All polyhedral logic runs on exact rationals.

pub mod certificate;
pub mod error;
pub mod first_order;
pub mod linalg;
pub mod lower;
pub mod model;
pub mod poly;
pub mod polyhedral;
pub mod scalar;
pub mod second_order;
pub mod testkit;
pub mod vf;

pub use error::{Error, Result};
