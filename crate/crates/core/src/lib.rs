//! Detection-loophole thresholds for bipartite no-signalling boxes.
//!
//! Everything is computed in exact rational arithmetic: the detection map,
//! the local-weight LP and its dual Bell certificates, the closed-form
//! statistics of the two guessing strategies, and threshold bisection.

pub mod bell;
pub mod detect;
pub mod distribution;
pub mod error;
pub mod lp;
pub mod rational;
pub mod threshold;
pub mod vertices;

pub use distribution::{convex_combine, Distribution, Scenario};
pub use error::{Error, Result};
pub use rational::Rational;
