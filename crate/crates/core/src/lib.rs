//! Online combinatorial optimization over binary action sets of constant weight.
//!
//! The crate provides the action families (m-sets, DAG paths, rankings and the two
//! lower-bound constructions), Legendre functions and their Bregman machinery,
//! the Exp2 and OSMD players, loss generators, a seeded game harness and a set of
//! brute-force / closed-form certifiers used by the `verify` command and the tests.

pub mod action_sets;
pub mod environments;
pub mod error;
pub mod exp2;
pub mod harness;
pub mod legendre;
pub mod oracles;
pub mod osmd;

pub use action_sets::{ActionSet, ActionVector, ConstraintSystem, SetDescriptor};
pub use environments::{Adversary, Feedback, FeedbackMode};
pub use error::{Error, Result};
pub use exp2::Exp2State;
pub use harness::{GameTrace, RegretReport};
pub use legendre::{LegendreFunction, PotentialSpec};
pub use osmd::{OsmdState, VertexDistribution};
