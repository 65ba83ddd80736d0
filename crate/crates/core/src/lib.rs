//! Warm-started steepest-exchange minimization of separable convex
//! resource allocation over laminar constraints.
//!
//! An [`Instance`] fixes `x(N) = R`, bounds `l_Y <= x(Y) <= u_Y` on the
//! sets `Y` of a laminar family, and a convex cost `f_Y(x(Y))` per set.
//! A fractional prediction is rounded and projected onto the feasible set
//! in l1 ([`project`]), then improved by single-unit exchanges
//! ([`greedy_minimize`]) whose directions come from a tree DP
//! ([`DpOracle`]) or, for box constraints, two indexed heaps
//! ([`BoxOracle`]). [`LearnerState`] learns predictions online from past
//! optima.

pub mod box_oracle;
pub mod dp;
pub mod error;
pub mod experiment;
pub mod ext;
pub mod general;
pub mod greedy;
pub mod heap;
pub mod instance;
pub mod objective;
pub mod oracle;
pub mod predictor;
pub mod projection;
pub mod random;
pub mod tree;

pub use box_oracle::BoxOracle;
pub use dp::{build_exchange_tree, steepest_direction_dp, DpOracle};
pub use error::{Error, Result};
pub use ext::ExtInt;
pub use greedy::{greedy_minimize, DirectionOracle, Exchange, ExchangeObjective, GreedyOptions, SolveReport};
pub use instance::{Feasibility, Instance, InstanceFile, IntSolution};
pub use objective::Objective;
pub use predictor::LearnerState;
pub use projection::{project, project_integer, Projection};
pub use tree::{LaminarTree, NodeSpec};
