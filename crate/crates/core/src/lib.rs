//! Exact solver for generalized Pig games.
//!
//! A generalized Pig game is played with a die whose faces `0..=n` come up
//! with probabilities `p_0..p_n`; rolling a zero forfeits the turn score,
//! and the first player to bank `N` points wins. [`solver::solve`] computes
//! the winning probability `v(a, b)` of the player to move for every pair of
//! remaining needs, together with an optimal hold/roll policy, by backward
//! induction over sub-games. Each sub-game reduces to a pair of convex
//! piecewise-linear equations ([`plinear`]) that is solved without iterating
//! the Bellman operator. The [`oracle`] module holds independent checks.

pub mod bench;
pub mod game;
pub mod numeric;
pub mod ops;
pub mod oracle;
pub mod plinear;
pub mod solver;

pub use game::{Action, GameSpec, Player, RawSpec, State};
pub use num_rational::BigRational;
pub use numeric::{NumMode, Scalar};
pub use plinear::PlFunction;
pub use solver::{solve, solve_with, PairMethod, Policy, Solution, SolveOptions, ValueTable};
