//! Rank-one Frank-Wolfe solvers for smooth convex minimization over the
//! spectrahedron (unit-trace positive semidefinite matrices).
//!
//! The centerpiece is a conditional-gradient method whose every iteration
//! touches the iterate only through rank-one modifications — adding an
//! extreme point, removing a spectral direction entirely (a *drop* step),
//! shrinking along one (*away*), or swapping a random in-image direction for
//! a better one (*pairwise*) — while maintaining the iterate's
//! pseudo-inverse and image projector in O(n^2) per step. Under quadratic
//! growth and strict complementarity this converges linearly while the
//! iterate's rank stays near the rank of the solution.
//!
//! Module map:
//! - [`linalg`]: dense symmetric kernels (eigensolvers, pseudo-inverse
//!   updates, simplex projection);
//! - [`state`]: the coupled iterate/pseudo-inverse/projector triple and the
//!   four feasibility-preserving step constructors;
//! - [`objective`]: the oracle interface solvers minimize through;
//! - [`solver`]: the full rank-one method with line searches and dual-gap
//!   certificates;
//! - [`baselines`]: standard Frank-Wolfe, a block (rank-r) variant, and
//!   ablations of the main method;
//! - [`sensing`]: symmetric matrix-sensing instances used by the benchmark
//!   suite;
//! - [`bench`]: the command-line benchmark driver (`solve`, `compare`,
//!   `verify`, `gen`) with CSV trace output.
//!
//! See the crate examples for end-to-end usage of each capability.

pub mod baselines;
pub mod bench;
pub mod linalg;
pub mod objective;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod state;

pub use linalg::SymMat;
pub use objective::{LinearObjective, Objective, SegmentDir};
pub use solver::{solve, solve_with_policy, RunResult, SolverConfig, StepKind, StepPolicy, TraceRow};
pub use state::IterateState;
