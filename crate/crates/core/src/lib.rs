//! Finds symmetric periodic orbits of the gravitational (and generalized)
//! n-body problem by minimizing the Lagrange action over a space of loops
//! constrained by a finite symmetry group.
//!
//! A symmetry is specified by a finite group acting on configurations
//! through a spatial rotation, a relabeling of the bodies and a rotation or
//! reflection of time. Candidate loops are restricted to a fundamental
//! domain I = [0, π] of the time action and discretized as a segment plus a
//! truncated sine series over the n-1 free bodies (the last body keeps the
//! center of mass at the origin). Averaging projectors pin coefficients,
//! gradients and Hessians to the equivariant subspace, the action and its
//! derivatives combine an exact kinetic quadratic form with a quadrature of
//! the potential, and standard unconstrained solvers drive the search. A
//! minimizer unfolds to a full periodic orbit by the group symmetries.
//!
//! See the `examples/` directory for runnable entry points: an end-to-end
//! orbit search, programmatic problem construction, action-type variants,
//! group diagnostics and rotating frames. The `symbody` binary wraps the
//! same flows as subcommands (`init`, `solve`, `verify`, `export`,
//! `render`, `info`).

pub mod action;
pub mod diagnostics;
pub mod error;
pub mod group;
pub mod io;
pub mod optim;
pub mod path;
pub mod potential;
pub mod projectors;

pub use action::{ActionEvaluator, EvalOrder};
pub use error::{Error, Result};
pub use group::{ActionType, FiniteGroup, GroupElement, Permutation, SymmetryProblem,
    SymmetryProblemSpec};
pub use optim::{
    best_converged, initial_guess, minimize, multi_start, newton_refine, GuessKind, Method,
    MinimizationResult, OptimizerOptions, Termination,
};
pub use path::{build_path, extend_to_period, CoeffLayout, DiscretizedPath, PathCoefficients};
pub use potential::{PotentialModel, PotentialShape};
