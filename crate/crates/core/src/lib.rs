//! Exact finite-state machinery for couplings of Metropolis-Hastings
//! transition kernels.
//!
//! Every quantity is an exact [`Rational`]. Joint distributions are indexed
//! `(x', y')` with the x-chain first.
//!
//! ```
//! use mhcoupling::{decomposition, fixtures};
//!
//! let problem = fixtures::two_state();
//! let pbar = fixtures::two_state_pbar();
//! let helpers = decomposition::compute_helpers(problem.q(), problem.p()).unwrap();
//! let (cam, qbar) =
//!     decomposition::build_cam(&pbar, &helpers, problem.q(), problem.p(), (0, 1)).unwrap();
//! let b = decomposition::extract_acceptance_coupling(&cam, &qbar);
//! assert_eq!(decomposition::regenerate_pbar(&qbar, &b, (0, 1)).unwrap(), pbar);
//! ```

pub mod decomposition;
pub mod error;
pub mod fixtures;
pub mod kernel;
pub mod maximality;
pub mod measure;
pub mod random;
pub mod rational;
pub mod space;

pub use error::{CoreError, Result};
pub use kernel::{AcceptanceMatrix, FiniteKernel, MhProblem, PairMap};
pub use measure::{Dist, HahnDecomposition, JointDist, ResidualStrategy, SubDist};
pub use rational::Rational;
pub use space::StateSpace;
