//! Fixation probability of a selectively neutral invader on a random
//! fitness landscape.
//!
//! The model: `N` sites in a line (or circle), each carrying a normal and a
//! mutant fitness drawn IID from `{1 - delta, 1 + delta}`. A single mutant
//! at site 1 spreads by nearest-neighbor reproduction events; we compute the
//! probability that the mutant type takes over, both per environment
//! (exactly, via the birth-death absorption formula) and averaged over the
//! environment law (by exact enumeration or Monte Carlo). The `limit` module
//! evaluates the Brownian scaling limit `g(c)` of `N * P_N` when
//! `delta * sqrt(N) -> c`, together with its small- and large-`c`
//! asymptotics and related Gaussian integrals.

pub mod bd_solver;
pub mod environment;
pub mod error;
pub mod estimate;
pub mod lattice;
pub mod limit;
pub mod math;
pub mod rng;

pub use environment::{FitnessLandscape, HopProfile};
pub use error::{Error, Result};
pub use estimate::{FixationEstimate, Mode};
pub use lattice::{EdgeSampler, Topology, TopologyKind};
pub use limit::{LimitValue, QuadratureSpec, Scheme};
pub use rng::StreamKey;
