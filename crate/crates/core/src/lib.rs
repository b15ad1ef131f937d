//! Optimal binary classification when the classified behavior responds to
//! the committed classifier (outcome performativity).
//!
//! An individual privately draws a compliance cost, observes the committed
//! classification algorithm, and complies iff the expected gain from
//! compliance covers the cost. The classifier anticipates this response.
//! Within that setting the optimal rule is always a threshold rule
//! (accept high signals) or a negative threshold rule (accept low signals);
//! this crate computes both families' optima, verifies the dominance claim
//! numerically, and cross-checks everything by Monte Carlo.
//!
//! Modules, bottom-up:
//!
//! * [`dist`]: scalar distributions and the numerical kernels.
//! * [`model`]: MLRP-validated signal pairs and the game environment.
//! * [`classifier`]: classifier variants and per-classifier quantities.
//! * [`solver`]: prevalence matching and threshold-family optimization.
//! * [`oracle`]: randomized dominance checks and population simulation.
//! * [`cli`]: the `perfclass` command-line front end.

pub mod classifier;
pub mod cli;
pub mod dist;
mod error;
pub mod model;
pub mod oracle;
pub mod solver;

pub use classifier::{Alignment, Behavior, Classifier, Evaluation, ObjectiveWeights, Side};
pub use dist::{ContinuousDist, NumericsConfig};
pub use error::{Error, Result};
pub use model::{Environment, SignalModel};
pub use solver::{Family, PrevalenceMatch, SolveReport};
