//! Probabilistic comparison of finite elements of different order.
//!
//! Given two Lagrange elements of degrees `k1 < k2`, the a priori bounds
//! `C_k h^k |u|_{k+1}` cross at a mesh size `h*`. The crate models the
//! probability that the lower-degree element is at least as accurate as a
//! function of `h`, estimates that probability by Monte Carlo and by repeated
//! finite element solves, and fits the candidate laws to observed
//! frequencies.

pub mod boundmodel;
pub mod error;
pub mod fem1d;
pub mod fit;
pub mod freq;
pub mod laws;
pub mod mc;
pub mod quad;
pub mod special;

pub use boundmodel::{BoundModel, Element};
pub use error::{Error, Result};
pub use fem1d::{FemSolution, Mesh1D, RungeProblem};
pub use fit::{fit_gbp, fit_sigmoid, FitConfig, FitResult, Weighting};
pub use freq::{run_experiment, ExperimentMeta, FrequencyRow, FrequencySeries, Observation};
pub use laws::{BetaPair, GeneralizedBetaPrime, LawParams, Sigmoid, StepOutcome, TwoStep};
pub use mc::{McEstimate, RngSeed};
