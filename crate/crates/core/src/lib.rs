//! Finite-key security calculator and Monte Carlo simulator for continuous-variable
//! quantum key distribution with two-mode squeezed vacuum states and binned homodyne
//! detection.
//!
//! Conventions used throughout the crate:
//!
//! * quadratures are ordered `(q1, p1, q2, p2, ...)` with `hbar = 1`, so the vacuum
//!   covariance matrix is `I / 2` and every symplectic eigenvalue is at least `1/2`;
//! * all entropies and key lengths are in bits (`log2`); the only natural logarithm is
//!   the one inside the sampling correction, which comes from an exponential tail bound.
//!
//! The crate is organised bottom-up:
//!
//! * [`gaussian`]: covariance matrices, symplectic spectra, entropies, purification and
//!   homodyne conditioning;
//! * [`discretization`]: binning schemes, the overlap constant, binned marginal and joint
//!   distributions, classical entropies;
//! * [`coherent`] and [`collective`]: the two finite-key length formulas and the
//!   asymptotic Devetak-Winter comparison rate;
//! * [`sim`]: the seeded Monte Carlo realisation of the protocol;
//! * [`harness`]: scenario configuration, grid optimisation and sweeps.


pub mod coherent;
pub mod collective;
pub mod discretization;
mod error;
pub mod gaussian;
pub mod harness;
pub mod model;
pub mod sim;

pub use coherent::{Breakdown, KeyRateResult, ProtocolParams, SecurityBudget};
pub use collective::ConfidenceBox;
pub use discretization::{BinnedDistribution, BinningScheme, JointDistribution, JointStats};
pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, Quadrature, SymplecticSpectrum};
pub use harness::{AttackMode, ScenarioConfig};
pub use model::ScenarioModel;
