//! Shared inputs for the criterion benchmarks.

use cvqkd::gaussian::Quadrature;
use cvqkd::ScenarioModel;

/// Key-pair covariance of the default source at the given loss.
pub fn headline_pair(loss: f64) -> [[f64; 2]; 2] {
    ScenarioModel::default().with_loss(loss).key_pair(Quadrature::Q).expect("default model is physical")
}
