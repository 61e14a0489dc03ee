//! Honest-implementation model: squeezed source plus a symmetric loss / excess-noise
//! channel.

use serde::{Deserialize, Serialize};

use crate::gaussian::{apply_loss_excess, two_mode_squeezed_source, CovarianceMatrix, Quadrature};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioModel {
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    /// Fraction of the signal replaced by vacuum, on both modes.
    pub loss: f64,
    /// Added classical noise in vacuum units.
    pub excess_noise: f64,
}

impl Default for ScenarioModel {
    fn default() -> Self {
        Self { squeezing_db: 11.0, antisqueezing_db: 16.0, loss: 0.0, excess_noise: 0.01 }
    }
}

impl ScenarioModel {
    pub fn with_loss(self, loss: f64) -> Self {
        Self { loss, ..self }
    }

    /// Two-mode covariance matrix of the state Alice and Bob measure.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        let source = two_mode_squeezed_source(self.squeezing_db, self.antisqueezing_db)?;
        apply_loss_excess(&source, self.loss, self.excess_noise)
    }

    /// Covariance of the key pair `(x_A, x_B)` in one basis. Bob negates his `p` outcomes so
    /// both bases yield positively correlated pairs.
    pub fn key_pair(&self, quadrature: Quadrature) -> Result<[[f64; 2]; 2]> {
        Ok(key_pair_of(&self.covariance()?, quadrature))
    }
}

/// `(x_A, ±x_B)` block of a two-mode covariance matrix, with Bob's sign flip on `p`.
pub fn key_pair_of(gamma: &CovarianceMatrix, quadrature: Quadrature) -> [[f64; 2]; 2] {
    let mut block = gamma.quadrature_pair(0, quadrature, 1, quadrature);
    if quadrature == Quadrature::P {
        block[0][1] = -block[0][1];
        block[1][0] = -block[1][0];
    }
    block
}
