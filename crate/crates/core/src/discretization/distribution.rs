use super::joint::JointDistribution;
use super::normal;
use super::scheme::{BinningScheme, Lattice};
use crate::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-9;

/// Probability distribution over a finite outcome alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedDistribution {
    probabilities: Vec<f64>,
    lattice: Option<Lattice>,
}

impl BinnedDistribution {
    /// Validates nonnegativity and normalization.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("empty distribution"));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::invalid(format!("negative or NaN probability {p}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probabilities, lattice: None })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Bin layout, when the distribution came from binning a continuous variable.
    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

impl AsRef<[f64]> for BinnedDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.probabilities
    }
}

/// Bin probabilities of a zero-mean Gaussian with the given variance.
pub fn bin_probabilities(variance: f64, scheme: &BinningScheme) -> Result<BinnedDistribution> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!("variance must be positive, got {variance}")));
    }
    let lattice = scheme.lattice(variance.sqrt());
    let probabilities = lattice_probabilities(variance, &lattice);
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Numerical(format!("binned Gaussian mass {total} is not normalized")));
    }
    Ok(BinnedDistribution { probabilities, lattice: Some(lattice) })
}

pub(crate) fn lattice_probabilities(variance: f64, lattice: &Lattice) -> Vec<f64> {
    let sigma = variance.sqrt();
    (0..lattice.bins)
        .map(|i| normal::interval(lattice.edge(i) / sigma, lattice.edge(i + 1) / sigma))
        .collect()
}

/// `-sum p log2 p` with `0 log 0 = 0`.
pub fn shannon_entropy<D: AsRef<[f64]> + ?Sized>(d: &D) -> f64 {
    d.as_ref().iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Renyi entropy of order 1/2, `2 log2 sum sqrt(p)`: the max-entropy of a classical
/// distribution.
pub fn renyi_half_entropy<D: AsRef<[f64]> + ?Sized>(d: &D) -> f64 {
    let s: f64 = d.as_ref().iter().map(|&p| p.max(0.0).sqrt()).sum();
    2.0 * s.log2()
}

/// `H(X_A | X_B) = H(X_A X_B) - H(X_B)` from a joint table.
pub fn conditional_shannon_entropy(joint: &JointDistribution) -> f64 {
    joint.joint_entropy() - shannon_entropy(&joint.marginal_b())
}
