//! The binned measurement layer: interval partitions of the quadrature axis, the
//! overlap constant of binned conjugate quadratures, binned marginal and joint
//! distributions of Gaussian outcomes, and classical entropies.

mod distribution;
mod joint;
pub mod normal;
mod overlap;
mod scheme;

pub use distribution::{
    bin_probabilities, conditional_shannon_entropy, renyi_half_entropy, shannon_entropy, BinnedDistribution,
};
pub use joint::{expected_distance, joint_bin_distribution, joint_statistics, DistanceMoments, JointDistribution, JointRow, JointStats};
pub use overlap::{overlap_c, prolate_factor};
pub use scheme::{BinningScheme, Lattice, TRUNCATION_SIGMAS};
