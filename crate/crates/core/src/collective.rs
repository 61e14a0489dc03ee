//! Key length against collective Gaussian attacks and the asymptotic Devetak-Winter rate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coherent::{leak_ec_from_stats, Breakdown, Diagnostics, KeyRateResult, ProtocolParams, SecurityBudget};
use crate::discretization::{bin_probabilities, joint_statistics, normal, renyi_half_entropy, shannon_entropy, BinningScheme, JointStats};
use crate::gaussian::{condition_on_homodyne, VACUUM_VARIANCE, gaussian_entropy, gaussian_purification, CovarianceMatrix, Quadrature};
use crate::harness::AttackMode;
use crate::model::{key_pair_of, ScenarioModel};
use crate::{Error, Result};

/// Below this many estimation rounds the Gaussian-quantile box is outside its validated range.
pub const MIN_VALIDATED_SAMPLES: u64 = 100;
/// Allowed undercut of the corner minimum by the grid refinement.
const GRID_TOLERANCE: f64 = 1e-3;

/// Symmetric two-mode covariance with variances `va`, `vb` and correlation `+z` in `q`, `-z`
/// in `p`.
pub fn symmetric_two_mode(va: f64, vb: f64, z: f64) -> Result<CovarianceMatrix> {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        va,  0.0, z,   0.0,
        0.0, va,  0.0, -z,
        z,   0.0, vb,  0.0,
        0.0, -z,  0.0, vb,
    ]);
    CovarianceMatrix::new(m)
}

/// Box-shaped confidence region for `(V_a, V_b, Z)`.
///
/// This is a stand-in model: each parameter gets a two-sided Gaussian-quantile interval at
/// level `eps_pe / 6` per side, so the three intervals hold jointly with probability at least
/// `1 - eps_pe`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBox {
    pub center: [f64; 3],
    pub half_widths: [f64; 3],
    pub sample_count: u64,
    pub quantile: f64,
    /// `sample_count` is below [`MIN_VALIDATED_SAMPLES`].
    pub out_of_range: bool,
}

impl ConfidenceBox {
    pub fn contains(&self, point: [f64; 3]) -> bool {
        (0..3).all(|i| (point[i] - self.center[i]).abs() <= self.half_widths[i])
    }

    /// Point at relative position `t` in `[-1, 1]^3`.
    pub fn at(&self, t: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|i| self.center[i] + t[i] * self.half_widths[i])
    }
}

pub fn build_confidence_box(center: [f64; 3], m: u64, eps_pe: f64) -> Result<ConfidenceBox> {
    if m < 2 {
        return Err(Error::invalid(format!("need at least 2 estimation rounds, got {m}")));
    }
    if !(eps_pe > 0.0 && eps_pe < 1.0) {
        return Err(Error::invalid(format!("eps_pe must lie in (0, 1), got {eps_pe}")));
    }
    let [va, vb, z] = center;
    let q = normal::upper_quantile(eps_pe / 6.0);
    let mf = m as f64;
    let half_widths = [va * q * (2.0 / mf).sqrt(), vb * q * (2.0 / mf).sqrt(), q * ((va * vb + z * z) / mf).sqrt()];
    Ok(ConfidenceBox { center, half_widths, sample_count: m, quantile: q, out_of_range: m < MIN_VALIDATED_SAMPLES })
}

/// `AEP` correction `Delta = 4 log2(2^(H_max / 2 + 1) + 1) sqrt(log2(2 / eps^2))`.
pub fn aep_delta(eps_smooth: f64, hmax_xa: f64) -> f64 {
    4.0 * ((hmax_xa / 2.0 + 1.0).exp2() + 1.0).log2() * (2.0 / (eps_smooth * eps_smooth)).log2().sqrt()
}

/// Smallest `n` for which the AEP correction applies.
pub fn aep_min_rounds(eps_smooth: f64) -> f64 {
    1.6 * (2.0 / (eps_smooth * eps_smooth)).log2()
}

/// Lower bound on `H(X_A | E)` per symbol for the two-mode state `gamma_ab`, with Alice
/// measuring `q`: `H(E | q_A) + H(X_A) - H(AB)`, clamped at zero.
pub fn conditional_entropy_bound(gamma_ab: &CovarianceMatrix, scheme: &BinningScheme) -> Result<f64> {
    let h_x = shannon_entropy(&bin_probabilities(gamma_ab.get(0, 0), scheme)?);
    Ok(conditional_entropy_terms(gamma_ab)?.bound(h_x))
}

struct EntropyTerms {
    h_e_given_qa: f64,
    h_ab: f64,
}

impl EntropyTerms {
    fn bound(&self, h_x: f64) -> f64 {
        (self.h_e_given_qa + h_x - self.h_ab).max(0.0)
    }
}

fn conditional_entropy_terms(gamma_ab: &CovarianceMatrix) -> Result<EntropyTerms> {
    if gamma_ab.modes() != 2 {
        return Err(Error::invalid(format!("expected a two-mode state, got {} modes", gamma_ab.modes())));
    }
    let pure = gaussian_purification(gamma_ab)?;
    // Modes after measuring A: B, then the purifying system.
    let conditioned = condition_on_homodyne(&pure, 0, Quadrature::Q)?;
    let eve_modes: Vec<usize> = (1..conditioned.modes()).collect();
    let h_e_given_qa = gaussian_entropy(&conditioned.submatrix(&eve_modes)?)?;
    Ok(EntropyTerms { h_e_given_qa, h_ab: gaussian_entropy(gamma_ab)? })
}

/// Covariance matrix at a box point, shrinking `|Z|` until the state is physical. Returns the
/// matrix and whether it had to be projected.
fn physical_point(point: [f64; 3]) -> Result<(CovarianceMatrix, bool)> {
    let [va, vb, z] = point;
    // Strictly physical: the tolerance of `CovarianceMatrix::new` would otherwise let the
    // purification see eigenvalues just below 1/2.
    let strict = |z: f64| {
        symmetric_two_mode(va, vb, z)
            .ok()
            .filter(|g| g.symplectic_eigenvalues().map(|s| s.min() >= VACUUM_VARIANCE).unwrap_or(false))
    };
    if let Some(g) = strict(z) {
        return Ok((g, false));
    }
    let floor = strict(0.0).ok_or_else(|| Error::invalid(format!("variances ({va}, {vb}) are below vacuum")))?;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if strict(mid * z).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((strict(lo * z).unwrap_or(floor), true))
}

/// Result of minimizing the entropy bound over a confidence box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxMinimum {
    pub bound: f64,
    pub corner_bound: f64,
    pub projected: bool,
    pub non_monotone: bool,
}

/// Minimizes [`conditional_entropy_bound`] over the corners and center of `cbox`, then checks
/// the corner minimum against a 3x3x3 grid and falls back to the grid minimum if the grid
/// undercuts it by more than 1e-3 bits.
pub fn minimize_over_box(cbox: &ConfidenceBox, scheme: &BinningScheme) -> Result<BoxMinimum> {
    let mut projected = false;
    let mut eval = |t: [f64; 3]| -> Result<f64> {
        let (g, p) = physical_point(cbox.at(t))?;
        projected |= p;
        conditional_entropy_bound(&g, scheme)
    };
    let mut corner = eval([0.0; 3])?;
    for i in 0..8 {
        let t = [0, 1, 2].map(|b| if i >> b & 1 == 1 { 1.0 } else { -1.0 });
        corner = corner.min(eval(t)?);
    }
    let mut grid = corner;
    for i in 0..27 {
        let t = [i % 3, i / 3 % 3, i / 9].map(|v| v as f64 - 1.0);
        grid = grid.min(eval(t)?);
    }
    let non_monotone = grid < corner - GRID_TOLERANCE;
    Ok(BoxMinimum { bound: if non_monotone { grid } else { corner }, corner_bound: corner, projected, non_monotone })
}

/// Collective-attack key length for an honest model; `scheme` is normally without cutoff.
pub fn key_length_collective(
    rounds: u64,
    k: u64,
    scheme: &BinningScheme,
    budget: &SecurityBudget,
    model: &ScenarioModel,
    beta: f64,
) -> Result<KeyRateResult> {
    let gamma = model.covariance()?;
    let stats = joint_statistics(key_pair_of(&gamma, Quadrature::Q), scheme)?;
    key_length_collective_from_stats(rounds, k, scheme, budget, &gamma, &stats, beta)
}

/// `ell = n min_box H(X_A|E) - sqrt(n) Delta - leak - log2(2/eps_c) - 2 log2(1/(2 eps_pa))`.
pub fn key_length_collective_from_stats(
    rounds: u64,
    k: u64,
    scheme: &BinningScheme,
    budget: &SecurityBudget,
    gamma: &CovarianceMatrix,
    stats: &JointStats,
    beta: f64,
) -> Result<KeyRateResult> {
    budget.validate()?;
    let params = ProtocolParams::new(rounds, k, *scheme, stats.distance.mean, 0.0)?;
    let n = params.n();
    let eps = budget.eps_smooth();
    let required = aep_min_rounds(eps);
    if (n as f64) < required {
        return Err(Error::AepInvalid { n, required });
    }
    let center = [gamma.get(0, 0), gamma.get(2, 2), gamma.get(0, 2)];
    let cbox = build_confidence_box(center, k + rounds, budget.eps_pe)?;
    let min = minimize_over_box(&cbox, scheme)?;
    let hmax = renyi_half_entropy(&bin_probabilities(center[0], scheme)?);
    let delta = aep_delta(eps, hmax);
    let nf = n as f64;
    let breakdown = Breakdown {
        conditional_entropy: nf * min.bound,
        aep: -nf.sqrt() * delta,
        leak_ec: -leak_ec_from_stats(n, stats, beta)?,
        correctness: -budget.correctness_cost(),
        privacy_amplification: -budget.privacy_amplification_cost(),
        ..Default::default()
    };
    let diagnostics = Diagnostics {
        expected_distance: stats.distance.mean,
        distance_variance: stats.distance.variance,
        h_a: stats.h_a,
        mutual_information: stats.mutual_information(),
        hmax_a: hmax,
        aep_delta: delta,
        entropy_bound: min.bound,
        secrecy: budget.eps_s + budget.eps_pe,
        box_projected: min.projected,
        box_non_monotone: min.non_monotone,
        ..Default::default()
    };
    Ok(KeyRateResult::from_breakdown(AttackMode::Collective, params, breakdown, diagnostics))
}

/// Asymptotic rate with perfect reconciliation: entropy bound minus `H(X_A | X_B)`. May be
/// negative.
pub fn devetak_winter_rate(gamma_ab: &CovarianceMatrix, scheme: &BinningScheme) -> Result<f64> {
    let stats = joint_statistics(key_pair_of(gamma_ab, Quadrature::Q), scheme)?;
    devetak_winter_from_stats(gamma_ab, &stats)
}

/// Same as [`devetak_winter_rate`], reusing the key-pair statistics of the scheme.
pub fn devetak_winter_from_stats(gamma_ab: &CovarianceMatrix, stats: &JointStats) -> Result<f64> {
    Ok(conditional_entropy_terms(gamma_ab)?.bound(stats.h_a) - stats.conditional_entropy())
}
