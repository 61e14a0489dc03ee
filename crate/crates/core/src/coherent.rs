//! Key length against coherent attacks, from the entropic uncertainty relation with the
//! average bin distance as the only estimated quantity.

use serde::{Deserialize, Serialize};

use crate::discretization::{joint_statistics, normal, overlap_c, BinningScheme, DistanceMoments, JointDistribution, JointStats};
use crate::discretization::shannon_entropy;
use crate::gaussian::Quadrature;
use crate::harness::AttackMode;
use crate::model::ScenarioModel;
use crate::{Error, Result};

/// Secrecy and correctness parameters and how the secrecy budget is shared out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityBudget {
    pub eps_s: f64,
    pub eps_c: f64,
    /// Failure probability of the covariance confidence set (collective attacks only).
    pub eps_pe: f64,
    pub smoothing_share: f64,
    pub sampling_share: f64,
    pub pa_share: f64,
}

impl Default for SecurityBudget {
    fn default() -> Self {
        Self { eps_s: 1e-6, eps_c: 1e-6, eps_pe: 1e-6, smoothing_share: 0.5, sampling_share: 0.25, pa_share: 0.25 }
    }
}

impl SecurityBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps_s", self.eps_s), ("eps_c", self.eps_c), ("eps_pe", self.eps_pe)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        let shares = [self.smoothing_share, self.sampling_share, self.pa_share];
        if shares.iter().any(|s| !(*s > 0.0)) || shares.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("budget shares {shares:?} must be positive and sum to <= 1")));
        }
        Ok(())
    }

    pub fn eps_smooth(&self) -> f64 {
        self.smoothing_share * self.eps_s
    }

    pub fn eps_sampling(&self) -> f64 {
        self.sampling_share * self.eps_s
    }

    pub fn eps_pa(&self) -> f64 {
        self.pa_share * self.eps_s
    }

    /// `log2(2 / eps_c)`: cost of the hash that confirms error correction.
    pub fn correctness_cost(&self) -> f64 {
        (2.0 / self.eps_c).log2()
    }

    /// `2 log2(1 / (2 eps_pa))`: leftover-hash cost of privacy amplification.
    pub fn privacy_amplification_cost(&self) -> f64 {
        2.0 * (1.0 / (2.0 * self.eps_pa())).log2()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Sifted rounds `N`.
    pub rounds: u64,
    /// Parameter-estimation rounds `k`.
    pub k: u64,
    pub scheme: BinningScheme,
    /// Abort threshold on the average bin distance.
    pub d0: f64,
    /// Bound on the per-round probability that Alice's outcome exceeds the cutoff.
    pub p_alpha: f64,
}

impl ProtocolParams {
    pub fn new(rounds: u64, k: u64, scheme: BinningScheme, d0: f64, p_alpha: f64) -> Result<Self> {
        if !(k > 0 && k < rounds) {
            return Err(Error::invalid(format!("need 0 < k < N, got k = {k}, N = {rounds}")));
        }
        if !(d0 >= 0.0) || !d0.is_finite() {
            return Err(Error::invalid(format!("abort threshold must be finite and >= 0, got {d0}")));
        }
        if !(0.0..1.0).contains(&p_alpha) {
            return Err(Error::invalid(format!("p_alpha must lie in [0, 1), got {p_alpha}")));
        }
        Ok(Self { rounds, k, scheme, d0, p_alpha })
    }

    /// Raw key length `n = N - k`.
    pub fn n(&self) -> u64 {
        self.rounds - self.k
    }
}

/// Signed contributions to the key length in bits; `ell` is the floor of their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    /// `n log2(1 / c(delta))`.
    pub uncertainty: f64,
    /// `-n log2 gamma(d0 + mu)`.
    pub max_entropy: f64,
    /// `n` times the worst-case conditional entropy over the confidence set.
    pub conditional_entropy: f64,
    /// `-sqrt(n) Delta`.
    pub aep: f64,
    pub leak_ec: f64,
    pub correctness: f64,
    pub privacy_amplification: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.uncertainty
            + self.max_entropy
            + self.conditional_entropy
            + self.aep
            + self.leak_ec
            + self.correctness
            + self.privacy_amplification
    }
}

/// Intermediate quantities reported next to the key length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub expected_distance: f64,
    pub distance_variance: f64,
    pub mu: f64,
    pub eps_mu: f64,
    pub overlap: f64,
    pub h_a: f64,
    pub mutual_information: f64,
    pub hmax_a: f64,
    pub aep_delta: f64,
    pub entropy_bound: f64,
    /// Overall secrecy parameter of the key.
    pub secrecy: f64,
    pub box_projected: bool,
    pub box_non_monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub attack: AttackMode,
    pub ell: u64,
    /// `ell / N`.
    pub rate: f64,
    pub breakdown: Breakdown,
    pub params: ProtocolParams,
    pub diagnostics: Diagnostics,
    /// Why no key could be produced, when `ell = 0` for a structural reason.
    pub note: Option<String>,
}

impl KeyRateResult {
    pub(crate) fn from_breakdown(
        attack: AttackMode,
        params: ProtocolParams,
        breakdown: Breakdown,
        diagnostics: Diagnostics,
    ) -> Self {
        let total = breakdown.total();
        let ell = if total > 0.0 { total.floor() as u64 } else { 0 };
        Self { attack, ell, rate: ell as f64 / params.rounds as f64, breakdown, params, diagnostics, note: None }
    }
}

/// `gamma(t) = (t + sqrt(1 + t^2)) (t / (sqrt(1 + t^2) - 1))^t`, with `gamma(0) = 1`.
pub fn gamma(t: f64) -> f64 {
    log2_gamma(t).exp2()
}

/// `log2 gamma(t)`, evaluated without cancellation: `t / (sqrt(1+t^2) - 1)` is rewritten as
/// `(sqrt(1+t^2) + 1) / t`.
pub fn log2_gamma(t: f64) -> f64 {
    assert!(t >= 0.0, "gamma is defined for t >= 0, got {t}");
    if t == 0.0 {
        return 0.0;
    }
    let r = t.hypot(1.0);
    (t + r).log2() + t * ((r + 1.0) / t).log2()
}

/// `f(p, n) = sqrt(2 (1 - (1 - p)^n))`.
pub fn tail_correction_f(p_alpha: f64, n: u64) -> f64 {
    let miss = -(n as f64 * (-p_alpha).ln_1p()).exp_m1();
    (2.0 * miss).sqrt()
}

/// Two-sided Gaussian tail `P(|x| > alpha)` for variance `variance`.
pub fn p_alpha_from_model(variance: f64, alpha: f64) -> f64 {
    if alpha.is_infinite() {
        return 0.0;
    }
    (2.0 * normal::sf(alpha / variance.sqrt())).min(1.0)
}

/// `eps_mu = eps_sampling - 2 f(p_alpha, n)`; must be positive for any key.
pub fn eps_mu(params: &ProtocolParams, budget: &SecurityBudget) -> f64 {
    budget.eps_sampling() - 2.0 * tail_correction_f(params.p_alpha, params.n())
}

/// Sampling correction `mu = |X| sqrt(N (k + 1) / (n k^2) ln(1 / eps_mu))` in bin units.
pub fn mu_correction(params: &ProtocolParams, eps_mu: f64) -> Result<f64> {
    if !(eps_mu > 0.0) {
        return Err(Error::BudgetExhausted { eps_mu });
    }
    if eps_mu > 1.0 {
        return Err(Error::invalid(format!("eps_mu must be at most 1, got {eps_mu}")));
    }
    let alphabet = params
        .scheme
        .alphabet_size()
        .ok_or_else(|| Error::invalid("the sampling correction needs a finite cutoff alpha"))? as f64;
    let (big_n, k, n) = (params.rounds as f64, params.k as f64, params.n() as f64);
    Ok(alphabet * (big_n * (k + 1.0) / (n * k * k) * (1.0 / eps_mu).ln()).sqrt())
}

/// Error-correction leakage `n (H(X_A) - beta I(X_A; X_B))`.
pub fn leak_ec(n: u64, joint: &JointDistribution, beta: f64) -> Result<f64> {
    let h_a = shannon_entropy(&joint.marginal_a());
    let h_b = shannon_entropy(&joint.marginal_b());
    leak_from_entropies(n, h_a, h_a + h_b - joint.joint_entropy(), beta)
}

pub fn leak_ec_from_stats(n: u64, stats: &JointStats, beta: f64) -> Result<f64> {
    leak_from_entropies(n, stats.h_a, stats.mutual_information(), beta)
}

fn leak_from_entropies(n: u64, h_a: f64, mutual: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("error-correction efficiency must lie in (0, 1], got {beta}")));
    }
    Ok(n as f64 * (h_a - beta * mutual.max(0.0)))
}

/// `d0 = E[d] + z(eps_robust) sqrt(Var / k)`, so an honest run aborts with probability about
/// `eps_robust`.
pub fn set_abort_threshold(moments: &DistanceMoments, k: u64, eps_robust: f64) -> Result<f64> {
    if !(eps_robust > 0.0 && eps_robust < 1.0) {
        return Err(Error::invalid(format!("eps_robust must lie in (0, 1), got {eps_robust}")));
    }
    let z = normal::upper_quantile(eps_robust);
    Ok((moments.mean + z * (moments.variance / k as f64).sqrt()).max(0.0))
}

/// Coherent-attack key length for an honest model: computes the key-pair statistics and
/// calls [`key_length_coherent_from_stats`].
pub fn key_length_coherent(
    params: &ProtocolParams,
    budget: &SecurityBudget,
    model: &ScenarioModel,
    beta: f64,
) -> Result<KeyRateResult> {
    let stats = joint_statistics(model.key_pair(Quadrature::Q)?, &params.scheme)?;
    key_length_coherent_from_stats(params, budget, &stats, beta)
}

/// `ell = n log2(1/c) - n log2 gamma(d0 + mu) - leak - log2(2/eps_c) - 2 log2(1/(2 eps_pa))`.
pub fn key_length_coherent_from_stats(
    params: &ProtocolParams,
    budget: &SecurityBudget,
    stats: &JointStats,
    beta: f64,
) -> Result<KeyRateResult> {
    budget.validate()?;
    let eps_mu = eps_mu(params, budget);
    let mu = mu_correction(params, eps_mu)?;
    let c = overlap_c(params.scheme.delta())?;
    let n = params.n() as f64;
    let breakdown = Breakdown {
        uncertainty: -n * c.log2(),
        max_entropy: -n * log2_gamma(params.d0 + mu),
        leak_ec: -leak_ec_from_stats(params.n(), stats, beta)?,
        correctness: -budget.correctness_cost(),
        privacy_amplification: -budget.privacy_amplification_cost(),
        ..Default::default()
    };
    let diagnostics = Diagnostics {
        expected_distance: stats.distance.mean,
        distance_variance: stats.distance.variance,
        mu,
        eps_mu,
        overlap: c,
        h_a: stats.h_a,
        mutual_information: stats.mutual_information(),
        secrecy: budget.eps_s,
        ..Default::default()
    };
    Ok(KeyRateResult::from_breakdown(AttackMode::Coherent, *params, breakdown, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_close!(gamma(0.0), 1.0, 0.0);
        assert_close!(gamma(1.0), 3.0 + 2.0 * 2f64.sqrt(), 1e-12);
        // direct closed form away from the cancellation region
        let t: f64 = 2.5;
        let r = (1.0 + t * t).sqrt();
        assert_close!(gamma(t), (t + r) * (t / (r - 1.0)).powf(t), 1e-9);
        assert!(log2_gamma(1e-9) > 0.0 && log2_gamma(1e-9) < 1e-7);
    }

    #[test]
    fn tail_correction_values() {
        assert_close!(tail_correction_f(0.0, 1000), 0.0, 0.0);
        assert_close!(tail_correction_f(0.02, 1), 0.2, 1e-15);
        for &(p, n) in &[(1e-3, 10u64), (1e-9, 1_000_000), (0.3, 3)] {
            assert!(tail_correction_f(p, n) <= (2.0 * n as f64 * p).sqrt());
        }
        assert!(tail_correction_f(1e-30, 1_000_000_000) > 0.0);
    }

    #[test]
    fn p_alpha_tail() {
        assert_eq!(p_alpha_from_model(9.97, f64::INFINITY), 0.0);
        assert!(p_alpha_from_model(9.9726, 52.0) < 1e-50);
        assert!(p_alpha_from_model(9.9726, 20.0) >= p_alpha_from_model(9.9726, 40.0));
    }

    #[test]
    fn mu_zero_at_unit_eps_and_exhausted_budget() {
        let scheme = BinningScheme::finite(52.0, 0.01).unwrap();
        let p = ProtocolParams::new(1_000_000_000, 100_000_000, scheme, 24.0, 0.0).unwrap();
        assert_close!(mu_correction(&p, 1.0).unwrap(), 0.0, 0.0);
        assert!(matches!(mu_correction(&p, 0.0), Err(Error::BudgetExhausted { .. })));
        assert!(matches!(mu_correction(&p, -1e-9), Err(Error::BudgetExhausted { .. })));
    }

    #[test]
    fn abort_threshold_margin() {
        let m = DistanceMoments { mean: 3.0, variance: 4.0 };
        assert_close!(set_abort_threshold(&m, 100, 0.5).unwrap(), 3.0, 1e-12);
        let d = set_abort_threshold(&m, 100, 0.01).unwrap();
        assert_close!(d, 3.0 + 2.326_347_874_040_841 * 0.2, 1e-9);
    }

    #[test]
    fn budget_costs() {
        let b = SecurityBudget::default();
        b.validate().unwrap();
        assert_close!(b.correctness_cost(), (2e6f64).log2(), 1e-12);
        assert_close!(b.privacy_amplification_cost(), 2.0 * (2e6f64).log2(), 1e-12);
        let bad = SecurityBudget { pa_share: 0.6, ..b };
        assert!(bad.validate().is_err());
    }
}
