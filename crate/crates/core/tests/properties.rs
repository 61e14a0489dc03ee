mod common;

use std::sync::OnceLock;

use cvqkd::coherent::{gamma, key_length_coherent_from_stats, tail_correction_f};
use cvqkd::discretization::{
    bin_probabilities, expected_distance, joint_bin_distribution, joint_statistics, renyi_half_entropy,
    shannon_entropy, JointRow,
};
use cvqkd::gaussian::{apply_loss_excess, gaussian_entropy, gaussian_purification, two_mode_squeezed_source};
use cvqkd::model::key_pair_of;
use cvqkd::sim::counting_enumeration;
use cvqkd::{
    BinningScheme, JointDistribution, JointStats, ProtocolParams, Quadrature, ScenarioModel, SecurityBudget,
};
use proptest::prelude::*;

fn coarse_scheme() -> BinningScheme {
    BinningScheme::finite(40.0, 0.5).unwrap()
}

fn coarse_stats() -> &'static JointStats {
    static STATS: OnceLock<JointStats> = OnceLock::new();
    STATS.get_or_init(|| {
        let cov = key_pair_of(&ScenarioModel::default().covariance().unwrap(), Quadrature::Q);
        joint_statistics(cov, &coarse_scheme()).unwrap()
    })
}

fn small_joint(cov: [[f64; 2]; 2]) -> JointDistribution {
    joint_bin_distribution(cov, &BinningScheme::finite(6.0, 0.75).unwrap()).unwrap()
}

fn key_pair() -> impl Strategy<Value = [[f64; 2]; 2]> {
    (0.3f64..4.0, 0.3f64..4.0, -0.95f64..0.95).prop_map(|(va, vb, rho)| {
        let c = rho * (va * vb).sqrt();
        [[va, c], [c, vb]]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_states_are_physical(seed in any::<u64>(), modes in 1usize..4) {
        let mut rng = common::rng(seed);
        let (g, nus) = common::random_physical(modes, &mut rng);
        let spectrum = g.symplectic_eigenvalues().unwrap();
        prop_assert!(spectrum.min() >= 0.5 - 1e-9);
        let mut got = spectrum.values().to_vec();
        let mut want = nus.clone();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-8 * b);
        }
        prop_assert!(gaussian_entropy(&g).unwrap() >= -1e-12);
        let pure = gaussian_purification(&g).unwrap();
        prop_assert!(gaussian_entropy(&pure).unwrap().abs() < 1e-7);
    }

    #[test]
    fn channels_keep_states_physical(r in 0.0f64..20.0, extra in 0.0f64..10.0, loss in 0.0f64..1.0, excess in 0.0f64..0.5) {
        let g = two_mode_squeezed_source(r, r + extra).unwrap();
        let out = apply_loss_excess(&g, loss, excess).unwrap();
        prop_assert!(out.symplectic_eigenvalues().unwrap().min() >= 0.5 - 1e-9);
    }

    #[test]
    fn renyi_half_dominates_shannon(weights in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        prop_assert!(renyi_half_entropy(&p) >= shannon_entropy(&p) - 1e-12);
        prop_assert!(shannon_entropy(&p) <= (p.len() as f64).log2() + 1e-12);
    }

    #[test]
    fn distance_moments_are_translation_invariant(cov in key_pair(), shift in 1usize..50) {
        let joint = small_joint(cov);
        let moved = JointDistribution::from_rows(
            joint.bins() + shift,
            joint
                .rows()
                .iter()
                .map(|r| JointRow { a: r.a + shift, b_start: r.b_start + shift, probs: r.probs.clone() })
                .collect(),
        )
        .unwrap();
        let (a, b) = (expected_distance(&joint), expected_distance(&moved));
        prop_assert!((a.mean - b.mean).abs() < 1e-12 && (a.variance - b.variance).abs() < 1e-10);
    }

    #[test]
    fn distance_moments_are_exchange_symmetric(cov in key_pair()) {
        let joint = small_joint(cov);
        let (a, b) = (expected_distance(&joint), expected_distance(&joint.transposed()));
        prop_assert!((a.mean - b.mean).abs() < 1e-12 && (a.variance - b.variance).abs() < 1e-10);
    }

    #[test]
    fn refinement_never_lowers_entropy(variance in 0.2f64..20.0, delta in 0.05f64..2.0) {
        let alpha = delta * 40.0;
        let coarse = bin_probabilities(variance, &BinningScheme::finite(alpha, delta).unwrap()).unwrap();
        let fine = bin_probabilities(variance, &BinningScheme::finite(alpha, delta / 2.0).unwrap()).unwrap();
        prop_assert!(shannon_entropy(&fine) >= shannon_entropy(&coarse) - 1e-9);
    }

    #[test]
    fn key_length_falls_as_threshold_rises(d0 in 0.0f64..30.0, step in 0.01f64..5.0) {
        let params = |d0| ProtocolParams::new(1_000_000_000, 100_000_000, coarse_scheme(), d0, 0.0).unwrap();
        let budget = SecurityBudget::default();
        let lo = key_length_coherent_from_stats(&params(d0), &budget, coarse_stats(), 0.95).unwrap();
        let hi = key_length_coherent_from_stats(&params(d0 + step), &budget, coarse_stats(), 0.95).unwrap();
        prop_assert!(hi.breakdown.total() < lo.breakdown.total());
        prop_assert!(hi.ell <= lo.ell);
    }

    #[test]
    fn looser_sampling_budget_shrinks_mu(eps in 1e-12f64..1e-3, factor in 1.01f64..100.0) {
        let params = ProtocolParams::new(1_000_000_000, 100_000_000, coarse_scheme(), 3.0, 0.0).unwrap();
        let tight = SecurityBudget { eps_s: eps, ..SecurityBudget::default() };
        let loose = SecurityBudget { eps_s: eps * factor, ..SecurityBudget::default() };
        let a = key_length_coherent_from_stats(&params, &tight, coarse_stats(), 0.95).unwrap();
        let b = key_length_coherent_from_stats(&params, &loose, coarse_stats(), 0.95).unwrap();
        prop_assert!(b.diagnostics.mu < a.diagnostics.mu);
        prop_assert!(b.ell >= a.ell);
    }

    #[test]
    fn breakdown_sums_to_key_length(d0 in 0.0f64..10.0, k_frac in 0.01f64..0.5) {
        let rounds = 1_000_000_000u64;
        let params = ProtocolParams::new(rounds, (rounds as f64 * k_frac) as u64, coarse_scheme(), d0, 0.0).unwrap();
        let r = key_length_coherent_from_stats(&params, &SecurityBudget::default(), coarse_stats(), 0.95).unwrap();
        let total = r.breakdown.total();
        prop_assert_eq!(r.ell, if total > 0.0 { total.floor() as u64 } else { 0 });
        prop_assert_eq!(r.rate, r.ell as f64 / rounds as f64);
    }

    #[test]
    fn tail_correction_is_bounded(p in 0.0f64..1.0, n in 1u64..1_000_000_000) {
        let f = tail_correction_f(p, n);
        prop_assert!((0.0..=2f64.sqrt() + 1e-15).contains(&f));
        prop_assert!(f <= (2.0 * n as f64 * p).sqrt() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn counting_respects_gamma_bound(n in 1u32..7, d0 in 0.0f64..3.0) {
        let count = counting_enumeration(n, d0).unwrap() as f64;
        prop_assert!(count <= gamma(d0).powi(n as i32) * (1.0 + 1e-12));
    }
}
