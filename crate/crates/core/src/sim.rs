//! Seeded Monte Carlo realization of the protocol.
//!
//! Every stage draws from its own ChaCha20 stream derived from the master seed, so a stage
//! can be rerun in isolation and the whole run is a pure function of `(config, seed)`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coherent::{key_length_coherent_from_stats, leak_ec_from_stats, ProtocolParams, SecurityBudget};
use crate::discretization::{joint_statistics, Lattice};
use crate::gaussian::{CovarianceMatrix, Quadrature};
use crate::model::{key_pair_of, ScenarioModel};
use crate::{Error, Result};

pub const REPORT_SCHEMA: &str = "cvqkd.run-report/1";

/// Random stream identifiers, one per protocol stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Sampling = 1,
    Estimation = 2,
    Hashing = 3,
    Serfling = 4,
    Coverage = 5,
}

pub fn stage_rng(seed: u64, stage: Stage) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

/// One matching-basis round. Bob's `p` outcome is stored negated, so `a` and `b` are
/// positively correlated in both bases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiftedSample {
    pub basis: Quadrature,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRun {
    pub seed: u64,
    /// Rounds measured before sifting.
    pub raw_rounds: u64,
    pub sifted: Vec<SiftedSample>,
}

/// Lower-triangular factor of a 2x2 covariance.
fn cholesky2(c: [[f64; 2]; 2]) -> Result<[f64; 3]> {
    let l00 = c[0][0].sqrt();
    let l10 = c[1][0] / l00;
    let r = c[1][1] - l10 * l10;
    if !(c[0][0] > 0.0) || !(r > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: r.min(c[0][0]) });
    }
    Ok([l00, l10, r.sqrt()])
}

fn draw(rng: &mut ChaCha20Rng, l: &[f64; 3]) -> (f64, f64) {
    let u: f64 = rng.sample(StandardNormal);
    let v: f64 = rng.sample(StandardNormal);
    (l[0] * u, l[1] * u + l[2] * v)
}

struct RoundSampler {
    rng: ChaCha20Rng,
    // indexed by (basis_a, basis_b) with 0 = q, 1 = p
    factors: [[[f64; 3]; 2]; 2],
}

impl RoundSampler {
    fn new(gamma: &CovarianceMatrix, seed: u64) -> Result<Self> {
        if gamma.modes() != 2 {
            return Err(Error::invalid(format!("sampling needs a two-mode state, got {} modes", gamma.modes())));
        }
        let qs = [Quadrature::Q, Quadrature::P];
        let mut factors = [[[0.0; 3]; 2]; 2];
        for (i, qa) in qs.iter().enumerate() {
            for (j, qb) in qs.iter().enumerate() {
                factors[i][j] = cholesky2(gamma.quadrature_pair(0, *qa, 1, *qb))?;
            }
        }
        Ok(Self { rng: stage_rng(seed, Stage::Sampling), factors })
    }

    /// Draws one round; `None` when the bases differ (the round is discarded).
    fn round(&mut self) -> Option<SiftedSample> {
        let ba = self.rng.random::<bool>() as usize;
        let bb = self.rng.random::<bool>() as usize;
        let (a, b) = draw(&mut self.rng, &self.factors[ba][bb]);
        match (ba, bb) {
            (0, 0) => Some(SiftedSample { basis: Quadrature::Q, a, b }),
            (1, 1) => Some(SiftedSample { basis: Quadrature::P, a, b: -b }),
            _ => None,
        }
    }
}

/// Simulates `rounds` raw rounds with independent uniform basis choices and keeps the
/// matching-basis ones.
pub fn sample_protocol_rounds(gamma: &CovarianceMatrix, rounds: u64, seed: u64) -> Result<SimulationRun> {
    let mut s = RoundSampler::new(gamma, seed)?;
    let sifted = (0..rounds).filter_map(|_| s.round()).collect();
    Ok(SimulationRun { seed, raw_rounds: rounds, sifted })
}

/// Simulates raw rounds until `sifted` matching-basis rounds are collected.
pub fn sample_sifted_rounds(gamma: &CovarianceMatrix, sifted: u64, seed: u64) -> Result<SimulationRun> {
    let mut s = RoundSampler::new(gamma, seed)?;
    let mut out = Vec::with_capacity(sifted as usize);
    let mut raw = 0;
    while (out.len() as u64) < sifted {
        raw += 1;
        if let Some(r) = s.round() {
            out.push(r);
        }
    }
    Ok(SimulationRun { seed, raw_rounds: raw, sifted: out })
}

/// Bin indices of Alice's and Bob's sifted outcomes.
pub fn bin_run(run: &SimulationRun, lattice: &Lattice) -> (Vec<u32>, Vec<u32>) {
    run.sifted.iter().map(|s| (lattice.index_of(s.a) as u32, lattice.index_of(s.b) as u32)).unzip()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationOutcome {
    pub passed: bool,
    pub d_pe: f64,
    pub d_key: f64,
    pub d_tot: f64,
    /// Integer distance sums; `pe_sum + key_sum == total_sum` always.
    pub pe_sum: u64,
    pub key_sum: u64,
    pub total_sum: u64,
    #[serde(skip)]
    pub key_positions: Vec<usize>,
}

/// Picks a uniformly random `k`-subset for parameter estimation and compares its average
/// bin distance with `d0`.
pub fn run_parameter_estimation(xa: &[u32], xb: &[u32], k: usize, d0: f64, seed: u64) -> Result<EstimationOutcome> {
    let len = xa.len();
    if xb.len() != len {
        return Err(Error::invalid("Alice and Bob strings differ in length"));
    }
    if !(k > 0 && k < len) {
        return Err(Error::invalid(format!("need 0 < k < {len}, got {k}")));
    }
    let mut rng = stage_rng(seed, Stage::Estimation);
    let mut in_pe = vec![false; len];
    for i in index::sample(&mut rng, len, k) {
        in_pe[i] = true;
    }
    let dist = |i: usize| xa[i].abs_diff(xb[i]) as u64;
    let (mut pe_sum, mut key_sum) = (0u64, 0u64);
    let mut key_positions = Vec::with_capacity(len - k);
    for (i, &pe) in in_pe.iter().enumerate() {
        if pe {
            pe_sum += dist(i);
        } else {
            key_sum += dist(i);
            key_positions.push(i);
        }
    }
    let n = len - k;
    let d_pe = pe_sum as f64 / k as f64;
    Ok(EstimationOutcome {
        passed: d_pe <= d0,
        d_pe,
        d_key: key_sum as f64 / n as f64,
        d_tot: (pe_sum + key_sum) as f64 / len as f64,
        pe_sum,
        key_sum,
        total_sum: (0..len).map(dist).sum(),
        key_positions,
    })
}

/// Population of per-round distances for the sampling experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PopulationSpec {
    /// A fraction of the rounds at the maximal distance `|X|`, the rest at 0.
    TwoPoint { high_fraction: f64 },
}

impl PopulationSpec {
    /// Worst case for the tail bound: half the rounds at distance `|X|`.
    pub const ADVERSARIAL: PopulationSpec = PopulationSpec::TwoPoint { high_fraction: 0.5 };
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SerflingPoint {
    /// Deviation in bin units.
    pub nu: f64,
    pub empirical: f64,
    pub bound: f64,
    pub trials: u64,
}

impl SerflingPoint {
    /// Binomial standard deviation of the empirical frequency if it sat at the bound.
    pub fn sigma(&self) -> f64 {
        let p = self.bound.min(1.0);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// `exp(-2 nu^2 n k^2 / (|X|^2 N (k + 1)))`.
pub fn serfling_bound(alphabet_size: u64, k: u64, n: u64, nu: f64) -> f64 {
    let (x, k, n) = (alphabet_size as f64, k as f64, n as f64);
    (-2.0 * nu * nu * n * k * k / (x * x * (n + k) * (k + 1.0))).exp().min(1.0)
}

/// Frequency of `d_key >= d_pe + nu` over random `k`/`n` splits of a fixed population, for
/// each `nu` in `nus`, next to the analytic bound.
pub fn serfling_experiment(
    alphabet_size: u64,
    population: PopulationSpec,
    k: u64,
    n: u64,
    nus: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SerflingPoint>> {
    if trials < 1000 {
        return Err(Error::invalid(format!("need at least 1000 trials, got {trials}")));
    }
    if k == 0 || n == 0 {
        return Err(Error::invalid("k and n must be positive"));
    }
    let total = (k + n) as usize;
    let PopulationSpec::TwoPoint { high_fraction } = population;
    let high = ((high_fraction * total as f64).round() as usize).min(total);
    // values[i] = |X| for the first `high` rounds, 0 otherwise
    let x = alphabet_size as f64;
    let mut rng = stage_rng(seed, Stage::Serfling);
    let mut exceed = vec![0u64; nus.len()];
    for _ in 0..trials {
        let pe_high = index::sample(&mut rng, total, k as usize).iter().filter(|&i| i < high).count();
        let d_pe = x * pe_high as f64 / k as f64;
        let d_key = x * (high - pe_high) as f64 / n as f64;
        for (c, nu) in exceed.iter_mut().zip(nus) {
            if d_key >= d_pe + nu {
                *c += 1;
            }
        }
    }
    Ok(nus
        .iter()
        .zip(exceed)
        .map(|(&nu, c)| SerflingPoint { nu, empirical: c as f64 / trials as f64, bound: serfling_bound(alphabet_size, k, n, nu), trials })
        .collect())
}

const ENUMERATION_LIMIT: u128 = 100_000_000;

/// Exact size of `{x in Z^n : sum |x_i| <= floor(n d0)}`.
pub fn counting_enumeration(n: u32, d0: f64) -> Result<u128> {
    if n == 0 || n > 10 {
        return Err(Error::SizeGuard(format!("dimension must be in 1..=10, got {n}")));
    }
    if !(d0 >= 0.0) || !d0.is_finite() {
        return Err(Error::invalid(format!("d0 must be finite and >= 0, got {d0}")));
    }
    let radius = (n as f64 * d0 + 1e-9).floor() as usize;
    // ways[s] = number of vectors with sum |x_i| = s
    let mut ways = vec![0u128; radius + 1];
    ways[0] = 1;
    for _ in 0..n {
        let mut next = vec![0u128; radius + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for t in 0..=radius - s {
                next[s + t] += w * if t == 0 { 1 } else { 2 };
            }
        }
        ways = next;
        if ways.iter().sum::<u128>() > ENUMERATION_LIMIT {
            return Err(Error::SizeGuard(format!("lattice ball for n = {n}, d0 = {d0} exceeds 1e8 points")));
        }
    }
    Ok(ways.iter().sum())
}

/// Bits packed little-endian into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        let mut b = Self { words: (0..len.div_ceil(64)).map(|_| rng.random()).collect(), len };
        b.clear_tail();
        b
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    fn clear_tail(&mut self) {
        if self.len % 64 != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        let m = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn push_bits(&mut self, value: u64, width: u32) {
        for b in 0..width {
            let i = self.len;
            self.len += 1;
            if self.words.len() * 64 < self.len {
                self.words.push(0);
            }
            self.set(i, value >> b & 1 == 1);
        }
    }

    /// 64 bits starting at bit `start`, zero-padded past the end.
    fn window(&self, start: usize) -> u64 {
        let (w, s) = (start / 64, start % 64);
        let lo = self.words.get(w).copied().unwrap_or(0) >> s;
        let hi = if s == 0 { 0 } else { self.words.get(w + 1).copied().unwrap_or(0) << (64 - s) };
        lo | hi
    }

    /// Bytes in bit order, for hashing and hex output.
    pub fn to_bytes(&self) -> Vec<u8> {
        (0..self.len.div_ceil(8))
            .map(|i| (self.words[i / 8] >> (8 * (i % 8)) & 0xff) as u8)
            .collect()
    }
}

/// Multiplies `raw` by a random binary Toeplitz matrix of size `out_len x raw.len()`.
///
/// Row `i` of the matrix is bits `i .. i + m` of a seed string `r` of length `m + out_len - 1`
/// read backwards, so output bit `i` is the parity of `r[i + m - 1 - j] & raw[j]` over `j`.
pub fn toeplitz_privacy_amplification(raw: &BitString, out_len: usize, seed: u64) -> Result<BitString> {
    let m = raw.len();
    if out_len > m {
        return Err(Error::invalid(format!("output length {out_len} exceeds input length {m}")));
    }
    if out_len == 0 {
        return Ok(BitString::zeros(0));
    }
    let mut rng = stage_rng(seed, Stage::Hashing);
    let r = BitString::random(m + out_len - 1, &mut rng);
    // reversed input, so that output bit i = parity(r[i .. i + m] & rev)
    let mut rev = BitString::zeros(m);
    for j in 0..m {
        rev.set(m - 1 - j, raw.get(j));
    }
    let mut out = BitString::zeros(out_len);
    for i in 0..out_len {
        let mut acc = 0u64;
        for (w, &word) in rev.words.iter().enumerate() {
            acc ^= r.window(i + 64 * w) & word;
        }
        out.set(i, acc.count_ones() % 2 == 1);
    }
    Ok(out)
}

/// Alice's key symbols written as fixed-width bin indices.
pub fn raw_key_bits(symbols: impl IntoIterator<Item = u32>, lattice: &Lattice) -> BitString {
    let width = lattice.bits_per_symbol();
    let mut bits = BitString::zeros(0);
    for s in symbols {
        bits.push_bits(s as u64, width);
    }
    bits
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfigEcho {
    pub model: ScenarioModel,
    pub params: ProtocolParams,
    pub budget: SecurityBudget,
    pub ec_efficiency: f64,
}

/// Structured record of one simulated protocol execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub seed: u64,
    pub config: RunConfigEcho,
    pub raw_rounds: u64,
    pub sifted_rounds: u64,
    pub estimation: EstimationOutcome,
    pub expected_distance: f64,
    pub distance_std_error: f64,
    pub passed: bool,
    /// Bits disclosed by (modelled) error correction and its verification hash.
    pub disclosed_bits: f64,
    pub raw_key_bits: u64,
    pub ell: u64,
    pub key_bits: u64,
    pub key_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_hex: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Sample, sift, bin, estimate and (on pass) hash Alice's key symbols down to the
/// coherent-attack key length.
pub fn end_to_end_run(
    model: &ScenarioModel,
    params: &ProtocolParams,
    budget: &SecurityBudget,
    beta: f64,
    seed: u64,
    emit_key: bool,
) -> Result<RunReport> {
    let gamma = model.covariance().map_err(|e| e.at("model"))?;
    let lattice = params.scheme.lattice(gamma.get(0, 0).max(gamma.get(2, 2)).sqrt());
    let stats = joint_statistics(key_pair_of(&gamma, Quadrature::Q), &params.scheme).map_err(|e| e.at("model"))?;
    let calc = key_length_coherent_from_stats(params, budget, &stats, beta).map_err(|e| e.at("key length"))?;

    let run = sample_sifted_rounds(&gamma, params.rounds, seed).map_err(|e| e.at("sampling"))?;
    let (xa, xb) = bin_run(&run, &lattice);
    let est = run_parameter_estimation(&xa, &xb, params.k as usize, params.d0, seed).map_err(|e| e.at("estimation"))?;
    debug_assert_eq!(est.pe_sum + est.key_sum, est.total_sum);

    let raw = raw_key_bits(est.key_positions.iter().map(|&i| xa[i]), &lattice);
    let (ell, key, disclosed) = if est.passed {
        let disclosed = leak_ec_from_stats(params.n(), &stats, beta)? + budget.correctness_cost();
        let ell = calc.ell.min(raw.len() as u64);
        let key = toeplitz_privacy_amplification(&raw, ell as usize, seed).map_err(|e| e.at("privacy amplification"))?;
        (ell, key, disclosed)
    } else {
        (0, BitString::zeros(0), 0.0)
    };
    if est.passed && key.len() as u64 != calc.ell {
        return Err(Error::Numerical(format!("key length {} differs from calculated {}", key.len(), calc.ell)).at("privacy amplification"));
    }
    let bytes = key.to_bytes();
    Ok(RunReport {
        schema: REPORT_SCHEMA.into(),
        seed,
        config: RunConfigEcho { model: *model, params: *params, budget: *budget, ec_efficiency: beta },
        raw_rounds: run.raw_rounds,
        sifted_rounds: run.sifted.len() as u64,
        expected_distance: stats.distance.mean,
        distance_std_error: (stats.distance.variance / params.k as f64).sqrt(),
        passed: est.passed,
        estimation: est,
        disclosed_bits: disclosed,
        raw_key_bits: raw.len() as u64,
        ell,
        key_bits: key.len() as u64,
        key_sha256: hex::encode(Sha256::digest(&bytes)),
        key_hex: emit_key.then(|| hex::encode(&bytes)),
    })
}

/// Zero-mean estimates of `(V_a, V_b, Z)` from paired outcomes.
pub fn estimate_covariance(pairs: impl IntoIterator<Item = (f64, f64)>) -> [f64; 3] {
    let (mut saa, mut sbb, mut sab, mut m) = (0.0, 0.0, 0.0, 0usize);
    for (a, b) in pairs {
        saa += a * a;
        sbb += b * b;
        sab += a * b;
        m += 1;
    }
    let m = m.max(1) as f64;
    [saa / m, sbb / m, sab / m]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverageResult {
    pub trials: u64,
    pub covered: u64,
}

impl CoverageResult {
    pub fn frequency(&self) -> f64 {
        self.covered as f64 / self.trials as f64
    }
}

/// Repeats the estimation of `(V_a, V_b, Z)` from `m` sifted rounds and counts how often the
/// confidence box built around the estimate contains the true parameters.
pub fn coverage_experiment(gamma: &CovarianceMatrix, m: u64, eps_pe: f64, trials: u64, seed: u64) -> Result<CoverageResult> {
    let truth = [gamma.get(0, 0), gamma.get(2, 2), gamma.get(0, 2)];
    let q = cholesky2(key_pair_of(gamma, Quadrature::Q))?;
    let p = cholesky2(key_pair_of(gamma, Quadrature::P))?;
    let mut rng = stage_rng(seed, Stage::Coverage);
    let mut covered = 0;
    for _ in 0..trials {
        let pairs: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                let l = if rng.random::<bool>() { &q } else { &p };
                draw(&mut rng, l)
            })
            .collect();
        let est = estimate_covariance(pairs);
        if crate::collective::build_confidence_box(est, m, eps_pe)?.contains(truth) {
            covered += 1;
        }
    }
    Ok(CoverageResult { trials, covered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::gamma;

    #[test]
    fn counting_small_cases() {
        assert_eq!(counting_enumeration(1, 1.0).unwrap(), 3);
        assert_eq!(counting_enumeration(2, 1.0).unwrap(), 13);
        assert_eq!(counting_enumeration(3, 0.0).unwrap(), 1);
        assert!(matches!(counting_enumeration(11, 0.5), Err(Error::SizeGuard(_))));
        assert!(matches!(counting_enumeration(10, 20.0), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn counting_matches_brute_force() {
        fn brute(n: u32, r: i64) -> u128 {
            fn rec(left: u32, budget: i64) -> u128 {
                if left == 0 {
                    return 1;
                }
                (-budget..=budget).map(|x| rec(left - 1, budget - x.abs())).sum()
            }
            rec(n, r)
        }
        for n in 1..=4 {
            for d0 in [0.25, 0.5, 1.0, 1.5] {
                let r = (n as f64 * d0 + 1e-9).floor() as i64;
                assert_eq!(counting_enumeration(n, d0).unwrap(), brute(n, r), "n={n} d0={d0}");
                assert!(counting_enumeration(n, d0).unwrap() as f64 <= gamma(d0).powi(n as i32));
            }
        }
    }

    #[test]
    fn toeplitz_basics() {
        let raw = BitString::from_bools(&[true, false, true, true, false, false, true, false, true, true]);
        assert!(toeplitz_privacy_amplification(&raw, 0, 1).unwrap().is_empty());
        assert!(toeplitz_privacy_amplification(&raw, 11, 1).is_err());
        let zero = toeplitz_privacy_amplification(&BitString::zeros(200), 70, 5).unwrap();
        assert_eq!(zero, BitString::zeros(70));
        assert_eq!(toeplitz_privacy_amplification(&raw, 6, 9).unwrap(), toeplitz_privacy_amplification(&raw, 6, 9).unwrap());
    }

    #[test]
    fn toeplitz_matches_naive_product() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (m, l) = (150, 70);
        let raw = BitString::random(m, &mut rng);
        let out = toeplitz_privacy_amplification(&raw, l, 42).unwrap();
        let r = BitString::random(m + l - 1, &mut stage_rng(42, Stage::Hashing));
        for i in 0..l {
            let bit = (0..m).fold(false, |acc, j| acc ^ (r.get(i + m - 1 - j) & raw.get(j)));
            assert_eq!(out.get(i), bit, "bit {i}");
        }
    }

    #[test]
    fn estimation_identity_and_trivial_cases() {
        let xa: Vec<u32> = (0..1000).map(|i| (i * 7 % 13) as u32).collect();
        let xb: Vec<u32> = (0..1000).map(|i| (i * 5 % 11) as u32).collect();
        let e = run_parameter_estimation(&xa, &xb, 100, f64::INFINITY, 7).unwrap();
        assert!(e.passed);
        assert_eq!(e.pe_sum + e.key_sum, e.total_sum);
        assert_eq!(e.key_positions.len(), 900);
        let same = run_parameter_estimation(&xa, &xa, 100, 0.0, 7).unwrap();
        assert_eq!((same.d_pe, same.d_key), (0.0, 0.0));
        assert!(same.passed);
    }

    #[test]
    fn sifting_keeps_about_half() {
        let g = CovarianceMatrix::vacuum(2);
        let run = sample_protocol_rounds(&g, 100_000, 11).unwrap();
        let kept = run.sifted.len() as f64;
        assert!((kept - 50_000.0).abs() < 5.0 * (100_000f64 * 0.25).sqrt(), "{kept}");
    }

    #[test]
    fn seeded_runs_repeat() {
        let g = ScenarioModel::default().covariance().unwrap();
        assert_eq!(sample_sifted_rounds(&g, 1000, 5).unwrap(), sample_sifted_rounds(&g, 1000, 5).unwrap());
        assert_ne!(sample_sifted_rounds(&g, 1000, 5).unwrap(), sample_sifted_rounds(&g, 1000, 6).unwrap());
    }

    #[test]
    fn serfling_zero_deviation_bound_is_one() {
        let pts = serfling_experiment(100, PopulationSpec::ADVERSARIAL, 50, 450, &[0.0, 5.0], 1000, 1).unwrap();
        assert_eq!(pts[0].bound, 1.0);
        assert!(pts[0].empirical <= 1.0);
        assert!(serfling_bound(100, 100, 450, 5.0) < serfling_bound(100, 50, 450, 5.0));
    }
}
