//! Scenario configuration, grid optimization and sweeps.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::coherent::{
    key_length_coherent_from_stats, p_alpha_from_model, set_abort_threshold, tail_correction_f, Breakdown,
    Diagnostics, KeyRateResult, ProtocolParams, SecurityBudget,
};
use crate::collective::{devetak_winter_from_stats, key_length_collective_from_stats};
use crate::discretization::{joint_statistics, BinningScheme, JointStats, TRUNCATION_SIGMAS};
use crate::gaussian::Quadrature;
use crate::model::{key_pair_of, ScenarioModel};
use crate::sim::{end_to_end_run, RunReport};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    #[default]
    Coherent,
    Collective,
    /// Asymptotic Devetak-Winter rate with perfect reconciliation.
    Dw,
}

impl AttackMode {
    pub fn name(self) -> &'static str {
        match self {
            AttackMode::Coherent => "coherent",
            AttackMode::Collective => "collective",
            AttackMode::Dw => "dw",
        }
    }
}

impl std::str::FromStr for AttackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coherent" => Ok(AttackMode::Coherent),
            "collective" => Ok(AttackMode::Collective),
            "dw" => Ok(AttackMode::Dw),
            other => Err(Error::Config(format!("unknown attack mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { squeezing_db: 11.0, antisqueezing_db: 16.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub loss: f64,
    pub excess_noise: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { loss: 0.0, excess_noise: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "lowercase")]
pub enum SweepAxis {
    /// Sifted block lengths `N`.
    Rounds(Vec<u64>),
    /// Loss fractions at the configured `rounds`.
    Loss(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerGrid {
    pub k_fractions: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Cutoffs for the coherent analysis; the collective analysis bins without cutoff.
    pub alphas: Vec<f64>,
}

impl Default for OptimizerGrid {
    fn default() -> Self {
        Self {
            k_fractions: vec![0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.15, 0.2, 0.25, 0.3],
            deltas: vec![0.002, 0.005, 0.01, 0.02, 0.05, 0.1],
            alphas: (0..16).map(|i| 20.0 + 4.0 * i as f64).collect(),
        }
    }
}

/// Fixed protocol parameters for simulated runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub k_fraction: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Overrides the abort threshold computed from the honest model.
    pub d0: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { k_fraction: 0.1, alpha: 52.0, delta: 0.01, d0: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub source: SourceConfig,
    pub channel: ChannelConfig,
    pub ec_efficiency: f64,
    pub budget: SecurityBudget,
    /// Target honest abort probability used to set `d0`.
    pub eps_robust: f64,
    pub attack: AttackMode,
    pub rounds: u64,
    pub sweep: Option<SweepAxis>,
    pub grid: OptimizerGrid,
    pub simulation: SimulationConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::default(),
            channel: ChannelConfig::default(),
            ec_efficiency: 0.95,
            budget: SecurityBudget::default(),
            eps_robust: 0.01,
            attack: AttackMode::Coherent,
            rounds: 1_000_000_000,
            sweep: None,
            grid: OptimizerGrid::default(),
            simulation: SimulationConfig::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn model(&self) -> ScenarioModel {
        ScenarioModel {
            squeezing_db: self.source.squeezing_db,
            antisqueezing_db: self.source.antisqueezing_db,
            loss: self.channel.loss,
            excess_noise: self.channel.excess_noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.model().covariance().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.ec_efficiency > 0.0 && self.ec_efficiency <= 1.0) {
            return bad(format!("ec_efficiency must lie in (0, 1], got {}", self.ec_efficiency));
        }
        self.budget.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.eps_robust > 0.0 && self.eps_robust < 1.0) {
            return bad(format!("eps_robust must lie in (0, 1), got {}", self.eps_robust));
        }
        if self.rounds < 2 {
            return bad(format!("rounds must be at least 2, got {}", self.rounds));
        }
        let g = &self.grid;
        if g.k_fractions.is_empty() || g.deltas.is_empty() || g.alphas.is_empty() {
            return bad("optimizer grids must be nonempty".into());
        }
        if g.k_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return bad("k fractions must lie in (0, 1)".into());
        }
        if g.deltas.iter().chain(&g.alphas).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return bad("grid bin widths and cutoffs must be positive and finite".into());
        }
        match &self.sweep {
            Some(SweepAxis::Rounds(v)) if v.iter().any(|n| *n < 2) => bad("sweep rounds must be >= 2".into()),
            Some(SweepAxis::Loss(v)) if v.iter().any(|l| !(0.0..=1.0).contains(l)) => {
                bad("sweep losses must lie in [0, 1]".into())
            }
            Some(a) if matches!(a, SweepAxis::Rounds(v) if v.is_empty()) || matches!(a, SweepAxis::Loss(v) if v.is_empty()) => {
                bad("sweep axis has no values".into())
            }
            _ => Ok(()),
        }
    }
}

/// Memoized key-pair statistics, keyed by covariance, bin width and cutoff class.
///
/// All cutoffs beyond `12 sigma + 2 delta` give the same statistics (the end bins carry no
/// mass), so they share one entry computed at a canonical cutoff.
#[derive(Default)]
pub struct StatsCache {
    entries: Mutex<HashMap<CacheKey, JointStats>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    cov: [u64; 3],
    delta: u64,
    alpha: Option<u64>,
    free: bool,
}

impl StatsCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self, cov: [[f64; 2]; 2], scheme: &BinningScheme) -> Result<JointStats> {
        let delta = scheme.delta();
        let sigma = cov[0][0].max(cov[1][1]).sqrt();
        let free_alpha = TRUNCATION_SIGMAS * sigma + 2.0 * delta;
        let (key_alpha, free, effective) = match scheme.alpha() {
            None => (None, false, *scheme),
            Some(a) if a < free_alpha => (Some(a.to_bits()), false, *scheme),
            Some(_) => {
                let canonical = delta * (free_alpha / delta).ceil();
                (None, true, BinningScheme::finite(canonical, delta)?)
            }
        };
        let key = CacheKey {
            cov: [cov[0][0].to_bits(), cov[1][1].to_bits(), cov[0][1].to_bits()],
            delta: delta.to_bits(),
            alpha: key_alpha,
            free,
        };
        if let Some(s) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(*s);
        }
        let s = joint_statistics(cov, &effective)?;
        self.entries.lock().expect("cache lock").insert(key, s);
        Ok(s)
    }
}

/// `(k, delta, alpha)` ordering used to break ties between equal key lengths.
fn tie_key(r: &KeyRateResult) -> (u64, f64, f64) {
    (r.params.k, r.params.scheme.delta(), r.params.scheme.alpha().unwrap_or(f64::INFINITY))
}

fn better(candidate: &KeyRateResult, best: &Option<KeyRateResult>) -> bool {
    match best {
        None => true,
        Some(b) => {
            candidate.ell > b.ell
                || (candidate.ell == b.ell && tie_key(candidate).partial_cmp(&tie_key(b)) == Some(std::cmp::Ordering::Less))
        }
    }
}

fn k_for(rounds: u64, fraction: f64) -> Option<u64> {
    let k = (fraction * rounds as f64).round() as u64;
    (k > 0 && k < rounds).then_some(k)
}

/// Best key length over the scenario's grid at block length `rounds`.
///
/// Ties are broken towards smaller `k`, then smaller `delta`, then smaller `alpha`. When no
/// grid point is feasible the result has `ell = 0` and `note` names the binding constraint.
pub fn optimize_parameters(rounds: u64, scenario: &ScenarioConfig, cache: &StatsCache) -> Result<KeyRateResult> {
    scenario.validate()?;
    let gamma = scenario.model().covariance()?;
    let pair = key_pair_of(&gamma, Quadrature::Q);
    let grid = &scenario.grid;
    let beta = scenario.ec_efficiency;
    let budget = &scenario.budget;
    let mut best: Option<KeyRateResult> = None;
    let mut last_error: Option<Error> = None;
    let consider = |r: Result<KeyRateResult>, best: &mut Option<KeyRateResult>, last_error: &mut Option<Error>| match r {
        Ok(r) if better(&r, best) => *best = Some(r),
        Ok(_) => {}
        Err(e) => *last_error = Some(e),
    };

    let mut deltas = grid.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let mut alphas = grid.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    let ks: Vec<u64> = grid.k_fractions.iter().filter_map(|f| k_for(rounds, *f)).collect();
    if ks.is_empty() {
        return Err(Error::Config(format!("no k fraction gives 0 < k < N at N = {rounds}")));
    }

    match scenario.attack {
        AttackMode::Coherent => {
            let var_a = gamma.get(0, 0).max(gamma.get(1, 1));
            for &delta in &deltas {
                for &alpha in &alphas {
                    let scheme = match BinningScheme::finite(alpha, delta) {
                        Ok(s) => s,
                        Err(e) => {
                            last_error = Some(e);
                            continue;
                        }
                    };
                    let p_alpha = p_alpha_from_model(var_a, alpha);
                    // eps_mu grows with k, so the largest k decides whether any k can work.
                    let k_max = *ks.iter().max().unwrap_or(&1);
                    let eps_mu = budget.eps_sampling() - 2.0 * tail_correction_f(p_alpha, rounds - k_max);
                    if !(eps_mu > 0.0) {
                        last_error = Some(Error::BudgetExhausted { eps_mu });
                        continue;
                    }
                    let stats = cache.stats(pair, &scheme)?;
                    for &k in &ks {
                        let r = set_abort_threshold(&stats.distance, k, scenario.eps_robust)
                            .and_then(|d0| ProtocolParams::new(rounds, k, scheme, d0, p_alpha))
                            .and_then(|p| key_length_coherent_from_stats(&p, budget, &stats, beta));
                        consider(r, &mut best, &mut last_error);
                    }
                }
            }
        }
        AttackMode::Collective => {
            for &delta in &deltas {
                let scheme = BinningScheme::infinite(delta)?;
                let stats = cache.stats(pair, &scheme)?;
                for &k in &ks {
                    consider(key_length_collective_from_stats(rounds, k, &scheme, budget, &gamma, &stats, beta), &mut best, &mut last_error);
                }
            }
        }
        AttackMode::Dw => {
            for &delta in &deltas {
                let scheme = BinningScheme::infinite(delta)?;
                let stats = cache.stats(pair, &scheme)?;
                consider(devetak_winter_result(rounds, &scheme, &gamma, &stats), &mut best, &mut last_error);
            }
        }
    }
    match best {
        Some(mut b) => {
            if b.ell == 0 && b.note.is_none() {
                b.note = Some("no grid point yields a positive key".into());
            }
            Ok(b)
        }
        None => {
            let reason = last_error.map(|e| e.to_string()).unwrap_or_else(|| "empty grid".into());
            let scheme = BinningScheme::infinite(deltas[0])?;
            Ok(KeyRateResult {
                attack: scenario.attack,
                ell: 0,
                rate: 0.0,
                breakdown: Breakdown::default(),
                params: ProtocolParams::new(rounds, ks[0], scheme, 0.0, 0.0)?,
                diagnostics: Diagnostics::default(),
                note: Some(format!("no feasible grid point: {reason}")),
            })
        }
    }
}

/// Devetak-Winter rate packaged as a key-length result over `N` rounds. Unlike the finite-key
/// modes, `rate` holds the signed asymptotic rate rather than `ell / N`.
fn devetak_winter_result(
    rounds: u64,
    scheme: &BinningScheme,
    gamma: &crate::CovarianceMatrix,
    stats: &JointStats,
) -> Result<KeyRateResult> {
    let rate = devetak_winter_from_stats(gamma, stats)?;
    let h_ab = stats.conditional_entropy();
    let nf = rounds as f64;
    let params = ProtocolParams::new(rounds, 1, *scheme, stats.distance.mean, 0.0)?;
    let breakdown = Breakdown { conditional_entropy: nf * (rate + h_ab), leak_ec: -nf * h_ab, ..Default::default() };
    let diagnostics = Diagnostics {
        expected_distance: stats.distance.mean,
        distance_variance: stats.distance.variance,
        h_a: stats.h_a,
        mutual_information: stats.mutual_information(),
        entropy_bound: rate + h_ab,
        ..Default::default()
    };
    let mut r = KeyRateResult::from_breakdown(AttackMode::Dw, params, breakdown, diagnostics);
    r.rate = rate;
    Ok(r)
}

/// Signed per-symbol rate: `breakdown.total() / N`.
pub fn raw_rate(r: &KeyRateResult) -> f64 {
    r.breakdown.total() / r.params.rounds as f64
}

/// One optimized point of a sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub axis: &'static str,
    pub value: f64,
    pub outcome: std::result::Result<KeyRateResult, String>,
}

/// Optimizes every point of the configured sweep axis (or the single configured point).
/// Per-point errors are recorded and the sweep continues.
pub fn sweep(scenario: &ScenarioConfig, cache: &StatsCache) -> Result<Vec<SweepPoint>> {
    scenario.validate()?;
    let points: Vec<(&'static str, f64, ScenarioConfig, u64)> = match &scenario.sweep {
        None => vec![("rounds", scenario.rounds as f64, scenario.clone(), scenario.rounds)],
        Some(SweepAxis::Rounds(ns)) => ns.iter().map(|&n| ("rounds", n as f64, scenario.clone(), n)).collect(),
        Some(SweepAxis::Loss(ls)) => ls
            .iter()
            .map(|&l| {
                let mut s = scenario.clone();
                s.channel.loss = l;
                ("loss", l, s, scenario.rounds)
            })
            .collect(),
    };
    Ok(points
        .into_iter()
        .map(|(axis, value, s, n)| SweepPoint { axis, value, outcome: optimize_parameters(n, &s, cache).map_err(|e| e.to_string()) })
        .collect())
}

pub const CSV_COLUMNS: [&str; 31] = [
    "axis", "value", "attack", "ell", "rate", "raw_rate", "rounds", "k", "n", "alpha", "delta", "d0", "p_alpha",
    "uncertainty", "max_entropy", "conditional_entropy", "aep", "leak_ec", "correctness", "privacy_amplification",
    "total", "expected_distance", "mu", "eps_mu", "hmax_a", "aep_delta", "entropy_bound", "secrecy", "box_flags",
    "note", "error",
];

/// Writes sweep results as CSV with a fixed header.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for p in points {
        let mut row: Vec<String> = vec![p.axis.to_string(), p.value.to_string()];
        match &p.outcome {
            Ok(r) => {
                let b = &r.breakdown;
                let d = &r.diagnostics;
                let alpha = r.params.scheme.alpha().map_or_else(|| "inf".to_string(), |a| a.to_string());
                let flags = match (d.box_projected, d.box_non_monotone) {
                    (false, false) => String::new(),
                    (true, false) => "projected".into(),
                    (false, true) => "non_monotone".into(),
                    (true, true) => "projected;non_monotone".into(),
                };
                row.extend([
                    r.attack.name().to_string(),
                    r.ell.to_string(),
                    r.rate.to_string(),
                    raw_rate(r).to_string(),
                    r.params.rounds.to_string(),
                    r.params.k.to_string(),
                    r.params.n().to_string(),
                    alpha,
                    r.params.scheme.delta().to_string(),
                    r.params.d0.to_string(),
                    r.params.p_alpha.to_string(),
                ]);
                row.extend(
                    [
                        b.uncertainty,
                        b.max_entropy,
                        b.conditional_entropy,
                        b.aep,
                        b.leak_ec,
                        b.correctness,
                        b.privacy_amplification,
                        b.total(),
                        d.expected_distance,
                        d.mu,
                        d.eps_mu,
                        d.hmax_a,
                        d.aep_delta,
                        d.entropy_bound,
                        d.secrecy,
                    ]
                    .map(|v| v.to_string()),
                );
                row.extend([flags, r.note.clone().unwrap_or_default(), String::new()]);
            }
            Err(e) => {
                row.resize(CSV_COLUMNS.len() - 1, String::new());
                row.push(e.clone());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one simulated protocol execution with the scenario's simulation parameters.
pub fn simulate(scenario: &ScenarioConfig, rounds: u64, seed: u64, emit_key: bool) -> Result<RunReport> {
    scenario.validate()?;
    let sim = &scenario.simulation;
    let model = scenario.model();
    let scheme = BinningScheme::finite(sim.alpha, sim.delta).map_err(|e| Error::Config(e.to_string()))?;
    let k = k_for(rounds, sim.k_fraction)
        .ok_or_else(|| Error::Config(format!("k fraction {} gives no valid k at N = {rounds}", sim.k_fraction)))?;
    let gamma = model.covariance()?;
    let stats = joint_statistics(key_pair_of(&gamma, Quadrature::Q), &scheme).map_err(|e| e.at("model"))?;
    let d0 = match sim.d0 {
        Some(d) => d,
        None => set_abort_threshold(&stats.distance, k, scenario.eps_robust)?,
    };
    let p_alpha = p_alpha_from_model(gamma.get(0, 0).max(gamma.get(1, 1)), sim.alpha);
    let params = ProtocolParams::new(rounds, k, scheme, d0, p_alpha)?;
    end_to_end_run(&model, &params, &scenario.budget, scenario.ec_efficiency, seed, emit_key)
}

/// Outcome of one built-in consistency check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfTestCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick oracle checks over the numerical kernels; each takes well under a second.
pub fn selftest() -> Vec<SelfTestCheck> {
    use crate::coherent::gamma;
    use crate::discretization::overlap_c;
    use crate::gaussian::{gaussian_entropy, gaussian_purification};
    use crate::sim::{counting_enumeration, serfling_experiment, PopulationSpec};

    let mut checks = Vec::new();
    let mut push = |name, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        checks.push(SelfTestCheck { name, passed, detail });
    };

    push("counting bound", (|| {
        let mut worst: f64 = 0.0;
        for n in 1..=8u32 {
            for d0 in [0.25, 0.5, 0.75, 1.0, 2.0] {
                let ratio = counting_enumeration(n, d0)? as f64 / gamma(d0).powi(n as i32);
                worst = worst.max(ratio);
            }
        }
        Ok((worst <= 1.0, format!("max count / gamma^n = {worst:.4}")))
    })());

    push("overlap constant", (|| {
        let mut worst: f64 = 0.0;
        for i in 0..=49 {
            let d = 0.001 + 0.001 * i as f64;
            let approx = d * d / (2.0 * std::f64::consts::PI);
            worst = worst.max((overlap_c(d)? / approx - 1.0).abs());
        }
        Ok((worst < 0.01, format!("max relative deviation from delta^2/(2 pi) = {worst:.2e}")))
    })());

    push("purification", (|| {
        let g = ScenarioModel::default().with_loss(0.2).covariance()?;
        let p = gaussian_purification(&g)?;
        let spread = p.symplectic_eigenvalues()?.values().iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
        let e = p.submatrix(&[2, 3])?;
        let diff = (gaussian_entropy(&e)? - gaussian_entropy(&g)?).abs();
        Ok((spread < 1e-8 && diff < 1e-6, format!("purity error {spread:.1e}, |H(E) - H(AB)| = {diff:.1e}")))
    })());

    push("sampling bound", (|| {
        let nus: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64).collect();
        let pts = serfling_experiment(100, PopulationSpec::ADVERSARIAL, 200, 1800, &nus, 1000, 7)?;
        let bad = pts.iter().filter(|p| p.empirical > p.bound + 3.0 * p.sigma()).count();
        Ok((bad == 0, format!("{bad} of {} deviations above bound + 3 sigma", pts.len())))
    })());

    checks
}
