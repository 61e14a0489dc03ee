use rayon::prelude::*;

use super::distribution::{lattice_probabilities, shannon_entropy};
use super::normal;
use super::scheme::{BinningScheme, Lattice, TRUNCATION_SIGMAS};
use crate::{Error, Result};

/// Per-cell absolute tolerance of the row integration.
const CELL_TOL: f64 = 1e-10;
const MASS_TOL: f64 = 1e-6;
/// Rows reach one sigma beyond the binning truncation; within a row, Bob's conditional
/// distribution is cut at 9 residual sigmas (dropped mass below 1e-18 per row).
const ROW_SIGMAS: f64 = TRUNCATION_SIGMAS + 1.0;
const COLUMN_SIGMAS: f64 = 9.0;

/// Gauss-Legendre rules on [-1, 1] as (nodes, weights).
const GL2: (&[f64], &[f64]) = (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]);
const GL3: (&[f64], &[f64]) = (
    &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
    &[0.555_555_555_555_555_6, 0.888_888_888_888_888_9, 0.555_555_555_555_555_6],
);
const GL4: (&[f64], &[f64]) = (
    &[-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6],
    &[0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9],
);
const GL6: (&[f64], &[f64]) = (
    &[
        -0.932_469_514_203_152_1,
        -0.661_209_386_466_264_5,
        -0.238_619_186_083_196_9,
        0.238_619_186_083_196_9,
        0.661_209_386_466_264_5,
        0.932_469_514_203_152_1,
    ],
    &[
        0.171_324_492_379_170_3,
        0.360_761_573_048_138_6,
        0.467_913_934_572_691_0,
        0.467_913_934_572_691_0,
        0.360_761_573_048_138_6,
        0.171_324_492_379_170_3,
    ],
);

/// Increasingly accurate (rule, panel multiplier) pairs tried by the calibration.
const LADDER: [((&[f64], &[f64]), usize); 11] = [
    (GL2, 1),
    (GL3, 1),
    (GL4, 1),
    (GL6, 1),
    (GL6, 2),
    (GL6, 4),
    (GL6, 8),
    (GL6, 16),
    (GL6, 32),
    (GL6, 64),
    (GL6, 128),
];

/// Nonzero stretch of one row of a joint table: `probs[i]` is the mass of bin pair
/// `(a, b_start + i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointRow {
    pub a: usize,
    pub b_start: usize,
    pub probs: Vec<f64>,
}

/// Joint distribution of the bin indices of two correlated Gaussian quadratures, stored
/// as banded rows (cells more than 9 conditional standard deviations off the regression
/// line are dropped).
#[derive(Clone, Debug)]
pub struct JointDistribution {
    lattice: Lattice,
    rows: Vec<JointRow>,
}

/// Bin-index distance statistics `E|j - k|` and `Var|j - k|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Everything the key-length formulas need from a joint table, computed without storing
/// it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointStats {
    pub bins: usize,
    pub mass: f64,
    pub joint_entropy: f64,
    pub h_a: f64,
    pub h_b: f64,
    pub distance: DistanceMoments,
}

impl JointStats {
    pub fn mutual_information(&self) -> f64 {
        self.h_a + self.h_b - self.joint_entropy
    }

    /// `H(X_A | X_B)`.
    pub fn conditional_entropy(&self) -> f64 {
        self.joint_entropy - self.h_b
    }
}

impl JointDistribution {
    /// Builds a table from explicit rows, e.g. for testing. Rows must be normalized jointly.
    pub fn from_rows(bins: usize, rows: Vec<JointRow>) -> Result<Self> {
        for r in &rows {
            if r.a >= bins || r.b_start + r.probs.len() > bins {
                return Err(Error::invalid(format!("row {} does not fit {bins} bins", r.a)));
            }
            if r.probs.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::invalid("negative cell probability"));
            }
        }
        let d = Self { lattice: Lattice { lower: 0.0, delta: 1.0, bins }, rows };
        let mass = d.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!("joint table mass {mass} is not 1")));
        }
        Ok(d)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn bins(&self) -> usize {
        self.lattice.bins
    }

    pub fn rows(&self) -> &[JointRow] {
        &self.rows
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.rows
            .iter()
            .find(|r| r.a == a)
            .and_then(|r| b.checked_sub(r.b_start).and_then(|i| r.probs.get(i)).copied())
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.probs.iter().sum::<f64>()).sum()
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.bins()];
        for r in &self.rows {
            m[r.a] += r.probs.iter().sum::<f64>();
        }
        m
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.bins()];
        for r in &self.rows {
            for (i, p) in r.probs.iter().enumerate() {
                m[r.b_start + i] += p;
            }
        }
        m
    }

    pub fn joint_entropy(&self) -> f64 {
        self.rows.iter().map(|r| shannon_entropy(&r.probs)).sum()
    }

    /// Same table with A and B exchanged.
    pub fn transposed(&self) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.bins()];
        for r in &self.rows {
            for (i, &p) in r.probs.iter().enumerate() {
                cols[r.b_start + i].push((r.a, p));
            }
        }
        let rows = cols
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(b, c)| {
                let start = c.first().map(|x| x.0).unwrap_or(0);
                let end = c.last().map(|x| x.0).unwrap_or(0);
                let mut probs = vec![0.0; end - start + 1];
                for (a, p) in c {
                    probs[a - start] += p;
                }
                JointRow { a: b, b_start: start, probs }
            })
            .collect();
        Self { lattice: self.lattice, rows }
    }
}

/// `E|j - k|` and its variance over a joint table.
pub fn expected_distance(joint: &JointDistribution) -> DistanceMoments {
    let (mut m1, mut m2) = (0.0, 0.0);
    for r in &joint.rows {
        let (s1, s2) = row_distance_sums(r.a, r.b_start, &r.probs);
        m1 += s1;
        m2 += s2;
    }
    DistanceMoments { mean: m1, variance: (m2 - m1 * m1).max(0.0) }
}

fn row_distance_sums(a: usize, b_start: usize, probs: &[f64]) -> (f64, f64) {
    let (mut s1, mut s2) = (0.0, 0.0);
    for (i, &p) in probs.iter().enumerate() {
        let d = (a as f64 - (b_start + i) as f64).abs();
        s1 += p * d;
        s2 += p * d * d;
    }
    (s1, s2)
}

/// Rectangle probabilities of a zero-mean bivariate Gaussian with covariance `cov` over all
/// pairs of bins of `scheme`.
pub fn joint_bin_distribution(cov: [[f64; 2]; 2], scheme: &BinningScheme) -> Result<JointDistribution> {
    let integ = RowIntegrator::new(cov, scheme)?;
    let level = integ.calibrate()?;
    let rows: Vec<JointRow> = (integ.first_row..=integ.last_row)
        .into_par_iter()
        .filter_map(|a| {
            integ.row(a, level).map(|(b_start, probs)| JointRow { a, b_start, probs })
        })
        .collect();
    let table = JointDistribution { lattice: integ.lattice, rows };
    check_mass(table.total_mass())?;
    Ok(table)
}

/// Statistics of the joint table of [`joint_bin_distribution`], streamed row by row.
///
/// `h_a` and `h_b` come from the exact one-dimensional marginals on the same lattice.
pub fn joint_statistics(cov: [[f64; 2]; 2], scheme: &BinningScheme) -> Result<JointStats> {
    let integ = RowIntegrator::new(cov, scheme)?;
    let level = integ.calibrate()?;
    // Per-row partial sums, reduced in row order so the result is independent of threading.
    let partial: Vec<[f64; 4]> = (integ.first_row..=integ.last_row)
        .into_par_iter()
        .map(|a| match integ.row(a, level) {
            Some((b_start, probs)) => {
                let (s1, s2) = row_distance_sums(a, b_start, &probs);
                [probs.iter().sum(), shannon_entropy(&probs), s1, s2]
            }
            None => [0.0; 4],
        })
        .collect();
    let mut acc = [0.0; 4];
    for p in &partial {
        for i in 0..4 {
            acc[i] += p[i];
        }
    }
    check_mass(acc[0])?;
    let h_a = shannon_entropy(&lattice_probabilities(cov[0][0], &integ.lattice));
    let h_b = shannon_entropy(&lattice_probabilities(cov[1][1], &integ.lattice));
    Ok(JointStats {
        bins: integ.lattice.bins,
        mass: acc[0],
        joint_entropy: acc[1],
        h_a,
        h_b,
        distance: DistanceMoments { mean: acc[2], variance: (acc[3] - acc[2] * acc[2]).max(0.0) },
    })
}

fn check_mass(mass: f64) -> Result<()> {
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::Numerical(format!("joint table mass {mass} deviates from 1")));
    }
    Ok(())
}

/// Integrates `phi_A(x) P(B in bin | A = x)` over the x-range of each A-bin.
struct RowIntegrator {
    lattice: Lattice,
    sigma_a: f64,
    /// Regression coefficient of B on A and residual standard deviation.
    beta: f64,
    s: f64,
    first_row: usize,
    last_row: usize,
}

impl RowIntegrator {
    fn new(cov: [[f64; 2]; 2], scheme: &BinningScheme) -> Result<Self> {
        let (va, vb) = (cov[0][0], cov[1][1]);
        let c = 0.5 * (cov[0][1] + cov[1][0]);
        if !(va > 0.0 && vb > 0.0) || !va.is_finite() || !vb.is_finite() || !c.is_finite() {
            return Err(Error::invalid(format!("joint covariance needs positive variances, got {va}, {vb}")));
        }
        let rho = c / (va * vb).sqrt();
        if rho.abs() > 1.0 - 1e-9 {
            return Err(Error::invalid(format!("joint covariance is near singular (correlation {rho})")));
        }
        let sigma_a = va.sqrt();
        let lattice = scheme.lattice(va.max(vb).sqrt());
        let reach = ROW_SIGMAS * sigma_a;
        Ok(Self {
            lattice,
            sigma_a,
            beta: c / va,
            s: (vb - c * c / va).sqrt(),
            first_row: lattice.index_of(-reach),
            last_row: lattice.index_of(reach),
        })
    }

    /// First ladder level whose sampled rows agree with the next level to `CELL_TOL`.
    fn calibrate(&self) -> Result<usize> {
        let span = self.last_row - self.first_row;
        let mut samples: Vec<usize> = (0..=32).map(|i| self.first_row + span * i / 32).collect();
        samples.push(self.lattice.index_of(0.0));
        samples.push(self.lattice.index_of(self.sigma_a));
        samples.sort_unstable();
        samples.dedup();
        for level in 0..LADDER.len() - 1 {
            let worst = samples
                .par_iter()
                .map(|&a| match (self.row(a, level), self.row(a, level + 1)) {
                    (Some((_, x)), Some((_, y))) => {
                        x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
                    }
                    _ => 0.0,
                })
                .reduce(|| 0.0, f64::max);
            if worst <= CELL_TOL {
                return Ok(level);
            }
        }
        Err(Error::Numerical("joint table integration did not converge".into()))
    }

    /// Cells of row `a` as `(b_start, probabilities)`, or `None` if the row lies outside the
    /// integration window.
    fn row(&self, a: usize, level: usize) -> Option<(usize, Vec<f64>)> {
        let reach = ROW_SIGMAS * self.sigma_a;
        let lo = self.lattice.edge(a).max(-reach);
        let hi = self.lattice.edge(a + 1).min(reach);
        if hi <= lo {
            return None;
        }
        let (m1, m2) = (self.beta * lo, self.beta * hi);
        let (mlo, mhi) = (m1.min(m2), m1.max(m2));
        let b_start = self.lattice.index_of(mlo - COLUMN_SIGMAS * self.s);
        let b_end = self.lattice.index_of(mhi + COLUMN_SIGMAS * self.s);
        let ncols = b_end - b_start + 1;

        let scale = if self.beta != 0.0 { self.sigma_a.min(self.s / self.beta.abs()) } else { self.sigma_a };
        let ((nodes, weights), refine) = LADDER[level];
        let panels = (((hi - lo) / (0.5 * scale)).ceil().max(1.0) as usize) * refine;
        let width = (hi - lo) / panels as f64;

        let mut probs = vec![0.0; ncols];
        // tails[j] = (upper, value): value is sf(t_j) if t_j >= 0, else cdf(t_j).
        let mut tails = vec![(false, 0.0); ncols + 1];
        for panel in 0..panels {
            let mid = lo + (panel as f64 + 0.5) * width;
            for (t, w) in nodes.iter().zip(weights) {
                let x = mid + 0.5 * width * t;
                let weight = 0.5 * width * w * normal::pdf(x / self.sigma_a) / self.sigma_a;
                let center = self.beta * x;
                for (j, tail) in tails.iter_mut().enumerate() {
                    let z = (self.lattice.edge(b_start + j) - center) / self.s;
                    *tail = if z >= 0.0 { (true, normal::sf(z)) } else { (false, normal::cdf(z)) };
                }
                for (c, p) in probs.iter_mut().enumerate() {
                    let (l, r) = (tails[c], tails[c + 1]);
                    let cell = match (l.0, r.0) {
                        (true, true) => l.1 - r.1,
                        (false, false) => r.1 - l.1,
                        (false, true) => 1.0 - l.1 - r.1,
                        (true, false) => 0.0,
                    };
                    *p += weight * cell.max(0.0);
                }
            }
        }
        Some((b_start, probs))
    }
}
