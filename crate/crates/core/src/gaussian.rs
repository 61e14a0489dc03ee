//! Gaussian-state calculus on covariance matrices.
//!
//! Quadrature ordering is `(q1, p1, ..., qm, pm)` with `hbar = 1`: the vacuum has
//! covariance `I / 2` and a matrix is physical iff all its symplectic eigenvalues are
//! at least `1/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Variance of a vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

const SYMMETRY_TOL: f64 = 1e-12;
const PHYSICAL_TOL: f64 = 1e-9;
const HOMODYNE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    /// Amplitude quadrature.
    Q,
    /// Phase quadrature.
    P,
}

impl Quadrature {
    pub fn offset(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

/// Real symmetric `2m x 2m` covariance matrix of an `m`-mode Gaussian state.
///
/// Construction symmetrizes the input and checks positive definiteness and the
/// uncertainty principle, so every value of this type is a physical state.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let cm = Self::new_unchecked(entries)?;
        let spectrum = cm.symplectic_eigenvalues()?;
        let nu_min = spectrum.min();
        if nu_min < VACUUM_VARIANCE - PHYSICAL_TOL {
            return Err(Error::Unphysical { nu: nu_min });
        }
        Ok(cm)
    }

    /// Symmetrizes and checks shape and positive definiteness only.
    fn new_unchecked(mut entries: DMatrix<f64>) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::invalid(format!("covariance matrix must be 2m x 2m, got {r} x {c}")));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariance matrix has non-finite entries"));
        }
        let scale = entries.amax().max(1.0);
        let asym = (&entries - entries.transpose()).amax();
        if asym > 1e-6 * scale {
            return Err(Error::invalid(format!("covariance matrix is not symmetric (|A - A^T| = {asym:e})")));
        }
        entries = (&entries + entries.transpose()) * 0.5;
        debug_assert!((&entries - entries.transpose()).amax() <= SYMMETRY_TOL);
        let min_eig = entries.symmetric_eigenvalues().min();
        if min_eig <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min_eig });
        }
        Ok(Self { entries })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { entries: DMatrix::identity(2 * modes, 2 * modes) * VACUUM_VARIANCE }
    }

    /// Single-mode thermal state with quadrature variance `variance`.
    pub fn thermal(variance: f64) -> Result<Self> {
        Self::new(DMatrix::from_diagonal_element(2, 2, variance))
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    /// Covariance matrix of the listed modes, in the given order.
    pub fn submatrix(&self, modes: &[usize]) -> Result<Self> {
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        if let Some(&bad) = modes.iter().find(|&&m| m >= self.modes()) {
            return Err(Error::invalid(format!("mode {bad} out of range for {} modes", self.modes())));
        }
        let n = idx.len();
        let sub = DMatrix::from_fn(n, n, |i, j| self.entries[(idx[i], idx[j])]);
        Ok(Self { entries: sub })
    }

    /// 2x2 covariance of the pair (quadrature `qa` of mode `a`, quadrature `qb` of mode `b`).
    pub fn quadrature_pair(&self, a: usize, qa: Quadrature, b: usize, qb: Quadrature) -> [[f64; 2]; 2] {
        let i = 2 * a + qa.offset();
        let j = 2 * b + qb.offset();
        let e = &self.entries;
        [[e[(i, i)], e[(i, j)]], [e[(j, i)], e[(j, j)]]]
    }

    pub fn symplectic_eigenvalues(&self) -> Result<SymplecticSpectrum> {
        symplectic_eigenvalues(self)
    }

    pub fn entropy(&self) -> Result<f64> {
        gaussian_entropy(self)
    }
}

/// Standard symplectic form on `m` modes: block diagonal `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues, sorted in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `prod nu_k^2`, which equals `det Gamma`.
    pub fn determinant(&self) -> f64 {
        self.values.iter().map(|v| v * v).product()
    }
}

struct SymmetricRoots {
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

fn symmetric_roots(m: &DMatrix<f64>) -> Result<SymmetricRoots> {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let v = &eig.eigenvectors;
    let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let inv_sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    Ok(SymmetricRoots { sqrt: v * sqrt_d * v.transpose(), inv_sqrt: v * inv_sqrt_d * v.transpose() })
}

/// Moduli of the eigenvalues of `i Omega Gamma`.
///
/// Computed through the symmetric matrix `B^T B` with `B = Gamma^{1/2} Omega Gamma^{1/2}`,
/// whose eigenvalues are the squared symplectic eigenvalues, each appearing twice.
pub fn symplectic_eigenvalues(gamma: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    let m = gamma.modes();
    let roots = symmetric_roots(gamma.matrix())?;
    let b = &roots.sqrt * symplectic_form(m) * &roots.sqrt;
    let btb = b.transpose() * &b;
    let btb = (&btb + btb.transpose()) * 0.5;
    let mut sq: Vec<f64> = btb.symmetric_eigenvalues().iter().copied().collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    let values = sq.chunks(2).map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt()).collect();
    Ok(SymplecticSpectrum { values })
}

/// Entropy contribution of one mode with symplectic eigenvalue `nu`, in bits.
pub fn mode_entropy(nu: f64) -> f64 {
    let lo = nu - 0.5;
    if lo <= 1e-15 {
        return 0.0;
    }
    let hi = nu + 0.5;
    hi * hi.log2() - lo * lo.log2()
}

/// Von Neumann entropy of a Gaussian state in bits: `sum_k g(nu_k)`.
pub fn gaussian_entropy(gamma: &CovarianceMatrix) -> Result<f64> {
    Ok(gamma.symplectic_eigenvalues()?.values().iter().map(|&nu| mode_entropy(nu)).sum())
}

/// Two-mode squeezed vacuum obtained by mixing two squeezed vacua on a balanced beam
/// splitter. `q_A, q_B` are correlated and `p_A, p_B` anticorrelated.
pub fn two_mode_squeezed_source(squeezing_db: f64, antisqueezing_db: f64) -> Result<CovarianceMatrix> {
    if !(squeezing_db >= 0.0) || !antisqueezing_db.is_finite() {
        return Err(Error::invalid(format!("squeezing must be >= 0 dB, got {squeezing_db}")));
    }
    if antisqueezing_db < squeezing_db {
        return Err(Error::invalid(format!(
            "antisqueezing ({antisqueezing_db} dB) below squeezing ({squeezing_db} dB) is not physical"
        )));
    }
    let v_sq = VACUUM_VARIANCE * 10f64.powf(-squeezing_db / 10.0);
    let v_anti = VACUUM_VARIANCE * 10f64.powf(antisqueezing_db / 10.0);
    let v = 0.5 * (v_sq + v_anti);
    let z = 0.5 * (v_anti - v_sq);
    #[rustfmt::skip]
    let entries = DMatrix::from_row_slice(4, 4, &[
        v,   0.0, z,   0.0,
        0.0, v,   0.0, -z,
        z,   0.0, v,   0.0,
        0.0, -z,  0.0, v,
    ]);
    CovarianceMatrix::new(entries)
}

/// Symmetric loss and excess-noise channel on every mode:
/// `Gamma -> (1 - loss) Gamma + (loss + excess) Gamma_vac`.
pub fn apply_loss_excess(gamma: &CovarianceMatrix, loss: f64, excess: f64) -> Result<CovarianceMatrix> {
    if !(0.0..=1.0).contains(&loss) {
        return Err(Error::invalid(format!("loss must lie in [0, 1], got {loss}")));
    }
    if !(excess >= 0.0) || !excess.is_finite() {
        return Err(Error::invalid(format!("excess noise must be >= 0, got {excess}")));
    }
    let n = gamma.matrix().nrows();
    let out = gamma.matrix() * (1.0 - loss) + DMatrix::identity(n, n) * ((loss + excess) * VACUUM_VARIANCE);
    CovarianceMatrix::new(out)
}

/// Williamson normal form `Gamma = S D S^T` with `S` symplectic and
/// `D = diag(nu_1, nu_1, ..., nu_m, nu_m)`.
#[derive(Clone, Debug)]
pub struct WilliamsonForm {
    pub symplectic: DMatrix<f64>,
    pub spectrum: Vec<f64>,
}

/// Symplectic diagonalization.
///
/// With `A = Gamma^{-1/2} Omega Gamma^{-1/2}` (antisymmetric), an orthogonal `O` is
/// built from eigenvectors of `A^T A` so that `O^T A O = D^{-1} Omega`; then
/// `S = Gamma^{1/2} O D^{-1/2}`.
pub fn williamson(gamma: &CovarianceMatrix) -> Result<WilliamsonForm> {
    let m = gamma.modes();
    let dim = 2 * m;
    let roots = symmetric_roots(gamma.matrix())?;
    let a = &roots.inv_sqrt * symplectic_form(m) * &roots.inv_sqrt;
    let ata = a.transpose() * &a;
    let ata = (&ata + ata.transpose()) * 0.5;
    let eig = SymmetricEigen::new(ata);
    let mut order: Vec<usize> = (0..dim).collect();
    // Largest 1/nu^2 first, i.e. smallest symplectic eigenvalue first.
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let mut spectrum = Vec::with_capacity(m);
    for &i in &order {
        if basis.len() == dim {
            break;
        }
        let mut u = eig.eigenvectors.column(i).into_owned();
        for b in &basis {
            u -= b * b.dot(&u);
        }
        let norm = u.norm();
        if norm < 0.5 {
            continue;
        }
        u /= norm;
        let lambda = (a.transpose() * (&a * &u)).dot(&u);
        if !(lambda > 0.0) {
            return Err(Error::Numerical(format!("symplectic diagonalization: non-positive Rayleigh quotient {lambda:e}")));
        }
        let nu = 1.0 / lambda.sqrt();
        let mut v = -(&a * &u) * nu;
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let vn = v.norm();
        if (vn - 1.0).abs() > 1e-6 {
            return Err(Error::Numerical(format!(
                "symplectic diagonalization: partner vector norm {vn:.3e} (condition number of Gamma ~ {:.3e})",
                condition_number(gamma.matrix())
            )));
        }
        v /= vn;
        basis.push(u);
        basis.push(v);
        spectrum.push(nu);
    }
    if spectrum.len() != m {
        return Err(Error::Numerical(format!(
            "symplectic diagonalization found {} of {m} modes (condition number {:.3e})",
            spectrum.len(),
            condition_number(gamma.matrix())
        )));
    }
    let o = DMatrix::from_columns(&basis);
    let d_inv_sqrt = DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 / spectrum[i / 2].sqrt() } else { 0.0 });
    let symplectic = &roots.sqrt * o * d_inv_sqrt;
    Ok(WilliamsonForm { symplectic, spectrum })
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let ev = m.symmetric_eigenvalues();
    ev.max() / ev.min()
}

/// Gaussian purification of `Gamma_AB` on `2m` modes: the first `m` modes are `AB`,
/// the last `m` are the purifying system `E`.
///
/// Each thermal mode of the Williamson form is paired with an `E` mode in a two-mode
/// squeezed state, then the symplectic `S` is applied to the `AB` half.
pub fn gaussian_purification(gamma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    let m = gamma.modes();
    let WilliamsonForm { symplectic: s, spectrum } = williamson(gamma)?;
    let mut corr = DMatrix::zeros(2 * m, 2 * m);
    let mut e_block = DMatrix::zeros(2 * m, 2 * m);
    for (k, &nu) in spectrum.iter().enumerate() {
        let c = (nu * nu - 0.25).max(0.0).sqrt();
        corr[(2 * k, 2 * k)] = c;
        corr[(2 * k + 1, 2 * k + 1)] = -c;
        e_block[(2 * k, 2 * k)] = nu;
        e_block[(2 * k + 1, 2 * k + 1)] = nu;
    }
    let cross = &s * corr;
    let mut full = DMatrix::zeros(4 * m, 4 * m);
    full.view_mut((0, 0), (2 * m, 2 * m)).copy_from(gamma.matrix());
    full.view_mut((0, 2 * m), (2 * m, 2 * m)).copy_from(&cross);
    full.view_mut((2 * m, 0), (2 * m, 2 * m)).copy_from(&cross.transpose());
    full.view_mut((2 * m, 2 * m), (2 * m, 2 * m)).copy_from(&e_block);
    CovarianceMatrix::new(full)
}

/// Covariance of the unmeasured modes after a homodyne measurement of `quadrature`
/// on `measured_mode`. The result does not depend on the measured value.
///
/// `Gamma' = Gamma_R - Gamma_RC (Pi Gamma_C Pi)^+ Gamma_RC^T`, where the pseudo-inverse
/// of the rank-one projected block is `e e^T / var`.
pub fn condition_on_homodyne(
    gamma: &CovarianceMatrix,
    measured_mode: usize,
    quadrature: Quadrature,
) -> Result<CovarianceMatrix> {
    let m = gamma.modes();
    if measured_mode >= m {
        return Err(Error::invalid(format!("mode {measured_mode} out of range for {m} modes")));
    }
    if m < 2 {
        return Err(Error::invalid("conditioning needs at least one unmeasured mode"));
    }
    let measured = 2 * measured_mode + quadrature.offset();
    let var = gamma.get(measured, measured);
    if var < HOMODYNE_TOL {
        return Err(Error::DegenerateHomodyne(var));
    }
    let rest: Vec<usize> =
        (0..2 * m).filter(|&i| i / 2 != measured_mode).collect();
    let n = rest.len();
    let g = gamma.matrix();
    let out = DMatrix::from_fn(n, n, |i, j| {
        let (ri, rj) = (rest[i], rest[j]);
        g[(ri, rj)] - g[(ri, measured)] * g[(rj, measured)] / var
    });
    CovarianceMatrix::new(out)
}
