//! Nearest-neighbour coupling lattice and its propagation eigenmodes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries below this magnitude are treated as zero when fixing the sign of a
/// supermode.
const SIGN_THRESHOLD: f64 = 1e-9;

/// Relative spacing under which two eigenvalues are considered degenerate.
const DEGENERACY_TOL: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 10_000;

/// Physical description of an array of identical waveguides pumped with a
/// flat profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArrayConfig", into = "RawArrayConfig")]
pub struct ArrayConfig {
    n: usize,
    c0: f64,
    profile: Vec<f64>,
    eta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawArrayConfig {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "C0")]
    c0: f64,
    f: Vec<f64>,
    eta: f64,
}

impl TryFrom<RawArrayConfig> for ArrayConfig {
    type Error = Error;

    fn try_from(raw: RawArrayConfig) -> Result<Self> {
        ArrayConfig::new(raw.n, raw.c0, raw.f, raw.eta)
    }
}

impl From<ArrayConfig> for RawArrayConfig {
    fn from(config: ArrayConfig) -> Self {
        RawArrayConfig {
            n: config.n,
            c0: config.c0,
            f: config.profile,
            eta: config.eta,
        }
    }
}

impl ArrayConfig {
    /// `profile` holds the `N − 1` dimensionless factors `f_j`, so that the
    /// coupling between waveguides `j` and `j + 1` is `c0 · f_j`.
    pub fn new(n: usize, c0: f64, profile: Vec<f64>, eta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidConfig(format!("C0 must be positive, got {c0}")));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidConfig(format!("eta must be non-negative, got {eta}")));
        }
        if profile.len() != n - 1 {
            return Err(Error::InvalidConfig(format!(
                "coupling profile has {} factors, expected N - 1 = {}",
                profile.len(),
                n - 1
            )));
        }
        if let Some(bad) = profile.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "coupling factors must be positive, got {bad}"
            )));
        }
        Ok(ArrayConfig { n, c0, profile, eta })
    }

    /// Array with every coupling factor equal to one.
    pub fn homogeneous(n: usize, c0: f64, eta: f64) -> Result<Self> {
        ArrayConfig::new(n, c0, vec![1.0; n.saturating_sub(1)], eta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Effective nonlinear constant |η|, shared by every waveguide.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Coupling constant `C_j = C0 · f_j` between waveguides `j` and `j + 1`
    /// (0-based `j`).
    pub fn coupling(&self, j: usize) -> f64 {
        self.c0 * self.profile[j]
    }

    pub fn is_homogeneous(&self) -> bool {
        self.profile.iter().all(|&f| f == 1.0)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        ArrayConfig::new(self.n, self.c0, self.profile.clone(), eta)
    }
}

/// Real symmetric tridiagonal coupling matrix with an empty main diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix(DMatrix<f64>);

impl CouplingMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

pub fn build_coupling_matrix(config: &ArrayConfig) -> CouplingMatrix {
    let n = config.n();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        let c = config.coupling(j);
        m[(j, j + 1)] = c;
        m[(j + 1, j)] = c;
    }
    CouplingMatrix(m)
}

/// Supermode basis: row `k` of `modes` is supermode `k` expressed over the
/// individual waveguides, i.e. `ξ_S,k = Σ_j M[k, j] ξ_j`.
///
/// Eigenvalues are sorted in descending order and each row is signed so that
/// its first non-negligible entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermodeBasis {
    modes: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl SupermodeBasis {
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Coefficients of supermode `k` (0-based) over the individual modes.
    pub fn supermode(&self, k: usize) -> Vec<f64> {
        self.modes.row(k).iter().copied().collect()
    }

    /// Multiplies every eigenvalue by `c0`. Used with
    /// [`homogeneous_closed_form`], whose spectrum is given in units of C0.
    pub fn scaled(mut self, c0: f64) -> Self {
        self.eigenvalues *= c0;
        self
    }

    /// Nested row-major view of `modes`, handy for serialisation.
    pub fn modes_rows(&self) -> Vec<Vec<f64>> {
        self.modes.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Diagonalises the coupling matrix.
pub fn supermode_decomposition(coupling: &CouplingMatrix) -> Result<SupermodeBasis> {
    let n = coupling.dim();
    let eig = SymmetricEigen::try_new(coupling.as_matrix().clone(), f64::EPSILON, EIGEN_MAX_ITER).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge for N = {n} within {EIGEN_MAX_ITER} sweeps"
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut modes = DMatrix::zeros(n, n);
    for (row, &i) in order.iter().enumerate() {
        modes.set_row(row, &eig.eigenvectors.column(i).transpose());
    }

    // Zero diagonal on a bipartite chain: the spectrum is symmetric about
    // zero, so odd N carries an exact zero eigenvalue.
    if n % 2 == 1 {
        let mid = n / 2;
        let scale = eigenvalues.amax().max(1.0);
        if eigenvalues[mid].abs() < 1e-10 * scale {
            eigenvalues[mid] = 0.0;
        }
    }

    canonicalize_degenerate(&mut modes, &eigenvalues);
    fix_signs(&mut modes);

    Ok(SupermodeBasis { modes, eigenvalues })
}

/// Closed-form supermodes of the homogeneous chain,
/// `M[k, j] = √(2/(N+1)) · sin(jkπ/(N+1))` with eigenvalues `2cos(kπ/(N+1))`
/// in units of C0 (see [`SupermodeBasis::scaled`]).
pub fn homogeneous_closed_form(n: usize) -> SupermodeBasis {
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    let modes = DMatrix::from_fn(n, n, |k, j| {
        norm * (((j + 1) * (k + 1)) as f64 * PI / (n as f64 + 1.0)).sin()
    });
    let eigenvalues = DVector::from_fn(n, |k, _| 2.0 * ((k + 1) as f64 * PI / (n as f64 + 1.0)).cos());
    let mut basis = SupermodeBasis { modes, eigenvalues };
    if n % 2 == 1 {
        basis.eigenvalues[n / 2] = 0.0;
    }
    basis
}

/// 1-based label `l = (N + 1)/2` of the zero supermode.
pub fn zero_supermode_index(n: usize) -> Result<usize> {
    if n.is_multiple_of(2) {
        return Err(Error::NoZeroSupermode(n));
    }
    Ok(n.div_ceil(2))
}

fn fix_signs(modes: &mut DMatrix<f64>) {
    for mut row in modes.row_iter_mut() {
        let lead = row.iter().copied().find(|v| v.abs() > SIGN_THRESHOLD);
        if matches!(lead, Some(v) if v < 0.0) {
            row.neg_mut();
        }
    }
}

/// Replaces the rows spanning each degenerate eigenspace with the ordered
/// Gram–Schmidt basis obtained by projecting `e_1, e_2, …` onto it.
fn canonicalize_degenerate(modes: &mut DMatrix<f64>, eigenvalues: &DVector<f64>) {
    let n = eigenvalues.len();
    let scale = eigenvalues.amax().max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eigenvalues[end - 1] - eigenvalues[end]).abs() < DEGENERACY_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            let block = modes.rows(start, end - start).clone_owned();
            let canonical = canonical_subspace_basis(&block);
            modes.rows_mut(start, end - start).copy_from(&canonical);
        }
        start = end;
    }
}

/// `rows` is an orthonormal basis (as rows) of some subspace; returns the
/// basis built by projecting unit vectors in ascending index order.
fn canonical_subspace_basis(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, n) = rows.shape();
    let projector = rows.transpose() * rows;
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(d);
    for i in 0..n {
        if chosen.len() == d {
            break;
        }
        let mut v = projector.column(i).clone_owned();
        for c in &chosen {
            let overlap = c.dot(&v);
            v.axpy(-overlap, c, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            chosen.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(d, n);
    for (r, v) in chosen.iter().enumerate() {
        out.set_row(r, &v.transpose());
    }
    out
}
