//! Covariance-matrix algebra for zero-mean Gaussian states.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SupermodeBasis;
use crate::propagation::symplectic_form;

/// Absolute tolerance on eigenvalues used by the physicality checks.
pub const PHYSICALITY_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Individual,
    Supermode,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Individual => "individual",
            Basis::Supermode => "supermode",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToIndividual,
    ToSupermode,
}

/// Second-moment matrix over interleaved quadratures, tagged with the basis
/// it is expressed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceRecord", into = "CovarianceRecord")]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
    basis: Basis,
}

/// Wire form: row-major entries plus the basis tag and mode count.
#[derive(Serialize, Deserialize)]
struct CovarianceRecord {
    #[serde(rename = "N")]
    n: usize,
    basis: Basis,
    ordering: String,
    entries: Vec<f64>,
}

impl TryFrom<CovarianceRecord> for CovarianceMatrix {
    type Error = Error;

    fn try_from(rec: CovarianceRecord) -> Result<Self> {
        if rec.ordering != "interleaved" {
            return Err(Error::InvalidArgument(format!(
                "unsupported quadrature ordering {:?}",
                rec.ordering
            )));
        }
        let dim = 2 * rec.n;
        if rec.entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: rec.entries.len(),
            });
        }
        CovarianceMatrix::new(DMatrix::from_row_slice(dim, dim, &rec.entries), rec.basis)
    }
}

impl From<CovarianceMatrix> for CovarianceRecord {
    fn from(v: CovarianceMatrix) -> Self {
        let dim = v.entries.nrows();
        let entries = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| v.entries[(i, j)])
            .collect();
        CovarianceRecord {
            n: dim / 2,
            basis: v.basis,
            ordering: "interleaved".into(),
            entries,
        }
    }
}

impl CovarianceMatrix {
    /// Accepts any square, even-dimensional, symmetric matrix. Physicality is
    /// not enforced here; see [`check_physicality`].
    pub fn new(entries: DMatrix<f64>, basis: Basis) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows % 2 != 0 || rows == 0 {
            return Err(Error::InvalidArgument(format!(
                "covariance must be a non-empty 2N×2N matrix, got {rows}×{cols}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("covariance has non-finite entries".into()));
        }
        let asym = symmetry_residual(&entries);
        if asym > SYMMETRY_TOL * entries.amax().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "covariance is not symmetric (residual {asym:.3e})"
            )));
        }
        Ok(CovarianceMatrix { entries, basis })
    }

    pub fn vacuum(n: usize, basis: Basis) -> Self {
        CovarianceMatrix {
            entries: DMatrix::identity(2 * n, 2 * n),
            basis,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    /// Reduced state on the listed modes (0-based), in the given order.
    pub fn submatrix(&self, modes: &[usize]) -> Result<Self> {
        let n = self.modes();
        if let Some(&bad) = modes.iter().find(|&&m| m >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let entries = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        Ok(CovarianceMatrix {
            entries,
            basis: self.basis,
        })
    }

    pub fn expect_basis(&self, basis: Basis) -> Result<()> {
        if self.basis != basis {
            return Err(Error::BasisMismatch {
                expected: basis,
                found: self.basis,
            });
        }
        Ok(())
    }

    fn expect_modes(&self, n: usize) -> Result<()> {
        if self.modes() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.modes(),
            });
        }
        Ok(())
    }
}

/// LO phases and gains of a multimode homodyne measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementProfile {
    pub theta: Vec<f64>,
    pub gains: Vec<f64>,
}

impl MeasurementProfile {
    pub fn new(theta: Vec<f64>, gains: Vec<f64>) -> Result<Self> {
        if theta.len() != gains.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                found: gains.len(),
            });
        }
        if theta.iter().chain(&gains).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "measurement profile has non-finite entries".into(),
            ));
        }
        Ok(MeasurementProfile { theta, gains })
    }

    /// Profile with the given phases and all gains zero.
    pub fn phases_only(theta: Vec<f64>) -> Result<Self> {
        let gains = vec![0.0; theta.len()];
        MeasurementProfile::new(theta, gains)
    }

    pub fn modes(&self) -> usize {
        self.theta.len()
    }
}

/// Block-diagonal local rotation: row pair `j` maps `(x_j, y_j)` to
/// `(x_j(θ_j), y_j(θ_j))` with `x(θ) = x cos θ + y sin θ`, `y(θ) = x(θ + π/2)`.
pub fn rotation_matrix(theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for (j, &t) in theta.iter().enumerate() {
        let (s, c) = t.sin_cos();
        r[(2 * j, 2 * j)] = c;
        r[(2 * j, 2 * j + 1)] = s;
        r[(2 * j + 1, 2 * j)] = -s;
        r[(2 * j + 1, 2 * j + 1)] = c;
    }
    r
}

/// Covariance of the generalized quadratures `x_j(θ_j)`, `y_j(θ_j)`.
pub fn rotate_quadratures(v: &CovarianceMatrix, theta: &[f64]) -> Result<CovarianceMatrix> {
    v.expect_modes(theta.len())?;
    let r = rotation_matrix(theta);
    let entries = symmetrize(&r * v.entries() * r.transpose());
    Ok(CovarianceMatrix {
        entries,
        basis: v.basis,
    })
}

/// `M ⊗ I₂`, mapping individual quadratures to supermode quadratures.
pub fn supermode_transform(basis: &SupermodeBasis) -> DMatrix<f64> {
    basis.modes().kronecker(&DMatrix::<f64>::identity(2, 2))
}

pub fn change_basis(v: &CovarianceMatrix, basis: &SupermodeBasis, direction: Direction) -> Result<CovarianceMatrix> {
    v.expect_modes(basis.dim())?;
    let t = supermode_transform(basis);
    let (entries, tag) = match direction {
        Direction::ToIndividual => {
            v.expect_basis(Basis::Supermode)?;
            (t.transpose() * v.entries() * &t, Basis::Individual)
        }
        Direction::ToSupermode => {
            v.expect_basis(Basis::Individual)?;
            (&t * v.entries() * t.transpose(), Basis::Supermode)
        }
    };
    Ok(CovarianceMatrix {
        entries: symmetrize(entries),
        basis: tag,
    })
}

/// Variance `cᵀ V c` of the quadrature combination with coefficients `c`.
pub fn variance_of_combination(v: &CovarianceMatrix, coeffs: &[f64]) -> Result<f64> {
    let dim = v.entries.nrows();
    if coeffs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: coeffs.len(),
        });
    }
    let mut total = 0.0;
    for (i, &ci) in coeffs.iter().enumerate() {
        if ci == 0.0 {
            continue;
        }
        let row: f64 = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &cj)| cj != 0.0)
            .map(|(j, &cj)| v.entries[(i, j)] * cj)
            .sum();
        total += ci * row;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalityReport {
    pub symmetric: bool,
    pub symmetry_residual: f64,
    pub positive: bool,
    pub min_eigenvalue: f64,
    /// `V + iΩ ⪰ 0` (Heisenberg uncertainty).
    pub uncertainty_ok: bool,
    pub min_uncertainty_eigenvalue: f64,
    /// `det V`; equal to one for a pure state.
    pub purity: f64,
}

impl PhysicalityReport {
    pub fn is_physical(&self) -> bool {
        self.symmetric && self.positive && self.uncertainty_ok
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity - 1.0).abs() <= tol
    }
}

pub fn check_physicality(v: &CovarianceMatrix) -> PhysicalityReport {
    let m = v.entries();
    let n = v.modes();
    let symmetry_residual = symmetry_residual(m);
    let sym = symmetrize(m.clone());
    let min_eigenvalue = SymmetricEigen::new(sym.clone()).eigenvalues.min();

    // V + iΩ is Hermitian; its spectrum is that of the real embedding
    // [[V, −Ω], [Ω, V]] with every eigenvalue doubled.
    let omega = symplectic_form(n);
    let dim = 2 * n;
    let mut embed = DMatrix::zeros(2 * dim, 2 * dim);
    embed.view_mut((0, 0), (dim, dim)).copy_from(&sym);
    embed.view_mut((dim, dim), (dim, dim)).copy_from(&sym);
    embed.view_mut((0, dim), (dim, dim)).copy_from(&(-&omega));
    embed.view_mut((dim, 0), (dim, dim)).copy_from(&omega);
    let min_uncertainty_eigenvalue = SymmetricEigen::new(embed).eigenvalues.min();

    PhysicalityReport {
        symmetric: symmetry_residual <= SYMMETRY_TOL * m.amax().max(1.0),
        symmetry_residual,
        positive: min_eigenvalue > -PHYSICALITY_TOL,
        min_eigenvalue,
        uncertainty_ok: min_uncertainty_eigenvalue >= -PHYSICALITY_TOL,
        min_uncertainty_eigenvalue,
        purity: m.determinant(),
    }
}

fn symmetry_residual(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}
