//! Propagation of the quadratures along the array.
//!
//! Each supermode `k` obeys `d/dz (x, y)ᵀ = [[0, −(λ_k − 2η)], [λ_k + 2η, 0]] (x, y)ᵀ`,
//! which is solved in closed form here. [`assemble_generator`] builds the
//! same dynamics in the individual-waveguide basis and [`propagate_numeric`]
//! exponentiates it directly, giving an independent route to the covariance.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{change_basis, Basis, CovarianceMatrix, Direction};
use crate::lattice::{build_coupling_matrix, ArrayConfig, SupermodeBasis};

/// Eigenvalues with magnitude at or below this are treated as exactly zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `|λ| > 2η`: bounded, periodically squeezed supermode.
    Trigonometric,
    /// `λ = 0`: phase-matched supermode, squeezing grows without bound.
    ZeroEigenvalue,
    /// `0 < |λ| ≤ 2η`: exponential growth; obtained by analytic continuation
    /// of the trigonometric solution.
    Hyperbolic,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Regime::Trigonometric => "trigonometric",
            Regime::ZeroEigenvalue => "zero-eigenvalue",
            Regime::Hyperbolic => "hyperbolic",
        };
        f.write_str(name)
    }
}

/// Squeezing parameters of one supermode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingParams {
    pub lambda: f64,
    pub eta: f64,
    pub regime: Regime,
}

impl SqueezingParams {
    /// `r = ½ ln[(λ + 2η)/(λ − 2η)]`, defined in the trigonometric regime.
    pub fn squeezing(&self) -> Option<f64> {
        (self.regime == Regime::Trigonometric).then(|| {
            let (a, _) = self.generator_entries();
            0.5 * (4.0 * self.eta / a).ln_1p()
        })
    }

    /// `F = √(λ² − 4η²)`, defined in the trigonometric regime.
    pub fn spatial_frequency(&self) -> Option<f64> {
        (self.regime == Regime::Trigonometric).then(|| {
            let (a, b) = self.generator_entries();
            (a * b).sqrt()
        })
    }

    /// Exponential rate `√(4η² − λ²)` outside the trigonometric regime.
    pub fn growth_rate(&self) -> Option<f64> {
        match self.regime {
            Regime::Trigonometric => None,
            Regime::ZeroEigenvalue => Some(2.0 * self.eta),
            Regime::Hyperbolic => {
                let (a, b) = self.generator_entries();
                Some((-(a * b)).max(0.0).sqrt())
            }
        }
    }

    /// `(λ − 2η, λ + 2η)`, with λ pinned to zero in the zero-eigenvalue
    /// regime.
    fn generator_entries(&self) -> (f64, f64) {
        let lambda = match self.regime {
            Regime::ZeroEigenvalue => 0.0,
            _ => self.lambda,
        };
        (lambda - 2.0 * self.eta, lambda + 2.0 * self.eta)
    }

    /// Per-supermode generator `[[0, −(λ − 2η)], [λ + 2η, 0]]`.
    pub fn generator(&self) -> Matrix2<f64> {
        let (a, b) = self.generator_entries();
        Matrix2::new(0.0, -a, b, 0.0)
    }
}

pub fn squeezing_params(lambda: f64, eta: f64) -> Result<SqueezingParams> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be non-negative, got {eta}")));
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue must be finite, got {lambda}"
        )));
    }
    let regime = if lambda.abs() <= ZERO_EIGENVALUE_TOL {
        Regime::ZeroEigenvalue
    } else if lambda.abs() > 2.0 * eta {
        Regime::Trigonometric
    } else {
        Regime::Hyperbolic
    };
    Ok(SqueezingParams { lambda, eta, regime })
}

/// Real 2×2 symplectic map acting on `(x, y)` of one supermode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticBlock(Matrix2<f64>);

impl SymplecticBlock {
    pub fn as_matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Covariance of the vacuum after this map, `S Sᵀ`.
    pub fn vacuum_covariance(&self) -> Matrix2<f64> {
        self.0 * self.0.transpose()
    }
}

fn check_distance(z: f64) -> Result<()> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::NegativeDistance(z));
    }
    Ok(())
}

/// `sinh(rate·z)/rate`, accurate as the rate goes to zero.
fn sinh_over(rate: f64, z: f64) -> f64 {
    let t = rate * z;
    if t.abs() < 1e-4 {
        z * (1.0 + t * t / 6.0 + t.powi(4) / 120.0)
    } else {
        t.sinh() / rate
    }
}

/// Transfer matrix `S_k(z)` of one supermode.
///
/// In the trigonometric regime this is
/// `[[cos Fz, −e^{−r} sin Fz], [e^{r} sin Fz, cos Fz]]` for `λ > 0`; for
/// `λ < 0` the sine carries the sign of λ so that the block is always
/// `exp(z · generator)`.
pub fn supermode_symplectic(params: &SqueezingParams, z: f64) -> Result<SymplecticBlock> {
    check_distance(z)?;
    let block = match params.regime {
        Regime::Trigonometric => {
            let r = params.squeezing().expect("trigonometric regime");
            let f = params.spatial_frequency().expect("trigonometric regime");
            let (c, s) = ((f * z).cos(), params.lambda.signum() * (f * z).sin());
            Matrix2::new(c, -(-r).exp() * s, r.exp() * s, c)
        }
        Regime::ZeroEigenvalue => {
            let t = 2.0 * params.eta * z;
            Matrix2::new(t.cosh(), t.sinh(), t.sinh(), t.cosh())
        }
        Regime::Hyperbolic => {
            let (a, b) = params.generator_entries();
            let rate = params.growth_rate().expect("hyperbolic regime");
            let c = (rate * z).cosh();
            let s = sinh_over(rate, z);
            Matrix2::new(c, -a * s, b * s, c)
        }
    };
    Ok(SymplecticBlock(block))
}

/// Vacuum-input covariance of one supermode at distance `z`.
pub fn supermode_covariance(params: &SqueezingParams, z: f64) -> Result<Matrix2<f64>> {
    check_distance(z)?;
    let v = match params.regime {
        Regime::Trigonometric => {
            let r = params.squeezing().expect("trigonometric regime");
            let f = params.spatial_frequency().expect("trigonometric regime");
            let phase = 2.0 * f * z;
            let xx = (r.cosh() + r.sinh() * phase.cos()) * (-r).exp();
            let yy = (r.cosh() - r.sinh() * phase.cos()) * r.exp();
            let xy = params.lambda.signum() * r.sinh() * phase.sin();
            Matrix2::new(xx, xy, xy, yy)
        }
        Regime::ZeroEigenvalue => {
            let t = 4.0 * params.eta * z;
            Matrix2::new(t.cosh(), t.sinh(), t.sinh(), t.cosh())
        }
        Regime::Hyperbolic => supermode_symplectic(params, z)?.vacuum_covariance(),
    };
    Ok(v)
}

/// Distances of maximum and null squeezing, `L = (2n − 1)π/(2F)` and
/// `L′ = nπ/F`, for `n ≥ 1`.
pub fn squeezing_extrema(params: &SqueezingParams, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("extremum order n starts at 1".into()));
    }
    let f = params
        .spatial_frequency()
        .filter(|f| *f > 0.0)
        .ok_or(Error::NoPeriodicExtrema(params.regime))?;
    let n = n as f64;
    Ok(((2.0 * n - 1.0) * PI / (2.0 * f), n * PI / f))
}

/// Generator Δ of `dξ/dz = Δ ξ` over the interleaved individual quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator(DMatrix<f64>);

impl Generator {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.nrows() / 2
    }
}

/// Builds Δ: diagonal blocks `[[0, 2η], [2η, 0]]` (degenerate parametric
/// gain) and, for each coupled pair, off-diagonal blocks
/// `C_j [[0, −1], [1, 0]]` (evanescent coupling, `dA_j/dz = i C A_{j±1}`).
pub fn assemble_generator(config: &ArrayConfig) -> Generator {
    let n = config.n();
    let eta = config.eta();
    let mut delta = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        delta[(2 * j, 2 * j + 1)] = 2.0 * eta;
        delta[(2 * j + 1, 2 * j)] = 2.0 * eta;
    }
    for j in 0..n.saturating_sub(1) {
        let c = config.coupling(j);
        for (p, q) in [(j, j + 1), (j + 1, j)] {
            delta[(2 * p, 2 * q + 1)] = -c;
            delta[(2 * p + 1, 2 * q)] = c;
        }
    }
    Generator(delta)
}

/// Oracle propagator `exp(Δ z)` by Padé scaling and squaring.
pub fn propagate_numeric(gen: &Generator, z: f64) -> Result<DMatrix<f64>> {
    check_distance(z)?;
    if z == 0.0 {
        return Ok(DMatrix::identity(gen.0.nrows(), gen.0.ncols()));
    }
    let scaled = gen.as_matrix() * z;
    if scaled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("generator has non-finite entries".into()));
    }
    let s = scaled.exp();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "matrix exponential overflowed at z = {z} mm (norm of Δz = {:.3e})",
            gen.as_matrix().norm() * z
        )));
    }
    Ok(s)
}

/// Per-supermode squeezing parameters for every row of `basis`.
pub fn supermode_params(config: &ArrayConfig, basis: &SupermodeBasis) -> Result<Vec<SqueezingParams>> {
    basis
        .eigenvalues()
        .iter()
        .map(|&lambda| squeezing_params(lambda, config.eta()))
        .collect()
}

/// Block-diagonal covariance `diag{V_1(z), …, V_N(z)}` in the supermode basis.
pub fn covariance_supermode(config: &ArrayConfig, basis: &SupermodeBasis, z: f64) -> Result<CovarianceMatrix> {
    check_basis_dim(config, basis)?;
    let n = config.n();
    let mut v = DMatrix::zeros(2 * n, 2 * n);
    for (k, params) in supermode_params(config, basis)?.iter().enumerate() {
        let block = supermode_covariance(params, z)?;
        v.fixed_view_mut::<2, 2>(2 * k, 2 * k).copy_from(&block);
    }
    CovarianceMatrix::new(v, Basis::Supermode)
}

/// Covariance in the individual-waveguide basis obtained from the analytic
/// supermode solution, `V_ij = Σ_k M_ki M_kj V_S,k` blockwise.
pub fn covariance_individual(config: &ArrayConfig, basis: &SupermodeBasis, z: f64) -> Result<CovarianceMatrix> {
    let vs = covariance_supermode(config, basis, z)?;
    if z == 0.0 {
        // The vacuum is basis independent; skip the round-off of the transform.
        return Ok(CovarianceMatrix::vacuum(config.n(), Basis::Individual));
    }
    change_basis(&vs, basis, Direction::ToIndividual)
}

/// Analytic transfer matrix in the individual basis, `(M ⊗ I₂)ᵀ diag{S_k} (M ⊗ I₂)`.
pub fn symplectic_individual(config: &ArrayConfig, basis: &SupermodeBasis, z: f64) -> Result<DMatrix<f64>> {
    check_basis_dim(config, basis)?;
    let n = config.n();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for (k, params) in supermode_params(config, basis)?.iter().enumerate() {
        let block = supermode_symplectic(params, z)?;
        s.fixed_view_mut::<2, 2>(2 * k, 2 * k).copy_from(block.as_matrix());
    }
    let t = crate::gaussian::supermode_transform(basis);
    Ok(t.transpose() * s * t)
}

/// Standard symplectic form in interleaved ordering, `⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        omega[(2 * j, 2 * j + 1)] = 1.0;
        omega[(2 * j + 1, 2 * j)] = -1.0;
    }
    omega
}

/// Largest entry of `Sᵀ Ω S − Ω`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let omega = symplectic_form(s.nrows() / 2);
    (s.transpose() * &omega * s - omega).amax()
}

/// Convenience wrapper building the coupling matrix and its supermodes.
pub fn basis_for(config: &ArrayConfig) -> Result<SupermodeBasis> {
    crate::lattice::supermode_decomposition(&build_coupling_matrix(config))
}

fn check_basis_dim(config: &ArrayConfig, basis: &SupermodeBasis) -> Result<()> {
    if basis.dim() != config.n() {
        return Err(Error::DimensionMismatch {
            expected: config.n(),
            found: basis.dim(),
        });
    }
    Ok(())
}
