//! Complex-weighted adjacency matrix `Z = V + iU` of the large-coupling
//! state over the zero-supermode modes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::entanglement::zero_supermode_odd_coefficients;
use crate::error::{Error, Result};

/// Grid step of [`local_phase_search`] when none is given.
pub const DEFAULT_PHASE_STEP: f64 = PI / 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyPair {
    #[serde(rename = "Vmat")]
    pub v: DMatrix<f64>,
    #[serde(rename = "Umat")]
    pub u: DMatrix<f64>,
    pub l: usize,
}

/// `(−1)^{i+j}`.
fn checkerboard(l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(l, l, |i, j| if (i + j) % 2 == 0 { 1.0 } else { -1.0 })
}

fn check_inputs(l: usize, eta: f64, z: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be non-negative, got {eta}")));
    }
    if z.is_nan() || z < 0.0 {
        return Err(Error::NegativeDistance(z));
    }
    Ok(())
}

/// `V = tanh(4ηz) K/l` and `U = sech(4ηz) K/l + (I − K/l)`, with `K` the
/// checkerboard matrix.
pub fn adjacency_matrices(l: usize, eta: f64, z: f64) -> Result<AdjacencyPair> {
    check_inputs(l, eta, z)?;
    let r = 4.0 * eta * z;
    let k = checkerboard(l) / l as f64;
    let sech = if r.is_infinite() { 0.0 } else { 1.0 / r.cosh() };
    Ok(AdjacencyPair {
        v: &k * r.tanh(),
        u: &k * sech + (DMatrix::identity(l, l) - &k),
        l,
    })
}

/// Infinite-squeezing limit of `V`.
pub fn v_infinity(l: usize) -> Result<DMatrix<f64>> {
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    Ok(checkerboard(l) / l as f64)
}

/// `tr U`; zero for an ideal cluster graph.
pub fn approximation_error(pair: &AdjacencyPair) -> f64 {
    pair.u.trace()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterVerdict {
    pub l: usize,
    pub eta: f64,
    pub z: Vec<f64>,
    pub trace_u: Vec<f64>,
    /// `l − 1`.
    pub limit: f64,
    /// The limit stays at or above one: the state does not approach a
    /// cluster state.
    pub not_cluster: bool,
}

pub fn cluster_limit_verdict(l: usize, eta: f64, z_grid: &[f64]) -> Result<ClusterVerdict> {
    if z_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("z grid must be strictly increasing".into()));
    }
    let trace_u = z_grid
        .iter()
        .map(|&z| adjacency_matrices(l, eta, z).map(|p| approximation_error(&p)))
        .collect::<Result<Vec<_>>>()?;
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    let limit = (l - 1) as f64;
    Ok(ClusterVerdict {
        l,
        eta,
        z: z_grid.to_vec(),
        trace_u,
        limit,
        not_cluster: limit >= 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSearch {
    pub step: f64,
    pub evaluated: usize,
    pub min_trace_u: f64,
    pub best_phases: Vec<f64>,
}

/// Applies every combination of local phases on a grid over `[0, π)` to the
/// large-coupling state and reports the smallest `tr U`, where
/// `U = (σ_xx)⁻¹` for the pure rotated state `σ = (RS)(RS)ᵀ`.
///
/// `tr U` is taken as `Σ 1/s_i²` over the singular values of the x rows of
/// `RS`, which stays accurate where `σ_xx` itself is numerically singular.
pub fn local_phase_search(l: usize, eta: f64, z: f64, step: f64) -> Result<PhaseSearch> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "phase step must be positive, got {step}"
        )));
    }
    check_inputs(l, eta, z)?;
    let per_mode = (PI / step).ceil() as usize;
    let total = per_mode
        .checked_pow(l as u32)
        .filter(|&t| t <= 50_000_000)
        .ok_or_else(|| Error::InvalidArgument(format!("phase grid too large for l = {l}")))?;

    let s = large_coupling_symplectic(l, eta, z);
    let mut best = PhaseSearch {
        step,
        evaluated: 0,
        min_trace_u: f64::INFINITY,
        best_phases: vec![0.0; l],
    };
    let mut phases = vec![0.0; l];
    for index in 0..total {
        let mut rest = index;
        for p in phases.iter_mut() {
            *p = (rest % per_mode) as f64 * step;
            rest /= per_mode;
        }
        // x row of mode i after rotation: cos θ_i · S_x + sin θ_i · S_y.
        let a = DMatrix::from_fn(l, 2 * l, |i, c| {
            let (sn, cs) = phases[i].sin_cos();
            cs * s[(2 * i, c)] + sn * s[(2 * i + 1, c)]
        });
        let sv = a.singular_values();
        if sv.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::Numerical("singular x block in phase search".into()));
        }
        let trace: f64 = sv.iter().map(|x| 1.0 / (x * x)).sum();
        best.evaluated += 1;
        if trace < best.min_trace_u {
            best.min_trace_u = trace;
            best.best_phases.copy_from_slice(&phases);
        }
    }
    Ok(best)
}

/// `S = I + M Mᵀ ⊗ (s − I)`, with `s` the zero-supermode block, so that
/// `S Sᵀ` is the large-coupling covariance.
fn large_coupling_symplectic(l: usize, eta: f64, z: f64) -> DMatrix<f64> {
    let m = zero_supermode_odd_coefficients(l);
    let (c, sh) = ((2.0 * eta * z).cosh(), (2.0 * eta * z).sinh());
    let block = [[c - 1.0, sh], [sh, c - 1.0]];
    DMatrix::from_fn(2 * l, 2 * l, |r, col| {
        let id = if r == col { 1.0 } else { 0.0 };
        id + m[r / 2] * m[col / 2] * block[r % 2][col % 2]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn origin_is_vacuum_graph() {
        let p = adjacency_matrices(4, 0.025, 0.0).unwrap();
        assert_eq!(p.v, DMatrix::zeros(4, 4));
        assert_abs_diff_eq!(p.u, DMatrix::identity(4, 4), epsilon = 1e-15);
        assert_abs_diff_eq!(approximation_error(&p), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn printed_pattern() {
        // 4ηz = 10 with η = 0.025.
        let p = adjacency_matrices(3, 0.025, 100.0).unwrap();
        let t = 10f64.tanh() / 3.0;
        assert_abs_diff_eq!(p.v[(0, 0)], t, epsilon = 1e-15);
        assert_abs_diff_eq!(p.v[(0, 1)], -t, epsilon = 1e-15);
        assert_abs_diff_eq!(p.v[(0, 2)], t, epsilon = 1e-15);
        let s = 1.0 / 10f64.cosh();
        assert_abs_diff_eq!(p.u[(0, 0)], s / 3.0 + 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.u[(0, 1)], -s / 3.0 + 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn single_mode() {
        let p = adjacency_matrices(1, 0.1, 3.0).unwrap();
        assert_abs_diff_eq!(p.v[(0, 0)], 1.2f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.u[(0, 0)], 1.0 / 1.2f64.cosh(), epsilon = 1e-15);
        assert_eq!(v_infinity(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn v_infinity_limit() {
        assert_eq!(
            v_infinity(2).unwrap(),
            DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5])
        );
        for l in 1..8 {
            let p = adjacency_matrices(l, 0.025, 200.0).unwrap();
            assert_abs_diff_eq!(p.v, v_infinity(l).unwrap(), epsilon = 1e-8);
        }
        assert!(v_infinity(0).is_err());
    }

    #[test]
    fn trace_error_closed_form() {
        let p = adjacency_matrices(3, 0.025, 150.0).unwrap();
        assert_abs_diff_eq!(approximation_error(&p), 2.0 + 1.0 / 15f64.cosh(), epsilon = 1e-14);
    }

    #[test]
    fn verdicts() {
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 10.0).collect();
        let v3 = cluster_limit_verdict(3, 0.025, &grid).unwrap();
        assert_eq!(v3.limit, 2.0);
        assert!(v3.not_cluster);
        assert!(v3.trace_u.windows(2).all(|w| w[1] <= w[0]));
        let v1 = cluster_limit_verdict(1, 0.025, &grid).unwrap();
        assert_eq!(v1.limit, 0.0);
        assert!(!v1.not_cluster);
        assert!(cluster_limit_verdict(3, 0.025, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn u_is_positive_semidefinite() {
        for l in 1..7 {
            let p = adjacency_matrices(l, 0.025, 40.0).unwrap();
            let min = p.u.clone().symmetric_eigen().eigenvalues.min();
            assert!(min >= -1e-12);
        }
    }

    #[test]
    fn symplectic_reproduces_covariance() {
        let s = large_coupling_symplectic(4, 0.025, 30.0);
        let v = crate::entanglement::large_coupling_covariance(4, 0.025, 30.0).unwrap();
        assert_abs_diff_eq!(&s * s.transpose(), v.entries().clone(), epsilon = 1e-12);
    }

    #[test]
    fn unrotated_state_reproduces_trace() {
        // Phase 0 everywhere is on the grid, so the search can only improve on it.
        let s = local_phase_search(2, 0.025, 50.0, DEFAULT_PHASE_STEP).unwrap();
        let base = approximation_error(&adjacency_matrices(2, 0.025, 50.0).unwrap());
        assert!(s.min_trace_u <= base + 1e-12);
        assert!(s.min_trace_u >= 1.0);
        assert_eq!(s.evaluated, 144);
    }
}
