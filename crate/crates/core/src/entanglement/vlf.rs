//! Van Loock–Furusawa inequalities and exact gain optimization.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::duan::{duan_nullifiers, EntanglementGraph};
use super::{
    asymptotic_vlf, check_pair_count, inequality_pairs, large_coupling_covariance, lo_profile, mode_labels, ModeLabel,
    Variant,
};
use crate::error::{Error, Result};
use crate::gaussian::{check_physicality, variance_of_combination, Basis, CovarianceMatrix, MeasurementProfile};
use crate::lattice::{zero_supermode_index, ArrayConfig};
use crate::propagation::{basis_for, covariance_individual, supermode_params, Regime};

/// Separability bound: all inequalities below this certify full
/// inseparability.
pub const VLF_THRESHOLD: f64 = 4.0;

/// Tolerance on the reduced-state determinant for a pure-state verdict.
const PURITY_TOL: f64 = 1e-6;

/// Coefficients of `x_j(θ)` over the interleaved quadratures of `n` modes.
pub(crate) fn x_theta(n: usize, j: usize, theta: f64) -> Vec<f64> {
    let mut c = vec![0.0; 2 * n];
    let (s, co) = theta.sin_cos();
    c[2 * j] = co;
    c[2 * j + 1] = s;
    c
}

/// `y_j(θ) = x_j(θ + π/2)`.
pub(crate) fn y_theta(n: usize, j: usize, theta: f64) -> Vec<f64> {
    x_theta(n, j, theta + FRAC_PI_2)
}

fn axpy(acc: &mut [f64], alpha: f64, v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += alpha * b;
    }
}

fn check_pair(v: &CovarianceMatrix, a: usize, b: usize) -> Result<()> {
    let n = v.modes();
    for idx in [a, b] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    if a == b {
        return Err(Error::InvalidArgument("VLF pair needs two distinct modes".into()));
    }
    Ok(())
}

fn check_profile(v: &CovarianceMatrix, theta_len: usize) -> Result<()> {
    v.expect_basis(Basis::Individual)?;
    if theta_len != v.modes() {
        return Err(Error::DimensionMismatch {
            expected: v.modes(),
            found: theta_len,
        });
    }
    Ok(())
}

/// `V[x_a(θ_a) − x_b(θ_b)] + V[y_a(θ_a) + y_b(θ_b) + Σ_m G_m y_m(θ_m)]`;
/// gains of `a` and `b` are ignored.
pub fn vlf_pair(v: &CovarianceMatrix, a: usize, b: usize, profile: &MeasurementProfile) -> Result<f64> {
    check_profile(v, profile.modes())?;
    check_pair(v, a, b)?;
    let n = v.modes();
    let th = &profile.theta;
    let mut diff = x_theta(n, a, th[a]);
    axpy(&mut diff, -1.0, &x_theta(n, b, th[b]));
    let mut sum = y_theta(n, a, th[a]);
    axpy(&mut sum, 1.0, &y_theta(n, b, th[b]));
    for (m, &g) in profile.gains.iter().enumerate() {
        if m != a && m != b && g != 0.0 {
            axpy(&mut sum, g, &y_theta(n, m, th[m]));
        }
    }
    Ok(variance_of_combination(v, &diff)? + variance_of_combination(v, &sum)?)
}

/// Inequality `j` (0-based) of the chain, on modes `j` and `j + 1`.
pub fn vlf_value(v: &CovarianceMatrix, j: usize, profile: &MeasurementProfile) -> Result<f64> {
    let len = v.modes().saturating_sub(1);
    if j >= len {
        return Err(Error::IndexOutOfRange { index: j, len });
    }
    vlf_pair(v, j, j + 1, profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainOptimum {
    /// One gain per mode; the two modes of the pair carry zero.
    pub gains: Vec<f64>,
    pub value: f64,
    /// Value with all gains zero.
    pub unoptimized: f64,
    /// The normal matrix was singular and the minimum-norm solution was used.
    pub singular: bool,
}

/// Minimises inequality `j` over the auxiliary gains.
pub fn optimize_gains(v: &CovarianceMatrix, j: usize, theta: &[f64]) -> Result<GainOptimum> {
    let len = v.modes().saturating_sub(1);
    if j >= len {
        return Err(Error::IndexOutOfRange { index: j, len });
    }
    optimize_pair_gains(v, j, j + 1, theta)
}

/// The inequality is quadratic in the gains, `c + 2gᵀb + gᵀAg` with
/// `A_mn = V[y_m(θ_m), y_n(θ_n)]` and `b_m = V[y_m(θ_m), y_a(θ_a) + y_b(θ_b)]`,
/// so the minimiser solves `A g = −b`.
pub fn optimize_pair_gains(v: &CovarianceMatrix, a: usize, b: usize, theta: &[f64]) -> Result<GainOptimum> {
    check_profile(v, theta.len())?;
    check_pair(v, a, b)?;
    let n = v.modes();
    let zero_profile = MeasurementProfile::phases_only(theta.to_vec())?;
    let unoptimized = vlf_pair(v, a, b, &zero_profile)?;

    let aux: Vec<usize> = (0..n).filter(|&m| m != a && m != b).collect();
    if aux.is_empty() {
        return Ok(GainOptimum {
            gains: vec![0.0; n],
            value: unoptimized,
            unoptimized,
            singular: false,
        });
    }

    let w = DMatrix::from_fn(aux.len(), 2 * n, |r, c| y_theta(n, aux[r], theta[aux[r]])[c]);
    let mut sum = y_theta(n, a, theta[a]);
    axpy(&mut sum, 1.0, &y_theta(n, b, theta[b]));
    let sum = DVector::from_vec(sum);

    let wv = &w * v.entries();
    let normal = &wv * w.transpose();
    let rhs = -(&wv * sum);

    // A pivot below this is treated as zero.
    let pivot_floor = (1e-12 * v.entries().amax()).sqrt();
    let chol = normal
        .clone()
        .cholesky()
        .filter(|c| c.l_dirty().diagonal().iter().all(|&d| d > pivot_floor));
    let (solution, singular) = match chol {
        Some(chol) => (chol.solve(&rhs), false),
        None => {
            let svd = normal.svd(true, true);
            let eps = 1e-12 * v.entries().amax();
            let sol = svd
                .solve(&rhs, eps)
                .map_err(|e| Error::Numerical(format!("gain normal equations: {e}")))?;
            (sol, true)
        }
    };

    let mut gains = vec![0.0; n];
    for (k, &m) in aux.iter().enumerate() {
        gains[m] = solution[k];
    }
    let profile = MeasurementProfile::new(theta.to_vec(), gains.clone())?;
    let value = vlf_pair(v, a, b, &profile)?.min(unoptimized);
    Ok(GainOptimum {
        gains,
        value,
        unoptimized,
        singular,
    })
}

/// Result of scanning the LO phase of the second mode of one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScanEntry {
    pub pair: [usize; 2],
    pub best_phase: f64,
    pub best_value: f64,
    pub profile_value: f64,
}

/// For every inequality of `variant`, scans the phase of the pair's second
/// mode over `[−π, π)` with the given step (other phases from the default
/// profile) and reports the best optimized value found.
pub fn scan_relative_phases(v: &CovarianceMatrix, variant: Variant, step: f64) -> Result<Vec<PhaseScanEntry>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "phase step must be positive, got {step}"
        )));
    }
    let l = v.modes();
    let base = lo_profile(l, variant)?;
    let steps = (2.0 * PI / step).round().max(1.0) as usize;
    inequality_pairs(l, variant)
        .into_iter()
        .map(|(a, b)| {
            let profile_value = optimize_pair_gains(v, a, b, &base)?.value;
            let mut theta = base.clone();
            let mut best = (base[b], profile_value);
            for k in 0..steps {
                theta[b] = -PI + k as f64 * step;
                let value = optimize_pair_gains(v, a, b, &theta)?.value;
                if value < best.1 {
                    best = (theta[b], value);
                }
            }
            Ok(PhaseScanEntry {
                pair: [a + 1, b + 1],
                best_phase: best.0,
                best_value: best.1,
                profile_value,
            })
        })
        .collect()
}

/// Full set of VLF inequalities for one propagation distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlfReport {
    /// `None` for the large-coupling limit.
    pub config: Option<ArrayConfig>,
    pub z: f64,
    pub variant: Variant,
    pub optimized: bool,
    pub modes: Vec<ModeLabel>,
    pub theta: Vec<f64>,
    /// Labels (1-based) of the two modes of each inequality.
    pub pairs: Vec<[usize; 2]>,
    pub values: Vec<f64>,
    pub unoptimized: Vec<f64>,
    pub gains: Vec<Vec<f64>>,
    pub singular: Vec<bool>,
    /// Every reported inequality is below [`VLF_THRESHOLD`].
    pub fully_inseparable: bool,
    /// `fully_inseparable` on a pure reduced state.
    pub genuine_multipartite: bool,
    /// Determinant of the reduced covariance over the measured modes.
    pub reduced_purity: f64,
    /// Large-coupling closed form matching `optimized`.
    pub asymptote: f64,
    /// Some supermode is in the hyperbolic regime (`0 < |λ| < 2η`).
    pub analytic_continuation: bool,
    pub graph: EntanglementGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_scan: Option<Vec<PhaseScanEntry>>,
}

impl VlfReport {
    pub fn max_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }
}

/// Evaluates every inequality of `variant` on a reduced covariance over the
/// `l` zero-supermode modes.
pub fn evaluate_vlf(v: &CovarianceMatrix, eta: f64, z: f64, variant: Variant, optimized: bool) -> Result<VlfReport> {
    let l = v.modes();
    check_pair_count(l)?;
    let theta = lo_profile(l, variant)?;
    let pairs = inequality_pairs(l, variant);

    let mut values = Vec::with_capacity(pairs.len());
    let mut unoptimized = Vec::with_capacity(pairs.len());
    let mut gains = Vec::with_capacity(pairs.len());
    let mut singular = Vec::with_capacity(pairs.len());
    for &(a, b) in &pairs {
        let opt = if optimized {
            optimize_pair_gains(v, a, b, &theta)?
        } else {
            let value = vlf_pair(v, a, b, &MeasurementProfile::phases_only(theta.clone())?)?;
            GainOptimum {
                gains: vec![0.0; l],
                value,
                unoptimized: value,
                singular: false,
            }
        };
        values.push(opt.value);
        unoptimized.push(opt.unoptimized);
        gains.push(opt.gains);
        singular.push(opt.singular);
    }

    let fully_inseparable = !values.is_empty() && values.iter().all(|&x| x < VLF_THRESHOLD);
    let reduced_purity = check_physicality(v).purity;
    Ok(VlfReport {
        config: None,
        z,
        variant,
        optimized,
        modes: mode_labels(l),
        theta,
        pairs: pairs.iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
        values,
        unoptimized,
        gains,
        singular,
        fully_inseparable,
        genuine_multipartite: fully_inseparable && (reduced_purity - 1.0).abs() <= PURITY_TOL,
        reduced_purity,
        asymptote: asymptotic_vlf(l, eta, z, optimized)?,
        analytic_continuation: false,
        graph: duan_nullifiers(v, variant)?,
        phase_scan: None,
    })
}

/// Propagates `config` to `z`, keeps the odd waveguides and evaluates the
/// VLF inequalities of `variant`.
pub fn vlf_suite(config: &ArrayConfig, z: f64, variant: Variant, optimized: bool) -> Result<VlfReport> {
    let l = zero_supermode_index(config.n())?;
    check_pair_count(l)?;
    let basis = basis_for(config)?;
    let analytic_continuation = supermode_params(config, &basis)?
        .iter()
        .any(|p| p.regime == Regime::Hyperbolic);
    let v = covariance_individual(config, &basis, z)?;
    let odd: Vec<usize> = (0..config.n()).step_by(2).collect();
    let reduced = v.submatrix(&odd)?;
    let mut report = evaluate_vlf(&reduced, config.eta(), z, variant, optimized)?;
    report.config = Some(config.clone());
    report.analytic_continuation = analytic_continuation;
    Ok(report)
}

/// VLF inequalities on the large-coupling state of `l` modes.
pub fn large_coupling_vlf(l: usize, eta: f64, z: f64, variant: Variant, optimized: bool) -> Result<VlfReport> {
    let v = large_coupling_covariance(l, eta, z)?;
    evaluate_vlf(&v, eta, z, variant, optimized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn profile_a(l: usize) -> MeasurementProfile {
        MeasurementProfile::phases_only(lo_profile(l, Variant::A).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_sits_on_threshold() {
        let v = CovarianceMatrix::vacuum(4, Basis::Individual);
        let p = MeasurementProfile::phases_only(vec![0.0; 4]).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(vlf_value(&v, j, &p).unwrap(), 4.0, epsilon = 1e-15);
        }
        assert!(vlf_value(&v, 3, &p).is_err());
    }

    #[test]
    fn degenerate_violation_in_large_coupling_limit() {
        let (eta, z) = (0.025, 13.0);
        for l in 2..9 {
            let v = large_coupling_covariance(l, eta, z).unwrap();
            let want = 4.0 * ((l as f64 - 1.0) + (-4.0 * eta * z).exp()) / l as f64;
            for j in 0..l - 1 {
                assert_abs_diff_eq!(vlf_value(&v, j, &profile_a(l)).unwrap(), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mismatched_phase_sign_is_not_violated() {
        let (l, eta) = (3, 0.025);
        // Modes 1 and 2 have opposite zero-supermode amplitudes; θ₂ = +π/2
        // picks the anti-squeezed combination.
        let theta = vec![0.0, FRAC_PI_2, 0.0];
        let p = MeasurementProfile::phases_only(theta).unwrap();
        let mut previous = 4.0;
        for z in [5.0, 10.0, 20.0, 40.0] {
            let v = large_coupling_covariance(l, eta, z).unwrap();
            let value = vlf_value(&v, 0, &p).unwrap();
            let m2 = 1.0 / l as f64;
            let want = 4.0 - 4.0 * m2 + 4.0 * m2 * (4.0 * eta * z).exp();
            assert_abs_diff_eq!(value, want, epsilon = 1e-9 * want);
            assert!(value > previous);
            previous = value;
        }
    }

    #[test]
    fn optimizer_never_worse_than_zero_gains() {
        let v = large_coupling_covariance(6, 0.025, 20.0).unwrap();
        let theta = lo_profile(6, Variant::A).unwrap();
        for j in 0..5 {
            let opt = optimize_gains(&v, j, &theta).unwrap();
            assert!(opt.value <= opt.unoptimized);
            assert_eq!(opt.gains[j], 0.0);
            assert_eq!(opt.gains[j + 1], 0.0);
            assert!(!opt.singular);
        }
    }

    #[test]
    fn two_modes_have_nothing_to_optimize() {
        let v = large_coupling_covariance(2, 0.025, 20.0).unwrap();
        let opt = optimize_gains(&v, 0, &lo_profile(2, Variant::A).unwrap()).unwrap();
        assert_eq!(opt.value, opt.unoptimized);
    }

    #[test]
    fn even_mode_counts_match_symmetric_gain_closed_form() {
        let eta = 0.025;
        for l in [4, 6, 8] {
            for z in [2.0, 10.0, 40.0] {
                let v = large_coupling_covariance(l, eta, z).unwrap();
                let theta = lo_profile(l, Variant::A).unwrap();
                let want = asymptotic_vlf(l, eta, z, true).unwrap();
                for j in 0..l - 1 {
                    let got = optimize_gains(&v, j, &theta).unwrap().value;
                    assert_abs_diff_eq!(got, want, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn odd_mode_counts_beat_symmetric_gain_closed_form() {
        // The closed form ties the odd and even gain sums together; the exact
        // optimum is lower at finite z and meets it only as z → ∞.
        let eta = 0.025;
        for l in [3, 5, 7] {
            let v = large_coupling_covariance(l, eta, 10.0).unwrap();
            let theta = lo_profile(l, Variant::A).unwrap();
            let closed = asymptotic_vlf(l, eta, 10.0, true).unwrap();
            let got = optimize_gains(&v, 0, &theta).unwrap().value;
            assert!(got < closed - 1e-4, "l = {l}: {got} vs {closed}");
        }
    }

    #[test]
    fn singular_normal_matrix_uses_minimum_norm() {
        // Third mode has zero variance in y: the normal matrix is singular.
        let mut m = DMatrix::identity(6, 6);
        m[(5, 5)] = 0.0;
        let v = CovarianceMatrix::new(m, Basis::Individual).unwrap();
        let opt = optimize_gains(&v, 0, &[0.0, 0.0, 0.0]).unwrap();
        assert!(opt.singular);
        assert_eq!(opt.gains, vec![0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(opt.value, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn suite_at_origin_sits_on_threshold() {
        let config = ArrayConfig::homogeneous(7, 0.70, 0.025).unwrap();
        let report = vlf_suite(&config, 0.0, Variant::A, true).unwrap();
        assert_eq!(report.values.len(), 3);
        for v in &report.values {
            assert_abs_diff_eq!(*v, 4.0, epsilon = 1e-12);
        }
        assert!(!report.fully_inseparable);
        assert!(report.graph.edges.is_empty());
    }

    #[test]
    fn suite_requires_odd_array() {
        let config = ArrayConfig::homogeneous(4, 0.70, 0.025).unwrap();
        assert_eq!(
            vlf_suite(&config, 1.0, Variant::A, true).unwrap_err(),
            Error::NoZeroSupermode(4)
        );
        let single = ArrayConfig::homogeneous(1, 0.70, 0.025).unwrap();
        assert!(vlf_suite(&single, 1.0, Variant::A, true).is_err());
    }

    #[test]
    fn three_waveguides_violate_below_threshold() {
        let config = ArrayConfig::homogeneous(3, 0.70, 0.025).unwrap();
        for z in [1.0, 5.0, 20.0, 45.0, 60.0] {
            let report = vlf_suite(&config, z, Variant::A, true).unwrap();
            assert_eq!(report.values.len(), 1);
            assert!(report.values[0] < 4.0, "z = {z}: {}", report.values[0]);
            assert!(report.fully_inseparable);
            // Even waveguide traced out: the reduced state is mixed.
            assert!(!report.genuine_multipartite);
        }
    }

    #[test]
    fn large_coupling_suite_reaches_closed_form() {
        let config = ArrayConfig::homogeneous(9, 1e3, 0.025).unwrap();
        let report = vlf_suite(&config, 30.0, Variant::A, true).unwrap();
        let lc = large_coupling_vlf(5, 0.025, 30.0, Variant::A, true).unwrap();
        for (got, want) in report.values.iter().zip(&lc.values) {
            assert_abs_diff_eq!(*got, *want, epsilon = 1e-3);
        }
    }

    #[test]
    fn large_coupling_state_is_pure() {
        let report = large_coupling_vlf(5, 0.025, 20.0, Variant::A, true).unwrap();
        assert!(report.fully_inseparable);
        assert!(report.genuine_multipartite);
    }

    #[test]
    fn variant_b_inequalities_are_degenerate() {
        let (l, eta, z) = (6, 0.025, 15.0);
        let report = large_coupling_vlf(l, eta, z, Variant::B, false).unwrap();
        assert_eq!(report.pairs, vec![[1, 3], [3, 5], [2, 4], [4, 6]]);
        let want = asymptotic_vlf(l, eta, z, false).unwrap();
        for v in &report.values {
            assert_abs_diff_eq!(*v, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn phase_scan_recovers_profile_phase() {
        let v = large_coupling_covariance(3, 0.025, 12.0).unwrap();
        let scan = scan_relative_phases(&v, Variant::A, PI / 180.0).unwrap();
        assert_eq!(scan.len(), 2);
        for entry in scan {
            assert!(entry.best_value <= entry.profile_value);
            assert!(entry.best_value < 4.0);
        }
        assert!(scan_relative_phases(&v, Variant::A, 0.0).is_err());
    }

    #[test]
    fn report_json_round_trip() {
        let config = ArrayConfig::homogeneous(5, 0.70, 0.025).unwrap();
        let report = vlf_suite(&config, 12.0, Variant::A, true).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: VlfReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }
}
