//! Multipartite entanglement among the waveguides carrying the zero
//! supermode.
//!
//! For an odd array of `N` waveguides the zero supermode lives on the
//! `l = (N + 1)/2` odd waveguides. Waveguide `2j − 1` is given the label `j`
//! (`j = 1..=l`); every report carries both numberings. Inside this module
//! mode indices are 0-based positions in the reduced state, i.e. `label − 1`.

mod duan;
mod vlf;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{Basis, CovarianceMatrix};

pub use duan::{
    duan_nullifiers, epr_variances, nullifier_table, EntanglementGraph, EprEdge, PairVariances, NULLIFIER_MARGIN,
    PAIR_SHOT_NOISE,
};
pub use vlf::{
    evaluate_vlf, large_coupling_vlf, optimize_gains, optimize_pair_gains, scan_relative_phases, vlf_pair, vlf_suite,
    vlf_value, GainOptimum, PhaseScanEntry, VlfReport, VLF_THRESHOLD,
};

/// Local-oscillator configuration selecting which multimode state is
/// measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Phases `(0, −π/2, 0, −π/2, …)`: all `l` modes fully inseparable.
    A,
    /// Phases alternating `(0, π/2, …)` inside each of the two sets of odd
    /// and even labels: two decoupled multipartite states.
    B,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A => "a",
            Variant::B => "b",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Variant::A),
            "b" => Ok(Variant::B),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant {other:?}, expected a or b"
            ))),
        }
    }
}

/// Label `j` (1-based) together with the waveguide `2j − 1` it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeLabel {
    pub label: usize,
    pub waveguide: usize,
}

impl ModeLabel {
    pub fn from_index(index: usize) -> Self {
        ModeLabel {
            label: index + 1,
            waveguide: 2 * index + 1,
        }
    }
}

pub fn mode_labels(l: usize) -> Vec<ModeLabel> {
    (0..l).map(ModeLabel::from_index).collect()
}

fn check_pair_count(l: usize) -> Result<()> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least two zero-supermode modes are needed, got l = {l}"
        )));
    }
    Ok(())
}

/// LO phases over the `l` labels.
///
/// Variant B applies the alternating profile `(0, π/2, 0, …)` within each
/// parity set, which over consecutive labels reads `(0, 0, π/2, π/2, 0, 0, …)`.
pub fn lo_profile(l: usize, variant: Variant) -> Result<Vec<f64>> {
    check_pair_count(l)?;
    let theta = (0..l)
        .map(|i| match variant {
            Variant::A if i % 2 == 1 => -FRAC_PI_2,
            Variant::A => 0.0,
            Variant::B if (i / 2) % 2 == 1 => FRAC_PI_2,
            Variant::B => 0.0,
        })
        .collect();
    Ok(theta)
}

/// Groups of mode indices expected to be mutually entangled.
pub fn entangled_sets(l: usize, variant: Variant) -> Vec<Vec<usize>> {
    match variant {
        Variant::A => vec![(0..l).collect()],
        Variant::B => vec![(0..l).step_by(2).collect(), (1..l).step_by(2).collect()],
    }
}

/// Mode pairs whose VLF inequalities are evaluated: consecutive labels for
/// variant A, consecutive members of each parity set for variant B.
pub fn inequality_pairs(l: usize, variant: Variant) -> Vec<(usize, usize)> {
    entangled_sets(l, variant)
        .iter()
        .flat_map(|set| set.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>())
        .collect()
}

/// Zero-supermode amplitudes on the odd waveguides of a homogeneous array,
/// `(−1)^{j+1}/√l` for label `j`.
pub fn zero_supermode_odd_coefficients(l: usize) -> Vec<f64> {
    let norm = 1.0 / (l as f64).sqrt();
    (0..l).map(|i| if i % 2 == 0 { norm } else { -norm }).collect()
}

/// Reduced covariance over the `l` odd waveguides when `C0 → ∞`:
/// `V(x_i, x_j) = V(y_i, y_j) = δ_ij + 2 M_i M_j sinh²(2ηz)` and
/// `V(x_i, y_j) = M_i M_j sinh(4ηz)`.
pub fn large_coupling_covariance(l: usize, eta: f64, z: f64) -> Result<CovarianceMatrix> {
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    check_rate_and_distance(eta, z)?;
    let m = zero_supermode_odd_coefficients(l);
    let excess = 2.0 * (2.0 * eta * z).sinh().powi(2);
    let cross = (4.0 * eta * z).sinh();
    let entries = DMatrix::from_fn(2 * l, 2 * l, |r, c| {
        let (i, j) = (r / 2, c / 2);
        let mm = m[i] * m[j];
        let diag = if r == c { 1.0 } else { 0.0 };
        if r % 2 == c % 2 {
            diag + mm * excess
        } else {
            mm * cross
        }
    });
    CovarianceMatrix::new(entries, Basis::Individual)
}

/// Closed-form large-coupling VLF value for `l` modes.
///
/// Unoptimized: `4[(l − 1) + e^{−4ηz}]/l`. Optimized: the symmetric-gain
/// optimum, which depends on the parity of `l`. `z` may be `f64::INFINITY`.
pub fn asymptotic_vlf(l: usize, eta: f64, z: f64, optimized: bool) -> Result<f64> {
    check_pair_count(l)?;
    check_rate_and_distance(eta, z)?;
    let lf = l as f64;
    let decay = if eta == 0.0 { 1.0 } else { (-4.0 * eta * z).exp() };
    let base = 4.0 * ((lf - 1.0) + decay) / lf;
    if !optimized {
        return Ok(base);
    }
    let d = 1.0 - decay;
    let correction = if l % 2 == 1 {
        let q = lf * lf - 4.0 * lf + 3.0;
        2.0 * q / lf * d * d / (2.0 * lf * (lf - 2.0) - q * d)
    } else {
        2.0 * (lf - 2.0) / lf * d * d / (2.0 * lf - (lf - 2.0) * d)
    };
    Ok(base - correction)
}

fn check_rate_and_distance(eta: f64, z: f64) -> Result<()> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be non-negative, got {eta}")));
    }
    if z.is_nan() || z < 0.0 {
        return Err(Error::NegativeDistance(z));
    }
    Ok(())
}
