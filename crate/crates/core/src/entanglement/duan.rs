//! Pairwise EPR nullifiers and the resulting entanglement graph.

use serde::{Deserialize, Serialize};

use super::vlf::{x_theta, y_theta};
use super::{lo_profile, mode_labels, ModeLabel, Variant};
use crate::error::{Error, Result};
use crate::gaussian::{variance_of_combination, Basis, CovarianceMatrix};

/// Vacuum variance of `x_i − x_j` (and of `y_i + y_j`).
pub const PAIR_SHOT_NOISE: f64 = 2.0;

/// A nullifier counts as squeezed only below `PAIR_SHOT_NOISE − NULLIFIER_MARGIN`.
pub const NULLIFIER_MARGIN: f64 = 1e-9;

/// `V[x_i(θ_i) − x_j(θ_j)]` and `V[y_i(θ_i) + y_j(θ_j)]` for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairVariances {
    /// 0-based mode indices.
    pub i: usize,
    pub j: usize,
    pub difference_variance: f64,
    pub sum_variance: f64,
}

impl PairVariances {
    pub fn both_squeezed(&self) -> bool {
        let bound = PAIR_SHOT_NOISE - NULLIFIER_MARGIN;
        self.difference_variance < bound && self.sum_variance < bound
    }
}

pub fn epr_variances(v: &CovarianceMatrix, i: usize, j: usize, theta: &[f64]) -> Result<PairVariances> {
    v.expect_basis(Basis::Individual)?;
    let n = v.modes();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: theta.len(),
        });
    }
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    let diff: Vec<f64> = x_theta(n, i, theta[i])
        .iter()
        .zip(x_theta(n, j, theta[j]))
        .map(|(a, b)| a - b)
        .collect();
    let sum: Vec<f64> = y_theta(n, i, theta[i])
        .iter()
        .zip(y_theta(n, j, theta[j]))
        .map(|(a, b)| a + b)
        .collect();
    Ok(PairVariances {
        i,
        j,
        difference_variance: variance_of_combination(v, &diff)?,
        sum_variance: variance_of_combination(v, &sum)?,
    })
}

/// Nullifier variances of every pair `i < j` under the LO profile of `variant`.
pub fn nullifier_table(v: &CovarianceMatrix, variant: Variant) -> Result<Vec<PairVariances>> {
    let n = v.modes();
    let theta = lo_profile(n, variant)?;
    let mut table = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            table.push(epr_variances(v, i, j, &theta)?);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprEdge {
    /// 1-based labels.
    pub i: usize,
    pub j: usize,
    pub difference_variance: f64,
    pub sum_variance: f64,
    /// Mean of the two variances; below [`PAIR_SHOT_NOISE`] on every edge.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementGraph {
    pub nodes: Vec<ModeLabel>,
    pub edges: Vec<EprEdge>,
}

impl EntanglementGraph {
    /// Labels are 1-based and unordered.
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.i == a && e.j == b) || (e.i == b && e.j == a))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Connected components as sorted label lists, singletons included.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (ra, rb) = (find(&mut parent, e.i - 1), find(&mut parent, e.j - 1));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = vec![usize::MAX; n];
        for x in 0..n {
            let r = find(&mut parent, x);
            if root_slot[r] == usize::MAX {
                root_slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_slot[r]].push(x + 1);
        }
        groups
    }
}

/// Edge between every pair whose two nullifiers are both below shot noise.
pub fn duan_nullifiers(v: &CovarianceMatrix, variant: Variant) -> Result<EntanglementGraph> {
    let edges = nullifier_table(v, variant)?
        .into_iter()
        .filter(PairVariances::both_squeezed)
        .map(|p| EprEdge {
            i: p.i + 1,
            j: p.j + 1,
            difference_variance: p.difference_variance,
            sum_variance: p.sum_variance,
            weight: 0.5 * (p.difference_variance + p.sum_variance),
        })
        .collect();
    Ok(EntanglementGraph {
        nodes: mode_labels(v.modes()),
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::large_coupling_covariance;

    #[test]
    fn vacuum_has_no_edges() {
        let v = CovarianceMatrix::vacuum(4, Basis::Individual);
        let g = duan_nullifiers(&v, Variant::A).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.components(), vec![vec![1], vec![2], vec![3], vec![4]]);
    }

    #[test]
    fn variant_a_gives_complete_bipartite_graph() {
        let v = large_coupling_covariance(6, 0.025, 20.0).unwrap();
        let g = duan_nullifiers(&v, Variant::A).unwrap();
        assert_eq!(g.edge_count(), 9);
        for a in [1, 3, 5] {
            for b in [2, 4, 6] {
                assert!(g.has_edge(a, b));
            }
        }
        assert_eq!(g.components(), vec![vec![1, 2, 3, 4, 5, 6]]);
    }

    #[test]
    fn variant_b_splits_into_two_stars() {
        let v = large_coupling_covariance(6, 0.025, 20.0).unwrap();
        let g = duan_nullifiers(&v, Variant::B).unwrap();
        let mut got: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.i, e.j)).collect();
        got.sort();
        assert_eq!(got, vec![(1, 3), (2, 4), (3, 5), (4, 6)]);
        assert_eq!(g.components(), vec![vec![1, 3, 5], vec![2, 4, 6]]);
        let waveguides: Vec<usize> = [1usize, 3, 5].iter().map(|&l| g.nodes[l - 1].waveguide).collect();
        assert_eq!(waveguides, vec![1, 5, 9]);
    }

    #[test]
    fn edge_variances_are_squeezed() {
        let v = large_coupling_covariance(4, 0.025, 30.0).unwrap();
        let g = duan_nullifiers(&v, Variant::A).unwrap();
        for e in &g.edges {
            assert!(e.difference_variance < 2.0 && e.sum_variance < 2.0);
            assert!(e.weight < 2.0);
        }
    }

    #[test]
    fn index_checks() {
        let v = CovarianceMatrix::vacuum(3, Basis::Individual);
        assert!(epr_variances(&v, 0, 3, &[0.0; 3]).is_err());
        assert!(epr_variances(&v, 0, 1, &[0.0; 2]).is_err());
    }
}
