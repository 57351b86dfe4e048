//! Tree communication networks and their spectral quantities.
//!
//! Vertices are labelled `1..=N` at the API boundary (scenario files, error
//! messages) and stored zero-based internally. Every edge is oriented with the
//! lower vertex index as its tail, so the incidence matrix column of edge
//! `(i, j)`, `i < j`, carries `-1` at `i` and `+1` at `j`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{grad_psi, psi, PotentialParams};
use crate::Vec2;

/// Relative tolerance used for the Lemma-1 style inequality checks.
pub const LEMMA_TOLERANCE: f64 = 1e-9;

/// An oriented edge, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    /// One-based `(tail, head)` labels, as used in scenario files.
    pub fn labels(&self) -> (usize, usize) {
        (self.tail + 1, self.head + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstants {
    /// Second-smallest eigenvalue of the unweighted Laplacian.
    pub lambda_l: f64,
    /// Largest eigenvalue of the edge Laplacian.
    pub lambda_l_max: f64,
}

/// Immutable, validated tree topology.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNetwork {
    n_vertices: usize,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<usize>>,
    spectral: SpectralConstants,
}

impl TreeNetwork {
    /// Builds a tree from one-based vertex pairs.
    pub fn new(n_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let not_tree = |reason: String| Error::NotATree { n_vertices, reason };
        if n_vertices < 2 {
            return Err(not_tree("need at least two vertices".into()));
        }
        for &(a, b) in pairs {
            for index in [a, b] {
                if index == 0 || index > n_vertices {
                    return Err(Error::BadIndex { index, n_vertices });
                }
            }
        }
        if pairs.len() != n_vertices - 1 {
            return Err(not_tree(format!("expected {} edges, got {}", n_vertices - 1, pairs.len())));
        }

        let mut parent: Vec<usize> = (0..n_vertices).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }

        let mut edges = Vec::with_capacity(pairs.len());
        let mut neighbors = vec![Vec::new(); n_vertices];
        for &(a, b) in pairs {
            let (i, j) = (a - 1, b - 1);
            if i == j {
                return Err(not_tree(format!("self-loop at vertex {a}")));
            }
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri == rj {
                return Err(not_tree(format!("edge ({a}, {b}) closes a cycle")));
            }
            parent[ri] = rj;
            edges.push(Edge { tail: i.min(j), head: i.max(j) });
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        // n-1 edges without a cycle always span, so the tree is connected here.

        let mut tree = TreeNetwork {
            n_vertices,
            edges,
            neighbors,
            spectral: SpectralConstants { lambda_l: 0.0, lambda_l_max: 0.0 },
        };
        tree.spectral = tree.compute_spectral();
        Ok(tree)
    }

    /// Path `1 - 2 - ... - n`.
    pub fn path(n_vertices: usize) -> Result<Self> {
        let pairs: Vec<_> = (1..n_vertices).map(|i| (i, i + 1)).collect();
        Self::new(n_vertices, &pairs)
    }

    /// Star centred on vertex 1.
    pub fn star(n_vertices: usize) -> Result<Self> {
        let pairs: Vec<_> = (2..=n_vertices).map(|j| (1, j)).collect();
        Self::new(n_vertices, &pairs)
    }

    /// Random labelled tree: each vertex `k >= 2` attaches to a uniformly
    /// chosen earlier vertex.
    pub fn random<R: rand::Rng + ?Sized>(n_vertices: usize, rng: &mut R) -> Result<Self> {
        let pairs: Vec<_> = (2..=n_vertices).map(|k| (rng.random_range(1..k), k)).collect();
        Self::new(n_vertices, &pairs)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Initial neighbours of vertex `i` (zero-based).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// One-based edge pairs in construction order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(Edge::labels).collect()
    }

    pub fn spectral(&self) -> SpectralConstants {
        self.spectral
    }

    pub fn algebraic_connectivity(&self) -> f64 {
        self.spectral.lambda_l
    }

    /// Incidence matrix `D` (N x (N-1)).
    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_vertices, self.n_edges());
        for (k, e) in self.edges.iter().enumerate() {
            d[(e.tail, k)] = -1.0;
            d[(e.head, k)] = 1.0;
        }
        d
    }

    /// Degree-minus-adjacency Laplacian with unit weights.
    pub fn unweighted_laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n_vertices, self.n_vertices);
        for e in &self.edges {
            l[(e.tail, e.tail)] += 1.0;
            l[(e.head, e.head)] += 1.0;
            l[(e.tail, e.head)] -= 1.0;
            l[(e.head, e.tail)] -= 1.0;
        }
        l
    }

    /// Edge Laplacian `Dᵀ D`.
    pub fn edge_laplacian(&self) -> DMatrix<f64> {
        let d = self.incidence_matrix();
        d.transpose() * d
    }

    /// Weighted Laplacian built from the adjacency weights `a_ij = w_k`.
    pub fn weighted_laplacian(&self, weights: &[f64]) -> Result<DMatrix<f64>> {
        if weights.len() != self.n_edges() {
            return Err(Error::Schema(format!("expected {} edge weights, got {}", self.n_edges(), weights.len())));
        }
        let mut l = DMatrix::zeros(self.n_vertices, self.n_vertices);
        for (edge, (e, &w)) in self.edges.iter().zip(weights).enumerate() {
            if !(w > 0.0) {
                return Err(Error::NonPositiveWeight { edge, weight: w });
            }
            l[(e.tail, e.tail)] += w;
            l[(e.head, e.head)] += w;
            l[(e.tail, e.head)] -= w;
            l[(e.head, e.tail)] -= w;
        }
        Ok(l)
    }

    fn compute_spectral(&self) -> SpectralConstants {
        let lap = sorted_eigenvalues(self.unweighted_laplacian());
        let edge = sorted_eigenvalues(self.edge_laplacian());
        SpectralConstants { lambda_l: lap[1], lambda_l_max: *edge.last().expect("a tree has at least one edge") }
    }

    /// Returns the first edge whose length reaches `r` (or is not a number).
    pub(crate) fn first_long_edge(&self, positions: &[Vec2], r: f64) -> Option<(Edge, f64)> {
        self.edges.iter().find_map(|e| {
            let length = (positions[e.tail] - positions[e.head]).norm();
            (!(length < r)).then_some((*e, length))
        })
    }

    /// Evaluates both sides of the Lemma-1 inequality
    /// `Σ θᵢᵀθᵢ ≥ 4 λ_L P / (r² + Q) · V_p`.
    pub fn check_lemma1(&self, positions: &[Vec2], params: &PotentialParams) -> Result<LemmaCheck> {
        let bounds = self.theta_energy_bounds(positions, params)?;
        Ok(LemmaCheck::lower(bounds.theta_energy, bounds.lower))
    }

    /// Quantities sandwiching `Σ θᵢᵀθᵢ` at one configuration.
    pub fn theta_energy_bounds(&self, positions: &[Vec2], params: &PotentialParams) -> Result<ThetaEnergyBounds> {
        if let Some((e, length)) = self.first_long_edge(positions, params.r) {
            let (i, j) = e.labels();
            return Err(Error::EdgeTooLong { i, j, length, r: params.r });
        }
        let mut theta = vec![Vec2::zeros(); self.n_vertices];
        let mut potential = 0.0;
        let mut edge_gradient_energy = 0.0;
        for e in &self.edges {
            let (xi, xj) = (positions[e.tail], positions[e.head]);
            let g = grad_psi(&xi, &xj, params)?;
            theta[e.tail] += g;
            theta[e.head] -= g;
            potential += psi((xi - xj).norm_squared(), params)?;
            edge_gradient_energy += g.norm_squared();
        }
        let theta_energy: f64 = theta.iter().map(|t| t.norm_squared()).sum();
        let scale = 4.0 * params.p / (params.r * params.r + params.q);
        Ok(ThetaEnergyBounds {
            theta_energy,
            potential,
            lower: scale * self.spectral.lambda_l * potential,
            upper_spectral: self.spectral.lambda_l_max * edge_gradient_energy,
            upper_closed_form: scale * self.spectral.lambda_l_max * potential,
        })
    }
}

/// `Σ θᵢᵀθᵢ` alongside the bounds built from the spectral constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEnergyBounds {
    pub theta_energy: f64,
    pub potential: f64,
    /// `4 λ_L P / (r² + Q) · V_p`.
    pub lower: f64,
    /// `λ̄_L · Σ_edges ‖∇ψ‖²`, the Rayleigh-quotient bound on `x̄ᵀ L_e x̄`.
    pub upper_spectral: f64,
    /// `4 λ̄_L P / (r² + Q) · V_p`. This does not dominate `upper_spectral`
    /// (the edge weight `(r² + Q)² / (r² − d² + Q)³` is at least
    /// `1 / (r² + Q)`, not at most) and fails for any stretched edge.
    pub upper_closed_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl LemmaCheck {
    /// `lhs ≥ rhs` up to the relative lemma tolerance.
    pub fn lower(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, holds: lhs >= rhs - LEMMA_TOLERANCE * rhs.abs().max(1.0) }
    }

    /// `lhs ≤ rhs` up to the relative lemma tolerance.
    pub fn upper(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, holds: lhs <= rhs + LEMMA_TOLERANCE * rhs.abs().max(1.0) }
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}
