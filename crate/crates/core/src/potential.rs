//! Distance potential on tree links and the `(P, Q)` selection rules that
//! keep the stored link energy below the breaking level `ψ_max`.
//!
//! ```text
//! ψ(d)   = P d² / (r² − d² + Q)
//! ∇ᵢψ    = 2P (r² + Q) / (r² − d² + Q)² · (xᵢ − xⱼ)
//! V_p    = Σ_edges ψ(‖xᵢ − xⱼ‖)
//! ψ_max  = ψ(r) = P r² / Q
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TreeNetwork;
use crate::simulator::SimTrace;
use crate::Vec2;

/// Headroom factor applied to the lower bounds on `P`.
pub const P_HEADROOM: f64 = 1.05;
/// Smallest `P` ever returned by [`select_p`].
pub const P_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub p: f64,
    pub q: f64,
    /// Communication radius.
    pub r: f64,
    /// Initial link margin: every initial edge is shorter than `r − ε`.
    pub epsilon: f64,
    pub psi_max: f64,
}

impl PotentialParams {
    pub fn new(p: f64, q: f64, r: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [("P", p), ("Q", q), ("r", r), ("epsilon", epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Schema(format!("{name} must be positive, got {v}")));
            }
        }
        if epsilon >= r {
            return Err(Error::Schema(format!("epsilon ({epsilon}) must be smaller than r ({r})")));
        }
        Ok(Self { p, q, r, epsilon, psi_max: p * r * r / q })
    }

    /// Left-hand side of the first `(P, Q)` condition; positive when `Q` is
    /// admissible for `n_vertices` robots.
    pub fn q_condition(&self, n_vertices: usize) -> f64 {
        q_condition(self.r, self.epsilon, n_vertices, self.q)
    }

    /// Lower bound on `P` from the second `(P, Q)` condition for headroom `delta`.
    pub fn p_condition_bound(&self, n_vertices: usize, delta: f64) -> f64 {
        eq4_p_bound(self.r, self.epsilon, n_vertices, self.q, delta)
    }

    /// `ψ(d) / ψ_max`, the stress carried by a link of squared length `dist_sq`.
    pub fn stress_ratio(&self, dist_sq: f64) -> Result<f64> {
        Ok(psi(dist_sq, self)? / self.psi_max)
    }
}

fn domain_error(dist_sq: f64, params: &PotentialParams) -> Error {
    Error::OutOfDomain { dist_sq, r_sq: params.r * params.r }
}

pub fn psi(dist_sq: f64, params: &PotentialParams) -> Result<f64> {
    let r_sq = params.r * params.r;
    if !(dist_sq <= r_sq) || dist_sq < 0.0 {
        return Err(domain_error(dist_sq, params));
    }
    Ok(params.p * dist_sq / (r_sq - dist_sq + params.q))
}

/// `∇_{xᵢ} ψ(‖xᵢ − xⱼ‖)`; requires `‖xᵢ − xⱼ‖ < r`.
pub fn grad_psi(xi: &Vec2, xj: &Vec2, params: &PotentialParams) -> Result<Vec2> {
    let diff = xi - xj;
    let weight = gradient_weight(diff.norm_squared(), params)?;
    Ok(diff * weight)
}

/// Scalar `2P (r² + Q) / (r² − d² + Q)²` multiplying `xᵢ − xⱼ` in the gradient.
pub(crate) fn gradient_weight(dist_sq: f64, params: &PotentialParams) -> Result<f64> {
    let r_sq = params.r * params.r;
    if !(dist_sq < r_sq) {
        return Err(domain_error(dist_sq, params));
    }
    let den = r_sq - dist_sq + params.q;
    Ok(2.0 * params.p * (r_sq + params.q) / (den * den))
}

/// Potential energy stored in all tree links.
pub fn total_potential(positions: &[Vec2], tree: &TreeNetwork, params: &PotentialParams) -> Result<f64> {
    tree.edges().iter().map(|e| psi((positions[e.tail] - positions[e.head]).norm_squared(), params)).sum()
}

/// `[r² − (N−1)(r−ε)²] Q + [r² − (r−ε)²] r²`.
pub fn q_condition(r: f64, epsilon: f64, n_vertices: usize, q: f64) -> f64 {
    let (r_sq, inner_sq) = (r * r, (r - epsilon) * (r - epsilon));
    let links = (n_vertices - 1) as f64;
    (r_sq - links * inner_sq) * q + (r_sq - inner_sq) * r_sq
}

/// Picks `Q` so that [`q_condition`] is strictly positive.
///
/// When the coefficient of `Q` is negative, `Q` is half the supremum of the
/// admissible interval; otherwise any `Q` works and `1` is returned.
pub fn select_q(r: f64, epsilon: f64, n_vertices: usize) -> f64 {
    debug_assert!(0.0 < epsilon && epsilon < r && n_vertices >= 2);
    let (r_sq, inner_sq) = (r * r, (r - epsilon) * (r - epsilon));
    let coefficient = r_sq - (n_vertices - 1) as f64 * inner_sq;
    if coefficient < 0.0 {
        0.5 * (r_sq - inner_sq) * r_sq / -coefficient
    } else {
        1.0
    }
}

/// Right-hand side of the second `(P, Q)` condition:
/// `[r² − (r−ε)² + Q] Q Δ / ([r² − (r−ε)² + Q] r² − (N−1) Q (r−ε)²)`.
pub fn eq4_p_bound(r: f64, epsilon: f64, n_vertices: usize, q: f64, delta: f64) -> f64 {
    let (r_sq, inner_sq) = (r * r, (r - epsilon) * (r - epsilon));
    let gap = r_sq - inner_sq + q;
    gap * q * delta / (gap * r_sq - (n_vertices - 1) as f64 * q * inner_sq)
}

/// `P` with 5% headroom over both the energy-headroom bound and the decay
/// bound `lower_bound_decay`, never below [`P_FLOOR`].
pub fn select_p(r: f64, epsilon: f64, n_vertices: usize, q: f64, delta: f64, lower_bound_decay: f64) -> f64 {
    let bound = eq4_p_bound(r, epsilon, n_vertices, q, delta).max(lower_bound_decay);
    (P_HEADROOM * bound).max(P_FLOOR)
}

/// Trace scan for the energy premise `V_p(t) ≤ V_p(0) + Δ` and its distance
/// conclusion `max ‖x_ij(t)‖ < r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub premise_holds: bool,
    /// `min_t [V_p(0) + Δ − V_p(t)]`.
    pub premise_margin: f64,
    pub premise_worst_index: usize,
    pub conclusion_holds: bool,
    /// `r − max_{t, edges} ‖x_ij(t)‖`.
    pub distance_margin: f64,
    pub conclusion_worst_index: usize,
}

pub fn check_prop2_invariance(trace: &SimTrace, params: &PotentialParams, delta: f64) -> InvarianceReport {
    let ceiling = trace.potential.first().copied().unwrap_or(0.0) + delta;
    let (premise_worst_index, premise_margin) = trace
        .potential
        .iter()
        .map(|vp| ceiling - vp)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY));
    let (conclusion_worst_index, max_dist) = trace
        .edge_distances
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let distance_margin = params.r - max_dist;
    InvarianceReport {
        premise_holds: premise_margin >= 0.0,
        premise_margin,
        premise_worst_index,
        conclusion_holds: distance_margin > 0.0 && !trace.link_broken(),
        distance_margin,
        conclusion_worst_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> PotentialParams {
        PotentialParams::new(1.0, 1.0, 1.0, 0.2).unwrap()
    }

    #[test]
    fn psi_values() {
        let p = unit();
        assert_eq!(psi(0.0, &p).unwrap(), 0.0);
        assert_relative_eq!(psi(1.0, &p).unwrap(), p.psi_max, max_relative = 1e-15);
        // 0.25 / (1 - 0.25 + 1)
        assert_relative_eq!(psi(0.25, &p).unwrap(), 1.0 / 7.0, max_relative = 1e-15);
        assert!(matches!(psi(1.0 + 1e-12, &p), Err(Error::OutOfDomain { .. })));
        assert!(psi(f64::NAN, &p).is_err());
    }

    #[test]
    fn psi_is_strictly_increasing_and_bounded() {
        let p = PotentialParams::new(3.0, 0.4, 2.0, 0.5).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|k| psi((2.0 * k as f64 / 1000.0).powi(2), &p).unwrap()).collect();
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(grid.iter().all(|&v| v <= p.psi_max * (1.0 + 1e-15)));
        let near = psi((2.0 * (1.0 - 1e-9_f64)).powi(2), &p).unwrap();
        assert_relative_eq!(near, p.psi_max, max_relative = 1e-6);
    }

    #[test]
    fn gradient_basics() {
        let p = unit();
        let a = Vec2::new(0.1, -0.2);
        let b = Vec2::new(-0.3, 0.25);
        assert_eq!(grad_psi(&a, &a, &p).unwrap(), Vec2::zeros());
        assert_eq!(grad_psi(&a, &b, &p).unwrap(), -grad_psi(&b, &a, &p).unwrap());
        assert!(grad_psi(&Vec2::zeros(), &Vec2::new(1.0, 0.0), &p).is_err());
    }

    #[test]
    fn total_potential_examples() {
        let p = unit();
        let t2 = TreeNetwork::path(2).unwrap();
        let x2 = [Vec2::zeros(), Vec2::new(0.0, 0.5)];
        assert_relative_eq!(total_potential(&x2, &t2, &p).unwrap(), 1.0 / 7.0, max_relative = 1e-15);
        let t3 = TreeNetwork::path(3).unwrap();
        let x3 = [Vec2::zeros(), Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0)];
        assert_relative_eq!(total_potential(&x3, &t3, &p).unwrap(), 2.0 / 7.0, max_relative = 1e-15);
        assert_eq!(total_potential(&[Vec2::zeros(); 3], &t3, &p).unwrap(), 0.0);
    }

    #[test]
    fn q_selection() {
        let q = select_q(1.0, 0.2, 3);
        assert_relative_eq!(q, 0.5 * 9.0 / 7.0, max_relative = 1e-14);
        assert!(q_condition(1.0, 0.2, 3, q) > 0.0);
        assert_eq!(select_q(1.0, 0.5, 2), 1.0);
        assert!(q_condition(1.0, 0.5, 2, 1.0) > 0.0);
    }

    #[test]
    fn p_selection() {
        assert_relative_eq!(eq4_p_bound(1.0, 0.2, 3, 1.0, 1.0), 17.0, max_relative = 1e-12);
        assert_relative_eq!(select_p(1.0, 0.2, 3, 1.0, 1.0, 0.0), 17.85, max_relative = 1e-12);
        assert_eq!(select_p(1.0, 0.2, 3, 1.0, 0.0, 0.0), 1.0);
        assert_relative_eq!(select_p(1.0, 0.2, 3, 1.0, 1.0, 100.0), 105.0, max_relative = 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(PotentialParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PotentialParams::new(0.0, 1.0, 1.0, 0.1).is_err());
        let p = PotentialParams::new(2.0, 0.5, 1.5, 0.1).unwrap();
        assert_eq!(p.psi_max, 2.0 * 1.5 * 1.5 / 0.5);
    }
}
