//! Post-hoc certificates over a recorded [`SimTrace`].
//!
//! Every check reports a worst-case margin (non-negative when satisfied) and
//! where it occurred. Inequalities on trajectories are tested with a mixed
//! tolerance `abs + rel · |rhs|`; identities on recomputed quantities use
//! tighter relative tolerances.

use serde::{Deserialize, Serialize};

use crate::controller::{mismatch_bounds, surface, theta, GainDesign};
use crate::dynamics::{ModelBounds, RobotModel, RobotState};
use crate::error::{Error, Result};
use crate::graph::TreeNetwork;
use crate::potential::{check_prop2_invariance, total_potential, PotentialParams};
use crate::simulator::{Scenario, SimTrace, Simulation};
use crate::Vec2;

pub const ABS_TOL: f64 = 1e-9;
pub const REL_TOL: f64 = 1e-6;
/// Tolerance of the gain-schedule identity.
pub const GAIN_TOL: f64 = 1e-12;
/// Tolerance between logged and recomputed quantities.
pub const LOG_TOL: f64 = 1e-10;
/// Lemma tolerance (relative).
pub const LEMMA_TOL: f64 = 1e-9;
/// Fraction of its starting value a synchronized quantity must fall below.
pub const SYNC_FACTOR: f64 = 1e-3;

/// `V = ½ Σ sᵢᵀ M_i(x_i) sᵢ / (B_i + σ D_i) + V_p`.
pub fn lyapunov_v(
    states: &[RobotState],
    tree: &TreeNetwork,
    design: &GainDesign,
    params: &PotentialParams,
    models: &[RobotModel],
) -> Result<f64> {
    let positions: Vec<Vec2> = states.iter().map(|s| s.x).collect();
    let mut kinetic = 0.0;
    for (i, state) in states.iter().enumerate() {
        let s = surface(state, &theta(i, &positions, tree, params)?, design.sigma);
        kinetic += s.dot(&(models[i].mass_matrix(&state.x) * s)) / design.weight(i);
    }
    Ok(0.5 * kinetic + total_potential(&positions, tree, params)?)
}

/// `‖φ‖` with `φ = [ẋ₁ … ẋ_N, x̃]`, `x̃ = (Dᵀ ⊗ I) x`.
pub fn phi_norm(states: &[RobotState], tree: &TreeNetwork) -> f64 {
    let v: f64 = states.iter().map(|s| s.v.norm_squared()).sum();
    let x: f64 = tree.edges().iter().map(|e| (states[e.head].x - states[e.tail].x).norm_squared()).sum();
    (v + x).sqrt()
}

/// Constants of the exponential ISS estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssConstants {
    /// `‖φ‖² ≤ κ₁ V`.
    pub kappa1: f64,
    /// `V ≤ κ₂ ‖φ‖²`.
    pub kappa2: f64,
    pub rho: f64,
    pub big_gamma: f64,
}

impl IssConstants {
    pub fn new(tree: &TreeNetwork, design: &GainDesign, params: &PotentialParams, bounds: &[ModelBounds]) -> Self {
        let (sigma, p, q) = (design.sigma, params.p, params.q);
        let rq = params.r * params.r + q;
        let lambda_bar = tree.spectral().lambda_l_max;
        let lambda2 = bounds.iter().map(|b| b.lambda_max).fold(0.0, f64::max);
        let inertia = (0..bounds.len()).map(|i| 4.0 * design.weight(i) / bounds[i].lambda_min).fold(0.0, f64::max);
        let kappa1 = inertia.max(8.0 * sigma * sigma * lambda_bar * p / rq) + rq / p;
        let kappa2 = lambda2.max(4.0 * sigma * sigma * lambda2 * lambda_bar * p * p / (rq * q) + p / q);
        Self { kappa1, kappa2, rho: design.rho, big_gamma: design.big_gamma }
    }

    /// `β(‖φ(0)‖, t) = √(κ₁κ₂ e^{−ρt}) ‖φ(0)‖`.
    pub fn beta(&self, phi0: f64, t: f64) -> f64 {
        (self.kappa1 * self.kappa2 * (-self.rho * t).exp()).sqrt() * phi0
    }

    /// `α(s) = √(κ₁ / (4ρΓ)) s`.
    pub fn alpha(&self, sup_force: f64) -> f64 {
        (self.kappa1 / (4.0 * self.rho * self.big_gamma)).sqrt() * sup_force
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// Worst-case slack; negative when violated.
    pub margin: f64,
    /// Sample index of the worst case.
    pub worst_index: Option<usize>,
    pub worst_t: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, margin: f64, worst: Option<(usize, f64)>, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            margin,
            worst_index: worst.map(|w| w.0),
            worst_t: worst.map(|w| w.1),
            detail,
        }
    }

    fn not_applicable(name: &str, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            status: CheckStatus::NotApplicable,
            margin: f64::NAN,
            worst_index: None,
            worst_t: None,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

/// All check results for one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub scenario_hash: String,
    pub n_samples: usize,
    pub iss: IssConstants,
    /// Checks whose conjunction is the verdict.
    pub checks: Vec<CheckResult>,
    /// Reported but not part of the verdict.
    pub diagnostics: Vec<CheckResult>,
    pub verdict: bool,
}

impl CertificateReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().chain(&self.diagnostics).find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "certificate for scenario {}\nsamples: {}\nkappa1 = {:.6e}, kappa2 = {:.6e}\n\n",
            self.scenario_hash, self.n_samples, self.iss.kappa1, self.iss.kappa2
        );
        let mut section = |title: &str, checks: &[CheckResult]| {
            out.push_str(title);
            out.push('\n');
            for c in checks {
                let status = match c.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::NotApplicable => "N/A ",
                };
                let at = c.worst_t.map(|t| format!(" at t = {t:.3} s")).unwrap_or_default();
                out.push_str(&format!("  {status}  {:<20} margin {:>13.6e}{at}  {}\n", c.name, c.margin, c.detail));
            }
        };
        section("checks:", &self.checks);
        section("diagnostics:", &self.diagnostics);
        out.push_str(&format!("\nverdict: {}\n", if self.verdict { "PASS" } else { "FAIL" }));
        out
    }
}

fn mixed_tol(rhs: f64) -> f64 {
    ABS_TOL + REL_TOL * rhs.abs()
}

/// Tracks the smallest slack seen so far.
struct Worst {
    margin: f64,
    at: Option<(usize, f64)>,
}

impl Worst {
    fn new() -> Self {
        Self { margin: f64::INFINITY, at: None }
    }

    fn see(&mut self, margin: f64, k: usize, t: f64) {
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.at = Some((k, t));
        }
    }
}

/// Recomputes everything from a trace and its embedded scenario and design.
pub struct Verifier<'a> {
    trace: &'a SimTrace,
    scenario: Scenario,
    design: GainDesign,
    params: PotentialParams,
    bounds: Vec<ModelBounds>,
    iss: IssConstants,
}

impl<'a> Verifier<'a> {
    pub fn new(trace: &'a SimTrace) -> Result<Self> {
        let scenario = trace.scenario()?;
        let design = trace.meta.design.gains.clone();
        let params = trace.meta.design.params;
        let bounds = trace.meta.bounds.clone();
        if bounds.len() != scenario.n_robots() || design.n_robots() != scenario.n_robots() {
            return Err(Error::TraceFormat("design does not match the embedded scenario".into()));
        }
        let iss = IssConstants::new(&scenario.tree, &design, &params, &bounds);
        Ok(Self { trace, scenario, design, params, bounds, iss })
    }

    pub fn iss_constants(&self) -> IssConstants {
        self.iss
    }

    fn tree(&self) -> &TreeNetwork {
        &self.scenario.tree
    }

    fn t(&self, k: usize) -> f64 {
        self.trace.times[k]
    }

    fn phi(&self, k: usize) -> f64 {
        phi_norm(&self.trace.states(k), self.tree())
    }

    /// Every edge shorter than `r` on every sample and no broken link.
    pub fn check_invariance(&self) -> CheckResult {
        let report = check_prop2_invariance(self.trace, &self.params, self.design.delta);
        let k = report.conclusion_worst_index;
        let broken = match self.trace.meta.outcome {
            crate::simulator::RunOutcome::LinkBroken { t, i, j } => format!("; link ({i}, {j}) broke at t = {t:.4} s"),
            crate::simulator::RunOutcome::Completed => String::new(),
        };
        CheckResult::new(
            "invariance",
            report.conclusion_holds,
            report.distance_margin,
            (!self.trace.is_empty()).then(|| (k, self.t(k))),
            format!("min r - |x_ij| over the run{broken}"),
        )
    }

    /// `V_p(t) ≤ V_p(0) + Δ`, the energy premise behind invariance.
    pub fn check_energy_invariance(&self) -> CheckResult {
        let report = check_prop2_invariance(self.trace, &self.params, self.design.delta);
        let k = report.premise_worst_index;
        let tol = self.trace.potential.first().map_or(ABS_TOL, |v0| mixed_tol(v0 + self.design.delta));
        CheckResult::new(
            "energy_invariance",
            report.premise_margin >= -tol,
            report.premise_margin,
            (!self.trace.is_empty()).then(|| (k, self.t(k))),
            format!(
                "V_p(0) + Delta = {:.6e} < psi_max = {:.6e}",
                self.trace.potential.first().unwrap_or(&0.0) + self.design.delta,
                self.params.psi_max
            ),
        )
    }

    /// `V(t) ≤ e^{−ρt} V(0) + sup_{τ≤t} χ(‖f(τ)‖)`.
    pub fn check_decay(&self) -> CheckResult {
        let mut worst = Worst::new();
        let v0 = self.trace.lyapunov.first().copied().unwrap_or(0.0);
        let mut chi_sup: f64 = 0.0;
        let mut ok = true;
        for (k, &v) in self.trace.lyapunov.iter().enumerate() {
            chi_sup = chi_sup.max(self.design.chi(self.trace.force[k].norm()));
            let rhs = (-self.design.rho * self.t(k)).exp() * v0 + chi_sup;
            ok &= v <= rhs + mixed_tol(rhs);
            worst.see(rhs - v, k, self.t(k));
        }
        CheckResult::new("decay", ok, worst.margin, worst.at, "min e^{-rho t} V(0) + sup chi - V(t)".into())
    }

    fn iss_scan(&self) -> (bool, Worst) {
        let mut worst = Worst::new();
        let mut ok = true;
        if self.trace.is_empty() {
            return (true, worst);
        }
        let phi0 = self.phi(0);
        let mut f_sup: f64 = 0.0;
        for k in 0..self.trace.len() {
            f_sup = f_sup.max(self.trace.force[k].norm());
            let rhs = self.iss.beta(phi0, self.t(k)) + self.iss.alpha(f_sup);
            let phi = self.phi(k);
            ok &= phi <= rhs + mixed_tol(rhs);
            worst.see(rhs - phi, k, self.t(k));
        }
        (ok, worst)
    }

    /// `‖φ(t)‖ ≤ β(‖φ(0)‖, t) + α(sup ‖f‖)`; requires invariance.
    pub fn check_iss(&self) -> Result<CheckResult> {
        let inv = self.check_invariance();
        if !inv.passed() {
            return Err(Error::PrerequisiteFailed(format!("invariance failed (margin {:.3e})", inv.margin)));
        }
        let (ok, worst) = self.iss_scan();
        Ok(CheckResult::new(
            "iss",
            ok,
            worst.margin,
            worst.at,
            format!(
                "sqrt(k1 k2) = {:.4e}, sqrt(k1/(4 rho Gamma)) = {:.4e}",
                (self.iss.kappa1 * self.iss.kappa2).sqrt(),
                self.iss.alpha(1.0)
            ),
        ))
    }

    /// `‖φ‖² ≤ κ₁ V` and `V ≤ κ₂ ‖φ‖²` at every sample.
    pub fn check_iss_sandwich(&self) -> CheckResult {
        let mut worst = Worst::new();
        let mut ok = true;
        let mut detail = String::new();
        for k in 0..self.trace.len() {
            let phi_sq = self.phi(k).powi(2);
            let v = self.trace.lyapunov[k];
            let upper = self.iss.kappa1 * v;
            let lower = self.iss.kappa2 * phi_sq;
            let (m1, m2) = (upper - phi_sq, lower - v);
            let pass1 = phi_sq <= upper + mixed_tol(upper);
            let pass2 = v <= lower + mixed_tol(lower);
            if ok && !(pass1 && pass2) {
                detail = format!(
                    "first violation: {} at t = {:.4} s",
                    if pass1 { "V <= k2 |phi|^2" } else { "|phi|^2 <= k1 V" },
                    self.t(k)
                );
            }
            ok &= pass1 && pass2;
            worst.see(m1.min(m2), k, self.t(k));
        }
        CheckResult::new("iss_sandwich", ok, worst.margin, worst.at, detail)
    }

    /// States finite and below the ceiling `β(‖φ(0)‖, 0) + α(sup ‖f‖)`.
    pub fn check_boundedness(&self) -> CheckResult {
        if self.trace.is_empty() {
            return CheckResult::new("boundedness", true, f64::INFINITY, None, String::new());
        }
        let ceiling = self.iss.beta(self.phi(0), 0.0) + self.iss.alpha(self.trace.max_force());
        let mut worst = Worst::new();
        let mut ok = true;
        for k in 0..self.trace.len() {
            let largest = self.trace.velocities[k]
                .iter()
                .map(|v| v.norm())
                .chain(self.trace.edge_distances[k].iter().copied())
                .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
            ok &= largest.is_finite() && largest <= ceiling + mixed_tol(ceiling);
            worst.see(ceiling - largest, k, self.t(k));
        }
        CheckResult::new("boundedness", ok, worst.margin, worst.at, format!("ceiling {ceiling:.6e}"))
    }

    /// Velocities and link lengths fall below [`SYNC_FACTOR`] of their start
    /// under an exponential envelope; needs a zero-force trace.
    pub fn check_sync(&self) -> Result<CheckResult> {
        let max_force = self.trace.max_force();
        if max_force > 0.0 {
            return Err(Error::WrongProfile { max_force });
        }
        if self.trace.is_empty() {
            return Ok(CheckResult::new("sync", true, f64::INFINITY, None, String::new()));
        }
        let speed = |k: usize| self.trace.velocities[k].iter().map(|v| v.norm()).fold(0.0, f64::max);
        let spread = |k: usize| self.trace.edge_distances[k].iter().copied().fold(0.0, f64::max);
        let last = self.trace.len() - 1;
        // A swarm released from rest has zero initial speed; its peak is the reference.
        let speed_ref = (0..=last).map(speed).fold(0.0, f64::max);
        let spread_ref = spread(0).max(0.0);
        let speed_ok = speed(last) <= SYNC_FACTOR * speed_ref;
        let spread_ok = spread(last) <= SYNC_FACTOR * spread_ref;

        let (envelope_ok, worst) = self.iss_scan();
        let margin = (SYNC_FACTOR * speed_ref - speed(last)).min(SYNC_FACTOR * spread_ref - spread(last));
        let detail = format!(
            "final speed {:.3e} (ref {:.3e}), final spread {:.3e} (ref {:.3e}), envelope margin {:.3e}",
            speed(last),
            speed_ref,
            spread(last),
            spread_ref,
            worst.margin
        );
        Ok(CheckResult::new("sync", speed_ok && spread_ok && envelope_ok, margin, Some((last, self.t(last))), detail))
    }

    /// Lower bound `Σθᵀθ ≥ 4λ_L P/(r²+Q) V_p` and the spectral upper bound at every sample.
    pub fn check_lemma1(&self) -> CheckResult {
        let mut worst = Worst::new();
        let mut ok = true;
        for k in 0..self.trace.len() {
            match self.tree().theta_energy_bounds(&self.trace.positions[k], &self.params) {
                Ok(b) => {
                    let scale = b.lower.abs().max(b.upper_spectral.abs()).max(1.0);
                    let m = (b.theta_energy - b.lower).min(b.upper_spectral - b.theta_energy) / scale;
                    ok &= m >= -LEMMA_TOL;
                    worst.see(m, k, self.t(k));
                }
                Err(_) => {
                    ok = false;
                    worst.see(f64::NEG_INFINITY, k, self.t(k));
                }
            }
        }
        CheckResult::new("lemma1", ok, worst.margin, worst.at, "relative slack of both sides".into())
    }

    /// `Σθᵀθ ≤ 4λ̄_L P/(r²+Q) V_p` at every sample.
    pub fn check_theta_closed_form(&self) -> CheckResult {
        let mut worst = Worst::new();
        let mut ok = true;
        for k in 0..self.trace.len() {
            if let Ok(b) = self.tree().theta_energy_bounds(&self.trace.positions[k], &self.params) {
                let m = (b.upper_closed_form - b.theta_energy) / b.upper_closed_form.abs().max(1.0);
                ok &= m >= -LEMMA_TOL;
                worst.see(m, k, self.t(k));
            }
        }
        CheckResult::new("theta_upper_closed", ok, worst.margin, worst.at, "relative slack".into())
    }

    /// `K̄_i(t) = ½ρλ_i2` at every sample.
    pub fn check_gain_identity(&self) -> CheckResult {
        let mut worst = Worst::new();
        let mut ok = true;
        let tree = self.tree();
        for k in 0..self.trace.len() {
            let positions = &self.trace.positions[k];
            for i in 0..tree.n_vertices() {
                let split = self.design.splitters(i);
                let mut lambda_sum = 0.0;
                for &j in tree.neighbors(i) {
                    let d2 = (positions[i] - positions[j]).norm_squared();
                    match crate::controller::lambda_ij(d2, &self.bounds[i], &split, &self.params) {
                        Ok(l) => lambda_sum += l,
                        Err(_) => lambda_sum = f64::NAN,
                    }
                }
                let kk = self.trace.gains[k][i];
                let residual = self.design.residual_gain(i, kk, lambda_sum);
                let target = 0.5 * self.design.rho * self.bounds[i].lambda_max;
                let err = (residual - target).abs();
                let tol = GAIN_TOL * kk.abs().max(1.0);
                ok &= err <= tol;
                worst.see(tol - err, k, self.t(k));
            }
        }
        CheckResult::new("gain_identity", ok, worst.margin, worst.at, "tolerance minus |Kbar - rho lambda2 / 2|".into())
    }

    /// Logged `u, K, ‖x_ij‖, V_p, V` match values recomputed from the logged state.
    pub fn check_log_consistency(&self) -> Result<CheckResult> {
        let sim = Simulation::with_design(self.scenario.clone(), self.bounds.clone(), self.trace.meta.design.clone())?;
        let cl = sim.closed_loop();
        let mut worst = Worst::new();
        let mut ok = true;
        let close = |a: f64, b: f64| LOG_TOL * a.abs().max(b.abs()).max(1.0) - (a - b).abs();
        for k in 0..self.trace.len() {
            let s = match cl.sample(self.t(k), &self.trace.states(k), self.trace.force[k]) {
                Ok(s) => s,
                Err(_) => {
                    ok = false;
                    worst.see(f64::NEG_INFINITY, k, self.t(k));
                    continue;
                }
            };
            let mut m = close(s.potential, self.trace.potential[k]).min(close(s.lyapunov, self.trace.lyapunov[k]));
            for (a, b) in s.edge_distances.iter().zip(&self.trace.edge_distances[k]) {
                m = m.min(close(*a, *b));
            }
            for i in 0..s.gains.len() {
                m = m
                    .min(close(s.gains[i], self.trace.gains[k][i]))
                    .min(close(s.controls[i].x, self.trace.controls[k][i].x))
                    .min(close(s.controls[i].y, self.trace.controls[k][i].y));
            }
            ok &= m >= 0.0;
            worst.see(m, k, self.t(k));
        }
        Ok(CheckResult::new("log_consistency", ok, worst.margin, worst.at, "tolerance minus largest deviation".into()))
    }

    /// `sᵢᵀΔᵢ` against its bound at every sample.
    pub fn check_mismatch(&self) -> CheckResult {
        let mut worst = Worst::new();
        let mut ok = true;
        let tree = self.tree();
        for k in 0..self.trace.len() {
            let (pos, vel) = (&self.trace.positions[k], &self.trace.velocities[k]);
            for i in 0..tree.n_vertices() {
                match mismatch_bounds(
                    i,
                    pos,
                    vel,
                    tree,
                    &self.design,
                    &self.params,
                    &self.scenario.models[i],
                    &self.bounds[i],
                ) {
                    Ok(b) => {
                        let (lhs, rhs) = b.total;
                        ok &= lhs <= rhs + mixed_tol(rhs);
                        worst.see(rhs - lhs, k, self.t(k));
                    }
                    Err(_) => {
                        ok = false;
                        worst.see(f64::NEG_INFINITY, k, self.t(k));
                    }
                }
            }
        }
        CheckResult::new("mismatch_bound", ok, worst.margin, worst.at, "min rhs - s^T Delta".into())
    }

    /// `‖f(t)‖ ≤ f̄` on every sample.
    pub fn check_force_bound(&self) -> CheckResult {
        let f_bar = self.design.f_bar;
        let mut worst = Worst::new();
        for k in 0..self.trace.len() {
            worst.see(f_bar - self.trace.force[k].norm(), k, self.t(k));
        }
        let ok = worst.margin >= -1e-12 * f_bar.max(1.0);
        CheckResult::new("force_bound", ok, worst.margin, worst.at, format!("f_bar = {f_bar}"))
    }

    /// Runs every check.
    pub fn certify(&self) -> Result<CertificateReport> {
        let mut checks =
            vec![self.check_force_bound(), self.check_invariance(), self.check_energy_invariance(), self.check_decay()];
        checks.push(match self.check_iss() {
            Ok(c) => c,
            Err(e) => CheckResult::new("iss", false, f64::NAN, None, e.to_string()),
        });
        checks.push(self.check_boundedness());
        checks.push(match self.check_sync() {
            Ok(c) => c,
            Err(e @ Error::WrongProfile { .. }) => CheckResult::not_applicable("sync", e.to_string()),
            Err(e) => return Err(e),
        });
        checks.push(self.check_lemma1());
        checks.push(self.check_gain_identity());
        checks.push(self.check_log_consistency()?);
        checks.push(self.check_mismatch());
        let diagnostics = vec![self.check_iss_sandwich(), self.check_theta_closed_form()];
        let verdict = checks.iter().all(CheckResult::passed);
        Ok(CertificateReport {
            scenario_hash: self.trace.meta.scenario_hash.clone(),
            n_samples: self.trace.len(),
            iss: self.iss,
            checks,
            diagnostics,
            verdict,
        })
    }
}

pub fn verify(trace: &SimTrace) -> Result<CertificateReport> {
    Verifier::new(trace)?.certify()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::GainDesign;

    #[test]
    fn lyapunov_of_one_pair_by_hand() {
        let tree = TreeNetwork::path(2).unwrap();
        let params = PotentialParams::new(1.0, 1.0, 1.0, 0.2).unwrap();
        let design = GainDesign {
            rho: 0.5,
            sigma: 1.0,
            eta: vec![1.0; 2],
            gamma: vec![1.0; 2],
            zeta: vec![1.0; 2],
            big_gamma: 1.0,
            b: vec![1.0; 2],
            d: vec![1.0; 2],
            delta: 0.0,
            f_bar: 0.0,
        };
        let models = [RobotModel::PointMass { mass: 2.0 }; 2];
        let states =
            [RobotState::new(Vec2::zeros(), Vec2::new(1.0, 0.0)), RobotState::new(Vec2::new(0.5, 0.0), Vec2::zeros())];
        // ψ(0.5) = 1/7; ∇₁ψ = 2·2/1.75²·(−0.5, 0); s₁ = (1 − 0.653061…, 0); s₂ = (0.653061…, 0).
        let g: f64 = 4.0 / (1.75 * 1.75) * 0.5;
        let expected = 0.5 * (2.0 * (1.0 - g).powi(2) / 2.0 + 2.0 * g * g / 2.0) + 1.0 / 7.0;
        let v = lyapunov_v(&states, &tree, &design, &params, &models).unwrap();
        assert!((v - expected).abs() < 1e-12);
        let rest = [RobotState::default(); 2];
        assert_eq!(lyapunov_v(&rest, &tree, &design, &params, &models).unwrap(), 0.0);
    }

    #[test]
    fn phi_stacks_velocities_and_edge_differences() {
        let tree = TreeNetwork::path(3).unwrap();
        let states = [
            RobotState::new(Vec2::zeros(), Vec2::new(3.0, 0.0)),
            RobotState::new(Vec2::new(0.0, 4.0), Vec2::zeros()),
            RobotState::new(Vec2::new(0.0, 4.0), Vec2::zeros()),
        ];
        assert!((phi_norm(&states, &tree) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn iss_functions_at_origin() {
        let c = IssConstants { kappa1: 4.0, kappa2: 9.0, rho: 0.5, big_gamma: 1.0 };
        assert_eq!(c.beta(2.0, 0.0), 12.0);
        assert!((c.beta(1.0, 4.0) - 6.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(c.alpha(0.0), 0.0);
        assert!((c.alpha(1.0) - 2.0f64.sqrt()).abs() < 1e-15);
    }
}
