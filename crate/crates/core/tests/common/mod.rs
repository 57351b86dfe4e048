//! Reference implementations used as oracles by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use serde_json::json;
use swarmlink::simulator::Scenario;
use swarmlink::Vec2;

pub type Matrix = Vec<Vec<f64>>;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(mut a: Matrix) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Weighted graph Laplacian from degrees, zero-based edges.
pub fn laplacian(n: usize, edges: &[(usize, usize)], weights: &[f64]) -> Matrix {
    let mut l = vec![vec![0.0; n]; n];
    for (&(i, j), &w) in edges.iter().zip(weights) {
        l[i][i] += w;
        l[j][j] += w;
        l[i][j] -= w;
        l[j][i] -= w;
    }
    l
}

/// Incidence matrix: column `e` carries -1 at the lower endpoint, +1 at the higher one.
pub fn incidence(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut d = vec![vec![0.0; edges.len()]; n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        d[a.min(b)][e] = -1.0;
        d[a.max(b)][e] = 1.0;
    }
    d
}

/// `Dᵀ D`.
pub fn edge_laplacian(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let d = incidence(n, edges);
    let m = edges.len();
    (0..m).map(|e| (0..m).map(|f| (0..n).map(|k| d[k][e] * d[k][f]).sum()).collect()).collect()
}

/// Zero-based edges of a random tree: vertex `k` attaches to a random earlier vertex.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    (1..n).map(|k| (rng.random_range(0..k), k)).collect()
}

pub fn path_tree(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|k| (k - 1, k)).collect()
}

pub fn star_tree(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|k| (0, k)).collect()
}

pub fn one_based(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect()
}

/// Positions with every tree edge shorter than `max_len`; `edges` must list
/// each vertex after its parent.
pub fn random_configuration<R: Rng>(n: usize, edges: &[(usize, usize)], max_len: f64, rng: &mut R) -> Vec<Vec2> {
    let mut x = vec![Vec2::zeros(); n];
    x[0] = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    for &(parent, child) in edges {
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let len = max_len * rng.random::<f64>();
        x[child] = x[parent] + Vec2::new(angle.cos(), angle.sin()) * len;
    }
    x
}

pub fn psi_ref(d2: f64, p: f64, q: f64, r: f64) -> f64 {
    p * d2 / (r * r - d2 + q)
}

/// Gradient of `ψ(‖xi − xj‖)` with respect to `xi`.
pub fn grad_psi_ref(xi: Vec2, xj: Vec2, p: f64, q: f64, r: f64) -> Vec2 {
    let d = xi - xj;
    let den = r * r - d.norm_squared() + q;
    d * (2.0 * p * (r * r + q) / (den * den))
}

pub fn theta_ref(i: usize, x: &[Vec2], edges: &[(usize, usize)], p: f64, q: f64, r: f64) -> Vec2 {
    let mut t = Vec2::zeros();
    for &(a, b) in edges {
        if a == i {
            t += grad_psi_ref(x[a], x[b], p, q, r);
        } else if b == i {
            t += grad_psi_ref(x[b], x[a], p, q, r);
        }
    }
    t
}

/// `Λ_ij` written out term by term.
#[allow(clippy::too_many_arguments)]
pub fn lambda_ref(d2: f64, lam2: f64, c: f64, eta: f64, gamma: f64, zeta: f64, p: f64, q: f64, r: f64) -> f64 {
    let den = r * r - d2 + q;
    let k = p * p * (r * r + q) * (r * r + q);
    16.0 * lam2 * lam2 * k * d2 * d2 / (eta * den.powi(6))
        + lam2 * lam2 * k / (gamma * den.powi(4))
        + c * c * k * d2 / (2.0 * zeta * den.powi(4))
}

/// Richardson-extrapolated central difference of a vector-valued function.
pub fn derivative<const N: usize>(f: impl Fn(f64) -> [f64; N], h: f64) -> [f64; N] {
    let central = |h: f64| {
        let (a, b) = (f(h), f(-h));
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = (a[k] - b[k]) / (2.0 * h);
        }
        out
    };
    let (coarse, fine) = (central(h), central(0.5 * h));
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
    }
    out
}

/// Two-link arm parameters `(m1, m2, l1, lc1, lc2, i1, i2)`.
#[derive(Debug, Clone, Copy)]
pub struct Arm {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub i1: f64,
    pub i2: f64,
}

impl Arm {
    pub fn model_json(&self) -> serde_json::Value {
        json!({"kind": "two_link", "m1": self.m1, "m2": self.m2, "l1": self.l1,
               "lc1": self.lc1, "lc2": self.lc2, "i1": self.i1, "i2": self.i2})
    }

    pub fn model(&self) -> swarmlink::dynamics::RobotModel {
        serde_json::from_value(self.model_json()).unwrap()
    }

    /// Centres of mass of both links at joint angles `q`.
    fn centres(&self, q: [f64; 2]) -> [[f64; 2]; 2] {
        let (c1, s1) = (q[0].cos(), q[0].sin());
        let (c12, s12) = ((q[0] + q[1]).cos(), (q[0] + q[1]).sin());
        [[self.lc1 * c1, self.lc1 * s1], [self.l1 * c1 + self.lc2 * c12, self.l1 * s1 + self.lc2 * s12]]
    }

    /// Inertia matrix from the kinetic energy: `M = Σ m Jᵀ J + rotational terms`,
    /// with the centre-of-mass Jacobians taken numerically.
    pub fn mass_by_energy(&self, q: [f64; 2]) -> [[f64; 2]; 2] {
        let jac = |axis: usize| {
            derivative(
                |h| {
                    let mut qq = q;
                    qq[axis] += h;
                    let c = self.centres(qq);
                    [c[0][0], c[0][1], c[1][0], c[1][1]]
                },
                1e-4,
            )
        };
        let (j0, j1) = (jac(0), jac(1));
        let mut m = [[0.0; 2]; 2];
        let cols = [j0, j1];
        for a in 0..2 {
            for b in 0..2 {
                let link1 = cols[a][0] * cols[b][0] + cols[a][1] * cols[b][1];
                let link2 = cols[a][2] * cols[b][2] + cols[a][3] * cols[b][3];
                m[a][b] = self.m1 * link1 + self.m2 * link2;
            }
        }
        // Link 1 turns at q̇1, link 2 at q̇1 + q̇2.
        m[0][0] += self.i1 + self.i2;
        m[0][1] += self.i2;
        m[1][0] += self.i2;
        m[1][1] += self.i2;
        m
    }

    /// `C(q, q̇) w` with `C_kj = Σ_i c_ijk q̇_i` built from the Christoffel
    /// symbols of `M`.
    pub fn coriolis_applied(&self, q: [f64; 2], qd: [f64; 2], w: [f64; 2]) -> [f64; 2] {
        let dm = |axis: usize| {
            derivative(
                |h| {
                    let mut qq = q;
                    qq[axis] += h;
                    let m = self.mass_by_energy(qq);
                    [m[0][0], m[0][1], m[1][0], m[1][1]]
                },
                1e-3,
            )
        };
        let d = [dm(0), dm(1)];
        let dmat = |axis: usize, a: usize, b: usize| d[axis][2 * a + b];
        let mut out = [0.0; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let christoffel = 0.5 * (dmat(i, k, j) + dmat(j, k, i) - dmat(k, i, j));
                    out[k] += christoffel * qd[i] * w[j];
                }
            }
        }
        out
    }
}

pub fn arm_of(model: &swarmlink::dynamics::RobotModel) -> Option<Arm> {
    match *model {
        swarmlink::dynamics::RobotModel::TwoLink { m1, m2, l1, lc1, lc2, i1, i2 } => {
            Some(Arm { m1, m2, l1, lc1, lc2, i1, i2 })
        }
        swarmlink::dynamics::RobotModel::PointMass { .. } => None,
    }
}

/// Inertia of any supported robot, arms through the energy method.
pub fn mass_ref(model: &swarmlink::dynamics::RobotModel, x: Vec2) -> [[f64; 2]; 2] {
    match (arm_of(model), model) {
        (Some(arm), _) => arm.mass_by_energy([x.x, x.y]),
        (None, swarmlink::dynamics::RobotModel::PointMass { mass }) => [[*mass, 0.0], [0.0, *mass]],
        _ => unreachable!(),
    }
}

pub fn mat_vec(m: [[f64; 2]; 2], v: Vec2) -> Vec2 {
    Vec2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
}

pub const ARMS: [Arm; 3] = [
    Arm { m1: 1.0, m2: 0.8, l1: 0.5, lc1: 0.25, lc2: 0.2, i1: 0.02, i2: 0.01 },
    Arm { m1: 1.2, m2: 0.8, l1: 0.6, lc1: 0.3, lc2: 0.25, i1: 0.04, i2: 0.02 },
    Arm { m1: 0.5, m2: 0.5, l1: 0.5, lc1: 0.25, lc2: 0.25, i1: 0.02, i2: 0.02 },
];

/// A seeded five-robot scenario: path or random tree, mixed robots, starts
/// inside the initial margin, bounded random force.
pub fn random_scenario(seed: u64, force: serde_json::Value, duration: f64) -> Scenario {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = 5;
    let edges = if seed.is_multiple_of(2) { path_tree(n) } else { random_tree(n, &mut rng) };
    let (r, epsilon) = (1.0, 0.5);
    let x = random_configuration(n, &edges, 0.95 * (r - epsilon), &mut rng);
    let robots: Vec<serde_json::Value> = x
        .iter()
        .map(|xi| {
            let model = if rng.random_bool(0.5) {
                json!({"kind": "point_mass", "mass": rng.random_range(0.5..2.0)})
            } else {
                ARMS[rng.random_range(0..ARMS.len())].model_json()
            };
            let v = [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)];
            json!({"model": model, "x": [xi.x, xi.y], "v": v})
        })
        .collect();
    let force = match force {
        serde_json::Value::Null => json!({"kind": "bounded_random", "seed": seed}),
        other => other,
    };
    let doc = json!({
        "schema_version": 1,
        "name": format!("random-{seed}"),
        "edges": one_based(&edges),
        "robots": robots,
        "r": r, "epsilon": epsilon, "f_bar": 1.0,
        "force": force,
        "duration": duration,
    });
    Scenario::from_json(&doc.to_string()).unwrap()
}

pub fn bundled(name: &str) -> Scenario {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    Scenario::load(&path).unwrap()
}

pub const FEASIBLE_BUNDLED: [&str; 6] =
    ["path3_default", "tree5_mixed", "sync_zero_force", "two_link_step", "sinusoid_path3", "live_teleop"];

/// One design inequality re-derived from scratch.
#[derive(Debug, Clone)]
pub struct Finding {
    pub name: &'static str,
    pub margin: f64,
    pub holds: bool,
}

/// Re-checks a finished design from the scenario data alone.
pub fn check_design_independently(
    scenario: &Scenario,
    design: &swarmlink::controller::DesignOutcome,
    bounds: &[swarmlink::dynamics::ModelBounds],
) -> Vec<Finding> {
    let file = &scenario.file;
    let n = file.robots.len();
    let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0] - 1, e[1] - 1)).collect();
    let lambda_l = jacobi_eigenvalues(laplacian(n, &edges, &vec![1.0; edges.len()]))[1];
    let (r, eps, f_bar) = (file.r, file.epsilon, file.f_bar);
    let g = &design.gains;
    let (p, q) = (design.params.p, design.params.q);
    let (rho, sigma) = (g.rho, g.sigma);
    let weight = |i: usize| g.b[i] + sigma * g.d[i];
    let neighbours = |i: usize| -> Vec<usize> {
        edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    };
    let x: Vec<Vec2> = file.robots.iter().map(|rb| Vec2::from(rb.x)).collect();
    let v: Vec<Vec2> = file.robots.iter().map(|rb| Vec2::from(rb.v)).collect();
    let mut out = Vec::new();
    let mut push = |name, margin: f64, holds: bool| out.push(Finding { name, margin, holds });

    let a = r * r - (r - eps) * (r - eps);
    let line1 = (r * r - (n as f64 - 1.0) * (r - eps) * (r - eps)) * q + a * r * r;
    push("Q condition", line1, line1 > 0.0);

    let denom = (a + q) * r * r - (n as f64 - 1.0) * q * (r - eps) * (r - eps);
    let p_headroom = (a + q) * q * g.delta / denom;
    push("P above the headroom bound", p - p_headroom, denom > 0.0 && p > p_headroom);

    let damping = (0..n)
        .map(|i| {
            let need: f64 =
                neighbours(i).iter().map(|&j| g.eta[i] + g.gamma[i] + g.zeta[i] + g.eta[j] + g.gamma[j]).sum();
            g.d[i] - 2.0 * sigma * need + 1e-12 * g.d[i].abs().max(1.0)
        })
        .fold(f64::INFINITY, f64::min);
    push("damping residual non-negative", damping, damping >= 0.0);

    let worst = (0..n).map(|i| weight(i) / (sigma * g.b[i])).fold(0.0, f64::max);
    let p_decay = rho * (r * r + q) / (4.0 * lambda_l) * worst;
    push("P above the decay bound", p - p_decay * (1.0 - 1e-12), p >= p_decay * (1.0 - 1e-12));

    let mut kinetic = 0.0;
    for i in 0..n {
        let s = v[i] + theta_ref(i, &x, &edges, p, q, r) * sigma;
        kinetic += bounds[i].lambda_max / weight(i) * s.norm_squared();
    }
    let delta = 0.5 * kinetic + f_bar * f_bar / (4.0 * rho * g.big_gamma);
    let tol = 1e-9 * delta.max(1.0);
    push("Delta fixed point", tol - (delta - g.delta).abs(), (delta - g.delta).abs() <= tol);

    let vp0: f64 = edges.iter().map(|&(i, j)| psi_ref((x[i] - x[j]).norm_squared(), p, q, r)).sum();
    let psi_max = p * r * r / q;
    push(
        "V_p(0) + Delta below psi_max",
        psi_max - vp0 - g.delta,
        vp0 + g.delta < psi_max && (design.params.psi_max - psi_max).abs() <= 1e-12 * psi_max,
    );

    let mut schedule = f64::INFINITY;
    for i in 0..n {
        let k = swarmlink::controller::gain_k(i, &x, &scenario.tree, g, &design.params, &bounds[i]).unwrap();
        let lambdas: f64 = neighbours(i)
            .iter()
            .map(|&j| {
                lambda_ref(
                    (x[i] - x[j]).norm_squared(),
                    bounds[i].lambda_max,
                    bounds[i].coriolis,
                    g.eta[i],
                    g.gamma[i],
                    g.zeta[i],
                    p,
                    q,
                    r,
                )
            })
            .sum();
        let user = if i == 0 { g.big_gamma / (weight(0) * weight(0)) } else { 0.0 };
        let k_bar = k - sigma * lambdas - user;
        schedule = schedule.min(k_bar - 0.5 * rho * bounds[i].lambda_max + 1e-12 * k.max(1.0));
    }
    push("residual gain at t = 0", schedule, schedule >= 0.0);
    out
}
