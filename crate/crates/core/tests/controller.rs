mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use swarmlink::controller::{
    gain_k, lambda_ij, mismatch_bounds, mismatch_delta, theta, theta_dot, Controller, DesignProblem, Heuristics,
};
use swarmlink::dynamics::RobotState;
use swarmlink::simulator::Scenario;
use swarmlink::{Error, Vec2};

fn edges_of(scenario: &Scenario) -> Vec<(usize, usize)> {
    scenario.file.edges.iter().map(|e| (e[0] - 1, e[1] - 1)).collect()
}

#[test]
fn designs_of_random_scenarios_pass_the_independent_checker() {
    for seed in 0..20 {
        let scenario = random_scenario(seed, serde_json::Value::Null, 1.0);
        let bounds = scenario.bounds();
        let design = scenario.design_with(&bounds).unwrap();
        assert!(design.conditions.all_hold(), "seed {seed}: {:?}", design.conditions.failures());
        for f in check_design_independently(&scenario, &design, &bounds) {
            assert!(f.holds, "seed {seed}: {} margin {:e}", f.name, f.margin);
        }
    }
}

#[test]
fn infeasible_problems_are_rejected() {
    let scenario = bundled("path3_default");
    let bounds = scenario.bounds();
    let problem = |r: f64, epsilon: f64, f_bar: f64| DesignProblem {
        tree: &scenario.tree,
        bounds: &bounds,
        initial: &scenario.initial,
        r,
        epsilon,
        f_bar,
        heuristics: Heuristics::default(),
    };
    for (r, eps, f) in [(1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 0.5, -1.0), (1.0, 0.5, f64::NAN)] {
        let result = swarmlink::controller::design_gains(&problem(r, eps, f));
        assert!(matches!(result, Err(Error::DesignInfeasible(_))), "r {r} eps {eps} f {f}");
    }
    // Initial links of length 0.3 leave no margin once epsilon reaches 0.75.
    let result = swarmlink::controller::design_gains(&problem(1.0, 0.75, 1.0));
    assert!(matches!(result, Err(Error::DesignInfeasible(msg)) if msg.contains("initial edge")));
}

#[test]
fn control_law_matches_its_definition() {
    let scenario = random_scenario(4, serde_json::Value::Null, 1.0);
    let bounds = scenario.bounds();
    let design = scenario.design_with(&bounds).unwrap();
    let (g, params) = (&design.gains, &design.params);
    let controller = Controller::new(scenario.tree.clone(), *params, g.clone(), bounds.clone());
    let edges = edges_of(&scenario);
    let x: Vec<Vec2> = scenario.initial.iter().map(|s| s.x).collect();
    let v: Vec<Vec2> = (0..x.len()).map(|i| Vec2::new(0.1 * i as f64, -0.05)).collect();
    for (i, out) in controller.control_all(&x, &v).unwrap().into_iter().enumerate() {
        let th = theta_ref(i, &x, &edges, params.p, params.q, params.r);
        let s = v[i] + th * g.sigma;
        let k = gain_k(i, &x, &scenario.tree, g, params, &bounds[i]).unwrap();
        let expected = -s * k - v[i] * g.d[i] - th * g.b[i];
        assert!((out.u - expected).norm() <= 1e-12 * expected.norm().max(1.0));
        assert!((out.theta - th).norm() <= 1e-12 * th.norm().max(1.0));
        let lambdas: f64 = edges
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
            .map(|j| lambda_ij((x[i] - x[j]).norm_squared(), &bounds[i], &g.splitters(i), params).unwrap())
            .sum();
        assert!((out.lambda_sum - lambdas).abs() <= 1e-12 * lambdas.max(1.0));
        let residual = g.residual_gain(i, out.k, out.lambda_sum);
        assert!((residual - 0.5 * g.rho * bounds[i].lambda_max).abs() <= 1e-12 * out.k.max(1.0));
    }
}

#[test]
fn frozen_gains_hold_their_initial_values() {
    let scenario = random_scenario(5, serde_json::Value::Null, 1.0);
    let bounds = scenario.bounds();
    let design = scenario.design_with(&bounds).unwrap();
    let mut controller = Controller::new(scenario.tree.clone(), design.params, design.gains.clone(), bounds);
    let x0: Vec<Vec2> = scenario.initial.iter().map(|s| s.x).collect();
    let k0: Vec<f64> = controller.control_all(&x0, &[Vec2::zeros(); 5]).unwrap().iter().map(|o| o.k).collect();
    controller.freeze_gains(&x0).unwrap();
    let moved: Vec<Vec2> = x0.iter().map(|x| x * 1.2).collect();
    let k1: Vec<f64> = controller.control_all(&moved, &[Vec2::zeros(); 5]).unwrap().iter().map(|o| o.k).collect();
    assert_eq!(k0, k1);
}

#[test]
fn mismatch_bound_holds_at_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for seed in 0..6 {
        let scenario = random_scenario(seed, serde_json::Value::Null, 1.0);
        let bounds = scenario.bounds();
        let design = scenario.design_with(&bounds).unwrap();
        let edges = edges_of(&scenario);
        for _ in 0..200 {
            let x = random_configuration(5, &edges, 0.97, &mut rng);
            let v: Vec<Vec2> =
                (0..5).map(|_| Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
            for i in 0..5 {
                let b = mismatch_bounds(
                    i,
                    &x,
                    &v,
                    &scenario.tree,
                    &design.gains,
                    &design.params,
                    &scenario.models[i],
                    &bounds[i],
                )
                .unwrap();
                for (lhs, rhs) in [b.inertia, b.coriolis, b.total] {
                    assert!(lhs <= rhs + 1e-9 * rhs.abs().max(1.0), "seed {seed}: {lhs} > {rhs}");
                }
                let delta = mismatch_delta(i, &x, &v, &scenario.tree, &design.params, &scenario.models[i]).unwrap();
                let s = v[i] + theta(i, &x, &scenario.tree, &design.params).unwrap() * design.gains.sigma;
                assert!((s.dot(&delta) - b.total.0).abs() <= 1e-9 * b.total.1.abs().max(1.0));
            }
        }
    }
}

#[test]
fn theta_rejects_a_broken_link() {
    let scenario = bundled("path3_default");
    let design = scenario.design().unwrap();
    let x = vec![Vec2::zeros(), Vec2::new(1.5, 0.0), Vec2::new(1.8, 0.0)];
    assert!(theta(0, &x, &scenario.tree, &design.params).is_err());
}

#[test]
fn heuristics_must_be_positive() {
    let mut file = bundled("path3_default").file;
    file.heuristics.rho = -1.0;
    let scenario = Scenario::from_file(file);
    assert!(scenario.is_err() || scenario.unwrap().design().is_err());
}

proptest! {
    #[test]
    fn theta_dot_is_the_time_derivative_of_theta(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..7);
        let edges = random_tree(n, &mut rng);
        let tree = swarmlink::graph::TreeNetwork::new(n, &one_based(&edges)).unwrap();
        let params = swarmlink::potential::PotentialParams::new(rng.random_range(0.5..5.0), rng.random_range(0.05..1.0), 1.0, 0.5).unwrap();
        let x = random_configuration(n, &edges, 0.9, &mut rng);
        let v: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        for i in 0..n {
            let fd = derivative(|h| {
                let moved: Vec<Vec2> = x.iter().zip(&v).map(|(a, b)| a + b * h).collect();
                let t = theta_ref(i, &moved, &edges, params.p, params.q, params.r);
                [t.x, t.y]
            }, 1e-4);
            let exact = theta_dot(i, &x, &v, &tree, &params).unwrap();
            prop_assert!((exact - Vec2::from(fd)).norm() <= 1e-6 * exact.norm().max(1.0));
        }
    }

    #[test]
    fn gains_grow_as_links_stretch(len_a in 0.0f64..0.9, len_b in 0.0f64..0.9) {
        let doc = json!({
            "schema_version": 1,
            "edges": [[1, 2]],
            "robots": [
                {"model": {"kind": "point_mass", "mass": 1.0}, "x": [0.0, 0.0]},
                {"model": {"kind": "point_mass", "mass": 1.0}, "x": [0.2, 0.0]}
            ],
            "r": 1.0, "epsilon": 0.5, "f_bar": 1.0,
            "duration": 1.0
        });
        let scenario = Scenario::from_json(&doc.to_string()).unwrap();
        let bounds = scenario.bounds();
        let design = scenario.design_with(&bounds).unwrap();
        let k = |len: f64| {
            let x = [Vec2::zeros(), Vec2::new(len, 0.0)];
            gain_k(1, &x, &scenario.tree, &design.gains, &design.params, &bounds[1]).unwrap()
        };
        let (lo, hi) = (len_a.min(len_b), len_a.max(len_b));
        prop_assert!(k(lo) <= k(hi));
    }
}

#[test]
fn surface_state_is_consistent_with_robot_state() {
    let st = RobotState::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, -0.5));
    let s = swarmlink::controller::surface(&st, &Vec2::new(2.0, 2.0), 0.25);
    assert_eq!(s, Vec2::new(1.0, 0.0));
}
