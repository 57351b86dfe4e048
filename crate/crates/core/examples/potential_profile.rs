//! The link potential across the radius and the constant selection for a
//! given swarm size.

use swarmlink::potential::{grad_psi, psi, q_condition, select_p, select_q, PotentialParams};
use swarmlink::Vec2;

fn main() -> swarmlink::Result<()> {
    let (r, epsilon, n) = (1.0, 0.5, 5);
    let q = select_q(r, epsilon, n);
    let delta = 0.8;
    let p = select_p(r, epsilon, n, q, delta, 0.0);
    let params = PotentialParams::new(p, q, r, epsilon)?;
    println!(
        "N = {n}: Q = {q:.6} (condition {:.4e}), P = {p:.6}, psi_max = {:.6}",
        q_condition(r, epsilon, n, q),
        params.psi_max
    );
    println!("{:>6} {:>12} {:>12}", "d", "psi", "|grad psi|");
    for k in 0..=10 {
        let d = 0.099 * k as f64;
        let g = grad_psi(&Vec2::new(d, 0.0), &Vec2::zeros(), &params)?;
        println!("{d:>6.3} {:>12.6} {:>12.6}", psi(d * d, &params)?, g.norm());
    }
    Ok(())
}
