//! Runs a scenario, writes its trace and summarises the closest approach to
//! the communication radius.
//!
//! ```text
//! cargo run -p swarmlink --example simulate -- scenarios/two_link_step.json /tmp/trace
//! ```

use std::path::PathBuf;

use swarmlink::simulator::{run, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let scenario_path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/two_link_step.json"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("swarmlink-trace"));

    let scenario = Scenario::load(&scenario_path)?;
    let trace = run(&scenario)?;
    trace.write(&out)?;

    let r = scenario.file.r;
    let (mut closest, mut when) = (f64::INFINITY, 0.0);
    for (k, row) in trace.edge_distances.iter().enumerate() {
        for &d in row {
            if r - d < closest {
                closest = r - d;
                when = trace.times[k];
            }
        }
    }
    let last = trace.len() - 1;
    println!("{} samples written to {}", trace.len(), out.display());
    println!("outcome: {:?}", trace.meta.outcome);
    println!("smallest link margin r - d = {closest:.4} at t = {when:.3} s");
    println!("V(0) = {:.4e}, V(end) = {:.4e}", trace.lyapunov[0], trace.lyapunov[last]);
    for (i, x) in trace.positions[last].iter().enumerate() {
        println!("robot {} ends at ({:+.4}, {:+.4})", i + 1, x.x, x.y);
    }
    Ok(())
}
