//! Simulates a scenario and prints its numerical certificate.
//!
//! ```text
//! cargo run -p swarmlink --example verify_trace -- scenarios/sync_zero_force.json
//! ```

use std::path::PathBuf;

use swarmlink::simulator::{run, Scenario};
use swarmlink::verifier::verify;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/sync_zero_force.json"));
    let trace = run(&Scenario::load(&path)?)?;
    let report = verify(&trace)?;
    print!("{}", report.to_text());
    if !report.verdict {
        std::process::exit(swarmlink::cli::EXIT_VERIFY_FAILED);
    }
    Ok(())
}
