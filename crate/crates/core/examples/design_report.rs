//! Designs gains for a scenario and prints every design condition.
//!
//! ```text
//! cargo run -p swarmlink --example design_report -- scenarios/tree5_mixed.json
//! ```

use std::path::PathBuf;

use swarmlink::cli::{cmd_design, Overrides};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/tree5_mixed.json"));
    match cmd_design(&path, &Overrides::default(), None) {
        Ok(report) => print!("{}", report.to_text()),
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            std::process::exit(swarmlink::cli::exit_code(&e));
        }
    }
}
