//! Shows that the certificate discriminates: the same scenario verified with
//! and without its deliberate invalidation.

use std::path::PathBuf;

use swarmlink::simulator::{run, Scenario};
use swarmlink::verifier::verify;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for name in ["negative_force_3fbar", "negative_freeze_gains"] {
        let negative = Scenario::load(dir.join(format!("{name}.json")))?;
        let mut file = negative.file.clone();
        file.negative_control = None;
        let baseline = Scenario::from_file(file)?;
        for (label, scenario) in [("invalidated", &negative), ("baseline", &baseline)] {
            let report = verify(&run(scenario)?)?;
            println!("{name} ({label}): verdict {}, failing {:?}", report.verdict, report.failures());
        }
    }
    Ok(())
}
