//! The `design`, `simulate` and `verify` commands.
//!
//! Exit codes: 0 success, 2 schema or usage error, 3 design infeasible,
//! 4 verification failure, 5 link broken.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{DesignConditions, DesignOutcome};
use crate::dynamics::ModelBounds;
use crate::error::{Error, Result};
use crate::simulator::{run, RunOutcome, Scenario, SimTrace};
use crate::verifier::{verify, CertificateReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;
pub const EXIT_LINK_BROKEN: i32 = 5;

pub const DESIGN_REPORT: &str = "design.json";
pub const CERTIFICATE_TEXT: &str = "certificate.txt";
pub const CERTIFICATE_JSON: &str = "certificate.json";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::DesignInfeasible(_) => EXIT_INFEASIBLE,
        Error::LinkBroken { .. } => EXIT_LINK_BROKEN,
        Error::PrerequisiteFailed(_) | Error::WrongProfile { .. } => EXIT_VERIFY_FAILED,
        _ => EXIT_USAGE,
    }
}

/// Command-line replacements for scenario fields.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
}

pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    let mut scenario = Scenario::from_json(&text)?;
    if let Some(seed) = overrides.seed {
        scenario = scenario.with_seed(seed);
    }
    if let Some(dt) = overrides.dt {
        scenario = scenario.with_dt(dt)?;
    }
    if let Some(duration) = overrides.duration {
        scenario = scenario.with_duration(duration)?;
    }
    Ok(scenario)
}

/// Output of `design`, re-checkable after a round trip through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub scenario_hash: String,
    pub bounds: Vec<ModelBounds>,
    pub design: DesignOutcome,
    pub feasible: bool,
    pub failures: Vec<String>,
}

impl DesignReport {
    /// Re-evaluates every condition from the scenario and the stored design.
    pub fn recheck(&self, scenario: &Scenario) -> Result<DesignConditions> {
        DesignConditions::evaluate(
            &scenario.tree,
            &self.bounds,
            &scenario.initial,
            &self.design.gains,
            &self.design.params,
        )
    }

    pub fn to_text(&self) -> String {
        let d = &self.design;
        let g = &d.gains;
        let c = &d.conditions;
        let mut out = String::new();
        let _ = writeln!(out, "design for scenario {}", self.scenario_hash);
        let _ = writeln!(
            out,
            "P = {:.9e}  Q = {:.9e}  r = {}  epsilon = {}  psi_max = {:.9e}",
            d.params.p, d.params.q, d.params.r, d.params.epsilon, d.params.psi_max
        );
        let _ = writeln!(
            out,
            "rho = {}  sigma = {}  Gamma = {}  Delta = {:.9e}  f_bar = {}",
            g.rho, g.sigma, g.big_gamma, g.delta, g.f_bar
        );
        let _ = writeln!(out, "rounds = {}  sigma halvings = {}", d.rounds, d.sigma_halvings);
        for i in 0..g.n_robots() {
            let b = &self.bounds[i];
            let _ = writeln!(
                out,
                "robot {}: B = {}  D = {:.6}  lambda1 = {:.6}  lambda2 = {:.6}  c = {:.6}",
                i + 1,
                g.b[i],
                g.d[i],
                b.lambda_min,
                b.lambda_max,
                b.coriolis
            );
        }
        let _ = writeln!(out, "conditions:");
        for (name, margin, holds) in c.rows() {
            let mark = if holds { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "  {mark}  {name:<20} margin {margin:>16.9e}");
        }
        let _ = writeln!(out, "feasible: {}", self.feasible);
        out
    }
}

pub fn cmd_design(scenario_path: &Path, overrides: &Overrides, out: Option<&Path>) -> Result<DesignReport> {
    let scenario = load_scenario(scenario_path, overrides)?;
    let bounds = scenario.bounds();
    let design = scenario.design_with(&bounds)?;
    let failures: Vec<String> = design.conditions.failures().into_iter().map(str::to_owned).collect();
    let report =
        DesignReport { scenario_hash: scenario.hash(), bounds, feasible: failures.is_empty(), failures, design };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(DESIGN_REPORT), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

/// Runs the scenario and writes the trace; a broken link is returned as an
/// error after the partial trace has been written.
pub fn cmd_simulate(scenario_path: &Path, out: &Path, overrides: &Overrides) -> Result<SimTrace> {
    let scenario = load_scenario(scenario_path, overrides)?;
    let trace = run(&scenario)?;
    trace.write(out)?;
    if let RunOutcome::LinkBroken { t, i, j } = trace.meta.outcome {
        return Err(Error::LinkBroken { t, i, j });
    }
    Ok(trace)
}

/// Verifies the trace in `dir` and writes the certificate next to it.
pub fn cmd_verify(dir: &Path) -> Result<CertificateReport> {
    let trace = SimTrace::read(dir)?;
    let report = verify(&trace)?;
    std::fs::write(dir.join(CERTIFICATE_TEXT), report.to_text())?;
    std::fs::write(dir.join(CERTIFICATE_JSON), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// A parsed batch command.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Design { scenario: PathBuf, out: Option<PathBuf>, overrides: Overrides },
    Simulate { scenario: PathBuf, out: PathBuf, overrides: Overrides },
    Verify { dir: PathBuf },
}

/// Executes a command, prints its report and returns the process exit code.
pub fn execute(command: &Command) -> i32 {
    let result = match command {
        Command::Design { scenario, out, overrides } => cmd_design(scenario, overrides, out.as_deref()).map(|r| {
            print!("{}", r.to_text());
            if r.feasible {
                EXIT_OK
            } else {
                EXIT_INFEASIBLE
            }
        }),
        Command::Simulate { scenario, out, overrides } => cmd_simulate(scenario, out, overrides).map(|t| {
            println!("wrote {} samples to {} (scenario {})", t.len(), out.display(), t.meta.scenario_hash);
            EXIT_OK
        }),
        Command::Verify { dir } => cmd_verify(dir).map(|r| {
            print!("{}", r.to_text());
            if r.verdict {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
