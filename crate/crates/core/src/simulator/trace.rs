use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::{Scenario, ScenarioFile};
use crate::controller::DesignOutcome;
use crate::dynamics::{ModelBounds, RobotState};
use crate::error::{Error, Result};
use crate::graph::TreeNetwork;
use crate::Vec2;

pub const TRACE_CSV: &str = "trace.csv";
pub const TRACE_META: &str = "trace.meta.json";
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// One recorded instant of the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub states: Vec<RobotState>,
    pub controls: Vec<Vec2>,
    pub gains: Vec<f64>,
    pub force: Vec2,
    pub edge_distances: Vec<f64>,
    pub potential: f64,
    pub lyapunov: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    /// One-based labels of the first link to reach `r`.
    LinkBroken {
        t: f64,
        i: usize,
        j: usize,
    },
}

/// Sidecar document written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub schema_version: u32,
    pub scenario: ScenarioFile,
    pub scenario_hash: String,
    pub seed: Option<u64>,
    pub design: DesignOutcome,
    pub bounds: Vec<ModelBounds>,
    pub columns: Vec<String>,
    pub n_samples: usize,
    pub outcome: RunOutcome,
}

/// Column-oriented record of a run, one entry per integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Vec2>>,
    pub velocities: Vec<Vec<Vec2>>,
    pub controls: Vec<Vec<Vec2>>,
    pub gains: Vec<Vec<f64>>,
    pub force: Vec<Vec2>,
    pub edge_distances: Vec<Vec<f64>>,
    pub potential: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub meta: TraceMeta,
}

impl SimTrace {
    pub fn new(scenario: &Scenario, design: DesignOutcome, bounds: Vec<ModelBounds>) -> Self {
        Self {
            times: Vec::new(),
            positions: Vec::new(),
            velocities: Vec::new(),
            controls: Vec::new(),
            gains: Vec::new(),
            force: Vec::new(),
            edge_distances: Vec::new(),
            potential: Vec::new(),
            lyapunov: Vec::new(),
            meta: TraceMeta {
                schema_version: TRACE_SCHEMA_VERSION,
                scenario: scenario.file.clone(),
                scenario_hash: scenario.hash(),
                seed: scenario.file.force.seed(),
                design,
                bounds,
                columns: columns(&scenario.tree),
                n_samples: 0,
                outcome: RunOutcome::Completed,
            },
        }
    }

    pub fn push(&mut self, s: Sample) {
        self.times.push(s.t);
        self.positions.push(s.states.iter().map(|st| st.x).collect());
        self.velocities.push(s.states.iter().map(|st| st.v).collect());
        self.controls.push(s.controls);
        self.gains.push(s.gains);
        self.force.push(s.force);
        self.edge_distances.push(s.edge_distances);
        self.potential.push(s.potential);
        self.lyapunov.push(s.lyapunov);
        self.meta.n_samples = self.times.len();
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_robots(&self) -> usize {
        self.meta.scenario.robots.len()
    }

    pub fn link_broken(&self) -> bool {
        matches!(self.meta.outcome, RunOutcome::LinkBroken { .. })
    }

    pub fn states(&self, k: usize) -> Vec<RobotState> {
        self.positions[k].iter().zip(&self.velocities[k]).map(|(x, v)| RobotState::new(*x, *v)).collect()
    }

    pub fn max_force(&self) -> f64 {
        self.force.iter().map(|f| f.norm()).fold(0.0, f64::max)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::from_file(self.meta.scenario.clone())
            .map_err(|e| Error::TraceFormat(format!("embedded scenario: {e}")))
    }

    /// Writes `trace.csv` and `trace.meta.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(TRACE_CSV))?));
        w.write_record(&self.meta.columns).map_err(csv_error)?;
        let mut row = Vec::with_capacity(self.meta.columns.len());
        for k in 0..self.len() {
            row.clear();
            row.push(self.times[k]);
            for i in 0..self.n_robots() {
                let (x, v, u) = (self.positions[k][i], self.velocities[k][i], self.controls[k][i]);
                row.extend([x.x, x.y, v.x, v.y, u.x, u.y, self.gains[k][i]]);
            }
            row.extend([self.force[k].x, self.force[k].y]);
            row.extend(&self.edge_distances[k]);
            row.extend([self.potential[k], self.lyapunov[k]]);
            w.serialize(&row).map_err(csv_error)?;
        }
        w.flush()?;
        let meta = BufWriter::new(File::create(dir.join(TRACE_META))?);
        serde_json::to_writer_pretty(meta, &self.meta)?;
        Ok(())
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: TraceMeta = serde_json::from_reader(BufReader::new(File::open(dir.join(TRACE_META))?))
            .map_err(|e| Error::TraceFormat(format!("{TRACE_META}: {e}")))?;
        if meta.schema_version != TRACE_SCHEMA_VERSION {
            return Err(Error::TraceFormat(format!("unsupported trace schema_version {}", meta.schema_version)));
        }
        let scenario = Scenario::from_file(meta.scenario.clone()).map_err(|e| Error::TraceFormat(e.to_string()))?;
        let expected = columns(&scenario.tree);
        if meta.columns != expected {
            return Err(Error::TraceFormat("column list does not match the embedded scenario".into()));
        }
        let n = scenario.n_robots();
        let n_edges = scenario.tree.n_edges();
        let declared = meta.n_samples;
        let mut r = csv::Reader::from_reader(BufReader::new(File::open(dir.join(TRACE_CSV))?));
        let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
        if header != expected {
            return Err(Error::TraceFormat(format!("{TRACE_CSV}: header does not match {TRACE_META}")));
        }
        let mut trace = SimTrace {
            times: Vec::new(),
            positions: Vec::new(),
            velocities: Vec::new(),
            controls: Vec::new(),
            gains: Vec::new(),
            force: Vec::new(),
            edge_distances: Vec::new(),
            potential: Vec::new(),
            lyapunov: Vec::new(),
            meta,
        };
        let mut values = Vec::with_capacity(expected.len());
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(csv_error)?;
            values.clear();
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::TraceFormat(format!("row {}, column {}: cannot parse {field:?}", line + 1, expected[col]))
                })?;
                values.push(v);
            }
            let mut it = values.iter().copied();
            let mut next = || it.next().expect("record length checked by the csv reader");
            let t = next();
            let mut states = Vec::with_capacity(n);
            let mut controls = Vec::with_capacity(n);
            let mut gains = Vec::with_capacity(n);
            for _ in 0..n {
                let x = Vec2::new(next(), next());
                let v = Vec2::new(next(), next());
                states.push(RobotState::new(x, v));
                controls.push(Vec2::new(next(), next()));
                gains.push(next());
            }
            let force = Vec2::new(next(), next());
            let edge_distances = (0..n_edges).map(|_| next()).collect();
            let potential = next();
            let lyapunov = next();
            trace.push(Sample { t, states, controls, gains, force, edge_distances, potential, lyapunov });
        }
        if trace.len() != declared {
            return Err(Error::TraceFormat(format!(
                "{TRACE_CSV} has {} rows, metadata declares {declared}",
                trace.len()
            )));
        }
        Ok(trace)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::TraceFormat(e.to_string())
}

/// Stable CSV column order: `t`, per-robot `x, ẋ, u, K`, the user force,
/// per-edge distances, `V_p`, `V`.
pub fn columns(tree: &TreeNetwork) -> Vec<String> {
    let mut cols = vec!["t".to_owned()];
    for i in 1..=tree.n_vertices() {
        for name in ["x0", "x1", "v0", "v1", "u0", "u1", "K"] {
            cols.push(format!("r{i}_{name}"));
        }
    }
    cols.extend(["f0".to_owned(), "f1".to_owned()]);
    for e in tree.edges() {
        let (i, j) = e.labels();
        cols.push(format!("d_{i}_{j}"));
    }
    cols.extend(["Vp".to_owned(), "V".to_owned()]);
    cols
}
