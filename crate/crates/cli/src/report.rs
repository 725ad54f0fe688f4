//! Reports are the observable output of a run: one entry per fragment
//! build, one per command, in scene order.  Serialized bytes depend only
//! on the scene text and the engine version; wall-clock timings go to
//! stderr, never into the report.

use std::fmt::Write as _;

use motives::module::{FpModule, ModuleInvariants, ModuleMap};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentReport {
    pub status: String,
    pub vertices: Vec<String>,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandReport {
    pub command: String,
    pub status: String,
    pub data: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub engine: String,
    pub scene: String,
    pub digest: String,
    pub ring: String,
    pub fragments: Vec<(String, FragmentReport)>,
    pub commands: Vec<CommandReport>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl Report {
    pub fn structured(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "engine   {}", self.engine);
        let _ = writeln!(out, "scene    {}", self.scene);
        let _ = writeln!(out, "digest   {}", self.digest);
        let _ = writeln!(out, "ring     {}", self.ring);
        for (name, fr) in &self.fragments {
            let _ = writeln!(out, "fragment {name}: {}", fr.status);
            for v in &fr.vertices {
                let _ = writeln!(out, "  vertex {v}");
            }
            if fr.status != "ok" {
                let _ = writeln!(out, "  {}", compact(&fr.detail));
            }
        }
        for c in &self.commands {
            let _ = writeln!(out, "command  {}", c.command);
            let _ = writeln!(out, "  status {}", c.status);
            let _ = writeln!(out, "  {}", compact(&c.data));
        }
        out
    }

    /// True when any command failed (fragment rejection is a result, not a
    /// failure).
    pub fn has_errors(&self) -> bool {
        self.commands.iter().any(|c| c.status == "error")
    }
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("value serializes")
}

pub fn invariants_json(inv: &ModuleInvariants) -> Value {
    json!({
        "rank": inv.free_rank,
        "torsion": inv.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
    })
}

pub fn module_json(m: &FpModule) -> Value {
    invariants_json(&m.invariants())
}

pub fn matrix_json(m: &ModuleMap) -> Value {
    let mat = &m.mat;
    let rows: Vec<Vec<String>> = (0..mat.rows)
        .map(|i| (0..mat.cols).map(|j| mat.at(i, j).to_string()).collect())
        .collect();
    json!({
        "rows": mat.rows,
        "cols": mat.cols,
        "entries": rows,
    })
}
