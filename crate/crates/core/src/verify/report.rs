use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::config::Theorem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// Result for one `(j, u)` pair: a KS test for statistical experiments, a
/// relative error for deterministic ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub j: u32,
    pub u: f64,
    pub n: usize,
    pub target: String,
    pub ks_d: Option<f64>,
    pub p_value: Option<f64>,
    pub estimate: Option<f64>,
    pub expected: Option<f64>,
    pub relative_error: Option<f64>,
    pub standard_error: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<f64>,
}

impl CellReport {
    pub(crate) fn blank(j: u32, u: f64, n: usize, target: String) -> Self {
        CellReport {
            j,
            u,
            n,
            target,
            ks_d: None,
            p_value: None,
            estimate: None,
            expected: None,
            relative_error: None,
            standard_error: None,
            verdict: Verdict::Fail,
            samples: Vec::new(),
        }
    }
}

/// A side condition that must hold for the experiment to pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub theorem: Theorem,
    pub seed: u64,
    pub replicas: usize,
    pub t: f64,
    pub ks_alpha: f64,
    pub pass_fraction: f64,
    pub cells: Vec<CellReport>,
    pub checks: Vec<CheckReport>,
    pub verdict: Verdict,
}

impl ExperimentReport {
    /// Overall verdict: at least `pass_fraction` of the cells pass and every
    /// check passes.
    pub(crate) fn finish(mut self) -> Self {
        let passed = self.cells.iter().filter(|c| c.verdict.is_pass()).count();
        let enough = !self.cells.is_empty() && passed as f64 >= self.pass_fraction * self.cells.len() as f64 - 1e-9;
        self.verdict = Verdict::from_bool(enough && self.checks.iter().all(|c| c.verdict.is_pass()));
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn cell(&self, j: u32, u: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.j == j && c.u == u)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Flat `theorem,j,u,n,ks_D,p_value,verdict` table; deterministic cells
    /// leave the KS columns empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["theorem", "j", "u", "n", "ks_D", "p_value", "verdict"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                self.theorem.name().to_string(),
                c.j.to_string(),
                c.u.to_string(),
                c.n.to_string(),
                opt(c.ks_d),
                opt(c.p_value),
                c.verdict.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Writes `path` (JSON) and the same path with a `.csv` extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?)?;
        std::fs::write(path.with_extension("csv"), self.to_csv_string()?)?;
        Ok(())
    }
}
