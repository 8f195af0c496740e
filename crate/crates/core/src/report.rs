//! Residual records and the JSON/CSV/text verification report.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SpectralConfig};
use crate::numerics::Scalar;

/// Complex number as `[re, im]` for serialization.
pub type Pair = [f64; 2];

pub fn pair(z: Scalar) -> Pair {
    [z.re, z.im]
}

/// Parameter values at which a residual was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSnapshot {
    pub sites: usize,
    pub nome: f64,
    pub gamma: Pair,
    pub tau: Pair,
    pub mu: Vec<Pair>,
    pub x: Vec<Pair>,
    pub x0: Pair,
    pub x0bar: Pair,
}

impl ParamSnapshot {
    pub fn new(params: &ModelParams, cfg: &SpectralConfig) -> Self {
        Self {
            sites: params.sites(),
            nome: params.theta.nome(),
            gamma: pair(params.gamma),
            tau: pair(params.tau),
            mu: params.mu.iter().copied().map(pair).collect(),
            x: cfg.x.iter().copied().map(pair).collect(),
            x0: pair(cfg.x0),
            x0bar: pair(cfg.x0bar),
        }
    }
}

/// Normalized residual `|sum terms| / max |term|` of one equation at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub tag: String,
    pub snapshot: ParamSnapshot,
    pub residual: f64,
    pub largest_term: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn from_terms(tag: impl Into<String>, snapshot: ParamSnapshot, terms: &[Scalar], tolerance: f64) -> Result<Self> {
        let largest_term = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        let total: Scalar = terms.iter().sum();
        if !largest_term.is_finite() || !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::NonFinite("equation term"));
        }
        if largest_term == 0.0 {
            return Err(Error::DegeneratePoint("every term of the equation vanishes".into()));
        }
        let residual = total.norm() / largest_term;
        Ok(Self { tag: tag.into(), snapshot, residual, largest_term, pass: residual < tolerance })
    }

    /// Report for a directly measured relative error.
    pub fn from_residual(tag: impl Into<String>, snapshot: ParamSnapshot, residual: f64, scale: f64, tolerance: f64) -> Self {
        Self { tag: tag.into(), snapshot, residual, largest_term: scale, pass: residual < tolerance }
    }
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub anchors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: bool,
    pub seconds: f64,
}

/// Stable report layout shared by every CLI subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub params: Map<String, Value>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(params: Map<String, Value>, checks: Vec<CheckRecord>, seconds: f64) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { params, checks, summary: Summary { pass, seconds } }
    }

    pub fn failing_ids(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.id.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,residual,tolerance,pass,anchors\n");
        for c in &self.checks {
            out.push_str(&format!("{},{:e},{:e},{},{}\n", c.id, c.residual, c.tolerance, c.pass, c.anchors.join(";")));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.params {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {:<40} residual {:.3e} (tolerance {:.1e})\n", c.id, c.residual, c.tolerance));
        }
        let status = if self.summary.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status} {} checks in {:.2} s\n", self.checks.len(), self.summary.seconds));
        out
    }
}
