//! Run configuration, errors and report rendering.

use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use qdomain::report::LawReport;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: f64,
    pub format: Format,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Unreadable or malformed input; `msg` carries the line when known.
    Input { path: String, msg: String },
}

impl CliError {
    pub fn input(path: &Path, msg: impl fmt::Display) -> Self {
        CliError::Input {
            path: path.display().to_string(),
            msg: msg.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Input { path, msg } => write!(f, "{path}: {msg}"),
        }
    }
}

/// Result of one subcommand: checks plus command-specific data.
pub struct Outcome {
    pub command: &'static str,
    pub report: LawReport,
    pub data: Value,
    /// Human-readable rendering of `data`.
    pub text: String,
    /// Replaces the whole rendering (CSV mode).
    pub raw: Option<String>,
}

impl Outcome {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            report: LawReport::new(),
            data: json!({}),
            text: String::new(),
            raw: None,
        }
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        if let Some(raw) = &self.raw {
            return raw.clone();
        }
        let report = self.report.clone().sorted();
        match cfg.format {
            Format::Text => {
                let mut s = format!("# qdomain {} seed={} tol={:e}\n", self.command, cfg.seed, cfg.tol);
                s.push_str(&self.text);
                s.push_str(&report.to_string());
                let failed = report.failures().len();
                s.push_str(&format!("# {} checks, {} failed\n", report.checks.len(), failed));
                s
            }
            Format::Json => {
                let v = json!({
                    "command": self.command,
                    "seed": cfg.seed,
                    "tol": cfg.tol,
                    "data": self.data,
                    "checks": report.checks,
                });
                let mut s = serde_json::to_string_pretty(&v).expect("serializable report");
                s.push('\n');
                s
            }
        }
    }
}

pub const SCHEMA: &str = r#"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "qdomain report",
  "type": "object",
  "required": ["command", "seed", "tol", "data", "checks"],
  "properties": {
    "command": { "type": "string" },
    "seed": { "type": "integer", "minimum": 0 },
    "tol": { "type": "number", "exclusiveMinimum": 0 },
    "data": { "type": "object" },
    "checks": {
      "type": "array",
      "description": "Sorted by name.",
      "items": {
        "type": "object",
        "required": ["name", "paper_ref", "verdict", "witness"],
        "properties": {
          "name": { "type": "string" },
          "paper_ref": { "type": "string", "description": "The mathematical notion the check exercises." },
          "verdict": { "enum": ["pass", "fail", "skip"] },
          "witness": {
            "type": ["string", "null"],
            "description": "Null on pass; the counterexample on fail; the reason on skip."
          }
        },
        "allOf": [
          {
            "if": { "properties": { "verdict": { "const": "pass" } } },
            "then": { "properties": { "witness": { "type": "null" } } }
          }
        ]
      }
    }
  }
}"#;
