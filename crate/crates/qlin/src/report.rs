//! Machine-readable analysis reports. Field order is fixed by the struct
//! definitions so that identical inputs serialize byte-identically.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Exit-status contract shared by the library's callers.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// One named analysis outcome inside a report.
#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub name: String,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Section {
    pub fn new(name: &str, verdict: bool) -> Self {
        Section {
            name: name.to_string(),
            verdict,
            residual: None,
            details: BTreeMap::new(),
        }
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.residual = Some(residual);
        self
    }

    pub fn detail(mut self, key: &str, value: serde_json::Value) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }
}

/// The complete report emitted by one analysis run.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool_version: String,
    pub command: String,
    pub input_digest: String,
    pub tolerance: f64,
    pub sections: Vec<Section>,
    pub passed: bool,
    pub exit_status: i32,
}

impl ReportDocument {
    pub fn new(command: &str, input: &[u8], tolerance: f64) -> Self {
        ReportDocument {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            input_digest: input_digest(input),
            tolerance,
            sections: Vec::new(),
            passed: true,
            exit_status: EXIT_PASS,
        }
    }

    /// Appends a section and folds its verdict into the overall status.
    pub fn push(&mut self, section: Section) {
        if !section.verdict {
            self.passed = false;
            if self.exit_status == EXIT_PASS {
                self.exit_status = EXIT_CHECK_FAILED;
            }
        }
        self.sections.push(section);
    }

    /// Serializes the report; the output is deterministic for identical
    /// content.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Human-readable rendering carrying the same verdicts as the JSON.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "tool {} | input {} | tol {:e}\n",
            self.tool_version,
            &self.input_digest[..12.min(self.input_digest.len())],
            self.tolerance
        ));
        for s in &self.sections {
            let mark = if s.verdict { "pass" } else { "FAIL" };
            match s.residual {
                Some(r) => out.push_str(&format!("[{mark}] {} (residual {r:.3e})\n", s.name)),
                None => out.push_str(&format!("[{mark}] {}\n", s.name)),
            }
            for (k, v) in &s.details {
                out.push_str(&format!("       {k}: {v}\n"));
            }
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.passed { "pass" } else { "FAIL" }
        ));
        out
    }
}

/// Hex SHA-256 digest of the analysis input.
pub fn input_digest(input: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(input);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
