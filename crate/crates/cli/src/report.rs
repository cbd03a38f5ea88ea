//! JSON run reports.

use std::fs;
use std::io;
use std::path::Path;

use fsmf_core::SolveReport;
use serde::{Serialize, Serializer};

/// Float that serializes as a JSON number when finite and as `"inf"`,
/// `"-inf"` or `"nan"` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JsonF64(pub f64);

impl Serialize for JsonF64 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportJson {
    pub method: String,
    pub certificate: Option<String>,
    pub final_loss: JsonF64,
    pub log10_frobenius_error: JsonF64,
    pub wall_time_s: JsonF64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<JsonF64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub converged: bool,
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_trace: Option<Vec<(usize, JsonF64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_change_trace: Option<Vec<(usize, usize, usize)>>,
}

impl ReportJson {
    pub fn from_report(r: &SolveReport, seed: Option<u64>, with_trace: bool) -> Self {
        ReportJson {
            method: r.method_tag.clone(),
            certificate: r.certificate.map(|c| c.as_str().to_string()),
            final_loss: JsonF64(r.final_loss),
            log10_frobenius_error: JsonF64(r.log10_frobenius_error()),
            wall_time_s: JsonF64(r.wall_time),
            iterations: r.iterations,
            learning_rate: r.learning_rate.map(JsonF64),
            seed,
            converged: r.converged,
            diverged: r.diverged,
            loss_trace: with_trace
                .then(|| r.loss_trace.iter().map(|&(i, l)| (i, JsonF64(l))).collect()),
            support_change_trace: r.support_change_trace.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
