//! Evaluation harness: coverage-report parsing and the eight suite-quality
//! metrics aggregated over a batch of generation tasks.
//!
//! CPR/EPR are percentages of tasks whose test class compiled / ran clean.
//! LC/BC are mean per-task focal-method coverage over all tasks, with
//! non-compiling tasks contributing 0; LCP/BCP average over clean tasks
//! only. AvT and AvTC are plain means of wall time and test-case count.

use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::model::CallableId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub covered: u64,
    pub missed: u64,
}

impl Counters {
    pub fn percent(&self) -> f64 {
        let total = self.covered + self.missed;
        if total == 0 {
            0.0
        } else {
            100.0 * self.covered as f64 / total as f64
        }
    }
}

/// Per-focal-method result of one generation task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskResult {
    pub focal_id: String,
    pub compiled: bool,
    pub executed_clean: bool,
    #[serde(default)]
    pub line_counters: Counters,
    #[serde(default)]
    pub branch_counters: Counters,
    pub wall_time_s: f64,
    pub test_case_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cpr: f64,
    pub epr: f64,
    pub lc: f64,
    pub bc: f64,
    pub lcp: f64,
    pub bcp: f64,
    pub avt: f64,
    pub avtc: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "CPR,EPR,LC,BC,LCP,BCP,AvT,AvTC";

    /// One CSV row, every value rendered with two decimals.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}",
            self.cpr, self.epr, self.lc, self.bc, self.lcp, self.bcp, self.avt, self.avtc
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty task batch")]
    EmptyBatch,
    #[error("coverage report has no entry for {0}")]
    MissingCoverageEntry(String),
    #[error("malformed coverage report: {0}")]
    MalformedReport(String),
    #[error("io error at {path}: {message}")]
    Io { path: std::path::PathBuf, message: String },
}

/// Aggregate the eight metrics over a task batch.
pub fn compute_metrics(results: &[TaskResult]) -> Result<MetricsReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let n = results.len() as f64;
    let compiled = results.iter().filter(|r| r.compiled).count() as f64;
    let clean: Vec<&TaskResult> = results.iter().filter(|r| r.executed_clean).collect();

    let lc_sum: f64 = results
        .iter()
        .map(|r| if r.compiled { r.line_counters.percent() } else { 0.0 })
        .sum();
    let bc_sum: f64 = results
        .iter()
        .map(|r| if r.compiled { r.branch_counters.percent() } else { 0.0 })
        .sum();
    let (lcp, bcp) = if clean.is_empty() {
        (0.0, 0.0)
    } else {
        let m = clean.len() as f64;
        (
            clean.iter().map(|r| r.line_counters.percent()).sum::<f64>() / m,
            clean.iter().map(|r| r.branch_counters.percent()).sum::<f64>() / m,
        )
    };

    Ok(MetricsReport {
        cpr: 100.0 * compiled / n,
        epr: 100.0 * clean.len() as f64 / n,
        lc: lc_sum / n,
        bc: bc_sum / n,
        lcp,
        bcp,
        avt: results.iter().map(|r| r.wall_time_s).sum::<f64>() / n,
        avtc: results.iter().map(|r| r.test_case_count as f64).sum::<f64>() / n,
    })
}

/// Load per-task JSON result files (one task per `.json` file) from a
/// directory, sorted by file name.
pub fn load_task_results(dir: &Path) -> Result<Vec<TaskResult>, EvalError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| EvalError::Io { path: dir.to_path_buf(), message: e.to_string() })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| EvalError::Io { path: path.clone(), message: e.to_string() })?;
        let task: TaskResult = serde_json::from_str(&text)
            .map_err(|e| EvalError::Io { path: path.clone(), message: e.to_string() })?;
        out.push(task);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Coverage report parsing (JaCoCo-style XML)
// ---------------------------------------------------------------------------

/// Parse LINE and BRANCH counters of the focal method's entry from a
/// counter-element coverage report.
pub fn parse_coverage_report(
    report: &str,
    focal: &CallableId,
) -> Result<(Counters, Counters), EvalError> {
    let class_path = focal.class_qname().replace('.', "/");
    let method_name = focal.member_name().to_string();
    let focal_arity = focal
        .as_str()
        .split('(')
        .nth(1)
        .map(|rest| {
            let inner = rest.trim_end_matches(')');
            if inner.is_empty() {
                0
            } else {
                inner.split(',').count()
            }
        })
        .unwrap_or(0);

    let mut reader = Reader::from_str(report);
    reader.config_mut().trim_text(true);

    let mut in_class = false;
    let mut in_method = false;
    let mut method_matches = false;
    let mut line = Counters::default();
    let mut branch = Counters::default();
    let mut found = false;
    let mut buf = Vec::new();

    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) => {
                let name = e.name();
                let tag = name.as_ref();
                let attr = |key: &[u8]| -> Option<String> {
                    e.attributes().flatten().find(|a| a.key.as_ref() == key).map(|a| {
                        String::from_utf8_lossy(a.value.as_ref()).into_owned()
                    })
                };
                match tag {
                    b"class" => {
                        in_class = attr(b"name").as_deref() == Some(class_path.as_str());
                    }
                    b"method" if in_class => {
                        let name_ok = attr(b"name").as_deref() == Some(method_name.as_str());
                        let desc_arity = attr(b"desc").map(|d| descriptor_arity(&d));
                        method_matches = name_ok
                            && desc_arity.map(|a| a == focal_arity).unwrap_or(true);
                        in_method = true;
                        if method_matches {
                            found = true;
                        }
                    }
                    b"counter" if in_class && in_method && method_matches => {
                        let kind = attr(b"type").unwrap_or_default();
                        let covered = attr(b"covered")
                            .and_then(|v| v.parse().ok())
                            .unwrap_or(0);
                        let missed =
                            attr(b"missed").and_then(|v| v.parse().ok()).unwrap_or(0);
                        match kind.as_str() {
                            "LINE" => line = Counters { covered, missed },
                            "BRANCH" => branch = Counters { covered, missed },
                            _ => {}
                        }
                    }
                    _ => {}
                }
            }
            Ok(Event::End(e)) => match e.name().as_ref() {
                b"method" => {
                    if method_matches {
                        return Ok((line, branch));
                    }
                    in_method = false;
                    method_matches = false;
                }
                b"class" => in_class = false,
                _ => {}
            },
            Ok(Event::Eof) => break,
            Err(e) => return Err(EvalError::MalformedReport(e.to_string())),
            _ => {}
        }
        buf.clear();
    }
    if found {
        return Ok((line, branch));
    }
    Err(EvalError::MissingCoverageEntry(focal.to_string()))
}

/// Number of top-level argument slots in a JVM method descriptor.
fn descriptor_arity(desc: &str) -> usize {
    let Some(inner) = desc.strip_prefix('(').and_then(|d| d.split(')').next()) else {
        return 0;
    };
    let bytes = inner.as_bytes();
    let mut i = 0;
    let mut count = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'[' => {
                i += 1;
                continue; // array dimension prefixes the real type
            }
            b'L' => {
                while i < bytes.len() && bytes[i] != b';' {
                    i += 1;
                }
                i += 1;
            }
            _ => i += 1,
        }
        count += 1;
    }
    count
}
