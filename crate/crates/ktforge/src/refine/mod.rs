//! Test class refinement: validate via an external build adapter and repair
//! failures, rule-based import fixing first, then a bounded LLM loop.
//!
//! One iteration is one compile-execute-repair cycle regardless of which
//! strategies it used; the loop stops on success or at the cap. An artifact
//! that validates on the first try uses zero iterations.

pub mod diagnostics;

use std::io::Read;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::frontend::model::CallableId;
use crate::kb::FunctionIndex;
use crate::pipeline::prompts::{build_repair_prompt, extract_code_block};
use crate::pipeline::{ArtifactStatus, PipelineSettings, TracingGateway};

pub use diagnostics::{parse_diagnostics, Diagnostic, DiagnosticKind};

/// External compile/test command pair. Templates may use `{class_path}`
/// and `{test_file}` placeholders; exit code 0 means success.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildAdapter {
    pub compile_command: String,
    pub test_command: String,
    pub workdir: PathBuf,
    pub timeout_s: u64,
    pub class_path: String,
}

impl Default for BuildAdapter {
    fn default() -> Self {
        BuildAdapter {
            compile_command: "javac -cp {class_path} {test_file}".into(),
            test_command: "java -cp {class_path} org.junit.platform.console.ConsoleLauncher --select-class {test_class}".into(),
            workdir: PathBuf::from("."),
            timeout_s: 120,
            class_path: ".".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub output: String,
    pub timed_out: bool,
}

impl BuildAdapter {
    fn substitute(&self, template: &str, test_file: &str, test_class: &str) -> Vec<String> {
        template
            .split_whitespace()
            .map(|tok| {
                tok.replace("{class_path}", &self.class_path)
                    .replace("{test_file}", test_file)
                    .replace("{test_class}", test_class)
            })
            .collect()
    }

    /// Run one command with the configured timeout, capturing stdout+stderr.
    pub fn run(&self, template: &str, test_file: &str, test_class: &str) -> CommandOutcome {
        let argv = self.substitute(template, test_file, test_class);
        if argv.is_empty() {
            return CommandOutcome {
                exit_code: -1,
                output: "empty command template".into(),
                timed_out: false,
            };
        }
        let mut cmd = std::process::Command::new(&argv[0]);
        cmd.args(&argv[1..])
            .current_dir(&self.workdir)
            .stdin(std::process::Stdio::null())
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped());
        // own process group, so a timeout kill reaps grandchildren too
        #[cfg(unix)]
        {
            use std::os::unix::process::CommandExt;
            cmd.process_group(0);
        }
        let mut child = match cmd.spawn() {
            Ok(c) => c,
            Err(e) => {
                return CommandOutcome {
                    exit_code: -1,
                    output: format!("failed to spawn `{}`: {}", argv[0], e),
                    timed_out: false,
                }
            }
        };
        // drain pipes on side threads so a chatty child never blocks
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_handle = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout.read_to_string(&mut buf);
            buf
        });
        let err_handle = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });
        let deadline = Instant::now() + Duration::from_secs(self.timeout_s.max(1));
        let (exit_code, timed_out) = loop {
            match child.try_wait() {
                Ok(Some(status)) => break (status.code().unwrap_or(-1), false),
                Ok(None) => {
                    if Instant::now() >= deadline {
                        #[cfg(unix)]
                        unsafe {
                            libc::kill(-(child.id() as i32), libc::SIGKILL);
                        }
                        let _ = child.kill();
                        let _ = child.wait();
                        break (-1, true);
                    }
                    std::thread::sleep(Duration::from_millis(10));
                }
                Err(_) => break (-1, false),
            }
        };
        let mut output = out_handle.join().unwrap_or_default();
        output.push_str(&err_handle.join().unwrap_or_default());
        CommandOutcome { exit_code, output, timed_out }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairStrategy {
    Rule,
    Llm,
    RuleThenLlm,
}

/// One compile-execute-repair cycle in the history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepairIteration {
    pub iteration: u32,
    pub diagnostics: Vec<Diagnostic>,
    pub strategy: RepairStrategy,
    pub diff_summary: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub iterations_used: u32,
    pub final_status: ArtifactStatus,
    pub history: Vec<RepairIteration>,
    pub final_source: String,
}

// ---------------------------------------------------------------------------
// Rule-based repair
// ---------------------------------------------------------------------------

/// Pick the import target for an unresolved simple class name: unique match
/// wins; among several, prefer the focal class's package, then the shortest
/// qualified name, then the lexicographically first.
pub fn pick_import(candidates: &std::collections::BTreeSet<String>, focal_package: &str) -> Option<String> {
    match candidates.len() {
        0 => None,
        1 => candidates.iter().next().cloned(),
        _ => {
            let same_package: Vec<&String> = candidates
                .iter()
                .filter(|q| q.rsplit_once('.').map(|(p, _)| p) == Some(focal_package))
                .collect();
            if same_package.len() == 1 {
                return Some(same_package[0].clone());
            }
            let min_len = candidates.iter().map(|q| q.len()).min()?;
            candidates.iter().filter(|q| q.len() == min_len).min().cloned()
        }
    }
}

/// Append or correct imports for unresolved simple class names using the
/// knowledge base. Returns the new source and the symbols fixed; symbols
/// absent from the index are left for LLM repair.
pub fn rule_based_repair(
    source: &str,
    diags: &[Diagnostic],
    index: &FunctionIndex,
    focal: &CallableId,
) -> (String, Vec<String>) {
    let focal_package = match focal.class_qname().rsplit_once('.') {
        Some((pkg, _)) => pkg.to_string(),
        None => String::new(),
    };
    let mut fixed = Vec::new();
    let mut lines: Vec<String> = source.lines().map(|l| l.to_string()).collect();

    let mut symbols: Vec<String> = diags
        .iter()
        .filter(|d| d.kind == DiagnosticKind::Compile && d.message.contains("cannot find symbol"))
        .filter_map(|d| d.symbol.clone())
        .collect();
    symbols.sort();
    symbols.dedup();

    for symbol in symbols {
        let candidates = index.lookup_simple_class(&symbol);
        let Some(target) = pick_import(&candidates, &focal_package) else { continue };
        let import_line = format!("import {};", target);
        let suffix = format!(".{};", symbol);
        // replace an existing wrong import of the same simple name
        let existing = lines
            .iter()
            .position(|l| l.trim_start().starts_with("import ") && l.trim_end().ends_with(&suffix));
        match existing {
            Some(i) => {
                if lines[i].trim() != import_line {
                    lines[i] = import_line;
                    fixed.push(symbol);
                } // an identical import already present: nothing to fix
            }
            None => {
                let insert_at = lines
                    .iter()
                    .rposition(|l| l.trim_start().starts_with("import "))
                    .map(|i| i + 1)
                    .or_else(|| {
                        lines
                            .iter()
                            .position(|l| l.trim_start().starts_with("package "))
                            .map(|i| i + 1)
                    })
                    .unwrap_or(0);
                lines.insert(insert_at, import_line);
                fixed.push(symbol);
            }
        }
    }
    (lines.join("\n") + "\n", fixed)
}

// ---------------------------------------------------------------------------
// LLM repair
// ---------------------------------------------------------------------------

/// One LLM repair round: returns the replacement class when the response
/// carried a code block, None otherwise (the iteration still counts).
pub fn llm_repair(
    source: &str,
    diags_text: &str,
    focal_context: &str,
    signatures: &[String],
    settings: &PipelineSettings,
    gateway: &TracingGateway<'_>,
    stage: &str,
) -> Option<String> {
    let prompt = build_repair_prompt(
        source,
        diags_text,
        focal_context,
        signatures,
        &settings.model,
        settings.temperature,
    );
    let response = gateway.complete(stage, &prompt).ok()?;
    extract_code_block(&response)
}

// ---------------------------------------------------------------------------
// The refinement loop
// ---------------------------------------------------------------------------

fn test_file_name(source: &str) -> String {
    // class name of the first declared class, else a fallback
    crate::integrate::parse_test_class(source)
        .map(|c| {
            let name = c
                .class_header
                .split_whitespace()
                .skip_while(|t| *t != "class" && *t != "interface" && *t != "enum")
                .nth(1)
                .unwrap_or("GeneratedTest")
                .to_string();
            name
        })
        .unwrap_or_else(|_| "GeneratedTest".into())
}

fn summarize_diff(before: &str, after: &str) -> String {
    if before == after {
        return "no textual change".into();
    }
    let b: Vec<&str> = before.lines().collect();
    let a: Vec<&str> = after.lines().collect();
    let added = a.iter().filter(|l| !b.contains(l)).count();
    let removed = b.iter().filter(|l| !a.contains(l)).count();
    format!("+{} -{} lines", added, removed)
}

/// Validate and repair an integrated test class.
///
/// The loop: compile; on compile errors apply rule-based import repair
/// first and LLM repair for whatever remains; once compiling, execute the
/// tests and feed runtime/assertion failures to LLM repair. Stops on
/// success or after `settings.repair_cap` repair iterations, with the final
/// status taken from the last validation.
#[allow(clippy::too_many_arguments)]
pub fn refine(
    integrated_source: &str,
    focal: &CallableId,
    index: &FunctionIndex,
    adapter: &BuildAdapter,
    gateway: &TracingGateway<'_>,
    focal_context: &str,
    signatures: &[String],
    settings: &PipelineSettings,
) -> RepairOutcome {
    let cap = settings.repair_cap;
    let mut source = integrated_source.to_string();
    let mut history: Vec<RepairIteration> = Vec::new();
    let _ = std::fs::create_dir_all(&adapter.workdir);

    for round in 0..=cap {
        let class_name = test_file_name(&source);
        let file_name = format!("{}.java", class_name);
        let file_path = adapter.workdir.join(&file_name);
        if std::fs::write(&file_path, &source).is_err() {
            return RepairOutcome {
                iterations_used: history.len() as u32,
                final_status: ArtifactStatus::CompileError,
                history,
                final_source: source,
            };
        }

        // compile
        let compile = adapter.run(&adapter.compile_command, &file_name, &class_name);
        let (diags, failed, status_if_stuck) = if compile.timed_out {
            (
                vec![Diagnostic {
                    kind: DiagnosticKind::Runtime,
                    file: file_name.clone(),
                    line: None,
                    symbol: None,
                    message: "timeout".into(),
                }],
                true,
                ArtifactStatus::CompileError,
            )
        } else if compile.exit_code != 0 {
            let mut diags = parse_diagnostics(&compile.output);
            if diags.is_empty() {
                diags.push(Diagnostic {
                    kind: DiagnosticKind::Compile,
                    file: file_name.clone(),
                    line: None,
                    symbol: None,
                    message: compile.output.trim().chars().take(300).collect(),
                });
            }
            (diags, true, ArtifactStatus::CompileError)
        } else {
            // compiled; execute
            let run = adapter.run(&adapter.test_command, &file_name, &class_name);
            if run.timed_out {
                (
                    vec![Diagnostic {
                        kind: DiagnosticKind::Runtime,
                        file: file_name.clone(),
                        line: None,
                        symbol: None,
                        message: "timeout".into(),
                    }],
                    true,
                    ArtifactStatus::CompiledFailing,
                )
            } else if run.exit_code != 0 {
                let mut diags = parse_diagnostics(&run.output);
                if diags.is_empty() {
                    diags.push(Diagnostic {
                        kind: DiagnosticKind::Runtime,
                        file: file_name.clone(),
                        line: None,
                        symbol: None,
                        message: run.output.trim().chars().take(300).collect(),
                    });
                }
                (diags, true, ArtifactStatus::CompiledFailing)
            } else {
                return RepairOutcome {
                    iterations_used: history.len() as u32,
                    final_status: ArtifactStatus::CompiledPassed,
                    history,
                    final_source: source,
                };
            }
        };

        debug_assert!(failed);
        if round == cap {
            return RepairOutcome {
                iterations_used: history.len() as u32,
                final_status: status_if_stuck,
                history,
                final_source: source,
            };
        }

        // one repair iteration: rule pass first, LLM pass if anything remains
        let before = source.clone();
        let compile_stage = diags.iter().any(|d| d.kind == DiagnosticKind::Compile);
        let mut strategy: Option<RepairStrategy> = None;

        let mut remaining = diags.clone();
        if compile_stage {
            let (fixed_source, fixed_symbols) = rule_based_repair(&source, &diags, index, focal);
            if !fixed_symbols.is_empty() {
                source = fixed_source;
                strategy = Some(RepairStrategy::Rule);
                remaining.retain(|d| {
                    !(d.kind == DiagnosticKind::Compile
                        && d.message.contains("cannot find symbol")
                        && d.symbol.as_ref().map(|s| fixed_symbols.contains(s)).unwrap_or(false))
                });
            }
        }
        if !remaining.is_empty() {
            let diags_text = render_diagnostics(&remaining);
            let stage = format!("repair:{}", history.len() + 1);
            if let Some(fixed) = llm_repair(
                &source,
                &diags_text,
                focal_context,
                signatures,
                settings,
                gateway,
                &stage,
            ) {
                source = fixed;
                strategy = Some(match strategy {
                    Some(RepairStrategy::Rule) => RepairStrategy::RuleThenLlm,
                    _ => RepairStrategy::Llm,
                });
            } else if strategy.is_none() {
                // the LLM round produced nothing usable; the iteration is
                // still consumed
                strategy = Some(RepairStrategy::Llm);
            }
        }

        history.push(RepairIteration {
            iteration: history.len() as u32 + 1,
            diagnostics: diags,
            strategy: strategy.unwrap_or(RepairStrategy::Llm),
            diff_summary: summarize_diff(&before, &source),
        });
    }
    unreachable!("loop returns at the cap round");
}

/// Render diagnostics verbatim-ish for the repair prompt.
pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| {
            let mut s = String::new();
            s.push_str(&d.file);
            if let Some(line) = d.line {
                s.push_str(&format!(":{}", line));
            }
            s.push_str(&format!(": {:?}: {}", d.kind, d.message));
            if let Some(sym) = &d.symbol {
                s.push_str(&format!(" (symbol: {})", sym));
            }
            s
        })
        .collect::<Vec<_>>()
        .join("\n")
}
