//! Regenerates the committed replay fixtures and golden files from scripted
//! model responses. Run explicitly after changing prompt construction:
//!
//! ```bash
//! cargo test -p ktforge --test fixture_gen -- --ignored
//! ```
//!
//! Outputs land under `fixtures/` and are meant to be reviewed and
//! committed; the acceptance suite locks them byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ktforge::cli::{sanitize_focal_id, write_artifact};
use ktforge::frontend::model::CallableId;
use ktforge::frontend::{parse_project, FileSelection};
use ktforge::gateway::{MockBackend, RecordBackend};
use ktforge::kb::{build_index, render_index, FunctionIndex};
use ktforge::mining::{build_call_graph, mine_usage_traces, CallGraph};
use ktforge::pipeline::{
    build_framework_prompt, run_pipeline, ArtifactStatus, PipelineSettings,
};
use ktforge::refine::{rule_based_repair, BuildAdapter, Diagnostic, DiagnosticKind};
use ktforge::retrieval::assemble_usage_context;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixtures_dir() -> PathBuf {
    manifest_dir().join("fixtures")
}

fn toy_index() -> FunctionIndex {
    let root = fixtures_dir().join("toy_project");
    let model = parse_project(&root, &FileSelection::default()).expect("toy project parses");
    assert!(model.diagnostics.is_empty(), "{:?}", model.diagnostics);
    build_index(model).expect("toy index builds")
}

fn fake_adapter(workdir: &Path) -> BuildAdapter {
    let scripts = fixtures_dir().join("fakebuild");
    BuildAdapter {
        compile_command: format!("sh {}/compile.sh {{test_file}}", scripts.display()),
        test_command: format!("sh {}/run.sh {{test_file}}", scripts.display()),
        workdir: workdir.to_path_buf(),
        timeout_s: 30,
        class_path: ".".into(),
    }
}

fn java(block: &str) -> String {
    format!("```java\n{}\n```", block.trim_end())
}

fn json(block: &str) -> String {
    format!("```json\n{}\n```", block.trim_end())
}

// ---------------------------------------------------------------------------
// Scripted model responses, per focal method
// ---------------------------------------------------------------------------

const DEPOSIT_FRAMEWORK: &str = r#"package com.acme.banking;

import org.junit.jupiter.api.AfterEach;
import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.*;

public class AccountTest {

    private Account account;

    @BeforeEach
    void setUp() {
        account = new Account("alice");
    }

    @AfterEach
    void tearDown() {
        account = null;
    }
}"#;

const DEPOSIT_DESIGN_BRANCH: &str = r#"[
  {"group_name": "deposit control flow", "intent": "branch",
   "cases": [
     {"scenario": "amount within the limit takes the normal path", "inputs": [{"name": "amount", "value": "500"}], "expected": "balance becomes 500"},
     {"scenario": "amount above MAX_DEPOSIT takes the rejection branch", "inputs": [{"name": "amount", "value": "2000000"}], "expected": "IllegalArgumentException"}
   ]}
]"#;

const DEPOSIT_DESIGN_FUNCTIONAL: &str = r#"[
  {"group_name": "deposit arithmetic", "intent": "functional",
   "cases": [
     {"scenario": "deposits accumulate across calls", "inputs": [{"name": "amount", "value": "100"}], "expected": "200 after two deposits of 100"},
     {"scenario": "deposit returns the new balance", "inputs": [{"name": "amount", "value": "42"}], "expected": "242"}
   ]}
]"#;

const DEPOSIT_DESIGN_EXCEPTION: &str = r#"[
  {"group_name": "invalid amounts", "intent": "exception",
   "cases": [
     {"scenario": "zero amount is rejected", "inputs": [{"name": "amount", "value": "0"}], "expected": "IllegalArgumentException"},
     {"scenario": "negative amount is rejected", "inputs": [{"name": "amount", "value": "-5"}], "expected": "IllegalArgumentException"}
   ]}
]"#;

const DEPOSIT_METHOD_BRANCH: &str = r#"@Test
void depositTakesBothBranches() {
    assertEquals(500L, account.deposit(500L));
    assertThrows(IllegalArgumentException.class, () -> account.deposit(2000000L));
}"#;

const DEPOSIT_METHOD_FUNCTIONAL: &str = r#"@Test
void depositAccumulatesAndReturnsNewBalance() {
    assertEquals(100L, account.deposit(100L));
    assertEquals(200L, account.deposit(100L));
    long result = account.deposit(42L);
    assertEquals(242L, result);
}"#;

const DEPOSIT_METHOD_EXCEPTION: &str = r#"@Test
void depositRejectsNonPositiveAmounts() {
    assertThrows(IllegalArgumentException.class, () -> account.deposit(0L));
    assertThrows(IllegalArgumentException.class, () -> account.deposit(-5L));
}"#;

const SETTLE_FRAMEWORK: &str = r#"package com.acme.banking;

import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.*;

public class LedgerTest {

    private Ledger ledger;
    private Account account;

    @BeforeEach
    void setUp() {
        ledger = new Ledger(10);
        account = new Account("bob", 500L);
    }
}"#;

const SETTLE_DESIGN_BRANCH: &str = r#"[
  {"group_name": "settle branch behavior", "intent": "branch",
   "cases": [
     {"scenario": "positive balance charges the fee", "inputs": [{"name": "balance", "value": "500"}], "expected": "balance reduced by the fee"},
     {"scenario": "zero balance skips the charge", "inputs": [{"name": "balance", "value": "0"}], "expected": "balance unchanged"}
   ]}
]"#;

const SETTLE_DESIGN_FUNCTIONAL: &str = r#"[
  {"group_name": "fee arithmetic", "intent": "functional",
   "cases": [
     {"scenario": "fee is feeRate percent of the balance", "inputs": [{"name": "feeRate", "value": "10"}, {"name": "balance", "value": "500"}], "expected": "450 after settling"}
   ]}
]"#;

const SETTLE_DESIGN_EXCEPTION: &str = r#"[
  {"group_name": "frozen account handling", "intent": "exception",
   "cases": [
     {"scenario": "settling a frozen account fails at withdrawal", "inputs": [{"name": "frozen", "value": "true"}], "expected": "IllegalStateException"}
   ]}
]"#;

// carries an extra setUp statement: exercises lifecycle merging
const SETTLE_METHOD_BRANCH: &str = r#"@BeforeEach
void setUp() {
    ledger = new Ledger(10);
    account.updateBalance(0L);
}

@Test
void settleChargesFee() {
    ledger.settle(account);
    assertEquals(450L, account.getBalance());
}"#;

// same method name with a longer body: exercises deduplication
const SETTLE_METHOD_FUNCTIONAL: &str = r#"@Test
void settleChargesFee() {
    long before = account.getBalance();
    ledger.settle(account);
    long fee = before * 10 / 100;
    assertEquals(before - fee, account.getBalance());
    assertTrue(account.getBalance() < before);
}"#;

const SETTLE_METHOD_EXCEPTION: &str = r#"@Test
void settleOnFrozenAccountFails() {
    account.freeze();
    assertThrows(IllegalStateException.class, () -> ledger.settle(account));
}"#;

const MATCHER_FRAMEWORK: &str = r#"package com.acme.text;

import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.*;

public class MatcherTest {

    private Matcher matcher;
    private Parser parser;

    @BeforeEach
    void setUp() {
        matcher = new Matcher();
        parser = new Parser();
    }
}"#;

const MATCHER_DESIGN_BRANCH: &str = r#"[
  {"group_name": "match outcome branches", "intent": "branch",
   "cases": [
     {"scenario": "pattern present inside the input", "inputs": [{"name": "input", "value": "hello"}, {"name": "pattern", "value": "ello"}], "expected": "offset 1"},
     {"scenario": "pattern absent", "inputs": [{"name": "input", "value": "hello"}, {"name": "pattern", "value": "xyz"}], "expected": "-1"}
   ]}
]"#;

const MATCHER_DESIGN_FUNCTIONAL: &str = r#"[
  {"group_name": "hit counting", "intent": "functional",
   "cases": [
     {"scenario": "each successful match increments the hit counter", "inputs": [{"name": "pattern", "value": "owner"}], "expected": "getHits() returns the match count"}
   ]}
]"#;

const MATCHER_DESIGN_EXCEPTION: &str = r#"[
  {"group_name": "null pattern handling", "intent": "exception",
   "cases": [
     {"scenario": "null pattern triggers a NullPointerException", "inputs": [{"name": "pattern", "value": "null"}], "expected": "NullPointerException"}
   ]}
]"#;

// wrong expected offset: the run script fails this until repaired
const MATCHER_METHOD_BRANCH: &str = r#"@Test
void testFindMatchPatternLocatesPattern() {
    char[] parsed = parser.parsePattern("hello");
    assertEquals(0, matcher.findMatchPattern(parsed, "ello"));
    char[] missing = parser.parsePattern("hello");
    assertEquals(-1, matcher.findMatchPattern(missing, "xyz"));
}"#;

// references Account without an import (wrong package) and asserts a wrong
// hit count: one rule-based fix plus one LLM fix
const MATCHER_METHOD_FUNCTIONAL: &str = r#"@Test
void testFindMatchPatternCountsHits() {
    Account probe = new Account("owner");
    char[] parsed = parser.parsePattern(probe.findOwner("owner"));
    assertEquals(0, matcher.findMatchPattern(parsed, "owner"));
    assertEquals(2, matcher.getHits());
}"#;

const MATCHER_METHOD_EXCEPTION: &str = r#"@Test
void testFindMatchPatternNullPatternThrows() {
    char[] parsed = parser.parsePattern("data");
    assertThrows(NullPointerException.class, () -> matcher.findMatchPattern(parsed, null));
}"#;

const BUG_OFFSET: &str = r#"assertEquals(0, matcher.findMatchPattern(parsed, "ello"));"#;
const FIX_OFFSET: &str = r#"assertEquals(1, matcher.findMatchPattern(parsed, "ello"));"#;
const BUG_HITS: &str = "assertEquals(2, matcher.getHits());";
const FIX_HITS: &str = "assertEquals(1, matcher.getHits());";

// ---------------------------------------------------------------------------

struct FocalPlan {
    focal: &'static str,
    fixture_file: &'static str,
    script: Vec<String>,
    expected_status: ArtifactStatus,
    expected_repairs: usize,
}

fn deposit_plan() -> FocalPlan {
    FocalPlan {
        focal: "com.acme.banking.Account#deposit(long)",
        fixture_file: "account_deposit.jsonl",
        script: vec![
            java(DEPOSIT_FRAMEWORK),
            json(DEPOSIT_DESIGN_BRANCH),
            json(DEPOSIT_DESIGN_FUNCTIONAL),
            json(DEPOSIT_DESIGN_EXCEPTION),
            java(DEPOSIT_METHOD_BRANCH),
            java(DEPOSIT_METHOD_FUNCTIONAL),
            java(DEPOSIT_METHOD_EXCEPTION),
        ],
        expected_status: ArtifactStatus::CompiledPassed,
        expected_repairs: 0,
    }
}

fn settle_plan() -> FocalPlan {
    FocalPlan {
        focal: "com.acme.banking.Ledger#settle(Account)",
        fixture_file: "ledger_settle.jsonl",
        script: vec![
            java(SETTLE_FRAMEWORK),
            json(SETTLE_DESIGN_BRANCH),
            json(SETTLE_DESIGN_FUNCTIONAL),
            json(SETTLE_DESIGN_EXCEPTION),
            java(SETTLE_METHOD_BRANCH),
            java(SETTLE_METHOD_FUNCTIONAL),
            java(SETTLE_METHOD_EXCEPTION),
        ],
        expected_status: ArtifactStatus::CompiledPassed,
        expected_repairs: 0,
    }
}

/// The matcher plan needs the two LLM repair responses, which are targeted
/// edits of the integrated source; stages 1-4 run once up front to compute
/// that source, then the full recorded run uses the derived responses.
fn matcher_plan(index: &FunctionIndex, graph: &CallGraph, settings: &PipelineSettings) -> FocalPlan {
    let focal = CallableId("com.acme.text.Matcher#findMatchPattern(char[],String)".into());
    let stage_script = vec![
        java(MATCHER_FRAMEWORK),
        json(MATCHER_DESIGN_BRANCH),
        json(MATCHER_DESIGN_FUNCTIONAL),
        json(MATCHER_DESIGN_EXCEPTION),
        java(MATCHER_METHOD_BRANCH),
        java(MATCHER_METHOD_FUNCTIONAL),
        java(MATCHER_METHOD_EXCEPTION),
    ];

    // dry-run stages 1-4 to learn the integrated source
    let integrated = {
        let mock = MockBackend::new(stage_script.clone());
        let gateway = ktforge::pipeline::TracingGateway::new(&mock);
        let traces = mine_usage_traces(&focal, index, graph, settings.max_usage_traces);
        let context = assemble_usage_context(&focal, index, &traces, settings.related_top_n)
            .expect("context");
        let prompt = build_framework_prompt(
            &focal,
            index,
            &context,
            &settings.template,
            &settings.model,
            settings.temperature,
        );
        let framework = ktforge::pipeline::generate_framework(&prompt, &gateway).expect("framework");
        let focal_source = index.model.decl_text(&focal).unwrap().to_string();
        let (groups, failed) =
            ktforge::pipeline::design_test_cases(&focal_source, settings, &gateway);
        assert!(failed.is_empty());
        let mut methods = Vec::new();
        for group in &groups {
            methods.push(
                ktforge::pipeline::transform_group(group, &context, &framework, settings, &gateway)
                    .expect("transform"),
            );
        }
        ktforge::integrate::integrate(&framework.source_text, &methods).expect("integrate").0
    };
    assert!(integrated.contains(BUG_OFFSET), "integrated source lost the offset bug");
    assert!(integrated.contains(BUG_HITS), "integrated source lost the hits bug");
    assert!(!integrated.contains("import com.acme.banking.Account;"));

    // what the rule pass will produce in iteration 1
    let symbol_diag = Diagnostic {
        kind: DiagnosticKind::Compile,
        file: "MatcherTest.java".into(),
        line: Some(7),
        symbol: Some("Account".into()),
        message: "cannot find symbol".into(),
    };
    let (rule_fixed, fixed) = rule_based_repair(&integrated, &[symbol_diag], index, &focal);
    assert_eq!(fixed, vec!["Account".to_string()]);

    // LLM repair 1 fixes the offset assertion, repair 2 fixes the hit count
    let repair_one = rule_fixed.replace(BUG_OFFSET, FIX_OFFSET);
    assert_ne!(repair_one, rule_fixed);
    let repair_two = repair_one.replace(BUG_HITS, FIX_HITS);
    assert_ne!(repair_two, repair_one);

    let mut script = stage_script;
    script.push(java(&repair_one));
    script.push(java(&repair_two));
    FocalPlan {
        focal: "com.acme.text.Matcher#findMatchPattern(char[],String)",
        fixture_file: "matcher_find.jsonl",
        script,
        expected_status: ArtifactStatus::CompiledPassed,
        expected_repairs: 3,
    }
}

#[test]
#[ignore = "writes committed fixtures; run on purpose, then review the diff"]
fn regenerate_replay_fixtures_and_goldens() {
    let index = toy_index();
    let graph = build_call_graph(&index);
    let settings = PipelineSettings::default();

    // knowledge-base golden
    std::fs::create_dir_all(fixtures_dir().join("goldens")).unwrap();
    std::fs::write(fixtures_dir().join("goldens/toy_kb.jsonl"), render_index(&index)).unwrap();

    // framework-prompt and usage-context goldens for the deposit focal
    let deposit = CallableId("com.acme.banking.Account#deposit(long)".into());
    let traces = mine_usage_traces(&deposit, &index, &graph, settings.max_usage_traces);
    let context =
        assemble_usage_context(&deposit, &index, &traces, settings.related_top_n).unwrap();
    std::fs::write(
        fixtures_dir().join("goldens/usage_context_account_deposit.json"),
        serde_json::to_string_pretty(&context).unwrap(),
    )
    .unwrap();
    let prompt = build_framework_prompt(
        &deposit,
        &index,
        &context,
        &settings.template,
        &settings.model,
        settings.temperature,
    );
    std::fs::write(
        fixtures_dir().join("goldens/framework_prompt_account_deposit.txt"),
        &prompt.messages.last().unwrap().content,
    )
    .unwrap();

    // replay fixtures + integrated-source goldens, one recorded run per focal
    let replay_dir = fixtures_dir().join("replay_run");
    let fixture_out = replay_dir.join("fixtures");
    std::fs::create_dir_all(&fixture_out).unwrap();
    let goldens_out = replay_dir.join("goldens");
    let _ = std::fs::remove_dir_all(&goldens_out);
    std::fs::create_dir_all(&goldens_out).unwrap();

    let plans = vec![deposit_plan(), settle_plan(), matcher_plan(&index, &graph, &settings)];
    let build_root = tempfile::tempdir().unwrap();

    for plan in plans {
        let fixture_path = fixture_out.join(plan.fixture_file);
        let _ = std::fs::remove_file(&fixture_path);
        let mock = Box::new(MockBackend::new(plan.script.clone()));
        let recorder = RecordBackend::create(mock, &fixture_path).expect("recorder");
        let focal = CallableId(plan.focal.to_string());
        let workdir = build_root.path().join(sanitize_focal_id(plan.focal)).join("build");
        let adapter = fake_adapter(&workdir);
        let (artifact, transcript) =
            run_pipeline(&focal, &index, &graph, &settings, &recorder, &adapter)
                .expect("pipeline");
        assert_eq!(artifact.status, plan.expected_status, "focal {}", plan.focal);
        assert_eq!(
            artifact.repair_history.len(),
            plan.expected_repairs,
            "focal {} repair count",
            plan.focal
        );
        assert!(artifact.failed_views.is_empty());
        assert!(artifact.skipped_groups.is_empty());
        write_artifact(&goldens_out, &artifact, &transcript).expect("write goldens");
    }

    // sanity: replaying the recorded fixtures reproduces the goldens
    let mut entries = BTreeMap::new();
    for file in std::fs::read_dir(&fixture_out).unwrap() {
        let path = file.unwrap().path();
        if path.extension().map(|x| x == "jsonl").unwrap_or(false) {
            entries.extend(ktforge::gateway::load_fixture(&path).unwrap());
        }
    }
    let replay = ktforge::gateway::ReplayBackend::from_entries(entries);
    let focal = CallableId("com.acme.text.Matcher#findMatchPattern(char[],String)".into());
    let workdir = build_root.path().join("replay-check").join("build");
    let adapter = fake_adapter(&workdir);
    let (artifact, _) =
        run_pipeline(&focal, &index, &graph, &settings, &replay, &adapter).expect("replay run");
    let golden = std::fs::read_to_string(
        goldens_out.join(sanitize_focal_id(focal.as_str())).join("MatcherTest.java"),
    )
    .unwrap();
    assert_eq!(artifact.integrated_source.as_deref(), Some(golden.as_str()));
}
