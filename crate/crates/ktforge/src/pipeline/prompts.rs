//! Prompt construction for every pipeline stage.
//!
//! The framework prompt carries five sections in a fixed order: core task
//! and instructions, focal method and class, relevant project knowledge,
//! test class template, and output specification. Test-case design prompts
//! deliberately carry no project knowledge at all; the three views share
//! one structure and differ only in the design-guidance section.

use serde::{Deserialize, Serialize};

use crate::frontend::model::CallableId;
use crate::gateway::ChatRequest;
use crate::kb::FunctionIndex;
use crate::retrieval::UsageContext;

pub const SECTION_CORE_TASK: &str = "## Core Task and Instructions";
pub const SECTION_FOCAL: &str = "## Focal Method and Class";
pub const SECTION_KNOWLEDGE: &str = "## Relevant Project Knowledge";
pub const SECTION_TEMPLATE: &str = "## Test Class Template";
pub const SECTION_OUTPUT: &str = "## Output Specification";
pub const SECTION_GUIDANCE: &str = "## Design Guidance";

/// Intent of a test-case group, mirroring the view that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestIntent {
    Branch,
    Functional,
    Exception,
}

impl TestIntent {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestIntent::Branch => "branch",
            TestIntent::Functional => "functional",
            TestIntent::Exception => "exception",
        }
    }
}

/// One test-case design view: a named guidance variant. The registry is
/// extensible; three classical views ship by default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptView {
    pub name: String,
    pub intent: TestIntent,
    pub guidance: String,
}

pub fn default_views() -> Vec<PromptView> {
    vec![
        PromptView {
            name: "condition-branch-driven".into(),
            intent: TestIntent::Branch,
            guidance: "Explore the different control-flow paths of the focal method. \
                       Derive inputs that drive each conditional statement and loop down \
                       both outcomes so branch and path coverage improve."
                .into(),
        },
        PromptView {
            name: "functionality-driven".into(),
            intent: TestIntent::Functional,
            guidance: "Focus on the intended semantics of the method. Exercise typical \
                       behaviors and edge cases derived from the parameter types and \
                       return values, including boundary values such as empty inputs, \
                       zero, and extreme sizes."
                .into(),
        },
        PromptView {
            name: "exception-oriented".into(),
            intent: TestIntent::Exception,
            guidance: "Probe robustness and failure handling. Design invalid or \
                       unexpected inputs that should trigger exceptions or error states, \
                       and name the exception type expected in each case."
                .into(),
        },
    ]
}

fn focal_section(focal: &CallableId, index: &FunctionIndex) -> String {
    let mut out = String::new();
    out.push_str(&format!("Class under test: {}\n", focal.class_qname()));
    out.push_str(&format!("Focal method: {}\n\n", focal));
    if let Some(text) = index.model.decl_text(focal) {
        out.push_str("```java\n");
        out.push_str(text.trim_end());
        out.push_str("\n```\n");
    }
    out
}

/// Setup excerpts (fields, lifecycle methods, class annotations) of test
/// classes already present in the project for the focal class, found by the
/// `<Simple>Test`/`<Simple>Tests` naming convention.
pub fn existing_test_setup(focal: &CallableId, index: &FunctionIndex) -> Option<String> {
    let simple = focal.class_qname().rsplit('.').next().unwrap_or("");
    let mut excerpts = String::new();
    for suffix in ["Test", "Tests"] {
        for qname in index.lookup_simple_class(&format!("{}{}", simple, suffix)) {
            let Some(class) = index.model.classes.get(&qname) else { continue };
            let Some(text) = index.model.unit_text(&class.source_unit) else { continue };
            excerpts.push_str(&format!("From {}:\n```java\n", qname));
            for field in &class.fields {
                excerpts.push_str(field.decl_span.slice(text).trim());
                excerpts.push('\n');
            }
            for id in class.methods.iter().chain(class.constructors.iter()) {
                let Some(decl) = index.model.callable(id) else { continue };
                let lifecycle = decl.annotations.iter().any(|a| {
                    let name = a.trim_start_matches('@');
                    name.starts_with("Before") || name.starts_with("After")
                });
                if lifecycle {
                    excerpts.push_str(decl.decl_span.slice(text).trim());
                    excerpts.push('\n');
                }
            }
            excerpts.push_str("```\n");
        }
    }
    if excerpts.is_empty() {
        None
    } else {
        Some(excerpts)
    }
}

/// Stage 1 prompt: the five-section framework-generation prompt.
pub fn build_framework_prompt(
    focal: &CallableId,
    index: &FunctionIndex,
    context: &UsageContext,
    template: &str,
    model: &str,
    temperature: f64,
) -> ChatRequest {
    let simple = focal.class_qname().rsplit('.').next().unwrap_or("Focal");
    let mut p = String::new();

    p.push_str(SECTION_CORE_TASK);
    p.push_str("\n");
    p.push_str(
        "Generate a reusable test class framework for the focal method below: the class \
         skeleton only, with field declarations, setup and teardown routines, and any shared \
         helper methods, but no test logic yet.\n\
         - Set up proper initialization in a setup method and release resources in teardown.\n\
         - Respect access restrictions: never touch private members of the class under test \
         directly; construct it through its public constructors and methods.\n\
         - The result must be syntactically correct, compilable Java.\n\n",
    );

    p.push_str(SECTION_FOCAL);
    p.push('\n');
    p.push_str(&focal_section(focal, index));
    p.push('\n');

    p.push_str(SECTION_KNOWLEDGE);
    p.push('\n');
    p.push_str("### Documentation\n");
    p.push_str(&context.class_declaration_text);
    p.push('\n');
    if let Some(class) = index.model.classes.get(focal.class_qname()) {
        p.push_str("### Constructors and Parameters\n");
        if class.constructors.is_empty() {
            p.push_str("(no explicit constructors; the default constructor applies)\n");
        }
        for ctor_id in &class.constructors {
            if let Some(unit) = index.unit(ctor_id) {
                if let Some(doc) = &unit.doc_comment {
                    for line in doc.lines() {
                        p.push_str(&format!("// {}\n", line));
                    }
                }
                p.push_str(&unit.signature_text);
                p.push('\n');
            }
        }
    }
    if !context.usage_traces.is_empty() || !context.related_method_signatures.is_empty() {
        p.push_str("### Usage Knowledge\n");
        for trace in &context.usage_traces {
            p.push_str("```java\n");
            p.push_str(trace.trim_end());
            p.push_str("\n```\n");
        }
        for (sig, marker) in &context.related_method_signatures {
            p.push_str(&format!("{} // {}\n", sig, marker));
        }
    }
    if let Some(excerpts) = existing_test_setup(focal, index) {
        p.push_str("### Existing Test Setup\n");
        p.push_str(&excerpts);
    }
    p.push('\n');

    p.push_str(SECTION_TEMPLATE);
    p.push('\n');
    p.push_str("```java\n");
    p.push_str(template.replace("{{CLASS_NAME}}", simple).trim_end());
    p.push_str("\n```\n\n");

    p.push_str(SECTION_OUTPUT);
    p.push('\n');
    p.push_str(&format!(
        "Respond with exactly one fenced ```java code block containing the complete test \
         class framework named {}Test, in package {}. No prose outside the code block.\n",
        simple,
        package_of(focal)
    ));

    ChatRequest::new(model, temperature)
        .system("You are an expert Java unit-testing engineer.")
        .user(p)
}

fn package_of(focal: &CallableId) -> String {
    let qname = focal.class_qname();
    match qname.rfind('.') {
        Some(i) => qname[..i].to_string(),
        None => String::new(),
    }
}

/// Stage 2 prompt: one per view, focal method only, no project knowledge.
pub fn build_design_prompt(
    focal_source: &str,
    view: &PromptView,
    model: &str,
    temperature: f64,
) -> ChatRequest {
    let mut p = String::new();
    p.push_str(SECTION_CORE_TASK);
    p.push('\n');
    p.push_str(
        "Design unit test cases for the focal method below. Plan what to test; do not \
         write any test code. Organize the cases into logical groups that share a testing \
         intent, and give every case a concrete scenario, input values, and the expected \
         output or behavior.\n\n",
    );
    p.push_str("## Focal Method\n```java\n");
    p.push_str(focal_source.trim_end());
    p.push_str("\n```\n\n");
    p.push_str(SECTION_GUIDANCE);
    p.push('\n');
    p.push_str(&view.guidance);
    p.push_str("\n\n");
    p.push_str(SECTION_OUTPUT);
    p.push('\n');
    p.push_str(&format!(
        "Respond with exactly one fenced ```json code block: a list of groups, each\n\
         {{\"group_name\": string, \"intent\": \"{}\", \"cases\": [{{\"scenario\": string, \
         \"inputs\": [{{\"name\": string, \"value\": string}}], \"expected\": string}}]}}.\n\
         All values are strings. No prose outside the code block.\n",
        view.intent.as_str()
    ));
    ChatRequest::new(model, temperature)
        .system("You are an expert software test designer.")
        .user(p)
}

/// Appended on the single re-prompt after an unparseable design response.
pub fn design_format_reminder() -> String {
    "The previous response could not be parsed. Respond again with exactly one fenced \
     ```json code block containing only the JSON list of groups in the specified shape."
        .to_string()
}

/// Stage 3 prompt: group + usage context + framework.
pub fn build_transform_prompt(
    group_json: &str,
    context: &UsageContext,
    framework_source: &str,
    model: &str,
    temperature: f64,
) -> ChatRequest {
    let mut p = String::new();
    p.push_str(SECTION_CORE_TASK);
    p.push('\n');
    p.push_str(
        "Transform the test case group below into exactly one executable JUnit test method \
         that exercises every case in the group. Reuse the setup, teardown, and fields the \
         framework already provides instead of duplicating them; only add a new lifecycle or \
         helper method when the group genuinely needs one.\n\n",
    );
    p.push_str("## Test Case Group\n```json\n");
    p.push_str(group_json.trim_end());
    p.push_str("\n```\n\n");
    p.push_str("## Usage Context\n");
    p.push_str(&context.class_declaration_text);
    p.push('\n');
    for f in &context.relevant_field_decls {
        p.push_str(f);
        p.push('\n');
    }
    if !context.dependent_method_signatures.is_empty() {
        p.push_str("Dependent methods:\n");
        for (sig, doc) in &context.dependent_method_signatures {
            if let Some(doc) = doc {
                for line in doc.lines() {
                    p.push_str(&format!("// {}\n", line));
                }
            }
            p.push_str(sig);
            p.push('\n');
        }
    }
    if !context.related_method_signatures.is_empty() {
        p.push_str("Related methods:\n");
        for (sig, marker) in &context.related_method_signatures {
            p.push_str(&format!("{} // {}\n", sig, marker));
        }
    }
    for trace in &context.usage_traces {
        p.push_str("```java\n");
        p.push_str(trace.trim_end());
        p.push_str("\n```\n");
    }
    p.push('\n');
    p.push_str("## Test Class Framework\n```java\n");
    p.push_str(framework_source.trim_end());
    p.push_str("\n```\n\n");
    p.push_str(SECTION_OUTPUT);
    p.push('\n');
    p.push_str(
        "Respond with exactly one fenced ```java code block containing only the new member \
         method(s), led by one @Test method for this group. No class declaration, no prose.\n",
    );
    ChatRequest::new(model, temperature)
        .system("You are an expert Java unit-testing engineer.")
        .user(p)
}

/// Appended on the single re-prompt after a method-less transform response.
pub fn transform_format_reminder() -> String {
    "The previous response contained no test method. Respond again with exactly one fenced \
     ```java code block containing the new @Test method for this group."
        .to_string()
}

/// Repair prompt: failing source, diagnostics verbatim, focal context, and
/// relevant signatures.
pub fn build_repair_prompt(
    failing_source: &str,
    diagnostics_text: &str,
    focal_context: &str,
    relevant_signatures: &[String],
    model: &str,
    temperature: f64,
) -> ChatRequest {
    let mut p = String::new();
    p.push_str(SECTION_CORE_TASK);
    p.push('\n');
    p.push_str(
        "The following generated test class fails to compile or run. Apply a targeted \
         correction and return the complete fixed class. Preserve passing tests; change \
         only what the diagnostics require.\n\n",
    );
    p.push_str("## Failing Test Class\n```java\n");
    p.push_str(failing_source.trim_end());
    p.push_str("\n```\n\n");
    p.push_str("## Diagnostics\n```\n");
    p.push_str(diagnostics_text.trim_end());
    p.push_str("\n```\n\n");
    p.push_str("## Focal Method Context\n");
    p.push_str(focal_context.trim_end());
    p.push('\n');
    if !relevant_signatures.is_empty() {
        p.push_str("Relevant signatures:\n");
        for sig in relevant_signatures {
            p.push_str(sig);
            p.push('\n');
        }
    }
    p.push('\n');
    p.push_str(SECTION_OUTPUT);
    p.push('\n');
    p.push_str(
        "Respond with exactly one fenced ```java code block containing the complete \
         corrected test class. No prose outside the code block.\n",
    );
    ChatRequest::new(model, temperature)
        .system("You are an expert Java unit-testing engineer.")
        .user(p)
}

/// First fenced code block of a response (language tag ignored), or None.
pub fn extract_code_block(response: &str) -> Option<String> {
    let start = response.find("```")?;
    let after_fence = &response[start + 3..];
    let newline = after_fence.find('\n')?;
    let body_start = newline + 1;
    let end = after_fence[body_start..].find("```")?;
    Some(after_fence[body_start..body_start + end].trim_end().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_first_fenced_block() {
        let response = "Here you go:\n```java\nclass A { }\n```\nand more\n```\nother\n```";
        assert_eq!(extract_code_block(response).unwrap(), "class A { }");
    }

    #[test]
    fn no_block_is_none() {
        assert!(extract_code_block("just prose, no code").is_none());
    }

    #[test]
    fn block_without_language_tag() {
        let response = "```\n{\"a\": 1}\n```";
        assert_eq!(extract_code_block(response).unwrap(), "{\"a\": 1}");
    }

    #[test]
    fn design_prompt_has_no_project_knowledge_section() {
        let view = &default_views()[0];
        let req = build_design_prompt("int f() { return 1; }", view, "m", 1.0);
        let text = &req.messages.last().unwrap().content;
        assert!(!text.contains(SECTION_KNOWLEDGE));
        assert!(!text.contains(SECTION_TEMPLATE));
        assert!(text.contains(SECTION_CORE_TASK));
        assert!(text.contains(SECTION_GUIDANCE));
        assert!(text.contains(SECTION_OUTPUT));
    }

    #[test]
    fn design_views_differ_only_in_guidance() {
        let views = default_views();
        let focal = "int f(int x) { return x; }";
        let texts: Vec<String> = views
            .iter()
            .map(|v| build_design_prompt(focal, v, "m", 1.0).messages.last().unwrap().content.clone())
            .collect();
        // same structure: identical prefix up to the guidance section
        let prefix = |t: &str| t.split(SECTION_GUIDANCE).next().unwrap().to_string();
        assert_eq!(prefix(&texts[0]), prefix(&texts[1]));
        assert_eq!(prefix(&texts[1]), prefix(&texts[2]));
        assert_ne!(texts[0], texts[1]);
        assert_ne!(texts[1], texts[2]);
    }
}
