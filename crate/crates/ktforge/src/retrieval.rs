//! Function similarity by shared usage and usage-context assembly for
//! prompts.
//!
//! Two functions are similar when they invoke the same methods and touch
//! the same fields: the score is the sum of two Jaccard terms, one over
//! invoked-method sets and one over accessed-field sets. A term whose
//! union is empty contributes 0.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::model::CallableId;
use crate::kb::{FieldKey, FunctionIndex, KnowledgeUnit};
use crate::mining::{render_trace, UsageTrace};

/// The usage sets of one function: invoked methods M and accessed fields F.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageProfile {
    pub callable_id: CallableId,
    pub invoked: BTreeSet<CallableId>,
    pub fields: BTreeSet<FieldKey>,
}

impl UsageProfile {
    pub fn from_unit(unit: &KnowledgeUnit) -> Self {
        UsageProfile {
            callable_id: unit.callable_id.clone(),
            invoked: unit.invoked_methods.clone(),
            fields: unit.accessed_fields.clone(),
        }
    }
}

/// Exact similarity as intersection/union counts, so ranking and rendering
/// never depend on float rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Similarity {
    pub method_inter: usize,
    pub method_union: usize,
    pub field_inter: usize,
    pub field_union: usize,
}

impl Similarity {
    /// Score in [0, 2]: method-usage Jaccard plus field-usage Jaccard.
    pub fn value(&self) -> f64 {
        term(self.method_inter, self.method_union) + term(self.field_inter, self.field_union)
    }

    pub fn is_zero(&self) -> bool {
        self.method_inter == 0 && self.field_inter == 0
    }

    /// Exact rational comparison: i_m/u_m + i_f/u_f cross-multiplied.
    pub fn cmp_exact(&self, other: &Similarity) -> Ordering {
        let (an, ad) = self.as_rational();
        let (bn, bd) = other.as_rational();
        (an as u128 * bd as u128).cmp(&(bn as u128 * ad as u128))
    }

    /// Numerator and denominator of the exact score.
    pub fn as_rational(&self) -> (u64, u64) {
        let (mn, md) = rational_term(self.method_inter, self.method_union);
        let (fn_, fd) = rational_term(self.field_inter, self.field_union);
        (mn * fd + fn_ * md, md * fd)
    }
}

fn term(inter: usize, union: usize) -> f64 {
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn rational_term(inter: usize, union: usize) -> (u64, u64) {
    if union == 0 {
        (0, 1)
    } else {
        (inter as u64, union as u64)
    }
}

/// Compute the similarity counts between two usage profiles.
pub fn similarity(a: &UsageProfile, b: &UsageProfile) -> Similarity {
    Similarity {
        method_inter: a.invoked.intersection(&b.invoked).count(),
        method_union: a.invoked.union(&b.invoked).count(),
        field_inter: a.fields.intersection(&b.fields).count(),
        field_union: a.fields.union(&b.fields).count(),
    }
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("unknown focal callable: {0}")]
    UnknownFocal(CallableId),
}

/// Top-N functions most similar to the focal one, excluding the focal
/// itself and zero-score candidates; ties break by lexicographic id.
/// Works off the unit table alone, so it also serves the persisted index.
pub fn related_from_units(
    focal: &CallableId,
    units: &std::collections::BTreeMap<CallableId, KnowledgeUnit>,
    n: usize,
) -> Result<Vec<(CallableId, Similarity)>, RetrievalError> {
    let focal_unit = units.get(focal).ok_or_else(|| RetrievalError::UnknownFocal(focal.clone()))?;
    let focal_profile = UsageProfile::from_unit(focal_unit);
    let mut scored: Vec<(CallableId, Similarity)> = units
        .values()
        .filter(|u| &u.callable_id != focal)
        .map(|u| {
            let sim = similarity(&focal_profile, &UsageProfile::from_unit(u));
            (u.callable_id.clone(), sim)
        })
        .filter(|(_, sim)| !sim.is_zero())
        .collect();
    scored.sort_by(|a, b| b.1.cmp_exact(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(scored)
}

/// [`related_from_units`] over a built index.
pub fn related_functions(
    focal: &CallableId,
    index: &FunctionIndex,
    n: usize,
) -> Result<Vec<(CallableId, Similarity)>, RetrievalError> {
    related_from_units(focal, &index.units, n)
}

/// Everything the transformation prompt needs to know about the focal
/// method's surroundings.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct UsageContext {
    pub focal_id: String,
    /// Class declaration header, preceded by its doc comment when present.
    pub class_declaration_text: String,
    pub relevant_field_decls: Vec<String>,
    /// `(signature, doc comment)` of methods the focal method depends on.
    pub dependent_method_signatures: Vec<(String, Option<String>)>,
    /// `(signature, shared-usage marker)` of functions related by usage.
    pub related_method_signatures: Vec<(String, String)>,
    /// Rendered usage traces.
    pub usage_traces: Vec<String>,
}

/// Assemble the usage context block for a focal method.
pub fn assemble_usage_context(
    focal: &CallableId,
    index: &FunctionIndex,
    traces: &[UsageTrace],
    related_top_n: usize,
) -> Result<UsageContext, RetrievalError> {
    let focal_unit = index.unit(focal).ok_or_else(|| RetrievalError::UnknownFocal(focal.clone()))?;
    let class = index
        .model
        .classes
        .get(focal.class_qname())
        .ok_or_else(|| RetrievalError::UnknownFocal(focal.clone()))?;

    let mut class_declaration_text = String::new();
    if let Some(doc) = &class.doc_comment {
        for line in doc.lines() {
            class_declaration_text.push_str("// ");
            class_declaration_text.push_str(line);
            class_declaration_text.push('\n');
        }
    }
    class_declaration_text.push_str(&class.declaration_text);

    // dependent methods: in-project callables the focal method invokes
    let dependent_method_signatures: Vec<(String, Option<String>)> = focal_unit
        .invoked_methods
        .iter()
        .filter_map(|id| index.unit(id))
        .map(|u| (u.signature_text.clone(), u.doc_comment.clone()))
        .collect();

    let focal_profile = UsageProfile::from_unit(focal_unit);
    let related = related_functions(focal, index, related_top_n)?;
    let mut related_method_signatures = Vec::new();
    let mut relevant_keys: BTreeSet<FieldKey> = BTreeSet::new();

    for id in focal_unit.invoked_methods.iter() {
        if let Some(u) = index.unit(id) {
            relevant_keys.extend(u.accessed_fields.iter().cloned());
        }
    }
    for (id, _) in &related {
        let Some(u) = index.unit(id) else { continue };
        relevant_keys.extend(u.accessed_fields.iter().cloned());
        let profile = UsageProfile::from_unit(u);
        let shared_methods: Vec<&str> = focal_profile
            .invoked
            .intersection(&profile.invoked)
            .map(|m| m.member_name())
            .collect();
        let shared_fields: Vec<&str> = focal_profile
            .fields
            .intersection(&profile.fields)
            .map(|f| f.field.as_str())
            .collect();
        let mut parts = Vec::new();
        if !shared_methods.is_empty() {
            parts.push(format!("methods [{}]", shared_methods.join(", ")));
        }
        if !shared_fields.is_empty() {
            parts.push(format!("fields [{}]", shared_fields.join(", ")));
        }
        related_method_signatures
            .push((u.signature_text.clone(), format!("shared usage: {}", parts.join(", "))));
    }

    let relevant_field_decls = relevant_keys
        .iter()
        .filter_map(|key| {
            let class = index.model.classes.get(&key.class)?;
            let field = class.field(&key.field)?;
            let mut parts = Vec::new();
            let vis = field.visibility.keyword();
            if !vis.is_empty() {
                parts.push(vis.to_string());
            }
            if field.is_static {
                parts.push("static".to_string());
            }
            parts.push(field.declared_type.clone());
            parts.push(field.name.clone());
            Some(format!("{}; // declared in {}", parts.join(" "), key.class))
        })
        .collect();

    Ok(UsageContext {
        focal_id: focal.to_string(),
        class_declaration_text,
        relevant_field_decls,
        dependent_method_signatures,
        related_method_signatures,
        usage_traces: traces.iter().map(render_trace).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_units;
    use crate::kb::build_index;
    use std::path::PathBuf;

    fn profile(id: &str, methods: &[&str], fields: &[(&str, &str)]) -> UsageProfile {
        UsageProfile {
            callable_id: CallableId(id.to_string()),
            invoked: methods.iter().map(|m| CallableId(m.to_string())).collect(),
            fields: fields
                .iter()
                .map(|(c, f)| FieldKey { class: c.to_string(), field: f.to_string() })
                .collect(),
        }
    }

    #[test]
    fn identical_nonempty_profiles_score_two() {
        let a = profile("a", &["f", "g"], &[("C", "x")]);
        let b = profile("b", &["f", "g"], &[("C", "x")]);
        assert_eq!(similarity(&a, &b).value(), 2.0);
    }

    #[test]
    fn partial_method_overlap_with_empty_fields() {
        // M(a)={f,g}, M(b)={g,h}, F empty on both: 1/3 + 0
        let a = profile("a", &["f", "g"], &[]);
        let b = profile("b", &["g", "h"], &[]);
        let sim = similarity(&a, &b);
        assert_eq!(sim.as_rational(), (1, 3));
        assert_eq!(format!("{:.4}", sim.value()), "0.3333");
    }

    #[test]
    fn disjoint_profiles_score_zero() {
        let a = profile("a", &["f"], &[("C", "x")]);
        let b = profile("b", &["g"], &[("C", "y")]);
        let sim = similarity(&a, &b);
        assert!(sim.is_zero());
        assert_eq!(sim.value(), 0.0);
    }

    #[test]
    fn symmetry() {
        let a = profile("a", &["f", "g"], &[("C", "x")]);
        let b = profile("b", &["g"], &[("C", "x"), ("C", "y")]);
        assert_eq!(similarity(&a, &b), similarity(&b, &a));
    }

    fn toy_index() -> FunctionIndex {
        let src = r#"
            package p;
            public class A {
                long balance;
                long max;
                void validate() { }
                void deposit() { validate(); balance = balance + 1; max = max + 0; }
                void withdraw() { validate(); balance = balance - 1; }
                void update() { validate(); balance = balance + 2; }
                long get() { return balance; }
                void stranger() { int unrelatedLocal = 0; }
            }
        "#;
        build_index(parse_units(vec![(PathBuf::from("A.java"), src.to_string())])).unwrap()
    }

    #[test]
    fn related_excludes_zero_scores_and_self() {
        let index = toy_index();
        let focal = CallableId("p.A#deposit()".into());
        let related = related_functions(&focal, &index, 10).unwrap();
        let ids: Vec<&str> = related.iter().map(|(id, _)| id.as_str()).collect();
        assert!(!ids.contains(&"p.A#deposit()"));
        assert!(!ids.contains(&"p.A#stranger()"));
        assert!(ids.contains(&"p.A#withdraw()"));
        assert!(ids.contains(&"p.A#update()"));
    }

    #[test]
    fn n_zero_is_empty() {
        let index = toy_index();
        let focal = CallableId("p.A#deposit()".into());
        assert!(related_functions(&focal, &index, 0).unwrap().is_empty());
    }

    #[test]
    fn ties_break_lexicographically() {
        let index = toy_index();
        let focal = CallableId("p.A#deposit()".into());
        let related = related_functions(&focal, &index, 2).unwrap();
        // update and withdraw tie exactly; update sorts first
        assert_eq!(related[0].0.as_str(), "p.A#update()");
        assert_eq!(related[1].0.as_str(), "p.A#withdraw()");
        assert_eq!(related[0].1.cmp_exact(&related[1].1), std::cmp::Ordering::Equal);
    }

    #[test]
    fn context_sections_for_focal_without_deps() {
        let index = toy_index();
        let focal = CallableId("p.A#stranger()".into());
        let cx = assemble_usage_context(&focal, &index, &[], 5).unwrap();
        assert!(cx.class_declaration_text.contains("class A"));
        assert!(cx.relevant_field_decls.is_empty());
        assert!(cx.dependent_method_signatures.is_empty());
        assert!(cx.related_method_signatures.is_empty());
        assert!(cx.usage_traces.is_empty());
    }

    #[test]
    fn related_markers_name_shared_usage() {
        let index = toy_index();
        let focal = CallableId("p.A#deposit()".into());
        let cx = assemble_usage_context(&focal, &index, &[], 5).unwrap();
        assert!(!cx.related_method_signatures.is_empty());
        for (_, marker) in &cx.related_method_signatures {
            assert!(marker.contains("shared usage:"));
            assert!(marker.contains("validate") || marker.contains("balance"));
        }
        // fields accessed by dependents/related appear
        assert!(cx.relevant_field_decls.iter().any(|f| f.contains("balance")));
    }

    #[test]
    fn unknown_focal_is_an_error() {
        let index = toy_index();
        let focal = CallableId("p.A#nope()".into());
        assert!(matches!(
            assemble_usage_context(&focal, &index, &[], 5),
            Err(RetrievalError::UnknownFocal(_))
        ));
    }
}
