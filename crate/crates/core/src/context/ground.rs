use std::collections::BTreeMap;

use crate::wire::ContentValue;

use super::schema::SharedContext;
use super::validate::{validate_task_params, ValidationReport};
use super::ContextError;

#[derive(Debug, Clone, PartialEq)]
pub enum GroundingResult {
    Complete(BTreeMap<String, ContentValue>),
    Ambiguous {
        param: String,
        surface: String,
        candidates: Vec<String>,
    },
    Missing(Vec<String>),
    /// Bound values that violate the task definition and have no alias route.
    Invalid(ValidationReport),
}

/// Binds agent values to a task's parameters.
///
/// Per parameter in declaration order, a string outside its enumeration is
/// looked up in the alias table: one candidate substitutes automatically, two
/// or more make the grounding ambiguous (first such parameter wins). Missing
/// required parameters are reported only after the ambiguity pass.
pub fn ground_task(
    ctx: &SharedContext,
    task: &str,
    bindings: &BTreeMap<String, ContentValue>,
) -> Result<GroundingResult, ContextError> {
    let def = ctx
        .task(task)
        .ok_or_else(|| ContextError::UnknownTask(task.to_string()))?;
    let mut resolved = bindings.clone();
    for param in &def.params {
        let (Some(ContentValue::String(surface)), Some(allowed)) =
            (bindings.get(&param.name), param.enumeration())
        else {
            continue;
        };
        if allowed.contains(surface) {
            continue;
        }
        match ctx.alias(&param.name, surface) {
            Some([single]) => {
                resolved.insert(param.name.clone(), single.as_str().into());
            }
            Some(candidates) => {
                return Ok(GroundingResult::Ambiguous {
                    param: param.name.clone(),
                    surface: surface.clone(),
                    candidates: candidates.to_vec(),
                })
            }
            None => {}
        }
    }
    let missing: Vec<String> = def
        .params
        .iter()
        .filter(|p| p.required && !resolved.contains_key(&p.name))
        .map(|p| p.name.clone())
        .collect();
    if !missing.is_empty() {
        return Ok(GroundingResult::Missing(missing));
    }
    let report = validate_task_params(def, &ContentValue::Map(resolved.clone()), "params");
    if report.is_valid() {
        Ok(GroundingResult::Complete(resolved))
    } else {
        Ok(GroundingResult::Invalid(report))
    }
}
