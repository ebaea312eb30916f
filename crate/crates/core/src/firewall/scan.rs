use crate::wire::ContentValue;

use super::policy::InjectionSignature;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionMatch {
    pub signature_id: String,
    pub path: String,
}

pub fn signature_matches(pattern: &str, text: &str) -> bool {
    let (start, rest) = match pattern.strip_prefix('^') {
        Some(r) => (true, r),
        None => (false, pattern),
    };
    let (end, needle) = match rest.strip_suffix('$') {
        Some(r) => (true, r),
        None => (false, rest),
    };
    let needle = needle.to_lowercase();
    let hay = text.to_lowercase();
    match (start, end) {
        (true, true) => hay == needle,
        (true, false) => hay.starts_with(&needle),
        (false, true) => hay.ends_with(&needle),
        (false, false) => hay.contains(&needle),
    }
}

/// Every (signature, path) hit over the string leaves of `content`, in
/// document order. Paths join map keys with `.` and list indices as `[i]`.
pub fn scan_injection(content: &ContentValue, signatures: &[InjectionSignature]) -> Vec<InjectionMatch> {
    let mut hits = Vec::new();
    walk(content, String::new(), signatures, &mut hits);
    hits
}

fn walk(v: &ContentValue, path: String, sigs: &[InjectionSignature], hits: &mut Vec<InjectionMatch>) {
    match v {
        ContentValue::String(s) => {
            for sig in sigs.iter().filter(|sig| signature_matches(&sig.pattern, s)) {
                hits.push(InjectionMatch {
                    signature_id: sig.id.clone(),
                    path: path.clone(),
                });
            }
        }
        ContentValue::List(items) => {
            for (i, item) in items.iter().enumerate() {
                walk(item, format!("{path}[{i}]"), sigs, hits);
            }
        }
        ContentValue::Map(m) => {
            for (k, item) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(item, p, sigs, hits);
            }
        }
        _ => {}
    }
}
