//! Canonical text form of [`ContentValue`].
//!
//! Rules: map keys sorted by code point, no insignificant whitespace, UTF-8,
//! integers in plain decimal, floats in shortest round-trip form (always with
//! a fraction or exponent so they never read back as integers), and strings
//! escaping only `"`, `\` and control characters (`\b \f \n \r \t`, others as
//! lowercase `\u00xx`).

use std::fmt::Write;

use super::value::ContentValue;
use super::WireError;

pub fn canonicalize(value: &ContentValue) -> Result<Vec<u8>, WireError> {
    canonical_string(value).map(String::into_bytes)
}

pub fn canonical_string(value: &ContentValue) -> Result<String, WireError> {
    let mut out = String::new();
    write_value(&mut out, value)?;
    Ok(out)
}

/// Parses structured text into a value. Accepts any valid JSON document, not
/// only canonical input.
pub fn parse_text(bytes: &[u8]) -> Result<ContentValue, WireError> {
    let json: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| WireError::MalformedFrame(e.to_string()))?;
    ContentValue::try_from(json).map_err(WireError::MalformedFrame)
}

fn write_value(out: &mut String, value: &ContentValue) -> Result<(), WireError> {
    match value {
        ContentValue::Null => out.push_str("null"),
        ContentValue::Bool(true) => out.push_str("true"),
        ContentValue::Bool(false) => out.push_str("false"),
        ContentValue::Int(i) => {
            let _ = write!(out, "{i}");
        }
        ContentValue::Float(f) => {
            if !f.is_finite() {
                return Err(WireError::NonCanonicalizable(*f));
            }
            let _ = write!(out, "{f:?}");
        }
        ContentValue::String(s) => write_string(out, s),
        ContentValue::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
        ContentValue::Map(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, k);
                out.push(':');
                write_value(out, v)?;
            }
            out.push('}');
        }
    }
    Ok(())
}

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\u{08}' => out.push_str("\\b"),
            '\u{0c}' => out.push_str("\\f"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}
