use std::path::Path;

use anyhow::{Context, Result};
use loophole_core::rational::{parse_rational, to_f64};
use serde::Serialize;
use serde_json::Value;

/// Rewrites every `"num/den"` string as a JSON number.
fn floatify(v: Value) -> Value {
    match v {
        Value::String(s) if is_fraction(&s) => parse_rational(&s)
            .ok()
            .and_then(|r| serde_json::Number::from_f64(to_f64(&r)))
            .map_or(Value::String(s), Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(floatify).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, floatify(v))).collect()),
        other => other,
    }
}

fn is_fraction(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    match body.split_once('/') {
        Some((n, d)) => {
            !n.is_empty() && !d.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) && d.bytes().all(|b| b.is_ascii_digit())
        }
        None => false,
    }
}

pub fn render<T: Serialize>(value: &T, float: bool) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    if float {
        v = floatify(v);
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Writes the primary output to `path`, or to stdout when absent.
pub fn emit<T: Serialize>(value: &T, float: bool, path: Option<&Path>) -> Result<()> {
    let text = render(value, float)?;
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

pub fn error_json(err: &anyhow::Error) -> String {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<loophole_core::Error>())
        .map_or_else(
            || if err.chain().any(|e| e.is::<std::io::Error>()) { "io" } else { "error" },
            |e| e.kind(),
        );
    let report = ErrorReport { error: ErrorBody { kind, message: format!("{err:#}") } };
    serde_json::to_string(&report).expect("error report serializes")
}
