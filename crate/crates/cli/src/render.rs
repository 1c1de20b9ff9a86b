//! Serialization helpers: every number is written with 17 significant
//! digits so outputs round-trip exactly and identical runs are
//! byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::Failure;

/// A float as a 17-significant-digit scientific literal.
pub fn sig17(x: f64) -> String {
    // normalize -0.0 so equal values always print identically
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{:.16e}", x);
    // always sign the exponent ("e+0", not "e0") so CSV and JSON agree
    match s.find('e') {
        Some(i) if s.as_bytes()[i + 1] != b'-' => format!("{}e+{}", &s[..i], &s[i + 1..]),
        _ => s,
    }
}

/// A float as a JSON number node carrying the 17-digit literal verbatim.
pub fn jnum(x: f64) -> Value {
    Value::Number(
        sig17(x)
            .parse()
            .expect("scientific literal is a valid JSON number"),
    )
}

/// Pretty-print a JSON document with a trailing newline.
pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

/// Write to the given path, or to stdout when no path is set.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| Failure {
            code: 2,
            kind: "io",
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure {
                code: 3,
                kind: "io",
                message: format!("cannot write to stdout: {e}"),
            }),
    }
}
