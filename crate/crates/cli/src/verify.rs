//! Re-derivation of a stored report from its echoed inputs.

use serde_json::{json, Value};

use crate::commands::{execute, Outcome, Settings, Status, Task, SCHEMA};
use crate::problem::ProblemFile;
use crate::CliError;

/// Report fields that must be reproduced exactly (numbers up to `TOL`).
const CHECKED: &[&str] = &[
    "/status",
    "/analysis/truncation",
    "/analysis/k",
    "/analysis/q",
    "/analysis/block_dims",
    "/analysis/filtration_dims",
    "/analysis/order",
    "/analysis/approximation",
    "/analysis/decomposition",
    "/gate/k",
    "/gate/q",
    "/gate/frame_shift",
    "/gate/verdicts",
    "/gate/selected",
    "/gate/no_zero_in_cone",
    "/solution/route",
    "/solution/zero/c_exact",
    "/solution/refined",
    "/solution/refined_exact",
    "/solution/all_within_bound",
    "/degree/chi",
    "/degree/r0",
    "/degree/signs",
    "/degree/classical",
    "/levelset/rows",
    "/perturbation/experiments",
];

const TOL: f64 = 1e-9;

fn close(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            x == y || (x - y).abs() <= TOL * x.abs().max(y.abs()).max(1.0)
        }
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| close(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| close(v, w)))
        }
        _ => a == b,
    }
}

/// Re-runs the stored command and compares the recorded claims.
pub fn verify(text: &str) -> Result<Outcome, CliError> {
    let stored: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("report: {e}")))?;
    if stored.get("schema") != Some(&json!(SCHEMA)) {
        return Err(CliError::Input(format!("report schema is not {SCHEMA}")));
    }
    let field = |name: &str| stored.get(name).cloned().ok_or_else(|| CliError::Input(format!("report has no `{name}`")));
    let task: Task = serde_json::from_value(field("task")?).map_err(|e| CliError::Input(format!("task: {e}")))?;
    let input: ProblemFile =
        serde_json::from_value(field("input")?).map_err(|e| CliError::Input(format!("input: {e}")))?;
    let settings: Settings =
        serde_json::from_value(field("settings")?).map_err(|e| CliError::Input(format!("settings: {e}")))?;
    settings.validate()?;
    let fresh = execute(&task, &input, &settings)?.report;
    let mut checks = Vec::new();
    for path in CHECKED {
        let Some(expected) = stored.pointer(path) else { continue };
        let actual = fresh.pointer(path).cloned().unwrap_or(Value::Null);
        checks.push(json!({ "field": path, "ok": close(expected, &actual) }));
    }
    if let Some(sol) = fresh.get("solution") {
        let bounded = sol.get("all_within_bound") == Some(&json!(true));
        checks.push(json!({ "field": "remainder bound on every sample", "ok": bounded }));
    }
    let ok = checks.iter().all(|c| c["ok"] == json!(true));
    let report = json!({
        "schema": SCHEMA,
        "command": "verify",
        "verified_command": task.name(),
        "checks": checks,
        "status": if ok { "ok" } else { "negative" },
    });
    Ok(Outcome { report, csv: None, status: if ok { Status::Ok } else { Status::Negative } })
}
