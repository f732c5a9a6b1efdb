//! Helpers shared by the integration tests.
#![allow(dead_code)]

use serde_json::Value;

/// Messages for every schema violation of a run report.
pub fn schema_errors(report: &Value) -> Vec<String> {
    let schema: Value = serde_json::from_str(sparse_nls::report::SCHEMA_JSON).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator
        .iter_errors(report)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect()
}

/// Structural equality with a relative tolerance on floating-point numbers.
pub fn assert_json_close(actual: &Value, expected: &Value, path: &str) {
    match (actual, expected) {
        (Value::Number(a), Value::Number(e)) if a.is_f64() || e.is_f64() => {
            let (a, e) = (a.as_f64().unwrap(), e.as_f64().unwrap());
            let tol = 1e-9 * e.abs().max(1e-12);
            assert!((a - e).abs() <= tol, "{path}: {a} != {e}");
        }
        (Value::Array(a), Value::Array(e)) => {
            assert_eq!(a.len(), e.len(), "{path}: array length");
            for (i, (x, y)) in a.iter().zip(e).enumerate() {
                assert_json_close(x, y, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(a), Value::Object(e)) => {
            let ka: Vec<_> = a.keys().collect();
            let ke: Vec<_> = e.keys().collect();
            assert_eq!(ka, ke, "{path}: keys");
            for (k, v) in a {
                assert_json_close(v, &e[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(actual, expected, "{path}"),
    }
}
