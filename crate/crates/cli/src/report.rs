use std::time::Duration;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Input {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

impl Input {
    pub fn new(role: &'static str, path: &str, bytes: &[u8]) -> Input {
        Input {
            role,
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// The JSON document every subcommand prints.
pub struct Report {
    pub command: &'static str,
    pub inputs: Vec<Input>,
    pub verdicts: Value,
    pub witnesses: Vec<Value>,
    pub extra: Map<String, Value>,
    pub timings: Vec<(&'static str, Duration)>,
}

impl Report {
    pub fn new(command: &'static str) -> Report {
        Report {
            command,
            inputs: Vec::new(),
            verdicts: Value::Object(Map::new()),
            witnesses: Vec::new(),
            extra: Map::new(),
            timings: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.extra.insert(key.to_string(), value);
    }

    pub fn to_value(&self, with_timings: bool) -> Value {
        let mut doc = Map::new();
        doc.insert("tool_version".into(), json!(TOOL_VERSION));
        doc.insert("command".into(), json!(self.command));
        doc.insert(
            "inputs".into(),
            Value::Array(
                self.inputs
                    .iter()
                    .map(|i| json!({"role": i.role, "path": i.path, "sha256": i.sha256}))
                    .collect(),
            ),
        );
        doc.insert("verdicts".into(), self.verdicts.clone());
        doc.insert("witnesses".into(), Value::Array(self.witnesses.clone()));
        for (k, v) in &self.extra {
            doc.insert(k.clone(), v.clone());
        }
        if with_timings {
            let mut t = Map::new();
            for (k, d) in &self.timings {
                t.insert(format!("{k}_ms"), json!(d.as_secs_f64() * 1000.0));
            }
            doc.insert("timings".into(), Value::Object(t));
        }
        canonical(Value::Object(doc))
    }
}

/// Rebuilds every object with its keys in sorted order.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonical(v))).collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        other => other,
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_come_out_sorted() {
        let v = canonical(json!({"b": 1, "a": {"d": 2, "c": [ {"z": 0, "y": 1} ]}}));
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"a":{"c":[{"y":1,"z":0}],"d":2},"b":1}"#
        );
    }

    #[test]
    fn digest_is_sha256_hex() {
        let i = Input::new("rules", "x", b"abc");
        assert_eq!(
            i.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn timings_are_opt_in() {
        let mut r = Report::new("classify");
        r.timings.push(("total", Duration::from_millis(3)));
        assert!(r.to_value(false).get("timings").is_none());
        assert!(r.to_value(true)["timings"]["total_ms"].is_number());
    }
}
