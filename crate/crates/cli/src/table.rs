//! Flat JSON records to CSV.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::Failure;

pub fn record<T: Serialize>(v: &T) -> Result<Map<String, Value>, Failure> {
    match serde_json::to_value(v) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::Runtime("record is not a JSON object".into())),
        Err(e) => Err(Failure::Runtime(format!("serialization failed: {e}"))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Header from the first record's keys; every record must share them.
pub fn csv(records: &[Map<String, Value>]) -> String {
    let Some(first) = records.first() else {
        return String::new();
    };
    let keys: Vec<&String> = first.keys().collect();
    let mut out = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = keys.iter().map(|k| r.get(*k).map_or(String::new(), cell)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn json<T: Serialize + ?Sized>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::Runtime(format!("serialization failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_is_empty_and_order_kept() {
        let r = record(&serde_json::json!({"b": 1.5, "a": null, "c": "x,y"})).unwrap();
        assert_eq!(csv(&[r]), "b,a,c\n1.5,,\"x,y\"\n");
    }

    #[test]
    fn floats_round_trip() {
        let x = 0.1 + 0.2;
        let r = record(&serde_json::json!({ "x": x })).unwrap();
        let text = csv(&[r]);
        let back: f64 = text.lines().nth(1).unwrap().parse().unwrap();
        assert_eq!(back, x);
    }
}
