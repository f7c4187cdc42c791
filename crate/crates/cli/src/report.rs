use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

/// Rounds every non-integer number to 12 significant digits; object keys come out sorted.
pub fn canonical<T: Serialize>(v: &T) -> serde_json::Result<Value> {
    Ok(round(serde_json::to_value(v)?))
}

fn round(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            let r = if r == 0.0 { 0.0 } else { r };
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

pub fn write(v: &Value, out: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_and_sorts() {
        let v = serde_json::json!({"b": 0.1 + 0.2, "a": [1, -0.0, 1.0 / 3.0]});
        let s = serde_json::to_string(&canonical(&v).unwrap()).unwrap();
        assert_eq!(s, r#"{"a":[1,0.0,0.333333333333],"b":0.3}"#);
    }
}
