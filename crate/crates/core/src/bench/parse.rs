//! Strict JSON object parsing helpers. Every consumer drains the keys it
//! knows and then calls `finish`, so unknown fields are always an error with
//! the offending names listed.

use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub(crate) fn expect_object(value: Value, what: &str) -> Result<Map<String, Value>> {
    match value {
        Value::Object(m) => Ok(m),
        other => Err(Error::Config(format!(
            "{what} must be a JSON object, got {other}"
        ))),
    }
}

pub(crate) fn take_required(m: &mut Map<String, Value>, key: &str, what: &str) -> Result<Value> {
    m.remove(key)
        .ok_or_else(|| Error::Config(format!("{what} is missing required field '{key}'")))
}

pub(crate) fn finish(m: Map<String, Value>, what: &str) -> Result<()> {
    if m.is_empty() {
        return Ok(());
    }
    let mut keys: Vec<&str> = m.keys().map(|k| k.as_str()).collect();
    keys.sort_unstable();
    Err(Error::Config(format!(
        "{what} has unknown field(s): {}",
        keys.join(", ")
    )))
}

pub(crate) fn string_of(v: Value, what: &str) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::Config(format!("{what} must be a string")))
}

pub(crate) fn f64_of(v: Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Config(format!("{what} must be a number")))
}

pub(crate) fn u64_of(v: Value, what: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| Error::Config(format!("{what} must be a non-negative integer")))
}

pub(crate) fn usize_of(v: Value, what: &str) -> Result<usize> {
    Ok(u64_of(v, what)? as usize)
}

pub(crate) fn array_of(v: Value, what: &str) -> Result<Vec<Value>> {
    match v {
        Value::Array(a) => Ok(a),
        other => Err(Error::Config(format!("{what} must be an array, got {other}"))),
    }
}

pub(crate) fn from_serde<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Config(format!("{what}: {e}")))
}
