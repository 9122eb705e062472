//! Resolved run configuration: config-file keys overlaid by flags.

use std::collections::BTreeMap;
use toml::Value;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(liouville::error::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(e) => e.exit_code(),
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Run(e) => write!(f, "{}: {e}", e.module()),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl From<liouville::error::Error> for CliError {
    fn from(e: liouville::error::Error) -> Self {
        CliError::Run(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Expected type of a config key.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    Int,
    Float,
    Str,
    FloatList,
    IntList,
    /// List of numeric tuples, e.g. points or insertions.
    Rows,
}

/// Flattens nested tables into dotted keys.
pub fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Table(t) => {
            for (k, x) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

pub fn parse_file(text: &str) -> CliResult<BTreeMap<String, Value>> {
    let v: Value = text.parse::<toml::Table>().map(Value::Table).map_err(|e| CliError::Usage(format!("config file: {e}")))?;
    let mut out = BTreeMap::new();
    flatten("", &v, &mut out);
    Ok(out)
}

/// `key=value` with the value read as a TOML literal, or as a bare string.
pub fn parse_assignment(s: &str) -> CliResult<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("expected key=value, got {s:?}")))?;
    let parsed = format!("v = {v}").parse::<toml::Table>().ok().and_then(|mut t| t.remove("v"));
    Ok((k.trim().to_string(), parsed.unwrap_or_else(|| Value::String(v.to_string()))))
}

#[derive(Clone, Debug)]
pub struct Config {
    pub values: BTreeMap<String, Value>,
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Config {
    /// Checks every key against the schema; defaults are filled in so the
    /// manifest echoes the full resolved configuration.
    pub fn resolve(mut values: BTreeMap<String, Value>, schema: &[(&str, Kind, Value)]) -> CliResult<Config> {
        for k in values.keys() {
            if !schema.iter().any(|(s, _, _)| s == k) {
                return Err(CliError::Usage(format!("unknown key {k:?} for this experiment")));
            }
        }
        for (k, kind, default) in schema {
            let v = values.entry(k.to_string()).or_insert_with(|| default.clone());
            let ok = match kind {
                Kind::Int => matches!(v, Value::Integer(i) if *i >= 0),
                Kind::Float => num(v).is_some_and(f64::is_finite),
                Kind::Str => matches!(v, Value::String(_)),
                Kind::FloatList => matches!(v, Value::Array(a) if a.iter().all(|x| num(x).is_some())),
                Kind::IntList => matches!(v, Value::Array(a) if a.iter().all(|x| matches!(x, Value::Integer(i) if *i >= 0))),
                Kind::Rows => matches!(v, Value::Array(a) if a.iter().all(|r| matches!(r, Value::Array(c) if c.iter().all(|x| num(x).is_some())))),
            };
            if !ok {
                return Err(CliError::Usage(format!("key {k:?} expects {kind:?}, got {v}")));
            }
            // integers given for float keys are stored as floats
            if *kind == Kind::Float {
                *v = Value::Float(num(v).unwrap());
            }
        }
        Ok(Config { values })
    }

    pub fn f(&self, k: &str) -> f64 {
        num(&self.values[k]).unwrap()
    }

    pub fn u(&self, k: &str) -> usize {
        self.values[k].as_integer().unwrap() as usize
    }

    pub fn u64(&self, k: &str) -> u64 {
        self.values[k].as_integer().unwrap() as u64
    }

    pub fn s(&self, k: &str) -> &str {
        self.values[k].as_str().unwrap()
    }

    pub fn fl(&self, k: &str) -> Vec<f64> {
        self.values[k].as_array().unwrap().iter().map(|x| num(x).unwrap()).collect()
    }

    pub fn ul(&self, k: &str) -> Vec<usize> {
        self.values[k].as_array().unwrap().iter().map(|x| x.as_integer().unwrap() as usize).collect()
    }

    pub fn rows(&self, k: &str) -> Vec<Vec<f64>> {
        self.values[k].as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(|x| num(x).unwrap()).collect()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.values).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_tables_flatten_to_dotted_keys() {
        let m = parse_file("seed = 3\n[lqft]\ngrid_resolution = 512\n").unwrap();
        assert_eq!(m["lqft.grid_resolution"].as_integer(), Some(512));
        assert_eq!(m["seed"].as_integer(), Some(3));
    }

    #[test]
    fn assignments_parse_as_literals() {
        assert_eq!(parse_assignment("q=[1, 2.5]").unwrap().1, Value::Array(vec![Value::Integer(1), Value::Float(2.5)]));
        assert_eq!(parse_assignment("map=rotation").unwrap().1, Value::String("rotation".into()));
        assert!(parse_assignment("novalue").is_err());
    }

    #[test]
    fn schema_rejects_bad_keys() {
        let schema = [("gamma", Kind::Float, Value::Float(1.0))];
        let mut m = BTreeMap::new();
        m.insert("gama".to_string(), Value::Float(1.0));
        assert!(matches!(Config::resolve(m, &schema), Err(CliError::Usage(e)) if e.contains("gama")));
        let mut m = BTreeMap::new();
        m.insert("gamma".to_string(), Value::String("x".into()));
        assert!(Config::resolve(m, &schema).is_err());
    }
}
