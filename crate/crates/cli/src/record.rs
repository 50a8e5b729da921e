use indexmap::IndexMap;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

/// A parameter or diagnostic value.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Field {
    /// The text a flag would take to reproduce this value.
    pub fn to_arg(&self) -> String {
        match self {
            Field::Num(x) => fmt_real(*x),
            Field::Int(n) => n.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<u64> for Field {
    fn from(n: u64) -> Self {
        Field::Int(n)
    }
}

impl From<usize> for Field {
    fn from(n: usize) -> Self {
        Field::Int(n as u64)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_string())
    }
}

impl From<String> for Field {
    fn from(s: String) -> Self {
        Field::Text(s)
    }
}

impl From<bool> for Field {
    fn from(b: bool) -> Self {
        Field::Text(b.to_string())
    }
}

/// 17 significant digits, enough to read back the identical double.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt_real(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Field::Num(x) => Real(*x).serialize(s),
            Field::Int(n) => s.serialize_u64(*n),
            Field::Text(t) => s.serialize_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub command: String,
    pub params: IndexMap<String, Field>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub bounds: Option<(f64, f64)>,
    pub method: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub elapsed_ms: u64,
    pub diagnostics: IndexMap<String, Field>,
}

impl ResultRecord {
    pub fn new(command: &str, method: impl Into<String>, value: f64) -> Self {
        Self {
            command: command.to_string(),
            params: IndexMap::new(),
            value,
            stderr: None,
            ci: None,
            bounds: None,
            method: method.into(),
            seed: None,
            tool_version: concat!("biruin ", env!("CARGO_PKG_VERSION")).to_string(),
            elapsed_ms: 0,
            diagnostics: IndexMap::new(),
        }
    }

    pub fn param(&mut self, k: &str, v: impl Into<Field>) -> &mut Self {
        self.params.insert(k.to_string(), v.into());
        self
    }

    pub fn diag(&mut self, k: &str, v: impl Into<Field>) -> &mut Self {
        self.diagnostics.insert(k.to_string(), v.into());
        self
    }

    /// Argument vector that re-runs this record.
    pub fn replay_args(&self) -> Vec<String> {
        let mut v: Vec<String> = self.command.split_whitespace().map(String::from).collect();
        for (k, f) in &self.params {
            v.push(format!("--{k}"));
            v.push(f.to_arg());
        }
        if let Some(s) = self.seed {
            v.push("--seed".into());
            v.push(s.to_string());
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["command".to_string()];
        h.extend(self.params.keys().cloned());
        h.extend(
            [
                "value",
                "stderr",
                "ci_low",
                "ci_high",
                "bounds_low",
                "bounds_high",
                "method",
                "seed",
                "tool_version",
                "elapsed_ms",
            ]
            .map(String::from),
        );
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
        let mut r = vec![self.command.clone()];
        r.extend(self.params.values().map(Field::to_arg));
        r.push(fmt_real(self.value));
        r.push(opt(self.stderr));
        r.push(opt(self.ci.map(|c| c.0)));
        r.push(opt(self.ci.map(|c| c.1)));
        r.push(opt(self.bounds.map(|c| c.0)));
        r.push(opt(self.bounds.map(|c| c.1)));
        r.push(self.method.clone());
        r.push(self.seed.map(|s| s.to_string()).unwrap_or_default());
        r.push(self.tool_version.clone());
        r.push(self.elapsed_ms.to_string());
        r
    }
}

impl Serialize for ResultRecord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pair = |p: Option<(f64, f64)>| p.map(|(a, b)| [Real(a), Real(b)]);
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("command", &self.command)?;
        m.serialize_entry("params", &self.params)?;
        m.serialize_entry("value", &Real(self.value))?;
        m.serialize_entry("stderr", &self.stderr.map(Real))?;
        m.serialize_entry("ci", &pair(self.ci))?;
        m.serialize_entry("bounds", &pair(self.bounds))?;
        m.serialize_entry("method", &self.method)?;
        m.serialize_entry("seed", &self.seed)?;
        m.serialize_entry("tool_version", &self.tool_version)?;
        m.serialize_entry("elapsed_ms", &self.elapsed_ms)?;
        if !self.diagnostics.is_empty() {
            m.serialize_entry("diagnostics", &self.diagnostics)?;
        }
        m.end()
    }
}

/// Rows sharing one header; `extra` columns are appended after the record columns.
pub fn write_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
