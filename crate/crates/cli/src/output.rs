//! CSV and JSON emission.
//!
//! CSV numbers carry 12 significant digits and every CSV ends with a
//! `# version=... seed=... config_hash=...` line. JSON numbers are printed
//! unrounded; non-finite values become the strings `inf`, `-inf` and `nan`.

use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

/// A CSV body: header plus rows of equal width.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Provenance stamped on every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    /// Extra `key=value` pairs for the CSV trailer.
    pub extra: Vec<(String, String)>,
}

impl Meta {
    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("version".into(), Value::from(self.version));
        map.insert("seed".into(), Value::from(self.seed));
        map.insert("config_hash".into(), Value::from(self.config_hash.clone()));
        for (k, v) in &self.extra {
            map.insert(k.clone(), Value::from(v.clone()));
        }
        Value::Object(map)
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{x:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn csv_cell(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => sig12(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => {
            if s.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
    }
}

pub fn to_csv(table: &Table, meta: &Meta) -> String {
    let mut out = String::new();
    out.push_str(&table.header.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(csv_cell).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out.push_str(&format!(
        "# version={} seed={} config_hash={}",
        meta.version, meta.seed, meta.config_hash
    ));
    for (k, v) in &meta.extra {
        out.push_str(&format!(" {k}={v}"));
    }
    out.push('\n');
    out
}

/// A JSON number, or a string sentinel when `x` is not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(sig12(x))
    }
}

/// Pretty JSON with a trailing newline; keys are sorted.
pub fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}
