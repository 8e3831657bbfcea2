//! Deterministic JSON and CSV writers for command reports.
//!
//! Floats are always printed as `{:.16e}` (17 significant digits) so that the
//! same computation yields byte-identical files.

use std::fmt::Write;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn complex(z: Complex64) -> Json {
        Json::Arr(vec![Json::Num(z.re), Json::Num(z.im)])
    }

    pub fn nums(xs: impl IntoIterator<Item = f64>) -> Json {
        Json::Arr(xs.into_iter().map(Json::Num).collect())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => write!(out, "{i}").unwrap(),
            Json::Num(x) => out.push_str(&format_float(*x)),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            Json::Arr(items) => {
                if items.iter().all(Json::is_scalar) {
                    out.push('[');
                    for (i, item) in items.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        item.write(out, indent);
                    }
                    out.push(']');
                    return;
                }
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    item.write(out, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push(']');
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (i, (k, v)) in fields.iter().enumerate() {
                    pad(out, indent + 1);
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(": ");
                    v.write(out, indent + 1);
                    if i + 1 < fields.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, Json::Arr(_) | Json::Obj(_))
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// `{:.16e}` for finite values, `null` otherwise (JSON has no NaN).
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma separated, header first, `.` as decimal separator.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
                    Cell::Num(x) => format!("{x}"),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) if s.contains([',', '"', '\n']) => {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    }
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "null");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn rendered_json_parses() {
        let j = Json::obj([
            ("a", Json::Int(3)),
            ("b", Json::complex(Complex64::new(1.5, -0.25))),
            ("c", Json::Arr(vec![Json::obj([("s", Json::str("x\"y"))])])),
            ("d", Json::Obj(vec![])),
            ("e", Json::Null),
        ]);
        let v: serde_json::Value = serde_json::from_str(&j.render()).unwrap();
        assert_eq!(v["b"][1], -0.25);
        assert_eq!(v["c"][0]["s"], "x\"y");
    }

    #[test]
    fn csv_has_header_and_quotes_text() {
        let mut t = Table::new(["t", "label"]);
        t.push(vec![Cell::Num(0.5), Cell::Text("a,b".into())]);
        assert_eq!(t.to_csv(), "t,label\n5.0000000000000000e-1,\"a,b\"\n");
    }
}
