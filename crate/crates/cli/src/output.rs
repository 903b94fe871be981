//! Tables rendered as CSV or JSON.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(u64),
    Text(&'static str),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            // shortest round-trip form, scientific for tiny and huge values
            Cell::Real(x) => {
                let s = format!("{x:?}");
                s.strip_suffix(".0").map_or(s.clone(), str::to_string)
            }
            Cell::Count(n) => n.to_string(),
            Cell::Text(t) => t.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Count(n) => Value::from(*n),
            Cell::Text(t) => Value::from(*t),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Count(n)
    }
}

impl From<&'static str> for Cell {
    fn from(t: &'static str) -> Self {
        Cell::Text(t)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Count(n as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> anyhow::Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                Ok(w.into_inner()?)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .header
                            .iter()
                            .zip(row)
                            .map(|(k, c)| (k.to_string(), c.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut out = serde_json::to_vec_pretty(&rows)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    /// Writes to `path`, or stdout when absent.
    pub fn emit(&self, format: Format, path: Option<&Path>) -> anyhow::Result<()> {
        let bytes = self.render(format)?;
        match path {
            Some(p) => std::fs::write(p, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["t", "value"]);
        t.push(vec![1.0.into(), 0.5.into()]);
        t.push(vec![2.5.into(), Cell::Count(3)]);
        t.push(vec![1e-13.into(), (-2.0).into()]);
        t
    }

    #[test]
    fn csv_uses_shortest_numbers() {
        let text = String::from_utf8(sample().render(Format::Csv).unwrap()).unwrap();
        assert_eq!(text, "t,value\n1,0.5\n2.5,3\n1e-13,-2\n");
    }

    #[test]
    fn json_rows_are_objects() {
        let v: Value = serde_json::from_slice(&sample().render(Format::Json).unwrap()).unwrap();
        assert_eq!(v[0]["value"], 0.5);
        assert_eq!(v[1]["value"], 3);
    }
}
