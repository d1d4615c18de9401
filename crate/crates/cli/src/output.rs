//! Table output in CSV, JSON or aligned plain text.

use std::io::{self, Write};

use serde_json::{Map, Value};

use crate::config::Format;

/// C-style `%.15e`: 15 digits after the point, signed two-digit exponent.
pub fn sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.15e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => sci(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // rounded to the digits CSV prints
            Cell::Num(v) if v.is_finite() => serde_json::from_str(&sci(*v)).unwrap_or(Value::Null),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Flag(b) => Value::from(*b),
        }
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                w.flush()
            }
            Format::Json => {
                let records: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                        Value::Object(obj)
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut *out, &records)?;
                writeln!(out)
            }
            Format::Plain => {
                let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
                let widths: Vec<usize> = (0..self.header.len())
                    .map(|i| cells.iter().map(|r| r[i].len()).chain([self.header[i].len()]).max().unwrap_or(0))
                    .collect();
                let line = |fields: &[String], out: &mut dyn Write| -> io::Result<()> {
                    let padded: Vec<String> = fields.iter().zip(&widths).map(|(f, w)| format!("{f:<w$}")).collect();
                    writeln!(out, "{}", padded.join("  ").trim_end())
                };
                line(&self.header, out)?;
                for r in &cells {
                    line(r, out)?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_scientific() {
        assert_eq!(sci(0.0), "0.000000000000000e+00");
        assert_eq!(sci(std::f64::consts::LN_2), "6.931471805599453e-01");
        assert_eq!(sci(-1234.5), "-1.234500000000000e+03");
        assert_eq!(sci(1e-300), "1.000000000000000e-300");
        assert_eq!(sci(f64::NAN), "nan");
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let mut t = Table::new(["fn", "value"]);
        t.rows.push(vec![Cell::Text("newton_poly(coeffs=[1.0, 2.0])".into()), Cell::Num(1.0)]);
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "fn,value\n\"newton_poly(coeffs=[1.0, 2.0])\",1.000000000000000e+00\n"
        );
    }
}
