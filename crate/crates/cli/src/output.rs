//! Table and scalar emitters for CSV and JSON.

use std::io::Write;

use cantor_core::CertifiedValue;
use clap::ValueEnum;
use serde_json::{Map, Number, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Shortest decimal rendering of `x` rounded to 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x.abs());
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let sign = if x < 0.0 { "-" } else { "" };
    let body = if (-5..17).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                format!("{digits}{}", "0".repeat(int_len - digits.len()))
            } else {
                format!("{}.{}", &digits[..int_len], &digits[int_len..])
            }
        } else {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        }
    } else if digits.len() == 1 {
        format!("{digits}e{exp}")
    } else {
        format!("{}.{}e{exp}", &digits[..1], &digits[1..])
    };
    format!("{sign}{body}")
}

pub fn fmt_certified(v: &CertifiedValue) -> String {
    format!("{} ± {}", fmt_f64(v.value), fmt_f64(v.abs_error))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// Integer text, emitted as a JSON number.
    Int(String),
    Float(f64),
    /// Free text, including exact rationals `num/den`.
    Text(String),
    Bool(bool),
    /// Integers, space-separated in CSV and an array in JSON.
    List(Vec<u32>),
}

impl Cell {
    pub fn int(v: impl ToString) -> Cell {
        Cell::Int(v.to_string())
    }

    pub fn text(v: impl ToString) -> Cell {
        Cell::Text(v.to_string())
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(s) | Cell::Text(s) => s.clone(),
            Cell::Float(x) => fmt_f64(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::List(v) => v.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(s) => number(s),
            Cell::Float(x) if x.is_finite() => number(&fmt_f64(*x)),
            Cell::Float(x) => Value::String(fmt_f64(*x)),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::List(v) => Value::Array(v.iter().map(|&d| Value::from(d)).collect()),
        }
    }
}

fn number(s: &str) -> Value {
    s.parse::<Number>().map(Value::Number).unwrap_or_else(|_| Value::String(s.to_string()))
}

/// Streams rows to the output; the CSV header is written up front and the
/// JSON form is an array with one object per line.
pub struct Table<W: Write> {
    format: Format,
    columns: Vec<&'static str>,
    csv: Option<csv::Writer<W>>,
    raw: Option<W>,
    rows: usize,
}

impl<W: Write> Table<W> {
    pub fn new(out: W, format: Format, columns: &[&'static str]) -> std::io::Result<Self> {
        let columns = columns.to_vec();
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
                w.write_record(&columns)?;
                Ok(Table { format, columns, csv: Some(w), raw: None, rows: 0 })
            }
            Format::Json => {
                let mut out = out;
                out.write_all(b"[")?;
                Ok(Table { format, columns, csv: None, raw: Some(out), rows: 0 })
            }
        }
    }

    pub fn row(&mut self, cells: &[Cell]) -> std::io::Result<()> {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        match self.format {
            Format::Csv => {
                let w = self.csv.as_mut().expect("csv writer");
                w.write_record(cells.iter().map(Cell::csv))?;
            }
            Format::Json => {
                let out = self.raw.as_mut().expect("json writer");
                let obj: Map<String, Value> = self.columns.iter().zip(cells).map(|(k, c)| (k.to_string(), c.json())).collect();
                let sep = if self.rows == 0 { "\n  " } else { ",\n  " };
                write!(out, "{sep}{}", Value::Object(obj))?;
            }
        }
        self.rows += 1;
        Ok(())
    }

    pub fn finish(self) -> std::io::Result<()> {
        match self.format {
            Format::Csv => self.csv.expect("csv writer").flush(),
            Format::Json => {
                let mut out = self.raw.expect("json writer");
                let tail = if self.rows == 0 { "]\n" } else { "\n]\n" };
                out.write_all(tail.as_bytes())?;
                out.flush()
            }
        }
    }
}

/// A single certified result: `value ± bound` as text, or one JSON object.
pub fn scalar<W: Write>(mut out: W, format: Format, fields: &[(&str, Cell)], v: &CertifiedValue) -> std::io::Result<()> {
    match format {
        Format::Csv => writeln!(out, "{}", fmt_certified(v))?,
        Format::Json => {
            let mut obj: Map<String, Value> = fields.iter().map(|(k, c)| (k.to_string(), c.json())).collect();
            obj.insert("value".into(), Cell::Float(v.value).json());
            obj.insert("abs_error".into(), Cell::Float(v.abs_error).json());
            writeln!(out, "{}", Value::Object(obj))?;
        }
    }
    out.flush()
}

/// A single JSON object, or a one-row CSV table.
pub fn record<W: Write>(out: W, format: Format, fields: &[(&'static str, Cell)]) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let names: Vec<&'static str> = fields.iter().map(|(k, _)| *k).collect();
            let mut t = Table::new(out, format, &names)?;
            t.row(&fields.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>())?;
            t.finish()
        }
        Format::Json => {
            let mut out = out;
            let obj: Map<String, Value> = fields.iter().map(|(k, c)| (k.to_string(), c.json())).collect();
            writeln!(out, "{}", Value::Object(obj))?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1.4023960826598818), "1.4023960826598818");
        assert_eq!(fmt_f64(-0.5), "-0.5");
        assert_eq!(fmt_f64(2f64.powi(-53)), "1.1102230246251565e-16");
        assert_eq!(fmt_f64(1e20), "1e20");
        assert_eq!(fmt_f64(12345.0), "12345");
        assert_eq!(fmt_f64(0.00012), "0.00012");
    }

    #[test]
    fn round_trips() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, 6.02e23, 5e-324, f64::MAX] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_keeps_column_order() {
        let mut buf = Vec::new();
        record(&mut buf, Format::Json, &[("m", Cell::text("2/3")), ("M", Cell::text("2")), ("s", Cell::int(2))]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"m\":\"2/3\",\"M\":\"2\",\"s\":2}\n");
    }

    #[test]
    fn csv_table() {
        let mut buf = Vec::new();
        let mut t = Table::new(&mut buf, Format::Csv, &["n", "b"]).unwrap();
        t.row(&[Cell::int(1), Cell::Float(1.0)]).unwrap();
        t.finish().unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,b\n1,1\n");
    }
}
