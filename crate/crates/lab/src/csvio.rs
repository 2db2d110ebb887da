//! Sweep result rows and their CSV form.

use std::io::{Read, Write};

use crate::error::{LabError, Result};

pub const HEADER: [&str; 9] =
    ["swept_param", "swept_value", "load_model", "device_mode", "engine", "metric", "value", "stderr", "runtime_s"];

const SIG_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub swept_param: String,
    pub swept_value: f64,
    pub load_model: u8,
    /// `correlated`, `uncorrelated`, or `any` for metrics without a mode.
    pub device_mode: String,
    pub engine: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub runtime_s: Option<f64>,
}

impl Row {
    /// The row exactly as it reads back from CSV.
    pub fn quantized(&self) -> Row {
        Row {
            swept_value: round_sig(self.swept_value),
            value: round_sig(self.value),
            stderr: self.stderr.map(round_sig),
            runtime_s: self.runtime_s.map(round_sig),
            ..self.clone()
        }
    }

    /// Field-wise equality that treats two NaNs as equal.
    pub fn same_as(&self, other: &Row) -> bool {
        let eq = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        let eq_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => eq(a, b),
            (None, None) => true,
            _ => false,
        };
        self.swept_param == other.swept_param
            && eq(self.swept_value, other.swept_value)
            && self.load_model == other.load_model
            && self.device_mode == other.device_mode
            && self.engine == other.engine
            && self.metric == other.metric
            && eq(self.value, other.value)
            && eq_opt(self.stderr, other.stderr)
            && eq_opt(self.runtime_s, other.runtime_s)
    }
}

/// `v` rounded to nine significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().expect("formatted float parses")
}

/// Shortest text that parses back to `round_sig(v)`.
pub fn fmt_float(v: f64) -> String {
    let r = round_sig(v);
    if r.is_nan() {
        "NaN".to_string()
    } else if r == f64::INFINITY {
        "inf".to_string()
    } else if r == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{r:?}")
    }
}

fn parse_float(field: &str, text: &str, line: u64) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| LabError::config(field, format!("line {line}: `{text}` is not a number")))
}

pub struct RowWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RowWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        inner.write_record(HEADER)?;
        Ok(RowWriter { inner })
    }

    pub fn write(&mut self, rows: &[Row]) -> Result<()> {
        for r in rows {
            self.inner.write_record([
                r.swept_param.clone(),
                fmt_float(r.swept_value),
                r.load_model.to_string(),
                r.device_mode.clone(),
                r.engine.clone(),
                r.metric.clone(),
                fmt_float(r.value),
                r.stderr.map(fmt_float).unwrap_or_default(),
                r.runtime_s.map(fmt_float).unwrap_or_default(),
            ])?;
        }
        self.flush()
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| LabError::Io { context: "writing csv".into(), source: e })
    }
}

pub fn write_rows<W: Write>(w: W, rows: &[Row]) -> Result<()> {
    RowWriter::new(w)?.write(rows)
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(LabError::config("csv header", format!("expected `{}`", HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let opt = |i: usize| -> Result<Option<f64>> {
            let t = &rec[i];
            if t.is_empty() {
                Ok(None)
            } else {
                parse_float(HEADER[i], t, line).map(Some)
            }
        };
        rows.push(Row {
            swept_param: rec[0].to_string(),
            swept_value: parse_float(HEADER[1], &rec[1], line)?,
            load_model: rec[2]
                .parse()
                .map_err(|_| LabError::config(HEADER[2], format!("line {line}: `{}` is not 1 or 2", &rec[2])))?,
            device_mode: rec[3].to_string(),
            engine: rec[4].to_string(),
            metric: rec[5].to_string(),
            value: parse_float(HEADER[6], &rec[6], line)?,
            stderr: opt(7)?,
            runtime_s: opt(8)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: f64, stderr: Option<f64>) -> Row {
        Row {
            swept_param: "lambda_a".into(),
            swept_value: 0.1,
            load_model: 1,
            device_mode: "any".into(),
            engine: "simulation".into(),
            metric: "activity".into(),
            value,
            stderr,
            runtime_s: None,
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_float(0.1), "0.1");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(123456789012.0), "123456789000.0");
        assert_eq!(fmt_float(1e-9), "1e-9");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(f64::NAN), "NaN");
        assert_eq!(fmt_float(-2.5e-12), "-2.5e-12");
    }

    #[test]
    fn rows_round_trip() {
        let rows: Vec<Row> = [
            row(0.342_215_876_1, Some(3.1e-4)),
            row(f64::INFINITY, None),
            row(f64::NAN, None),
            row(std::f64::consts::PI * 1e-7, Some(0.0)),
        ]
        .iter()
        .map(Row::quantized)
        .collect();
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("swept_param,swept_value,load_model,device_mode,engine,metric,value,stderr,runtime_s\n")
        );
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        assert!(back.iter().zip(&rows).all(|(a, b)| a.same_as(b)));
        let mut again = Vec::new();
        write_rows(&mut again, &back).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn quantizing_is_idempotent() {
        for v in [0.1, 1.0 / 7.0, 98765.4321987, 6.02e23, 1e-300] {
            assert_eq!(round_sig(round_sig(v)), round_sig(v));
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), round_sig(v));
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = read_rows("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
