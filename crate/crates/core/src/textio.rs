//! Small readers for the line-oriented text formats used by the input files.

use crate::error::{Error, Result};
use crate::quantity::{Quantity, EXP, KHZ};

/// One `key = value # comment` line.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyValue {
    pub line: usize,
    pub key: String,
    pub value: String,
    pub comment: Option<String>,
}

/// Splits a key-value file into entries. Blank lines and lines starting with
/// `#` are skipped; duplicate keys are rejected.
pub fn parse_key_values(text: &str, origin: &str) -> Result<Vec<KeyValue>> {
    let mut out: Vec<KeyValue> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (
                b.trim(),
                Some(c.trim().to_string()).filter(|c| !c.is_empty()),
            ),
            None => (raw.trim(), None),
        };
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| {
            Error::parse(
                origin,
                line_no,
                format!("expected 'key = value', got '{body}'"),
            )
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(origin, line_no, "empty key"));
        }
        if out.iter().any(|kv| kv.key == key) {
            return Err(Error::parse(
                origin,
                line_no,
                format!("key '{key}' appears twice"),
            ));
        }
        out.push(KeyValue {
            line: line_no,
            key: key.to_string(),
            value: value.trim().to_string(),
            comment,
        });
    }
    Ok(out)
}

pub fn parse_f64(s: &str, origin: &str, line: usize) -> Result<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::parse(origin, line, format!("'{}' is not a number", s.trim())))?;
    if !x.is_finite() {
        return Err(Error::parse(
            origin,
            line,
            format!("'{}' is not finite", s.trim()),
        ));
    }
    Ok(x)
}

/// Reads a CSV with columns `<x_col>, f_khz, u_khz` into (x, frequency)
/// points. An empty `u_khz` cell leaves the point without an `exp`
/// component.
pub fn parse_points_csv(text: &str, origin: &str, x_col: &str) -> Result<Vec<(f64, Quantity)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str, required: bool| -> Result<Option<usize>> {
        let pos = headers.iter().position(|h| h == name);
        if required && pos.is_none() {
            return Err(Error::parse(origin, 1, format!("missing column '{name}'")));
        }
        Ok(pos)
    };
    let ix = col(x_col, true)?.expect("required");
    let iff = col("f_khz", true)?.expect("required");
    let iu = col("u_khz", false)?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let x = parse_f64(cell(ix), origin, line)?;
        let mut q = Quantity::new(parse_f64(cell(iff), origin, line)?, KHZ);
        if let Some(iu) = iu {
            if !cell(iu).is_empty() {
                let u = parse_f64(cell(iu), origin, line)?;
                q.set(EXP, u)
                    .map_err(|e| Error::parse(origin, line, e.to_string()))?;
            }
        }
        out.push((x, q));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_with_comments() {
        let kv = parse_key_values("# head\na = 1 # note\n\nb=2\n", "mem").unwrap();
        assert_eq!(kv.len(), 2);
        assert_eq!(kv[0].key, "a");
        assert_eq!(kv[0].value, "1");
        assert_eq!(kv[0].comment.as_deref(), Some("note"));
        assert_eq!(kv[1].line, 4);
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(parse_key_values("a = 1\na = 2\n", "mem").is_err());
        assert!(parse_key_values("novalue\n", "mem").is_err());
    }

    #[test]
    fn points_csv() {
        let pts = parse_points_csv(
            "B_gauss,f_khz,u_khz\n0.1, 5.0, 0.2\n0.2,6.0,\n",
            "mem",
            "B_gauss",
        )
        .unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].1.component(EXP), 0.2);
        assert!(!pts[1].1.has(EXP));
        assert!(parse_points_csv("x,f_khz\n1,2\n", "mem", "B_gauss").is_err());
        let err = parse_points_csv("B_gauss,f_khz\n1,abc\n", "mem", "B_gauss").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
