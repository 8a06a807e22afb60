//! Reader for hyperfine coefficient files.
//!
//! ```text
//! # comment
//! [v=0,N=0]
//! E4 = 925394.2
//! E5 = 142287.6
//!
//! [v=1,N=1]
//! E1 = 31984.9
//! eps_E1 = 1.5e-6
//! tensor_norm = reduced
//! ```
//!
//! Values are in kHz. `eps_Ek` overrides the default fractional uncertainty
//! of coefficient k. Unknown keys, repeated keys and repeated sections are
//! rejected.

use std::collections::BTreeMap;
use std::path::Path;

use super::hamiltonian::{HyperfineCoefficients, LevelId, TensorNorm};
use crate::error::{read_text, Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientFile {
    pub levels: BTreeMap<LevelId, HyperfineCoefficients>,
}

impl CoefficientFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut levels: BTreeMap<LevelId, HyperfineCoefficients> = BTreeMap::new();
        let mut current: Option<LevelId> = None;
        let mut seen_keys: Vec<String> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(origin, line_no, "unterminated section header"))?;
                let id = parse_level_id(header).ok_or_else(|| {
                    Error::parse(
                        origin,
                        line_no,
                        format!("bad section header '[{header}]', expected [v=<int>,N=<int>]"),
                    )
                })?;
                if levels.contains_key(&id) {
                    return Err(Error::parse(
                        origin,
                        line_no,
                        format!("section [{id}] appears twice"),
                    ));
                }
                levels.insert(id, HyperfineCoefficients::new(id.v, id.n));
                current = Some(id);
                seen_keys.clear();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| {
                    Error::parse(
                        origin,
                        line_no,
                        format!("expected 'key = value', got '{line}'"),
                    )
                })?;
            let id = current.ok_or_else(|| {
                Error::parse(
                    origin,
                    line_no,
                    format!("key '{key}' outside of any [v=..,N=..] section"),
                )
            })?;
            if seen_keys.iter().any(|k| k == key) {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("key '{key}' repeated in section [{id}]"),
                ));
            }
            seen_keys.push(key.to_string());
            let coeffs = levels.get_mut(&id).expect("section inserted on header");

            if key == "tensor_norm" {
                coeffs.tensor_norm = match value {
                    "reduced" => TensorNorm::Reduced,
                    "unit" => TensorNorm::Unit,
                    other => {
                        return Err(Error::parse(
                            origin,
                            line_no,
                            format!("tensor_norm must be 'reduced' or 'unit', got '{other}'"),
                        ))
                    }
                };
                continue;
            }
            let (k, is_eps) = parse_coeff_key(key)
                .ok_or_else(|| Error::parse(origin, line_no, format!("unknown key '{key}'")))?;
            let x: f64 = value
                .parse()
                .map_err(|_| Error::parse(origin, line_no, format!("'{value}' is not a number")))?;
            let res = if is_eps {
                coeffs.set_eps(k, x)
            } else {
                coeffs.set(k, x)
            };
            res.map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        }

        for c in levels.values() {
            c.validate()
                .map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        }
        Ok(Self { levels })
    }

    pub fn get(&self, v: u32, n: u32) -> Result<&HyperfineCoefficients> {
        self.levels
            .get(&LevelId { v, n })
            .ok_or_else(|| Error::Lookup(format!("no coefficients for level v={v},N={n}")))
    }

    /// True when no section sets any coefficient value, as in the shipped
    /// template.
    pub fn is_empty(&self) -> bool {
        self.levels
            .values()
            .all(|c| (1..=9).all(|k| c.value(k).is_none()))
    }
}

fn parse_level_id(header: &str) -> Option<LevelId> {
    let mut v = None;
    let mut n = None;
    for part in header.split(',') {
        let (k, x) = part.split_once('=')?;
        let x: u32 = x.trim().parse().ok()?;
        match k.trim() {
            "v" if v.is_none() => v = Some(x),
            "N" if n.is_none() => n = Some(x),
            _ => return None,
        }
    }
    Some(LevelId { v: v?, n: n? })
}

fn parse_coeff_key(key: &str) -> Option<(usize, bool)> {
    let (rest, is_eps) = match key.strip_prefix("eps_") {
        Some(r) => (r, true),
        None => (key, false),
    };
    let k: usize = rest.strip_prefix('E')?.parse().ok()?;
    (1..=9).contains(&k).then_some((k, is_eps))
}
