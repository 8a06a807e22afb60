//! Values carrying separately tracked, named uncertainty components.
//!
//! Frequencies are kept in kHz throughout the pipeline. Component names are an
//! open set; the four canonical ones are [`EXP`], [`THEOR_QED`],
//! [`THEOR_SPIN`] and [`CODATA`]. Unknown names pass through every operation
//! untouched.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EXP: &str = "exp";
pub const THEOR_QED: &str = "theor_QED";
pub const THEOR_SPIN: &str = "theor_spin";
pub const CODATA: &str = "CODATA";

pub const KHZ: &str = "kHz";

/// How the components of a [`Quantity`] are collapsed to a single number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combination {
    Quadrature,
    AbsoluteSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuantity")]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
    components: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct RawQuantity {
    value: f64,
    unit: String,
    #[serde(default)]
    components: BTreeMap<String, f64>,
}

impl TryFrom<RawQuantity> for Quantity {
    type Error = Error;

    fn try_from(raw: RawQuantity) -> Result<Self> {
        let mut q = Quantity::new(raw.value, raw.unit);
        for (name, u) in raw.components {
            q.set(name, u)?;
        }
        Ok(q)
    }
}

impl Quantity {
    pub fn new(value: f64, unit: impl Into<String>) -> Self {
        Self {
            value,
            unit: unit.into(),
            components: BTreeMap::new(),
        }
    }

    pub fn khz(value: f64) -> Self {
        Self::new(value, KHZ)
    }

    /// Builder form of [`Quantity::set`]. Panics on a negative or NaN
    /// uncertainty; use `set` for untrusted input.
    pub fn with(mut self, name: &str, u: f64) -> Self {
        if let Err(e) = self.set(name, u) {
            panic!("{e}");
        }
        self
    }

    /// Fallible builder form of [`Quantity::set`].
    pub fn try_with(mut self, name: &str, u: f64) -> Result<Self> {
        self.set(name, u)?;
        Ok(self)
    }

    pub fn set(&mut self, name: impl Into<String>, u: f64) -> Result<()> {
        let name = name.into();
        if !(u >= 0.0) || !u.is_finite() {
            return Err(Error::input(format!(
                "uncertainty component '{name}' must be finite and non-negative, got {u}"
            )));
        }
        self.components.insert(name, u);
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> Option<f64> {
        self.components.remove(name)
    }

    /// Component value, zero when absent.
    pub fn component(&self, name: &str) -> f64 {
        self.components.get(name).copied().unwrap_or(0.0)
    }

    pub fn has(&self, name: &str) -> bool {
        self.components.contains_key(name)
    }

    pub fn components(&self) -> &BTreeMap<String, f64> {
        &self.components
    }

    pub fn total(&self, mode: Combination) -> f64 {
        total_uncertainty(self, mode)
    }

    /// Value with the components shown in parentheses in units of the last
    /// printed digit, e.g. `58605013477.8(5)_theor_QED(8)_theor_spin kHz`.
    pub fn to_paren_string(&self, decimals: usize) -> String {
        let scale = 10f64.powi(decimals as i32);
        let mut s = format!("{:.*}", decimals, self.value);
        for (name, u) in &self.components {
            let digits = (u * scale).round();
            let _ = write!(s, "({digits:.0})_{name}");
        }
        if !self.unit.is_empty() {
            let _ = write!(s, " {}", self.unit);
        }
        s
    }
}

/// `Σ cᵢ·qᵢ` with every component combined in quadrature across the terms.
pub fn combine_linear(terms: &[(f64, &Quantity)]) -> Result<Quantity> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::input("combine_linear needs at least one term"));
    };
    let unit = first.unit.clone();
    let mut value = 0.0;
    let mut sq: BTreeMap<String, f64> = BTreeMap::new();
    for (coeff, q) in terms {
        if q.unit != unit {
            return Err(Error::input(format!(
                "unit mismatch in linear combination: '{}' vs '{}'",
                unit, q.unit
            )));
        }
        value += coeff * q.value;
        for (name, u) in &q.components {
            *sq.entry(name.clone()).or_insert(0.0) += (coeff * u).powi(2);
        }
    }
    let mut out = Quantity::new(value, unit);
    for (name, s) in sq {
        out.set(name, s.sqrt())?;
    }
    Ok(out)
}

pub fn total_uncertainty(q: &Quantity, mode: Combination) -> f64 {
    match mode {
        Combination::Quadrature => q.components.values().map(|u| u * u).sum::<f64>().sqrt(),
        Combination::AbsoluteSum => q.components.values().sum(),
    }
}

/// Quadrature sum of plain numbers.
pub fn quadrature(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().map(|u| u * u).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_unit_term_is_identity() {
        let a = Quantity::khz(12.5).with(EXP, 0.3).with(CODATA, 1.1);
        let c = combine_linear(&[(1.0, &a)]).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn half_half_combination_of_line_uncertainties() {
        let a = Quantity::khz(0.0).with(EXP, 0.19);
        let b = Quantity::khz(0.0).with(EXP, 0.26);
        let c = combine_linear(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!((c.component(EXP) - 0.161_012_422).abs() < 1e-6);
    }

    #[test]
    fn negative_coefficient_keeps_components() {
        let a = Quantity::khz(3.0).with(EXP, 0.2).with("other:drift", 0.05);
        let c = combine_linear(&[(-1.0, &a)]).unwrap();
        assert_eq!(c.value, -3.0);
        assert_eq!(c.component(EXP), 0.2);
        assert_eq!(c.component("other:drift"), 0.05);
    }

    #[test]
    fn unit_mismatch_is_rejected() {
        let a = Quantity::khz(1.0);
        let b = Quantity::new(1.0, "Hz");
        assert!(matches!(
            combine_linear(&[(1.0, &a), (1.0, &b)]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn totals_for_three_four() {
        let q = Quantity::khz(0.0).with("a", 3.0).with("b", 4.0);
        assert_eq!(q.total(Combination::Quadrature), 5.0);
        assert_eq!(q.total(Combination::AbsoluteSum), 7.0);
    }

    #[test]
    fn negative_component_rejected_on_deserialize() {
        let json = r#"{"value": 1.0, "unit": "kHz", "components": {"exp": -0.1}}"#;
        assert!(serde_json::from_str::<Quantity>(json).is_err());
    }

    #[test]
    fn paren_rendering() {
        let q = Quantity::khz(58_605_013_477.81)
            .with(THEOR_QED, 0.5)
            .with(THEOR_SPIN, 0.8)
            .with(CODATA, 1.3);
        assert_eq!(
            q.to_paren_string(1),
            "58605013477.8(13)_CODATA(5)_theor_QED(8)_theor_spin kHz"
        );
    }

    fn arb_quantity() -> impl Strategy<Value = Quantity> {
        (
            -1e12f64..1e12,
            prop::collection::btree_map(
                prop::sample::select(vec![EXP, THEOR_QED, THEOR_SPIN, CODATA, "other:x"]),
                0.0f64..1e3,
                0..5,
            ),
        )
            .prop_map(|(v, comps)| {
                let mut q = Quantity::khz(v);
                for (k, u) in comps {
                    q.set(k, u).unwrap();
                }
                q
            })
    }

    proptest! {
        #[test]
        fn quadrature_never_exceeds_absolute_sum(q in arb_quantity()) {
            prop_assert!(q.total(Combination::Quadrature) <= q.total(Combination::AbsoluteSum) * (1.0 + 1e-15));
        }

        #[test]
        fn json_roundtrip_is_lossless(q in arb_quantity()) {
            let s = serde_json::to_string(&q).unwrap();
            let back: Quantity = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, q);
        }

        #[test]
        fn combine_linear_is_associative(
            a in arb_quantity(), b in arb_quantity(), c in arb_quantity(),
            ca in -3.0f64..3.0, cb in -3.0f64..3.0, cc in -3.0f64..3.0,
        ) {
            let flat = combine_linear(&[(ca, &a), (cb, &b), (cc, &c)]).unwrap();
            let ab = combine_linear(&[(ca, &a), (cb, &b)]).unwrap();
            let nested = combine_linear(&[(1.0, &ab), (cc, &c)]).unwrap();
            let scale = 1.0 + a.value.abs() + b.value.abs() + c.value.abs();
            prop_assert!((flat.value - nested.value).abs() <= 1e-12 * scale * 4.0);
            for (name, u) in flat.components() {
                prop_assert!((u - nested.component(name)).abs() <= 1e-12 * (1.0 + u));
            }
            prop_assert_eq!(flat.components().len(), nested.components().len());
        }
    }
}
