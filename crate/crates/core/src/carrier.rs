//! Resolved-carrier signal strength as a function of the spectroscopy
//! wavelength and the time-averaged radial spread of the ion string.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierModelKind {
    /// S = exp(−κ·(λ_c/λ)²), a Debye–Waller-type suppression.
    #[default]
    GaussianDebyeWaller,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarrierModel {
    pub kind: CarrierModelKind,
    /// Time-averaged radial width Δρ, µm.
    pub delta_rho_um: f64,
}

/// κ = ln 2, which puts S(λ_c) at one half.
pub const KAPPA: f64 = std::f64::consts::LN_2;

impl CarrierModel {
    pub fn new(delta_rho_um: f64) -> Result<Self> {
        critical_wavelength(delta_rho_um)?;
        Ok(Self {
            kind: CarrierModelKind::GaussianDebyeWaller,
            delta_rho_um,
        })
    }

    pub fn critical_wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.delta_rho_um
    }
}

/// λ_c = 2π·Δρ in µm.
pub fn critical_wavelength(delta_rho_um: f64) -> Result<f64> {
    if !(delta_rho_um > 0.0 && delta_rho_um.is_finite()) {
        return Err(Error::input(format!(
            "delta rho must be positive, got {delta_rho_um}"
        )));
    }
    Ok(2.0 * std::f64::consts::PI * delta_rho_um)
}

/// Relative carrier strength at wavelength `lambda_um`. Evaluated as
/// 2^(−(λ_c/λ)²), which equals exp(−ln 2·(λ_c/λ)²) and gives exactly 0.5 at
/// λ = λ_c.
pub fn carrier_strength(lambda_um: f64, model: &CarrierModel) -> Result<f64> {
    if !(lambda_um > 0.0 && lambda_um.is_finite()) {
        return Err(Error::input(format!(
            "wavelength must be positive, got {lambda_um}"
        )));
    }
    critical_wavelength(model.delta_rho_um)?;
    let x = model.critical_wavelength() / lambda_um;
    match model.kind {
        CarrierModelKind::GaussianDebyeWaller => Ok((-(x * x)).exp2()),
    }
}

/// (λ, S) on `points` log-spaced wavelengths between `from_um` and `to_um`.
pub fn sweep(
    model: &CarrierModel,
    from_um: f64,
    to_um: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(from_um > 0.0 && to_um > from_um) || points < 2 {
        return Err(Error::input(
            "sweep needs 0 < from < to and at least 2 points",
        ));
    }
    let (a, b) = (from_um.ln(), to_um.ln());
    (0..points)
        .map(|i| {
            let l = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            Ok((l, carrier_strength(l, model)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn critical_wavelength_examples() {
        assert!((critical_wavelength(2.0).unwrap() - 12.566).abs() < 1e-3);
        assert!(
            (critical_wavelength(1.0 / (2.0 * std::f64::consts::PI)).unwrap() - 1.0).abs() < 1e-15
        );
        assert_eq!(
            critical_wavelength(4.0).unwrap(),
            2.0 * critical_wavelength(2.0).unwrap()
        );
        assert!(critical_wavelength(0.0).is_err());
    }

    #[test]
    fn anchors() {
        let m = CarrierModel::new(2.0).unwrap();
        assert_eq!(carrier_strength(m.critical_wavelength(), &m).unwrap(), 0.5);
        let s = carrier_strength(5.1, &m).unwrap();
        let x: f64 = 4.0 * std::f64::consts::PI / 5.1;
        assert!((s - (-KAPPA * x * x).exp()).abs() < 1e-15);
        assert!((s - 0.0149).abs() < 0.0005 && s < 0.02);
        assert!((carrier_strength(1e9, &m).unwrap() - 1.0).abs() < 1e-15);
        assert!(carrier_strength(0.0, &m).is_err());
    }

    #[test]
    fn sweep_is_increasing() {
        let m = CarrierModel::new(2.0).unwrap();
        let s = sweep(&m, 1.0, 100.0, 50).unwrap();
        assert_eq!(s.len(), 50);
        assert!(s.windows(2).all(|w| w[1].1 > w[0].1));
    }

    proptest! {
        #[test]
        fn depends_on_ratio_only(l in 1.0..50.0f64, d in 0.1..5.0f64, k in 0.1..10.0f64) {
            let a = carrier_strength(l, &CarrierModel::new(d).unwrap()).unwrap();
            let b = carrier_strength(k * l, &CarrierModel::new(k * d).unwrap()).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a > 0.0 && a <= 1.0);
        }

        #[test]
        fn monotone(l in 0.5..50.0f64, d in 0.1..10.0f64) {
            let m = CarrierModel::new(d).unwrap();
            let s = carrier_strength(l, &m).unwrap();
            prop_assert!(carrier_strength(l * 1.01, &m).unwrap() >= s);
            prop_assert!(carrier_strength(l, &CarrierModel::new(d * 1.01).unwrap()).unwrap() <= s);
        }
    }
}
