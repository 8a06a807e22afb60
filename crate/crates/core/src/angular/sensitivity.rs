//! Sensitivity rows γ, γ′ of transitions and the spin-theory uncertainty
//! model built on them.

use serde::{Deserialize, Serialize};

use super::hamiltonian::{HyperfineCoefficients, N_COEFFS};
use super::levels::{LevelLabel, SpinStructure};
use crate::error::{Error, Result};

/// Fine-structure constant (CODATA 2018).
pub const ALPHA: f64 = 7.297_352_569_3e-3;

/// Coefficients whose fractional uncertainty is ε₀ (Breit–Pauli set).
pub const BREIT_PAULI_SET: [usize; 6] = [2, 3, 6, 7, 8, 9];
/// Coefficients whose fractional uncertainty is ε_F (Fermi contact set).
pub const FERMI_SET: [usize; 2] = [4, 5];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinUncertaintyParams {
    pub eps_fermi: f64,
    pub eps_breit_pauli: f64,
    /// Absolute uncertainty of E1′, kHz.
    pub u1_upper: f64,
}

impl Default for SpinUncertaintyParams {
    fn default() -> Self {
        Self {
            eps_fermi: 1e-6,
            eps_breit_pauli: ALPHA * ALPHA,
            u1_upper: 0.05,
        }
    }
}

impl SpinUncertaintyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("eps_fermi", self.eps_fermi),
            ("eps_breit_pauli", self.eps_breit_pauli),
            ("u1_upper", self.u1_upper),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::input(format!(
                    "{name} must be strictly positive, got {x}"
                )));
            }
        }
        Ok(())
    }
}

/// γ (lower level) and γ′ (upper level) of one transition, indexed by k−1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSensitivity {
    pub name: String,
    pub lower: [f64; N_COEFFS],
    pub upper: [f64; N_COEFFS],
}

impl TransitionSensitivity {
    /// Hellmann–Feynman rows for the transition lower_label → upper_label.
    pub fn compute(
        name: impl Into<String>,
        lower: &SpinStructure,
        lower_label: LevelLabel,
        upper: &SpinStructure,
        upper_label: LevelLabel,
    ) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            lower: lower.sensitivities(lower_label)?,
            upper: upper.sensitivities(upper_label)?,
        })
    }
}

/// One row per transition.
pub type SensitivityTable = Vec<TransitionSensitivity>;

/// Spin-theory uncertainty (kHz) of a single transition. Terms add as
/// absolute values.
pub fn spin_uncertainty(
    row: &TransitionSensitivity,
    lower: &HyperfineCoefficients,
    upper: &HyperfineCoefficients,
    params: &SpinUncertaintyParams,
) -> Result<f64> {
    weighted_spin_uncertainty(&[(1.0, row)], lower, upper, params)
}

/// Spin-theory uncertainty of the combination Σ bᵢ·fᵢ. Sensitivities are
/// summed with their weights inside each absolute value, so correlated
/// contributions of the same coefficient can cancel.
pub fn weighted_spin_uncertainty(
    rows: &[(f64, &TransitionSensitivity)],
    lower: &HyperfineCoefficients,
    upper: &HyperfineCoefficients,
    params: &SpinUncertaintyParams,
) -> Result<f64> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::input(
            "no transitions given for the spin uncertainty",
        ));
    }
    let weighted = |k: usize, upper_level: bool| -> f64 {
        rows.iter()
            .map(|(b, r)| {
                b * if upper_level {
                    r.upper[k - 1]
                } else {
                    r.lower[k - 1]
                }
            })
            .sum()
    };
    let (up, lo) = (true, false);

    let u1 = match upper.eps_override(1) {
        Some(eps) => eps * upper.require(1)?.abs(),
        None => params.u1_upper,
    };
    let mut u = (weighted(1, up) * u1).abs();
    for k in BREIT_PAULI_SET {
        let eps = upper.eps_override(k).unwrap_or(params.eps_breit_pauli);
        u += eps * (weighted(k, up) * upper.require(k)?).abs();
    }
    for k in FERMI_SET {
        let eps_u = upper.eps_override(k).unwrap_or(params.eps_fermi);
        let eps_l = lower.eps_override(k).unwrap_or(params.eps_fermi);
        u += eps_u * (weighted(k, up) * upper.require(k)?).abs();
        u += eps_l * (weighted(k, lo) * lower.require(k)?).abs();
    }
    Ok(u)
}
