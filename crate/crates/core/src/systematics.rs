//! Systematic-shift budget: RF-amplitude extrapolation, light-shift and
//! negligible-shift entries, and their application to a raw line frequency.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{extrapolate, Extrapolation};
use crate::quantity::{quadrature, Quantity, EXP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftBasis {
    MeasuredExtrapolation,
    TheoreticalBound,
    SetToZero,
}

/// One line of the budget. `correction` is added to the raw frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftEntry {
    pub name: String,
    pub correction: f64,
    pub uncertainty: f64,
    pub basis: ShiftBasis,
    pub note: String,
}

impl ShiftEntry {
    pub fn new(
        name: impl Into<String>,
        correction: f64,
        uncertainty: f64,
        basis: ShiftBasis,
        note: impl Into<String>,
    ) -> Result<Self> {
        let e = Self {
            name: name.into(),
            correction,
            uncertainty,
            basis,
            note: note.into(),
        };
        e.validate()?;
        Ok(e)
    }

    /// Entry for an effect that is neither corrected nor budgeted.
    pub fn negligible(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            correction: 0.0,
            uncertainty: 0.0,
            basis: ShiftBasis::SetToZero,
            note: note.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::input("shift entry without a name"));
        }
        if !self.correction.is_finite() {
            return Err(Error::input(format!(
                "entry '{}': correction is not finite",
                self.name
            )));
        }
        if !(self.uncertainty >= 0.0 && self.uncertainty.is_finite()) {
            return Err(Error::input(format!(
                "entry '{}': uncertainty must be finite and non-negative, got {}",
                self.name, self.uncertainty
            )));
        }
        if self.basis == ShiftBasis::SetToZero && self.correction != 0.0 {
            return Err(Error::input(format!(
                "entry '{}' is set to zero but carries a correction of {}",
                self.name, self.correction
            )));
        }
        Ok(())
    }
}

/// Dependence of the line frequency on the RF drive amplitude A.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RfModel {
    /// f = f₀ + k·A², the scaling of a Stark shift with the mean-squared field.
    #[default]
    Quadratic,
    /// f = f₀ + k·A.
    Linear,
}

impl RfModel {
    pub fn g(self) -> fn(f64) -> f64 {
        match self {
            RfModel::Quadratic => |a| a * a,
            RfModel::Linear => |a| a,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RfModel::Quadratic => "quadratic",
            RfModel::Linear => "linear",
        }
    }
}

/// Result of an extrapolation to zero RF amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct RfExtrapolation {
    pub f_zero: Quantity,
    /// Correction from the nominal-amplitude frequency to f₀.
    pub entry: ShiftEntry,
    pub fit: Extrapolation,
}

/// Extrapolates (amplitude, frequency) points to zero amplitude.
///
/// The entry's correction is the fitted f₀ − f(A_nom) = −k·g(A_nom) with
/// uncertainty g(A_nom)·σ_k, so it can be applied to a line measured at the
/// nominal amplitude.
pub fn rf_extrapolate(
    points: &[(f64, Quantity)],
    nominal_amplitude: f64,
    model: RfModel,
) -> Result<RfExtrapolation> {
    if !nominal_amplitude.is_finite() || nominal_amplitude < 0.0 {
        return Err(Error::input(format!(
            "nominal RF amplitude must be finite and non-negative, got {nominal_amplitude}"
        )));
    }
    if let Some((a, _)) = points.iter().find(|(a, _)| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::input(format!(
            "RF amplitude must be non-negative, got {a}"
        )));
    }
    let fit = extrapolate(points, model.g(), "RF amplitude")?;
    let g_nom = model.g()(nominal_amplitude);
    let entry = ShiftEntry::new(
        "rf-amplitude",
        -fit.slope * g_nom,
        g_nom * fit.slope_sigma,
        ShiftBasis::MeasuredExtrapolation,
        format!(
            "{} extrapolation to zero amplitude from {} points; slope {:.6} ± {:.6} kHz per unit of g(A); nominal amplitude {}",
            model.name(),
            points.len(),
            fit.slope,
            fit.slope_sigma,
            nominal_amplitude
        ),
    )?;
    Ok(RfExtrapolation {
        f_zero: fit.intercept.clone(),
        entry,
        fit,
    })
}

/// Atomic unit of electric polarizability, C·m²/V.
pub const AU_POLARIZABILITY: f64 = 1.648_777_274_36e-41;
const EPSILON_0: f64 = 8.854_187_812_8e-12;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const PLANCK: f64 = 6.626_070_15e-34;

/// Frequency shift in kHz per atomic unit of polarizability difference and
/// per W/m² of intensity, from Δf = Δα·I/(2ε₀ch).
pub fn light_shift_khz_per_au_intensity() -> f64 {
    AU_POLARIZABILITY / (2.0 * EPSILON_0 * SPEED_OF_LIGHT * PLANCK) * 1e-3
}

/// Estimates below this magnitude (kHz) are recorded as zero uncertainty.
pub const LIGHT_SHIFT_FLOOR_KHZ: f64 = 1e-3;

/// Light-shift entry for the cooling light.
///
/// The polarizability difference is bounded by |α_s,upper − α_lower| +
/// |α_t,upper|, the worst case over the tensor orientation. The entry is
/// never applied as a correction; its uncertainty is the computed estimate,
/// or zero when that estimate is below [`LIGHT_SHIFT_FLOOR_KHZ`].
pub fn light_shift_entry(
    alpha_s_upper: f64,
    alpha_t_upper: f64,
    alpha_lower: f64,
    intensity_w_m2: f64,
    measured_bound_khz: f64,
) -> Result<ShiftEntry> {
    if !(intensity_w_m2 >= 0.0 && intensity_w_m2.is_finite()) {
        return Err(Error::input(format!(
            "intensity must be non-negative, got {intensity_w_m2}"
        )));
    }
    for (name, x) in [
        ("alpha_s_upper", alpha_s_upper),
        ("alpha_t_upper", alpha_t_upper),
        ("alpha_lower", alpha_lower),
    ] {
        if !x.is_finite() {
            return Err(Error::input(format!("{name} is not finite")));
        }
    }
    if !(measured_bound_khz >= 0.0 && measured_bound_khz.is_finite()) {
        return Err(Error::input(format!(
            "measured bound must be non-negative, got {measured_bound_khz}"
        )));
    }
    let delta_alpha = (alpha_s_upper - alpha_lower).abs() + alpha_t_upper.abs();
    let estimate = delta_alpha * intensity_w_m2 * light_shift_khz_per_au_intensity();
    let uncertainty = if estimate < LIGHT_SHIFT_FLOOR_KHZ {
        0.0
    } else {
        estimate
    };
    ShiftEntry::new(
        "light-shift",
        0.0,
        uncertainty,
        ShiftBasis::SetToZero,
        format!(
            "upper level alpha_s = {alpha_s_upper} a.u., alpha_t = {alpha_t_upper} a.u.; lower level alpha = {alpha_lower} a.u.; \
             |delta alpha| <= {delta_alpha:.4} a.u. at {intensity_w_m2} W/m^2 gives an estimate of {estimate:.3e} kHz; \
             no effect measured at the {measured_bound_khz} kHz level"
        ),
    )
}

/// Entries that every budget lists for auditability, none of which shifts or
/// widens the result.
pub fn standard_entries(trap_displacement_bound_khz: f64) -> Vec<ShiftEntry> {
    vec![
        ShiftEntry::negligible("black-body", "negligible"),
        ShiftEntry::negligible("electric-quadrupole", "negligible"),
        ShiftEntry::negligible(
            "trap-displacement",
            format!(
                "displacement test showed no shift; upper bound {trap_displacement_bound_khz} kHz; \
                 no correction or uncertainty applied"
            ),
        ),
    ]
}

/// A raw frequency together with the entries applied to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftLedger {
    pub entries: Vec<ShiftEntry>,
    pub raw: Quantity,
    pub corrected: Quantity,
}

/// Adds every correction to `raw` and combines the entry uncertainties in
/// quadrature with the raw `exp` component. Other components pass through.
pub fn apply_ledger(raw: &Quantity, entries: Vec<ShiftEntry>) -> Result<ShiftLedger> {
    let mut names = BTreeSet::new();
    for e in &entries {
        e.validate()?;
        if !names.insert(e.name.as_str()) {
            return Err(Error::input(format!(
                "shift entry '{}' appears twice",
                e.name
            )));
        }
    }
    let mut corrected = raw.clone();
    corrected.value = raw.value + entries.iter().map(|e| e.correction).sum::<f64>();
    let u = quadrature(
        std::iter::once(raw.component(EXP)).chain(entries.iter().map(|e| e.uncertainty)),
    );
    if u > 0.0 || raw.has(EXP) {
        corrected.set(EXP, u)?;
    }
    Ok(ShiftLedger {
        entries,
        raw: raw.clone(),
        corrected,
    })
}
