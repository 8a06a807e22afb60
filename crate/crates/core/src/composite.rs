//! Composite spin-averaged frequency from two hyperfine components, its
//! spin-theory uncertainty, the choice of weight b₁₂ and the comparison of
//! the measured hyperfine splitting with theory.

use serde::{Deserialize, Serialize};

use crate::angular::{
    weighted_spin_uncertainty, HyperfineCoefficients, SpinUncertaintyParams, TransitionSensitivity,
    BREIT_PAULI_SET, FERMI_SET,
};
use crate::error::{Error, Result};
use crate::quantity::{combine_linear, Combination, Quantity, EXP, THEOR_SPIN};

/// Sensitivities and coefficients of the two lines, which share their lower
/// and upper rovibrational levels.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinModel {
    pub row12: TransitionSensitivity,
    pub row16: TransitionSensitivity,
    pub lower: HyperfineCoefficients,
    pub upper: HyperfineCoefficients,
    pub params: SpinUncertaintyParams,
}

impl SpinModel {
    /// Spin-theory uncertainty of b₁₂·f₁₂ + (1−b₁₂)·f₁₆.
    pub fn uncertainty(&self, b12: f64) -> Result<f64> {
        check_weight(b12)?;
        weighted_spin_uncertainty(
            &[(b12, &self.row12), (1.0 - b12, &self.row16)],
            &self.lower,
            &self.upper,
            &self.params,
        )
    }

    /// Weights in (0, 1) at which one of the absolute-value terms of the
    /// uncertainty vanishes. The objective is linear between them.
    pub fn breakpoints(&self) -> Result<Vec<f64>> {
        let mut x: Vec<(f64, f64)> = vec![(self.row12.upper[0], self.row16.upper[0])];
        for k in BREIT_PAULI_SET {
            let e = self.upper.require(k)?;
            x.push((self.row12.upper[k - 1] * e, self.row16.upper[k - 1] * e));
        }
        for k in FERMI_SET {
            let eu = self.upper.require(k)?;
            let el = self.lower.require(k)?;
            x.push((self.row12.upper[k - 1] * eu, self.row16.upper[k - 1] * eu));
            x.push((self.row12.lower[k - 1] * el, self.row16.lower[k - 1] * el));
        }
        let mut out: Vec<f64> = x
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| b / (b - a))
            .filter(|b| *b > 0.0 && *b < 1.0)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        Ok(out)
    }
}

/// Treatment of the experimental uncertainties of the two lines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ExpCorrelation {
    /// u(f₁₂) and u(f₁₆) are independent.
    #[default]
    Independent,
    /// The given parts of each `exp` uncertainty stem from shared budget
    /// entries and add linearly; the remainders add in quadrature.
    Correlated { shared12: f64, shared16: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeInput {
    pub f12: Quantity,
    pub f16: Quantity,
    /// Theoretical spin frequencies with their `theor_spin` components.
    pub fspin12: Quantity,
    pub fspin16: Quantity,
    /// Without a model the spin uncertainty falls back to
    /// b₁₂·u_spin,12 + (1−b₁₂)·u_spin,16, which bounds the weighted formula
    /// from above by the triangle inequality.
    pub spin_model: Option<SpinModel>,
}

fn check_weight(b12: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&b12) {
        return Err(Error::input(format!("b12 must lie in [0, 1], got {b12}")));
    }
    Ok(())
}

impl CompositeInput {
    pub fn validate(&self) -> Result<()> {
        for q in [&self.f12, &self.f16, &self.fspin12, &self.fspin16] {
            if q.unit != self.f12.unit {
                return Err(Error::input(format!(
                    "unit mismatch: '{}' vs '{}'",
                    self.f12.unit, q.unit
                )));
            }
        }
        Ok(())
    }

    pub fn spin_uncertainty(&self, b12: f64) -> Result<f64> {
        check_weight(b12)?;
        match &self.spin_model {
            Some(m) => m.uncertainty(b12),
            None => Ok(b12 * self.fspin12.component(THEOR_SPIN)
                + (1.0 - b12) * self.fspin16.component(THEOR_SPIN)),
        }
    }
}

/// b₁₂(f₁₂ − f_spin,12) + (1−b₁₂)(f₁₆ − f_spin,16) with independent
/// experimental uncertainties.
pub fn composite_frequency(inp: &CompositeInput, b12: f64) -> Result<Quantity> {
    composite_frequency_with(inp, b12, ExpCorrelation::Independent)
}

pub fn composite_frequency_with(
    inp: &CompositeInput,
    b12: f64,
    corr: ExpCorrelation,
) -> Result<Quantity> {
    check_weight(b12)?;
    inp.validate()?;
    let b16 = 1.0 - b12;
    let mut q = combine_linear(&[(b12, &inp.f12), (b16, &inp.f16)])?;
    q.value -= b12 * inp.fspin12.value + b16 * inp.fspin16.value;
    if let ExpCorrelation::Correlated { shared12, shared16 } = corr {
        let (u12, u16) = (inp.f12.component(EXP), inp.f16.component(EXP));
        if !(0.0..=u12).contains(&shared12) || !(0.0..=u16).contains(&shared16) {
            return Err(Error::input(format!(
                "shared parts ({shared12}, {shared16}) must lie within the exp uncertainties ({u12}, {u16})"
            )));
        }
        let indep = (b12 * b12 * (u12 * u12 - shared12 * shared12)
            + b16 * b16 * (u16 * u16 - shared16 * shared16))
            .max(0.0);
        let shared = b12 * shared12 + b16 * shared16;
        q.set(EXP, (indep + shared * shared).sqrt())?;
    }
    q.set(THEOR_SPIN, inp.spin_uncertainty(b12)?)?;
    Ok(q)
}

/// Weight minimizing the `exp` component alone (inverse-variance weighting).
pub fn exp_optimal_weight(u12: f64, u16: f64) -> Result<f64> {
    let d = u12 * u12 + u16 * u16;
    if !(d > 0.0) {
        return Err(Error::input("both experimental uncertainties are zero"));
    }
    Ok(u16 * u16 / d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub b12: f64,
    pub u_spin_khz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightOptimum {
    pub b_star: f64,
    pub u_min: f64,
    /// Grid scan b₁₂ = 0, 0.01, …, 1.
    pub profile: Vec<ProfilePoint>,
}

impl WeightOptimum {
    /// (max − min)/min of the profile over b₁₂ ∈ [lo, hi].
    pub fn variation(&self, lo: f64, hi: f64) -> f64 {
        let us: Vec<f64> = self
            .profile
            .iter()
            .filter(|p| p.b12 >= lo - 1e-12 && p.b12 <= hi + 1e-12)
            .map(|p| p.u_spin_khz)
            .collect();
        let max = us.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = us.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / min
    }
}

pub const GRID_STEPS: usize = 100;

/// Minimizes the spin uncertainty over b₁₂ ∈ [0, 1]. The objective is convex
/// and piecewise linear, so its minimum lies on a breakpoint or an end point;
/// the grid profile is returned for flatness reporting. Among equal minima
/// the weight closest to 0.5 is chosen.
pub fn optimize_weight(model: &SpinModel) -> Result<WeightOptimum> {
    let mut profile = Vec::with_capacity(GRID_STEPS + 1);
    for i in 0..=GRID_STEPS {
        let b12 = i as f64 / GRID_STEPS as f64;
        profile.push(ProfilePoint {
            b12,
            u_spin_khz: model.uncertainty(b12)?,
        });
    }
    let mut candidates: Vec<(f64, f64)> = profile.iter().map(|p| (p.b12, p.u_spin_khz)).collect();
    for b in model.breakpoints()? {
        candidates.push((b, model.uncertainty(b)?));
    }
    let u_min = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * u_min.abs().max(1e-300);
    let (b_star, _) = candidates
        .iter()
        .filter(|c| c.1 <= u_min + tol)
        .min_by(|a, b| {
            (a.0 - 0.5)
                .abs()
                .total_cmp(&(b.0 - 0.5).abs())
                .then(a.0.total_cmp(&b.0))
        })
        .copied()
        .expect("grid is non-empty");
    Ok(WeightOptimum {
        b_star,
        u_min,
        profile,
    })
}

/// Machine-readable composite result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    pub b12: f64,
    pub value_khz: f64,
    pub u_exp_khz: f64,
    pub u_spin_khz: f64,
    pub profile: Vec<ProfilePoint>,
}

/// Composite value at `b12` with the uncertainty profile over the grid.
pub fn composite_report(
    inp: &CompositeInput,
    b12: f64,
    corr: ExpCorrelation,
) -> Result<CompositeReport> {
    let q = composite_frequency_with(inp, b12, corr)?;
    let mut profile = Vec::with_capacity(GRID_STEPS + 1);
    for i in 0..=GRID_STEPS {
        let b = i as f64 / GRID_STEPS as f64;
        profile.push(ProfilePoint {
            b12: b,
            u_spin_khz: inp.spin_uncertainty(b)?,
        });
    }
    Ok(CompositeReport {
        b12: (b12 * 1000.0).round() / 1000.0,
        value_khz: q.value,
        u_exp_khz: q.component(EXP),
        u_spin_khz: q.component(THEOR_SPIN),
        profile,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingComparison {
    /// f₁₆ − f₁₂ with its combined experimental uncertainty.
    pub diff_exp: Quantity,
    pub diff_theory: Quantity,
    pub u_exp: f64,
    pub u_theory: f64,
    /// |Δ_exp − Δ_theory| / √(u_exp² + u_theory²).
    pub metric: f64,
}

/// Compares the measured splitting f₁₆ − f₁₂ with its theoretical value.
pub fn splitting_comparison(
    f12: &Quantity,
    f16: &Quantity,
    theory: &Quantity,
) -> Result<SplittingComparison> {
    let diff_exp = combine_linear(&[(-1.0, f12), (1.0, f16)])?;
    if theory.unit != diff_exp.unit {
        return Err(Error::input(format!(
            "unit mismatch: '{}' vs '{}'",
            diff_exp.unit, theory.unit
        )));
    }
    let u_exp = diff_exp.total(Combination::Quadrature);
    let u_theory = theory.total(Combination::Quadrature);
    let delta = (diff_exp.value - theory.value).abs();
    let u = u_exp.hypot(u_theory);
    let metric = if delta == 0.0 {
        0.0
    } else if u > 0.0 {
        delta / u
    } else {
        f64::INFINITY
    };
    Ok(SplittingComparison {
        diff_exp,
        diff_theory: theory.clone(),
        u_exp,
        u_theory,
        metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{spin_uncertainty, N_COEFFS};
    use proptest::prelude::*;

    fn measured() -> CompositeInput {
        CompositeInput {
            f12: Quantity::khz(58_605_013_478.03).with(EXP, 0.19),
            f16: Quantity::khz(58_605_054_772.08).with(EXP, 0.26),
            fspin12: Quantity::khz(-38_686.1).with(THEOR_SPIN, 0.8),
            fspin16: Quantity::khz(2_607.7).with(THEOR_SPIN, 0.9),
            spin_model: None,
        }
    }

    fn coeffs(level: u32, e: [f64; N_COEFFS]) -> HyperfineCoefficients {
        HyperfineCoefficients::from_array(1, level, e).unwrap()
    }

    fn model(
        g12: [f64; N_COEFFS],
        g16: [f64; N_COEFFS],
        lower12: [f64; N_COEFFS],
        lower16: [f64; N_COEFFS],
    ) -> SpinModel {
        let lower = HyperfineCoefficients::from_array(
            0,
            0,
            [0.0, 0.0, 0.0, 925_000.0, 142_000.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        SpinModel {
            row12: TransitionSensitivity {
                name: "12".into(),
                lower: lower12,
                upper: g12,
            },
            row16: TransitionSensitivity {
                name: "16".into(),
                lower: lower16,
                upper: g16,
            },
            lower,
            upper: coeffs(
                1,
                [
                    31_984.9, -31.3, -4.8, 904_500.0, 138_700.0, 8.6, 1.37, -3.05, 0.4,
                ],
            ),
            params: SpinUncertaintyParams::default(),
        }
    }

    #[test]
    fn end_points_and_midpoint() {
        let inp = measured();
        let q1 = composite_frequency(&inp, 1.0).unwrap();
        assert!((q1.value - 58_605_052_164.13).abs() < 1e-4);
        let q0 = composite_frequency(&inp, 0.0).unwrap();
        assert!((q0.value - 58_605_052_164.38).abs() < 1e-4);
        let qh = composite_frequency(&inp, 0.5).unwrap();
        assert!((qh.value - 58_605_052_164.255).abs() < 1e-4);
        assert!((qh.component(EXP) - 0.161).abs() < 0.001);
        assert!((qh.component(THEOR_SPIN) - 0.85).abs() < 1e-12);
        assert!(composite_frequency(&inp, 1.2).is_err());
    }

    #[test]
    fn exp_minimum_matches_inverse_variance_weight() {
        let inp = measured();
        let b_opt = exp_optimal_weight(0.19, 0.26).unwrap();
        let u_opt = composite_frequency(&inp, b_opt).unwrap().component(EXP);
        for i in 0..=100 {
            let u = composite_frequency(&inp, i as f64 / 100.0)
                .unwrap()
                .component(EXP);
            assert!(u >= u_opt - 1e-15);
        }
    }

    #[test]
    fn correlated_mode_reduces_to_independent() {
        let inp = measured();
        let c = ExpCorrelation::Correlated {
            shared12: 0.0,
            shared16: 0.0,
        };
        let a = composite_frequency_with(&inp, 0.3, c).unwrap();
        let b = composite_frequency(&inp, 0.3).unwrap();
        assert!((a.component(EXP) - b.component(EXP)).abs() < 1e-15);
        let full = ExpCorrelation::Correlated {
            shared12: 0.19,
            shared16: 0.26,
        };
        let f = composite_frequency_with(&inp, 0.5, full).unwrap();
        assert!((f.component(EXP) - 0.225).abs() < 1e-12);
        let bad = ExpCorrelation::Correlated {
            shared12: 0.3,
            shared16: 0.0,
        };
        assert!(composite_frequency_with(&inp, 0.5, bad).is_err());
    }

    #[test]
    fn equal_rows_give_flat_profile() {
        let g = [-0.5, 0.1, 0.2, 0.01, -0.02, 0.3, -0.1, 0.05, 0.4];
        let l = [0.0, 0.0, 0.0, 0.1, 0.2, 0.0, 0.0, 0.0, 0.0];
        let m = model(g, g, l, l);
        let opt = optimize_weight(&m).unwrap();
        assert!(opt.variation(0.0, 1.0) < 1e-12);
        assert_eq!(opt.b_star, 0.5);
    }

    #[test]
    fn single_dominant_coefficient_vanishes_at_crossing() {
        let mut g12 = [0.0; N_COEFFS];
        let mut g16 = [0.0; N_COEFFS];
        g12[3] = 0.3;
        g16[3] = -0.7;
        let z = [0.0; N_COEFFS];
        let m = model(g12, g16, z, z);
        let opt = optimize_weight(&m).unwrap();
        let expected = -0.7 / (-0.7 - 0.3);
        assert!((opt.b_star - expected).abs() < 1e-12);
        assert!(opt.u_min.abs() < 1e-9);
    }

    #[test]
    fn end_point_reduction() {
        let g12 = [-0.5, 0.1, 0.2, 0.01, -0.02, 0.3, -0.1, 0.05, 0.4];
        let g16 = [0.5, -0.2, 0.1, 0.03, 0.02, -0.3, 0.2, 0.05, 0.1];
        let l12 = [0.0, 0.0, 0.0, 0.1, 0.2, 0.0, 0.0, 0.0, 0.0];
        let l16 = [0.0, 0.0, 0.0, -0.3, 0.05, 0.0, 0.0, 0.0, 0.0];
        let m = model(g12, g16, l12, l16);
        let s12 = spin_uncertainty(&m.row12, &m.lower, &m.upper, &m.params).unwrap();
        let s16 = spin_uncertainty(&m.row16, &m.lower, &m.upper, &m.params).unwrap();
        assert_eq!(m.uncertainty(1.0).unwrap(), s12);
        assert_eq!(m.uncertainty(0.0).unwrap(), s16);
    }

    #[test]
    fn splitting() {
        let inp = measured();
        let theory = Quantity::khz(41_293.81).with(THEOR_SPIN, 0.44);
        let c = splitting_comparison(&inp.f12, &inp.f16, &theory).unwrap();
        assert!((c.diff_exp.value - 41_294.05).abs() < 1e-4);
        assert!((c.u_exp - 0.322).abs() < 0.001);
        assert!((c.metric - 0.44).abs() < 0.01);
        let same = splitting_comparison(&inp.f12, &inp.f16, &c.diff_exp).unwrap();
        assert_eq!(same.metric, 0.0);
    }

    #[test]
    fn report_rounds_weight() {
        let r = composite_report(&measured(), 0.123456, ExpCorrelation::Independent).unwrap();
        assert_eq!(r.b12, 0.123);
        assert_eq!(r.profile.len(), GRID_STEPS + 1);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"u_spin_khz\""));
    }

    fn row() -> impl Strategy<Value = [f64; N_COEFFS]> {
        prop::array::uniform9(-1.0..1.0f64)
    }

    proptest! {
        #[test]
        fn convex_in_weight(g12 in row(), g16 in row(), l12 in row(), l16 in row(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let m = model(g12, g16, l12, l16);
            let mid = m.uncertainty(0.5 * (a + b)).unwrap();
            let avg = 0.5 * (m.uncertainty(a).unwrap() + m.uncertainty(b).unwrap());
            prop_assert!(mid <= avg * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn reduces_to_single_line(g12 in row(), g16 in row(), l12 in row(), l16 in row()) {
            let m = model(g12, g16, l12, l16);
            prop_assert_eq!(m.uncertainty(1.0).unwrap(), spin_uncertainty(&m.row12, &m.lower, &m.upper, &m.params).unwrap());
            prop_assert_eq!(m.uncertainty(0.0).unwrap(), spin_uncertainty(&m.row16, &m.lower, &m.upper, &m.params).unwrap());
        }

        #[test]
        fn optimum_not_above_grid(g12 in row(), g16 in row(), l12 in row(), l16 in row()) {
            let m = model(g12, g16, l12, l16);
            let opt = optimize_weight(&m).unwrap();
            for p in &opt.profile {
                prop_assert!(opt.u_min <= p.u_spin_khz * (1.0 + 1e-12));
            }
        }

        #[test]
        fn affine_in_weight(d12 in -1e3..1e3f64, d16 in -1e3..1e3f64) {
            let mut inp = measured();
            inp.f12.value += d12;
            inp.f16.value += d16;
            let v0 = composite_frequency(&inp, 0.0).unwrap().value;
            let v1 = composite_frequency(&inp, 1.0).unwrap().value;
            let vh = composite_frequency(&inp, 0.5).unwrap().value;
            prop_assert!((vh - 0.5 * (v0 + v1)).abs() <= 1e-5);
        }
    }
}
