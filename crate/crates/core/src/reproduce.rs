//! Bundled measurement inputs, the two-line spin analysis and the table of
//! reference numbers that the full chain must reproduce.

use serde::{Deserialize, Serialize};

use crate::angular::{
    spin_frequency, spin_uncertainty, CoefficientFile, LabelScheme, LabelingOptions, LevelLabel,
    SpinStructure, SpinUncertaintyParams, TransitionSensitivity,
};
use crate::carrier::{carrier_strength, CarrierModel};
use crate::composite::{
    composite_frequency, optimize_weight, splitting_comparison, CompositeInput, SpinModel,
    WeightOptimum,
};
use crate::constants::{
    extract_mp_over_me, extract_mu_over_me, line_theory, scaled_theory, theory_frequency,
    theory_prediction, ConstantSet, ConstantsProfile, ContributionTable, ScalingModel,
    TheoryBudget,
};
use crate::error::{Error, Result};
use crate::lineshape::resolution;
use crate::quantity::{Quantity, CODATA, EXP, THEOR_QED, THEOR_SPIN};
use crate::textio::{parse_f64, parse_key_values};
use crate::zeeman::{
    default_grid, transition_coeffs, zeeman_map, StateId, TransitionZeemanModel, ZeemanCouplings,
};

/// A hyperfine component between the (v=0,N=0) and (v=1,N=1) levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDef {
    pub name: &'static str,
    pub lower: LevelLabel,
    pub upper: LevelLabel,
}

pub const LINE_12: LineDef = LineDef {
    name: "12",
    lower: LevelLabel::new(1, 2, 2),
    upper: LevelLabel::new(1, 2, 1),
};

pub const LINE_16: LineDef = LineDef {
    name: "16",
    lower: LevelLabel::new(1, 2, 2),
    upper: LevelLabel::new(1, 2, 3),
};

pub fn line(name: &str) -> Result<LineDef> {
    match name {
        "12" => Ok(LINE_12),
        "16" => Ok(LINE_16),
        other => Err(Error::Config(format!(
            "unknown line '{other}', expected 12 or 16"
        ))),
    }
}

/// Corrected experimental frequencies and theoretical spin frequencies of
/// lines 12 and 16.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredLines {
    pub f12: Quantity,
    pub f16: Quantity,
    pub fspin12: Quantity,
    pub fspin16: Quantity,
}

impl MeasuredLines {
    pub fn bundled() -> Self {
        Self::parse(
            include_str!("../data/measured_lines.csv"),
            "measured_lines.csv",
        )
        .expect("bundled lines parse")
    }

    /// Reads CSV columns `line, f_khz, u_exp_khz, fspin_khz, u_spin_khz`
    /// with one row each for lines 12 and 16.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            line: String,
            f_khz: f64,
            u_exp_khz: f64,
            fspin_khz: f64,
            u_spin_khz: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = std::collections::BTreeMap::new();
        for (i, rec) in rdr.deserialize::<Row>().enumerate() {
            let r = rec.map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
            let meas = Quantity::khz(r.f_khz)
                .try_with(EXP, r.u_exp_khz)
                .map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
            let spin = Quantity::khz(r.fspin_khz)
                .try_with(THEOR_SPIN, r.u_spin_khz)
                .map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
            if rows.insert(r.line.clone(), (meas, spin)).is_some() {
                return Err(Error::parse(
                    origin,
                    i + 2,
                    format!("line '{}' listed twice", r.line),
                ));
            }
        }
        let mut take = |name: &str| {
            rows.remove(name)
                .ok_or_else(|| Error::Config(format!("{origin}: line {name} is missing")))
        };
        let (f12, fspin12) = take("12")?;
        let (f16, fspin16) = take("16")?;
        Ok(Self {
            f12,
            f16,
            fspin12,
            fspin16,
        })
    }

    pub fn composite_input(&self, spin_model: Option<SpinModel>) -> CompositeInput {
        CompositeInput {
            f12: self.f12.clone(),
            f16: self.f16.clone(),
            fspin12: self.fspin12.clone(),
            fspin16: self.fspin16.clone(),
            spin_model,
        }
    }
}

/// Theoretical splitting f_spin,16 − f_spin,12, with `theor_spin`.
pub fn parse_splitting_theory(text: &str, origin: &str) -> Result<Quantity> {
    let mut value = None;
    let mut u = None;
    for kv in parse_key_values(text, origin)? {
        let x = parse_f64(&kv.value, origin, kv.line)?;
        match kv.key.as_str() {
            "value_khz" => value = Some(x),
            "u_spin_khz" => u = Some(x),
            other => {
                return Err(Error::parse(
                    origin,
                    kv.line,
                    format!("unknown key '{other}'"),
                ))
            }
        }
    }
    let value = value.ok_or_else(|| Error::Config(format!("{origin}: value_khz missing")))?;
    Quantity::khz(value).try_with(THEOR_SPIN, u.unwrap_or(0.0))
}

pub fn bundled_splitting_theory() -> Quantity {
    parse_splitting_theory(
        include_str!("../data/splitting_theory.txt"),
        "splitting_theory.txt",
    )
    .expect("bundled splitting parses")
}

/// Spin structure of both levels and everything derived from it for the two
/// measured lines.
#[derive(Clone, Debug)]
pub struct SpinAnalysis {
    pub lower: SpinStructure,
    pub upper: SpinStructure,
    pub scheme: LabelScheme,
    pub fspin12: f64,
    pub fspin16: f64,
    pub u12: f64,
    pub u16: f64,
    pub model: SpinModel,
    pub optimum: WeightOptimum,
}

/// Builds the (v=0,N=0) and (v=1,N=1) structures from `coeffs`. Labels are
/// assigned from expectation values when they round cleanly and from
/// energy ordering otherwise.
pub fn spin_analysis(
    coeffs: &CoefficientFile,
    params: SpinUncertaintyParams,
) -> Result<SpinAnalysis> {
    let lower_c = coeffs.get(0, 0)?;
    let upper_c = coeffs.get(1, 1)?;
    let build = |scheme: LabelScheme| -> Result<(SpinStructure, SpinStructure)> {
        let opts = LabelingOptions {
            scheme,
            ..LabelingOptions::default()
        };
        Ok((
            SpinStructure::with_options(lower_c, opts)?,
            SpinStructure::with_options(upper_c, opts)?,
        ))
    };
    let (scheme, (lower, upper)) = match build(LabelScheme::Expectation) {
        Ok(s) => (LabelScheme::Expectation, s),
        Err(Error::Classification(_)) => (LabelScheme::Correlated, build(LabelScheme::Correlated)?),
        Err(e) => return Err(e),
    };
    let row = |l: LineDef| TransitionSensitivity::compute(l.name, &lower, l.lower, &upper, l.upper);
    let (row12, row16) = (row(LINE_12)?, row(LINE_16)?);
    let u12 = spin_uncertainty(&row12, lower_c, upper_c, &params)?;
    let u16 = spin_uncertainty(&row16, lower_c, upper_c, &params)?;
    let model = SpinModel {
        row12,
        row16,
        lower: lower_c.clone(),
        upper: upper_c.clone(),
        params,
    };
    let optimum = optimize_weight(&model)?;
    Ok(SpinAnalysis {
        fspin12: spin_frequency(&upper, LINE_12.upper, &lower, LINE_12.lower)?,
        fspin16: spin_frequency(&upper, LINE_16.upper, &lower, LINE_16.lower)?,
        lower,
        upper,
        scheme,
        u12,
        u16,
        model,
        optimum,
    })
}

/// Zeeman models of the components used in the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineZeeman {
    /// m_F = 0 → m_F′ = 0 of line 12.
    pub line12_00: TransitionZeemanModel,
    /// m_F = 0 → m_F′ = 0 of line 16.
    pub line16_00: TransitionZeemanModel,
    /// m_F = +2 → m_F′ = +3 of line 16.
    pub line16_stretched: TransitionZeemanModel,
}

pub fn line_zeeman(analysis: &SpinAnalysis, couplings: &ZeemanCouplings) -> Result<LineZeeman> {
    let grid = default_grid();
    let lo = zeeman_map(&analysis.lower, couplings, &grid)?;
    let up = zeeman_map(&analysis.upper, couplings, &grid)?;
    let comp = |l: LineDef, ml: i32, mu: i32| {
        transition_coeffs(
            &lo,
            &up,
            StateId::new(l.lower, ml),
            StateId::new(l.upper, mu),
        )
    };
    Ok(LineZeeman {
        line12_00: comp(LINE_12, 0, 0)?,
        line16_00: comp(LINE_16, 0, 0)?,
        line16_stretched: comp(LINE_16, 2, 3)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

/// One reproduced number or group of numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: u32,
    pub name: String,
    pub expected: String,
    pub obtained: String,
    pub status: Status,
}

impl Anchor {
    fn new(
        id: u32,
        name: &str,
        expected: impl Into<String>,
        obtained: impl Into<String>,
        ok: bool,
    ) -> Self {
        Self {
            id,
            name: name.into(),
            expected: expected.into(),
            obtained: obtained.into(),
            status: if ok { Status::Pass } else { Status::Fail },
        }
    }

    fn skip(id: u32, name: &str, expected: impl Into<String>, why: impl Into<String>) -> Self {
        Self {
            id,
            name: name.into(),
            expected: expected.into(),
            obtained: why.into(),
            status: Status::Skip,
        }
    }
}

/// Optional external data for the anchors that depend on spin coefficients.
#[derive(Clone, Debug, Default)]
pub struct ReproduceInputs {
    pub coefficients: Option<CoefficientFile>,
    /// Defaults to the bundled couplings.
    pub couplings: Option<ZeemanCouplings>,
    pub spin_params: SpinUncertaintyParams,
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn within_rel(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

/// Evaluates the quantitative anchors 1–11 on the bundled inputs.
pub fn reproduce(inputs: &ReproduceInputs) -> Result<Vec<Anchor>> {
    let table = ContributionTable::bundled();
    let codata = ConstantSet::bundled(ConstantsProfile::Codata2018);
    let penning = ConstantSet::bundled(ConstantsProfile::Penning);
    let lines = MeasuredLines::bundled();
    let mut out = Vec::new();

    let budget = TheoryBudget {
        u_codata: codata.theory_codata_khz()?,
        ..TheoryBudget::default()
    };
    let avg = theory_frequency(&table, &budget)?;
    out.push(Anchor::new(
        1,
        "theory contribution sum",
        "58605052163.9 ± 0.05 kHz",
        format!("{:.2} kHz", avg.value),
        within(avg.value, 58_605_052_163.9, 0.05),
    ));

    let t12 = line_theory(&avg, &lines.fspin12)?;
    let t16 = line_theory(&avg, &lines.fspin16)?;
    out.push(Anchor::new(
        2,
        "line theory assembly",
        "58605013477.8 / 58605054771.6 ± 0.1 kHz",
        format!("{} / {}", t12.to_paren_string(1), t16.to_paren_string(1)),
        within(t12.value, 58_605_013_477.8, 0.1) && within(t16.value, 58_605_054_771.6, 0.1),
    ));

    let comp_in = lines.composite_input(None);
    let comp = composite_frequency(&comp_in, 0.5)?;
    out.push(Anchor::new(
        3,
        "composite frequency at b12 = 0.5",
        "58605052164.24 ± 0.05 kHz, u_exp 0.16 ± 0.005 kHz",
        format!(
            "{:.3} kHz, u_exp {:.4} kHz",
            comp.value,
            comp.component(EXP)
        ),
        within(comp.value, 58_605_052_164.24, 0.05) && within(comp.component(EXP), 0.16, 0.005),
    ));

    let split = splitting_comparison(&lines.f12, &lines.f16, &bundled_splitting_theory())?;
    out.push(Anchor::new(
        4,
        "hyperfine splitting",
        "41294.06(32) kHz, metric < 1",
        format!(
            "{:.2} kHz, u {:.3} kHz, metric {:.2}",
            split.diff_exp.value, split.u_exp, split.metric
        ),
        within(split.diff_exp.value, 41_294.06, 0.015)
            && within(split.u_exp, 0.32, 0.005)
            && split.metric < 1.0,
    ));

    let model = ScalingModel::new(avg.value, codata.mu_over_me()?);
    let f_exp = Quantity::khz(58_605_052_164.24)
        .with(EXP, 0.16)
        .with(THEOR_SPIN, 0.85);
    let mu = extract_mu_over_me(&f_exp, &model)?;
    let comps = |r: &crate::constants::ExtractionResult| {
        [EXP, THEOR_QED, THEOR_SPIN].map(|c| r.component(c))
    };
    let mu_c = comps(&mu);
    let mu_comp_ok = mu_c
        .iter()
        .zip([7e-9, 20e-9, 37e-9])
        .all(|(x, t)| within_rel(*x, t, 0.15));
    out.push(Anchor::new(
        5,
        "mu/m_e extraction",
        "1223.899228668 ± 1e-8, components (7, 20, 37)e-9 ± 15%",
        format!(
            "{:.12} (off by {:.1e}), components ({:.1}, {:.1}, {:.1}, {:.1})e-9",
            mu.value(),
            mu.value() - 1_223.899_228_668,
            mu_c[0] * 1e9,
            mu_c[1] * 1e9,
            mu_c[2] * 1e9,
            mu.component(CODATA) * 1e9
        ),
        within(mu.value(), 1_223.899_228_668, 1e-8) && mu_comp_ok,
    ));

    let md_over_mp = codata.md_over_mp_for_extraction()?;
    let mp = extract_mp_over_me(&f_exp, &model, &md_over_mp)?;
    let mp_c = comps(&mp);
    let mp_comp_ok = mp_c
        .iter()
        .zip([11e-9, 31e-9, 55e-9])
        .all(|(x, t)| within_rel(*x, t, 0.15));
    out.push(Anchor::new(
        6,
        "m_p/m_e extraction",
        "1836.152673384 ± 1.5e-8, components (11, 31, 55)e-9 ± 15%",
        format!(
            "{:.12} (off by {:.1e}), components ({:.1}, {:.1}, {:.1}, {:.1})e-9",
            mp.value(),
            mp.value() - 1_836.152_673_384,
            mp_c[0] * 1e9,
            mp_c[1] * 1e9,
            mp_c[2] * 1e9,
            mp.component(CODATA) * 1e9
        ),
        within(mp.value(), 1_836.152_673_384, 1.5e-8) && mp_comp_ok,
    ));

    let linear = scaled_theory(&model, model.mu_ref * (1.0 - 5.28e-11))? - model.f_ref;
    let case2 =
        theory_prediction(&model, &penning)?.value - theory_prediction(&model, &codata)?.value;
    out.push(Anchor::new(
        7,
        "case-II mass shift",
        "+1.50 ± 0.02 kHz",
        format!(
            "{linear:+.4} kHz from delta = -5.28e-11, {case2:+.4} kHz from the penning profile"
        ),
        within(linear, 1.50, 0.02) && within(case2, 1.50, 0.02),
    ));

    let cm = CarrierModel::new(2.0)?;
    let s_c = carrier_strength(cm.critical_wavelength(), &cm)?;
    let s_51 = carrier_strength(5.1, &cm)?;
    out.push(Anchor::new(
        8,
        "carrier strength",
        "S(lambda_c) = 0.5, S(5.1 um) = 0.0149 ± 0.0005 < 0.02",
        format!("{s_c}, {s_51:.5}"),
        s_c == 0.5 && within(s_51, 0.0149, 0.0005) && s_51 < 0.02,
    ));

    let res = resolution(58.605e9, 0.195)?;
    out.push(Anchor::new(
        9,
        "line resolution",
        ">= 3.0e11",
        format!("{res:.4e}"),
        res >= 3.0e11,
    ));

    let Some(coeffs) = &inputs.coefficients else {
        out.push(Anchor::skip(
            10,
            "spin frequencies and uncertainties",
            "-38686.1 / 2607.7 kHz, u 0.8 / 0.9 kHz, composite min 0.85 kHz",
            "no spin-coefficient file supplied",
        ));
        out.push(Anchor::skip(
            11,
            "Zeeman coefficients",
            "-2.9, -117 kHz/G^2, -0.55 kHz/G",
            "no spin-coefficient file supplied",
        ));
        return Ok(out);
    };

    let sa = spin_analysis(coeffs, inputs.spin_params)?;
    let flat = sa.optimum.variation(0.2, 0.8);
    out.push(Anchor::new(
        10,
        "spin frequencies and uncertainties",
        "-38686.1 / 2607.7 ± 0.5 kHz, u 0.8 / 0.9 ± 0.1 kHz, min 0.85 ± 0.1 kHz, variation < 10%",
        format!(
            "{:.1} / {:.1} kHz, u {:.2} / {:.2} kHz, min {:.2} kHz at b12 = {:.3}, variation {:.1}%",
            sa.fspin12,
            sa.fspin16,
            sa.u12,
            sa.u16,
            sa.optimum.u_min,
            sa.optimum.b_star,
            100.0 * flat
        ),
        within(sa.fspin12, -38_686.1, 0.5)
            && within(sa.fspin16, 2_607.7, 0.5)
            && within(sa.u12, 0.8, 0.1)
            && within(sa.u16, 0.9, 0.1)
            && within(sa.optimum.u_min, 0.85, 0.1)
            && flat < 0.1,
    ));

    let couplings = inputs.couplings.unwrap_or_default();
    let z = line_zeeman(&sa, &couplings)?;
    out.push(Anchor::new(
        11,
        "Zeeman coefficients",
        "-2.9, -117 kHz/G^2, -0.55 kHz/G ± 5%",
        format!(
            "{:.3}, {:.2} kHz/G^2, {:.4} kHz/G",
            z.line12_00.c, z.line16_00.c, z.line16_stretched.a
        ),
        within_rel(z.line12_00.c, -2.9, 0.05)
            && within_rel(z.line16_00.c, -117.0, 0.05)
            && within_rel(z.line16_stretched.a, -0.55, 0.05),
    ));
    Ok(out)
}

/// Fixed-width text table of anchors.
pub fn format_anchors(anchors: &[Anchor]) -> String {
    anchors
        .iter()
        .map(|a| {
            format!(
                "[{}] {:>2} {}: {} (expected {})\n",
                a.status, a.id, a.name, a.obtained, a.expected
            )
        })
        .collect()
}
