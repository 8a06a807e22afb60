//! Theory frequency from its contribution table, the mass-ratio scaling of
//! that frequency, and extraction of μ/m_e and m_p/m_e from a measured
//! spin-averaged frequency.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_text, Error, Result};
use crate::quantity::{
    combine_linear, quadrature, Combination, Quantity, CODATA, EXP, KHZ, THEOR_QED, THEOR_SPIN,
};
use crate::textio::{parse_f64, parse_key_values};

/// One named constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub uncertainty: f64,
    pub source: String,
}

pub const REQUIRED_CONSTANTS: [&str; 6] =
    ["R_inf", "alpha", "mp_over_me", "md_over_mp", "r_p", "r_d"];

/// Uncertainty of the spin-averaged theory frequency (kHz) caused by the
/// constants of a profile.
pub const KEY_U_THEORY_CODATA: &str = "u_theory_codata_khz";

/// m_d/m_p value used when m_p/m_e is extracted.
pub const KEY_MD_OVER_MP_EXTRACTION: &str = "md_over_mp_penning_mean";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantsProfile {
    /// Case I: CODATA 2018.
    #[default]
    Codata2018,
    /// Case II: Penning-trap masses of e, p and d.
    Penning,
}

impl ConstantsProfile {
    pub fn name(self) -> &'static str {
        match self {
            ConstantsProfile::Codata2018 => "codata2018",
            ConstantsProfile::Penning => "penning",
        }
    }

    pub fn bundled_text(self) -> &'static str {
        match self {
            ConstantsProfile::Codata2018 => include_str!("../data/constants_codata2018.txt"),
            ConstantsProfile::Penning => include_str!("../data/constants_penning.txt"),
        }
    }
}

impl std::str::FromStr for ConstantsProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "codata2018" => Ok(ConstantsProfile::Codata2018),
            "penning" => Ok(ConstantsProfile::Penning),
            other => Err(Error::Config(format!(
                "unknown constants profile '{other}', expected codata2018 or penning"
            ))),
        }
    }
}

/// Named constants read from a `name = value ± uncertainty # source` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub constants: BTreeMap<String, Constant>,
}

impl ConstantSet {
    pub fn bundled(profile: ConstantsProfile) -> Self {
        Self::parse(profile.bundled_text(), profile.name()).expect("bundled constants parse")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    /// Parses a constants file. An omitted `± uncertainty` means zero.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut constants = BTreeMap::new();
        for kv in parse_key_values(text, origin)? {
            let (v, u) = match kv
                .value
                .split_once('±')
                .or_else(|| kv.value.split_once("+/-"))
            {
                Some((v, u)) => (v, Some(u)),
                None => (kv.value.as_str(), None),
            };
            let value = parse_f64(v, origin, kv.line)?;
            let uncertainty = match u {
                Some(u) => parse_f64(u, origin, kv.line)?,
                None => 0.0,
            };
            if uncertainty < 0.0 {
                return Err(Error::parse(
                    origin,
                    kv.line,
                    format!("negative uncertainty for '{}'", kv.key),
                ));
            }
            constants.insert(
                kv.key,
                Constant {
                    value,
                    uncertainty,
                    source: kv.comment.unwrap_or_default(),
                },
            );
        }
        let set = Self { constants };
        for name in REQUIRED_CONSTANTS {
            if !set.constants.contains_key(name) {
                return Err(Error::Config(format!(
                    "{origin}: required constant '{name}' is missing"
                )));
            }
        }
        let alpha = set.value("alpha")?;
        if !(0.00729..0.0073).contains(&alpha) {
            return Err(Error::Config(format!(
                "{origin}: alpha = {alpha} is outside (0.00729, 0.0073)"
            )));
        }
        for name in ["mp_over_me", "md_over_mp"] {
            if set.value(name)? <= 0.0 {
                return Err(Error::Config(format!("{origin}: {name} must be positive")));
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&Constant> {
        self.constants
            .get(name)
            .ok_or_else(|| Error::Lookup(format!("constant '{name}' is not defined")))
    }

    pub fn value(&self, name: &str) -> Result<f64> {
        Ok(self.get(name)?.value)
    }

    /// μ/m_e = (m_p/m_e)·r/(1+r) with r = m_d/m_p.
    pub fn mu_over_me(&self) -> Result<f64> {
        let a = self.value("mp_over_me")?;
        let r = self.value("md_over_mp")?;
        Ok(a * r / (1.0 + r))
    }

    /// The m_d/m_p used for m_p/m_e extraction, falling back to the
    /// profile's own m_d/m_p.
    pub fn md_over_mp_for_extraction(&self) -> Result<Quantity> {
        let c = self
            .constants
            .get(KEY_MD_OVER_MP_EXTRACTION)
            .map_or_else(|| self.get("md_over_mp"), Ok)?;
        Quantity::new(c.value, "").try_with(CODATA, c.uncertainty)
    }

    pub fn theory_codata_khz(&self) -> Result<f64> {
        self.value(KEY_U_THEORY_CODATA)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub name: String,
    pub value_khz: f64,
    pub u_khz: Option<f64>,
    /// Already contained in another term; never summed.
    pub bookkeeping: bool,
}

/// Ordered contributions to the spin-averaged theory frequency.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContributionTable {
    pub rows: Vec<Contribution>,
}

/// Terms without which the theory frequency is incomplete.
pub const MANDATORY_TERMS: [&str; 7] = [
    "alpha0", "alpha2", "alpha3", "alpha4", "alpha5", "alpha6", "further",
];

impl ContributionTable {
    pub fn bundled() -> Self {
        Self::parse(
            include_str!("../data/contributions.csv"),
            "contributions.csv",
        )
        .expect("bundled table parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    /// Reads CSV columns `name, value_khz, u_khz, bookkeeping(0|1)`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let expected = ["name", "value_khz", "u_khz", "bookkeeping"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::parse(
                origin,
                1,
                format!("expected header '{}'", expected.join(",")),
            ));
        }
        let mut rows: Vec<Contribution> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
            let name = rec[0].to_string();
            if rows.iter().any(|r| r.name == name) {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("term '{name}' appears twice"),
                ));
            }
            let u_khz = if rec[2].is_empty() {
                None
            } else {
                let u = parse_f64(&rec[2], origin, line)?;
                if u < 0.0 {
                    return Err(Error::parse(origin, line, "negative uncertainty"));
                }
                Some(u)
            };
            let bookkeeping = match &rec[3] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        origin,
                        line,
                        format!("bookkeeping must be 0 or 1, got '{other}'"),
                    ))
                }
            };
            rows.push(Contribution {
                name,
                value_khz: parse_f64(&rec[1], origin, line)?,
                u_khz,
                bookkeeping,
            });
        }
        Ok(Self { rows })
    }

    pub fn validate(&self) -> Result<()> {
        for term in MANDATORY_TERMS {
            if !self.rows.iter().any(|r| r.name == term && !r.bookkeeping) {
                return Err(Error::input(format!(
                    "contribution table lacks the term '{term}'"
                )));
            }
        }
        Ok(())
    }

    /// Sum of the terms that are not bookkeeping-only.
    pub fn sum(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| !r.bookkeeping)
            .map(|r| r.value_khz)
            .sum()
    }
}

/// Uncertainties attached to a theory frequency, kHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryBudget {
    pub u_qed: f64,
    pub u_codata: f64,
}

impl Default for TheoryBudget {
    fn default() -> Self {
        Self {
            u_qed: 0.5,
            u_codata: 1.3,
        }
    }
}

/// Spin-averaged theory frequency. Per-term uncertainties of summed terms,
/// where given, are combined in quadrature into `other:contributions`.
pub fn theory_frequency(table: &ContributionTable, budget: &TheoryBudget) -> Result<Quantity> {
    table.validate()?;
    let mut q = Quantity::khz(table.sum());
    q.set(THEOR_QED, budget.u_qed)?;
    q.set(CODATA, budget.u_codata)?;
    let u_terms = quadrature(
        table
            .rows
            .iter()
            .filter(|r| !r.bookkeeping)
            .filter_map(|r| r.u_khz),
    );
    if u_terms > 0.0 {
        q.set("other:contributions", u_terms)?;
    }
    Ok(q)
}

/// Theory frequency of one hyperfine line: spin-averaged plus spin part.
pub fn line_theory(spin_avg: &Quantity, fspin: &Quantity) -> Result<Quantity> {
    combine_linear(&[(1.0, spin_avg), (1.0, fspin)])
}

/// Log-linear dependence of the spin-averaged frequency on μ/m_e at fixed
/// m_d/m_p, where the logarithmic derivatives with respect to μ/m_e and
/// m_p/m_e coincide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    /// Frequency computed at `mu_ref`, kHz.
    pub f_ref: f64,
    /// μ/m_e used for `f_ref`.
    pub mu_ref: f64,
    /// ∂ln f/∂ln μ.
    pub beta: f64,
    pub u_qed: f64,
    /// Frequency-equivalent uncertainty of the charge radii and R∞, kHz.
    pub u_codata_other: f64,
}

pub const BETA: f64 = -0.4846;
pub const DEFAULT_U_QED_KHZ: f64 = 0.5;
pub const DEFAULT_U_CODATA_OTHER_KHZ: f64 = 0.07;

/// Largest |ln(μ/μ_ref)| accepted by the linearized model.
pub const MAX_LOG_OFFSET: f64 = 1e-6;

impl ScalingModel {
    pub fn new(f_ref: f64, mu_ref: f64) -> Self {
        Self {
            f_ref,
            mu_ref,
            beta: BETA,
            u_qed: DEFAULT_U_QED_KHZ,
            u_codata_other: DEFAULT_U_CODATA_OTHER_KHZ,
        }
    }

    /// Reference model for case I: bundled contribution table and CODATA 2018.
    pub fn bundled() -> Self {
        let table = ContributionTable::bundled();
        let constants = ConstantSet::bundled(ConstantsProfile::Codata2018);
        Self::new(
            table.sum(),
            constants.mu_over_me().expect("bundled constants complete"),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta == 0.0 {
            return Err(Error::DegenerateModel(
                "beta = 0 leaves the mass ratio undetermined".into(),
            ));
        }
        if !(self.beta > -0.5 && self.beta < -0.45) {
            return Err(Error::Config(format!(
                "beta = {} is outside (-0.5, -0.45)",
                self.beta
            )));
        }
        if !(self.f_ref > 0.0 && self.mu_ref > 0.0) {
            return Err(Error::Config(
                "reference frequency and mass ratio must be positive".into(),
            ));
        }
        if !(self.u_qed >= 0.0 && self.u_codata_other >= 0.0) {
            return Err(Error::Config(
                "model uncertainties must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn check_log_offset(ratio: f64, what: &str) -> Result<()> {
    let l = ratio.ln();
    if !(l.abs() < MAX_LOG_OFFSET) {
        return Err(Error::Extrapolation(format!(
            "|ln({what})| = {:e} exceeds the linearization range {MAX_LOG_OFFSET:e}",
            l.abs()
        )));
    }
    Ok(())
}

/// f_ref·(μ/μ_ref)^β in kHz.
pub fn scaled_theory(model: &ScalingModel, mu: f64) -> Result<f64> {
    if model.beta == 0.0 {
        return Err(Error::DegenerateModel("beta = 0".into()));
    }
    check_log_offset(mu / model.mu_ref, "mu/mu_ref")?;
    Ok(model.f_ref * (mu / model.mu_ref).powf(model.beta))
}

/// Theory prediction for a constants profile: the reference frequency
/// scaled to the profile's μ/m_e, with the profile's constants uncertainty.
pub fn theory_prediction(model: &ScalingModel, constants: &ConstantSet) -> Result<Quantity> {
    let f = scaled_theory(model, constants.mu_over_me()?)?;
    Quantity::khz(f)
        .try_with(THEOR_QED, model.u_qed)?
        .try_with(CODATA, constants.theory_codata_khz()?)
}

/// An extracted mass ratio with its component budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub name: String,
    /// Dimensionless value with components `exp`, `theor_QED`, `theor_spin`
    /// and `CODATA`, plus any further components of the input frequency.
    pub ratio: Quantity,
    /// Quadrature total divided by the value.
    pub fractional: f64,
}

impl ExtractionResult {
    fn new(name: &str, ratio: Quantity) -> Self {
        let fractional = ratio.total(Combination::Quadrature) / ratio.value;
        Self {
            name: name.to_string(),
            ratio,
            fractional,
        }
    }

    pub fn value(&self) -> f64 {
        self.ratio.value
    }

    pub fn component(&self, name: &str) -> f64 {
        self.ratio.component(name)
    }
}

/// Solves f_theory(μ/m_e) = f_exp in the log-linear model.
///
/// Each frequency uncertainty u maps to |1/β|·(u/f)·(μ/m_e). The `exp`,
/// `theor_spin` and other components come from `f_exp`; `theor_QED` and
/// `CODATA` from the model.
pub fn extract_mu_over_me(f_exp: &Quantity, model: &ScalingModel) -> Result<ExtractionResult> {
    model.validate()?;
    if f_exp.unit != KHZ {
        return Err(Error::input(format!(
            "frequency must be in kHz, got '{}'",
            f_exp.unit
        )));
    }
    let ratio = f_exp.value / model.f_ref;
    check_log_offset(ratio, "f_exp/f_ref")?;
    let value = model.mu_ref * ratio.powf(1.0 / model.beta);
    let map = |u: f64| (u / f_exp.value).abs() / model.beta.abs() * value;
    let mut q = Quantity::new(value, "");
    for (name, u) in f_exp.components() {
        if name != THEOR_QED && name != CODATA {
            q.set(name.clone(), map(*u))?;
        }
    }
    for name in [EXP, THEOR_SPIN] {
        if !q.has(name) {
            q.set(name, 0.0)?;
        }
    }
    q.set(
        THEOR_QED,
        map(quadrature([model.u_qed, f_exp.component(THEOR_QED)])),
    )?;
    q.set(
        CODATA,
        map(quadrature([model.u_codata_other, f_exp.component(CODATA)])),
    )?;
    Ok(ExtractionResult::new("mu_over_me", q))
}

/// m_p/m_e = (μ/m_e)·(1+r)/r with r = m_d/m_p. All μ components scale by
/// (1+r)/r; the uncertainty of r, entering through ∂/∂r = −(μ/m_e)/r², is
/// added in quadrature to `CODATA`.
pub fn extract_mp_over_me(
    f_exp: &Quantity,
    model: &ScalingModel,
    md_over_mp: &Quantity,
) -> Result<ExtractionResult> {
    let r = md_over_mp.value;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::input(format!("m_d/m_p must be positive, got {r}")));
    }
    let mu = extract_mu_over_me(f_exp, model)?;
    Ok(mu_to_mp_over_me(&mu, md_over_mp))
}

/// Converts an extracted μ/m_e into m_p/m_e.
pub fn mu_to_mp_over_me(mu: &ExtractionResult, md_over_mp: &Quantity) -> ExtractionResult {
    let r = md_over_mp.value;
    let factor = (1.0 + r) / r;
    let m = mu.ratio.value;
    let mut q = Quantity::new(m * factor, "");
    for (name, u) in mu.ratio.components() {
        q.set(name.clone(), u * factor)
            .expect("scaled component stays valid");
    }
    let u_r = md_over_mp.total(Combination::Quadrature);
    let from_r = m / (r * r) * u_r;
    q.set(CODATA, quadrature([q.component(CODATA), from_r]))
        .expect("finite");
    ExtractionResult::new("mp_over_me", q)
}

/// One determination for the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Determination {
    pub label: String,
    pub value: f64,
    pub u: f64,
    #[serde(default)]
    pub source: String,
}

pub fn parse_determinations_csv(text: &str, origin: &str) -> Result<Vec<Determination>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Determination>().enumerate() {
        let d = rec.map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
        if !(d.u >= 0.0 && d.value.is_finite()) {
            return Err(Error::parse(
                origin,
                i + 2,
                "value must be finite and u non-negative",
            ));
        }
        out.push(d);
    }
    Ok(out)
}

pub fn bundled_determinations() -> Vec<Determination> {
    parse_determinations_csv(
        include_str!("../data/determinations_mp_over_me.csv"),
        "determinations_mp_over_me.csv",
    )
    .expect("bundled determinations parse")
}

/// One row of the comparison table with ±1σ band edges for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullRow {
    pub label: String,
    pub value: f64,
    pub u: f64,
    pub lo: f64,
    pub hi: f64,
    /// (value − reference)/u.
    pub pull: f64,
    /// (value − reference)/√(u² + u_ref²); zero for the reference itself.
    pub combined_pull: f64,
}

/// Pulls of every determination against the one at `reference`.
pub fn comparison_report(dets: &[Determination], reference: usize) -> Result<Vec<PullRow>> {
    let r = dets.get(reference).ok_or_else(|| {
        Error::input(format!(
            "reference index {reference} out of range for {} rows",
            dets.len()
        ))
    })?;
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    Ok(dets
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let diff = d.value - r.value;
            PullRow {
                label: d.label.clone(),
                value: d.value,
                u: d.u,
                lo: d.value - d.u,
                hi: d.value + d.u,
                pull: ratio(diff, d.u),
                combined_pull: if i == reference {
                    0.0
                } else {
                    ratio(diff, d.u.hypot(r.u))
                },
            }
        })
        .collect())
}

pub fn pulls_to_csv(rows: &[PullRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::input(e.to_string()))
}
