use std::path::Path;

use hdplus_core::angular::{
    CoefficientFile, HyperfineCoefficients, LabelScheme, LabelingOptions, SpinStructure,
    SpinUncertaintyParams,
};
use hdplus_core::carrier::{carrier_strength, sweep, CarrierModel};
use hdplus_core::composite::{composite_report, splitting_comparison, ExpCorrelation};
use hdplus_core::constants::{
    bundled_determinations, comparison_report, extract_mp_over_me, extract_mu_over_me,
    parse_determinations_csv, pulls_to_csv, theory_frequency, theory_prediction, ConstantSet,
    ContributionTable, ScalingModel, TheoryBudget,
};
use hdplus_core::error::read_text;
use hdplus_core::lineshape::{
    build_spectrum, fit_lorentzian, line_frequency, parse_records_csv, parse_spectrum_csv,
    resolution,
};
use hdplus_core::metrology::{
    adev_to_csv, allan_deviation, dfg_frequency, laser_frequency, maser_correct, octave_taus,
    parse_counter_log, CombParams,
};
use hdplus_core::quantity::{EXP, THEOR_SPIN};
use hdplus_core::reproduce::{
    bundled_splitting_theory, format_anchors, line, parse_splitting_theory, reproduce,
    spin_analysis, MeasuredLines, ReproduceInputs, Status,
};
use hdplus_core::systematics::{
    apply_ledger, light_shift_entry, rf_extrapolate, standard_entries, ShiftEntry,
};
use hdplus_core::textio::parse_points_csv;
use hdplus_core::zeeman::{
    default_grid, extrapolate_to_zero_field, transition_coeffs, zeeman_map, StateId,
    ZeemanCouplings, BUNDLED_COUPLINGS,
};
use hdplus_core::{Error, Quantity};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult, IntoConfig};
use crate::output::{num, records, summary, table, Output};
use crate::{Cli, Command, LedgerArgs, Scheme, SpinParamArgs};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn run(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::SpinStructure {
            coeffs,
            levels,
            scheme,
            spin,
        } => spin_structure(coeffs, levels, *scheme, spin),
        Command::ZeemanMap {
            coeffs,
            level,
            couplings,
            grid,
            scheme,
        } => zeeman_map_cmd(coeffs, *level, couplings.as_deref(), grid, *scheme),
        Command::ZeemanCoeffs {
            coeffs,
            couplings,
            grid,
            components,
        } => zeeman_coeffs(coeffs, couplings.as_deref(), grid, components),
        Command::ExtrapolateB { points } => extrapolate_b(points),
        Command::FitLine {
            records,
            spectrum,
            offset_khz,
        } => fit_line(records.as_deref(), spectrum.as_deref(), *offset_khz),
        Command::ExtrapolateRf {
            points,
            nominal,
            model,
        } => extrapolate_rf(points, *nominal, (*model).into()),
        Command::Ledger(args) => ledger(args),
        Command::Composite {
            b12,
            lines,
            coeffs,
            shared12,
            shared16,
            splitting_theory,
            spin,
        } => {
            let corr = match (shared12, shared16) {
                (Some(a), Some(b)) => ExpCorrelation::Correlated {
                    shared12: *a,
                    shared16: *b,
                },
                _ => ExpCorrelation::Independent,
            };
            composite(
                *b12,
                lines.as_deref(),
                coeffs.as_deref(),
                corr,
                splitting_theory.as_deref(),
                spin,
            )
        }
        Command::Extract {
            f_khz,
            u_exp_khz,
            u_spin_khz,
            constants,
            contributions,
        } => extract(
            cli,
            f_khz.zip(*u_exp_khz),
            *u_spin_khz,
            constants.as_deref(),
            contributions.as_deref(),
        ),
        Command::Compare {
            determinations,
            reference,
        } => compare(determinations.as_deref(), *reference),
        Command::Adev {
            log,
            carrier_hz,
            tau_list,
        } => adev(log, *carrier_hz, tau_list),
        Command::Dfg { comb, maser_offset } => dfg(comb, *maser_offset),
        Command::Carrier {
            lambda_um,
            delta_rho_um,
            sweep,
        } => carrier(lambda_um, *delta_rho_um, sweep),
        Command::ReproducePaper {
            coeffs,
            couplings,
            spin,
        } => reproduce_paper(coeffs.as_deref(), couplings.as_deref(), spin),
    }
}

fn spin_params(args: &SpinParamArgs) -> CliResult<SpinUncertaintyParams> {
    let mut p = SpinUncertaintyParams {
        eps_fermi: args.eps_fermi,
        u1_upper: args.u1_upper,
        ..SpinUncertaintyParams::default()
    };
    if let Some(e) = args.eps_breit_pauli {
        p.eps_breit_pauli = e;
    }
    p.validate().into_config()?;
    Ok(p)
}

fn load_couplings(path: Option<&Path>) -> CliResult<ZeemanCouplings> {
    Ok(match path {
        Some(p) => ZeemanCouplings::load(p)?,
        None => ZeemanCouplings::parse(BUNDLED_COUPLINGS, "bundled zeeman_couplings.txt")?,
    })
}

fn load_coefficients(path: &Path) -> CliResult<CoefficientFile> {
    let file = CoefficientFile::load(path)?;
    if file.is_empty() {
        return Err(CliError::config(format!(
            "{}: no coefficient values set; fill in the template from the reference tables",
            path.display()
        )));
    }
    Ok(file)
}

fn grid_or_default(grid: &[f64]) -> Vec<f64> {
    if grid.is_empty() {
        default_grid()
    } else {
        grid.to_vec()
    }
}

fn structure(
    coeffs: &HyperfineCoefficients,
    scheme: Scheme,
) -> CliResult<(SpinStructure, LabelScheme)> {
    let with = |s: LabelScheme| {
        SpinStructure::with_options(
            coeffs,
            LabelingOptions {
                scheme: s,
                ..LabelingOptions::default()
            },
        )
    };
    Ok(match scheme {
        Scheme::Expectation => (with(LabelScheme::Expectation)?, LabelScheme::Expectation),
        Scheme::Correlated => (with(LabelScheme::Correlated)?, LabelScheme::Correlated),
        Scheme::Auto => match with(LabelScheme::Expectation) {
            Ok(s) => (s, LabelScheme::Expectation),
            Err(Error::Classification(_)) => {
                (with(LabelScheme::Correlated)?, LabelScheme::Correlated)
            }
            Err(e) => return Err(e.into()),
        },
    })
}

#[derive(Serialize)]
struct LevelRow {
    v: u32,
    n: u32,
    label: Option<String>,
    energy_khz: f64,
    degeneracy: usize,
    gamma: Option<Vec<f64>>,
}

fn spin_structure(
    path: &Path,
    levels: &[(u32, u32)],
    scheme: Scheme,
    spin: &SpinParamArgs,
) -> CliResult<Output> {
    let file = load_coefficients(path)?;
    let params = spin_params(spin)?;
    let selected: Vec<&HyperfineCoefficients> = if levels.is_empty() {
        file.levels.values().collect()
    } else {
        levels
            .iter()
            .map(|&(v, n)| file.get(v, n).into_config())
            .collect::<CliResult<_>>()?
    };

    let mut rows = Vec::new();
    let mut schemes = serde_json::Map::new();
    for c in selected {
        let (s, used) = structure(c, scheme)?;
        schemes.insert(c.level.to_string(), json!(used));
        for l in s.levels() {
            let gamma = match l.label {
                Some(label) => Some(s.sensitivities(label)?.to_vec()),
                None => None,
            };
            rows.push(LevelRow {
                v: c.level.v,
                n: c.level.n,
                label: l.label.map(|x| x.to_string()),
                energy_khz: l.energy,
                degeneracy: l.degeneracy,
                gamma,
            });
        }
    }

    let lines = if file.get(0, 0).is_ok() && file.get(1, 1).is_ok() {
        let a = spin_analysis(&file, params)?;
        Some(json!({
            "label_scheme": a.scheme,
            "fspin12_khz": a.fspin12,
            "fspin16_khz": a.fspin16,
            "u_spin12_khz": a.u12,
            "u_spin16_khz": a.u16,
            "sensitivities": [a.model.row12, a.model.row16],
            "optimal_b12": a.optimum.b_star,
            "u_spin_min_khz": a.optimum.u_min,
            "u_spin_variation_0.2_0.8": a.optimum.variation(0.2, 0.8),
        }))
    } else {
        None
    };

    let mut headers = vec!["v", "N", "label", "energy_khz", "degeneracy"];
    let gamma_names: Vec<String> = (1..=9).map(|k| format!("gamma_E{k}")).collect();
    headers.extend(gamma_names.iter().map(String::as_str));
    let csv = table(
        &headers,
        rows.iter().map(|r| {
            let mut row = vec![
                r.v.to_string(),
                r.n.to_string(),
                r.label.clone().unwrap_or_default(),
                num(r.energy_khz),
                r.degeneracy.to_string(),
            ];
            match &r.gamma {
                Some(g) => row.extend(g.iter().map(|x| num(*x))),
                None => row.extend(std::iter::repeat_n(String::new(), 9)),
            }
            row
        }),
    )?;
    Output::new(
        "spin-structure",
        json!({ "label_schemes": schemes, "levels": rows, "lines": lines, "spin_params": params }),
        csv,
    )
}

fn zeeman_map_cmd(
    path: &Path,
    (v, n): (u32, u32),
    couplings: Option<&Path>,
    grid: &[f64],
    scheme: Scheme,
) -> CliResult<Output> {
    let file = load_coefficients(path)?;
    let couplings = load_couplings(couplings)?;
    let coeffs = file.get(v, n).into_config()?;
    let grid = grid_or_default(grid);
    let (s, _) = structure(coeffs, scheme)?;
    let map = zeeman_map(&s, &couplings, &grid)?;
    let csv = map.to_csv()?;
    Output::new(
        "zeeman-map",
        json!({ "couplings": couplings, "map": map }),
        csv,
    )
}

fn zeeman_coeffs(
    path: &Path,
    couplings: Option<&Path>,
    grid: &[f64],
    components: &[(String, i32, i32)],
) -> CliResult<Output> {
    let file = load_coefficients(path)?;
    let couplings = load_couplings(couplings)?;
    let grid = grid_or_default(grid);
    let mut comps = Vec::new();
    let list: Vec<(String, i32, i32)> = if components.is_empty() {
        vec![
            ("12".into(), 0, 0),
            ("16".into(), 0, 0),
            ("16".into(), 2, 3),
        ]
    } else {
        components.to_vec()
    };
    for (name, ml, mu) in &list {
        comps.push((line(name).into_config()?, *ml, *mu));
    }
    let analysis = spin_analysis(&file, SpinUncertaintyParams::default())?;
    let lower = zeeman_map(&analysis.lower, &couplings, &grid)?;
    let upper = zeeman_map(&analysis.upper, &couplings, &grid)?;

    let mut out = Vec::new();
    for (def, ml, mu) in comps {
        let m = transition_coeffs(
            &lower,
            &upper,
            StateId::new(def.lower, ml),
            StateId::new(def.upper, mu),
        )?;
        out.push(json!({
            "line": def.name,
            "m_f_lower": ml,
            "m_f_upper": mu,
            "a_khz_per_g": m.a,
            "c_khz_per_g2": m.c,
            "sigma_a": m.sigma_a,
            "sigma_c": m.sigma_c,
            "b_max_g": m.b_max,
        }));
    }
    let keys = [
        "line",
        "m_f_lower",
        "m_f_upper",
        "a_khz_per_g",
        "c_khz_per_g2",
        "sigma_a",
        "sigma_c",
        "b_max_g",
    ];
    let csv = table(
        &keys,
        out.iter().map(|o| {
            keys.iter()
                .map(|k| match &o[*k] {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect()
        }),
    )?;
    Output::new(
        "zeeman-coeffs",
        json!({ "couplings": couplings, "grid_g": grid, "label_scheme": analysis.scheme, "components": out }),
        csv,
    )
}

fn extrapolation_json(ex: &hdplus_core::fit::Extrapolation) -> serde_json::Value {
    json!({
        "intercept": ex.intercept,
        "slope": ex.slope,
        "slope_sigma": ex.slope_sigma,
        "chi2": ex.fit.chi2,
        "dof": ex.fit.dof,
        "weighted": ex.fit.weighted,
    })
}

fn extrapolate_b(path: &Path) -> CliResult<Output> {
    let points = parse_points_csv(&read_text(path)?, &path.display().to_string(), "B_gauss")?;
    let ex = extrapolate_to_zero_field(&points)?;
    let csv = summary(&[
        ("f0_khz", num(ex.intercept.value)),
        ("u_exp_khz", num(ex.intercept.component(EXP))),
        ("c_khz_per_g2", num(ex.slope)),
        ("sigma_c", num(ex.slope_sigma)),
        ("chi2", num(ex.fit.chi2)),
        ("dof", ex.fit.dof.to_string()),
    ])?;
    Output::new("extrapolate-b", extrapolation_json(&ex), csv)
}

fn fit_line(
    records_path: Option<&Path>,
    spectrum_path: Option<&Path>,
    offset_khz: f64,
) -> CliResult<Output> {
    let spectrum = match (records_path, spectrum_path) {
        (Some(p), _) => {
            let recs = parse_records_csv(&read_text(p)?, &p.display().to_string())?;
            build_spectrum(&recs)?
        }
        (None, Some(p)) => parse_spectrum_csv(&read_text(p)?, &p.display().to_string())?,
        (None, None) => {
            return Err(CliError::config(
                "one of --records or --spectrum is required",
            ))
        }
    };
    let fit = fit_lorentzian(&spectrum, None)?;
    let f = line_frequency(&fit, offset_khz)?;
    let res = if f.value > 0.0 {
        Some(resolution(f.value, fit.fwhm)?)
    } else {
        None
    };
    let params = fit.params();
    let csv = table(
        &["detuning_khz", "signal", "sem", "n_on", "n_off", "model"],
        spectrum.iter().map(|p| {
            vec![
                num(p.detuning_khz),
                num(p.signal),
                p.sem.map(num).unwrap_or_default(),
                p.n_on.to_string(),
                p.n_off.to_string(),
                num(params.eval(fit.polarity, p.detuning_khz)),
            ]
        }),
    )?;
    Output::new(
        "fit-line",
        json!({ "fit": fit, "line_frequency": f, "resolution": res, "points": spectrum.len() }),
        csv,
    )
}

fn extrapolate_rf(
    path: &Path,
    nominal: f64,
    model: hdplus_core::systematics::RfModel,
) -> CliResult<Output> {
    let points = parse_points_csv(&read_text(path)?, &path.display().to_string(), "amplitude")?;
    let rf = rf_extrapolate(&points, nominal, model)?;
    let csv = summary(&[
        ("model", model.name().to_string()),
        ("f0_khz", num(rf.f_zero.value)),
        ("u_exp_khz", num(rf.f_zero.component(EXP))),
        ("correction_khz", num(rf.entry.correction)),
        ("correction_u_khz", num(rf.entry.uncertainty)),
    ])?;
    Output::new(
        "extrapolate-rf",
        json!({ "model": model.name(), "f_zero": rf.f_zero, "entry": rf.entry, "fit": extrapolation_json(&rf.fit) }),
        csv,
    )
}

fn ledger(args: &LedgerArgs) -> CliResult<Output> {
    let mut entries: Vec<ShiftEntry> = match &args.entries {
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let rf_points = match &args.rf_points {
        Some(p) => Some(parse_points_csv(
            &read_text(p)?,
            &p.display().to_string(),
            "amplitude",
        )?),
        None => None,
    };
    let raw = Quantity::khz(args.raw_khz)
        .try_with(EXP, args.raw_u_khz)
        .into_config()?;

    if let (Some(points), Some(nominal)) = (rf_points, args.rf_nominal) {
        entries.push(rf_extrapolate(&points, nominal, args.rf_model.into())?.entry);
    }
    if let (Some(i), Some(s), Some(t), Some(l)) = (
        args.intensity,
        args.alpha_s_upper,
        args.alpha_t_upper,
        args.alpha_lower,
    ) {
        entries.push(light_shift_entry(s, t, l, i, args.light_bound_khz).into_config()?);
    }
    if let Some(bound) = args.trap_bound_khz {
        entries.extend(standard_entries(bound));
    }
    let ledger = apply_ledger(&raw, entries)?;
    let csv = table(
        &["name", "correction_khz", "uncertainty_khz", "basis", "note"],
        ledger.entries.iter().map(|e| {
            vec![
                e.name.clone(),
                num(e.correction),
                num(e.uncertainty),
                serde_json::to_value(e.basis)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                e.note.clone(),
            ]
        }),
    )?;
    Output::new("ledger", ledger, csv)
}

fn composite(
    b12: f64,
    lines_path: Option<&Path>,
    coeffs: Option<&Path>,
    corr: ExpCorrelation,
    splitting_path: Option<&Path>,
    spin: &SpinParamArgs,
) -> CliResult<Output> {
    let lines = match lines_path {
        Some(p) => MeasuredLines::parse(&read_text(p)?, &p.display().to_string())?,
        None => MeasuredLines::bundled(),
    };
    let split_theory = match splitting_path {
        Some(p) => parse_splitting_theory(&read_text(p)?, &p.display().to_string())?,
        None => bundled_splitting_theory(),
    };
    let file = coeffs.map(load_coefficients).transpose()?;
    let params = spin_params(spin)?;
    if !(0.0..=1.0).contains(&b12) {
        return Err(CliError::config(format!(
            "--b12 must lie in [0, 1], got {b12}"
        )));
    }

    let analysis = file
        .as_ref()
        .map(|f| spin_analysis(f, params))
        .transpose()?;
    let input = lines.composite_input(analysis.as_ref().map(|a| a.model.clone()));
    let report = composite_report(&input, b12, corr)?;
    let split = splitting_comparison(&lines.f12, &lines.f16, &split_theory)?;
    let optimum = analysis.as_ref().map(|a| {
        json!({
            "b_star": a.optimum.b_star,
            "u_min_khz": a.optimum.u_min,
            "variation_0.2_0.8": a.optimum.variation(0.2, 0.8),
        })
    });
    let csv = records(&report.profile)?;
    Output::new(
        "composite",
        json!({
            "composite": report.clone(),
            "spin_model": if analysis.is_some() { "sensitivity" } else { "bound" },
            "exp_correlation": corr,
            "splitting": split,
            "optimum": optimum,
        }),
        csv,
    )
}

fn extract(
    cli: &Cli,
    f: Option<(f64, f64)>,
    u_spin: f64,
    constants_path: Option<&Path>,
    contributions_path: Option<&Path>,
) -> CliResult<Output> {
    let constants = match constants_path {
        Some(p) => ConstantSet::load(p)?,
        None => ConstantSet::bundled(cli.constants_profile.into()),
    };
    let contributions = match contributions_path {
        Some(p) => ContributionTable::load(p)?,
        None => ContributionTable::bundled(),
    };
    let f_exp = match f {
        Some((value, u)) => Quantity::khz(value)
            .try_with(EXP, u)
            .and_then(|q| q.try_with(THEOR_SPIN, u_spin))
            .into_config()?,
        None => {
            let lines = MeasuredLines::bundled();
            let q = hdplus_core::composite::composite_frequency(&lines.composite_input(None), 0.5)?;
            if u_spin > 0.0 {
                q.try_with(THEOR_SPIN, u_spin).into_config()?
            } else {
                q
            }
        }
    };

    let budget = TheoryBudget {
        u_codata: constants.theory_codata_khz()?,
        ..TheoryBudget::default()
    };
    let avg = theory_frequency(&contributions, &budget)?;
    let model = ScalingModel::new(avg.value, constants.mu_over_me()?);
    let prediction = theory_prediction(&model, &constants)?;
    let mu = extract_mu_over_me(&f_exp, &model)?;
    let md_over_mp = constants.md_over_mp_for_extraction()?;
    let mp = extract_mp_over_me(&f_exp, &model, &md_over_mp)?;

    let mut rows = Vec::new();
    for r in [&mu, &mp] {
        for (name, u) in r.ratio.components() {
            rows.push(vec![
                r.name.clone(),
                num(r.value()),
                name.clone(),
                num(*u),
                num(r.fractional),
            ]);
        }
    }
    let csv = table(
        &[
            "ratio",
            "value",
            "component",
            "uncertainty",
            "fractional_total",
        ],
        rows,
    )?;
    Output::new(
        "extract",
        json!({
            "constants_profile": format!("{:?}", cli.constants_profile).to_lowercase(),
            "f_exp": f_exp,
            "theory_spin_averaged": avg,
            "theory_prediction": prediction,
            "scaling_model": model,
            "md_over_mp": md_over_mp,
            "mu_over_me": mu,
            "mp_over_me": mp,
        }),
        csv,
    )
}

fn compare(path: Option<&Path>, reference: usize) -> CliResult<Output> {
    let dets = match path {
        Some(p) => parse_determinations_csv(&read_text(p)?, &p.display().to_string())?,
        None => bundled_determinations(),
    };
    if reference >= dets.len() {
        return Err(CliError::config(format!(
            "--reference {reference} out of range for {} determinations",
            dets.len()
        )));
    }
    let rows = comparison_report(&dets, reference)?;
    let csv = pulls_to_csv(&rows)?;
    Output::new(
        "compare",
        json!({ "reference": dets[reference].label, "rows": rows }),
        csv,
    )
}

fn adev(path: &Path, carrier_hz: f64, taus: &[f64]) -> CliResult<Output> {
    if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
        return Err(CliError::config(format!(
            "--carrier-hz must be positive, got {carrier_hz}"
        )));
    }
    let series = parse_counter_log(&read_text(path)?, &path.display().to_string(), carrier_hz)?;
    let taus = if taus.is_empty() {
        octave_taus(&series)
    } else {
        taus.to_vec()
    };
    let points = allan_deviation(&series, &taus)?;
    let csv = adev_to_csv(&points)?;
    Output::new(
        "adev",
        json!({ "tau0_s": series.tau0, "samples": series.samples.len(), "carrier_hz": carrier_hz, "points": points }),
        csv,
    )
}

fn dfg(path: &Path, maser_offset: f64) -> CliResult<Output> {
    let comb: CombParams = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    comb.validate()?;
    if comb.lasers.len() != 2 {
        return Err(CliError::config(format!(
            "{}: expected exactly 2 lasers, got {}",
            path.display(),
            comb.lasers.len()
        )));
    }
    let raw = dfg_frequency(&comb)?;
    let f0 = maser_correct(raw, maser_offset).into_config()?;
    let f1 = maser_correct(laser_frequency(&comb, 0)?, maser_offset).into_config()?;
    let f2 = maser_correct(laser_frequency(&comb, 1)?, maser_offset).into_config()?;
    let wavelength_um = SPEED_OF_LIGHT / f0.abs() * 1e6;
    let csv = summary(&[
        ("f1_hz", num(f1)),
        ("f2_hz", num(f2)),
        ("f0_hz", num(f0)),
        ("wavelength_um", num(wavelength_um)),
    ])?;
    Output::new(
        "dfg",
        json!({ "f1_hz": f1, "f2_hz": f2, "f0_hz": f0, "wavelength_um": wavelength_um, "maser_offset": maser_offset }),
        csv,
    )
}

fn carrier(lambdas: &[f64], delta_rho_um: f64, sweep_spec: &[f64]) -> CliResult<Output> {
    let model = CarrierModel::new(delta_rho_um).into_config()?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &l in lambdas {
        points.push((l, carrier_strength(l, &model).into_config()?));
    }
    if !(sweep_spec.is_empty() || sweep_spec.len() == 3) {
        return Err(CliError::config("--sweep takes FROM,TO,POINTS"));
    }
    if lambdas.is_empty() && sweep_spec.is_empty() {
        return Err(CliError::config("give --lambda-um, --sweep or both"));
    }
    if let [from, to, n] = sweep_spec {
        if n.fract() != 0.0 || *n < 2.0 {
            return Err(CliError::config(format!(
                "sweep point count must be an integer ≥ 2, got {n}"
            )));
        }
        points.extend(sweep(&model, *from, *to, *n as usize).into_config()?);
    }
    let csv = table(
        &["lambda_um", "strength"],
        points.iter().map(|(l, s)| vec![num(*l), num(*s)]),
    )?;
    let rows: Vec<_> = points
        .iter()
        .map(|(l, s)| json!({ "lambda_um": l, "strength": s }))
        .collect();
    Output::new(
        "carrier",
        json!({ "model": model, "critical_wavelength_um": model.critical_wavelength(), "points": rows }),
        csv,
    )
}

fn reproduce_paper(
    coeffs: Option<&Path>,
    couplings: Option<&Path>,
    spin: &SpinParamArgs,
) -> CliResult<Output> {
    let inputs = ReproduceInputs {
        coefficients: coeffs.map(load_coefficients).transpose()?,
        couplings: couplings.map(|p| load_couplings(Some(p))).transpose()?,
        spin_params: spin_params(spin)?,
    };
    let anchors = reproduce(&inputs)?;
    let failed = anchors.iter().filter(|a| a.status == Status::Fail).count();
    let csv = records(&anchors)?;
    let mut out = Output::new("reproduce-paper", &anchors, csv)?;
    out.text = Some(format_anchors(&anchors));
    out.data_failure = failed > 0;
    Ok(out)
}
