use std::path::PathBuf;

use hdplus_core::angular::{CoefficientFile, SpinUncertaintyParams};
use hdplus_core::composite::{composite_frequency, ExpCorrelation};
use hdplus_core::constants::{
    extract_mu_over_me, theory_frequency, ConstantSet, ConstantsProfile, ContributionTable,
    ScalingModel, TheoryBudget,
};
use hdplus_core::quantity::{EXP, THEOR_SPIN};
use hdplus_core::reproduce::{line_zeeman, spin_analysis, MeasuredLines};
use hdplus_core::systematics::{apply_ledger, standard_entries, ShiftBasis, ShiftEntry};
use hdplus_core::zeeman::ZeemanCouplings;
use hdplus_core::{Error, Quantity};

const GENERIC_COEFFS: &str = "\
[v=0,N=0]
E4 = 925394.2
E5 = 142287.56

[v=1,N=1]
E1 = 31984.9
E2 = -31.3
E3 = -4.8
E4 = 904500
E5 = 138700
E6 = 8.6
E7 = 1.37
E8 = -3.05
E9 = 0.4
";

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn coefficient_file_to_composite_with_spin_model() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = CoefficientFile::load(write(&dir, "c.txt", GENERIC_COEFFS)).unwrap();
    let a = spin_analysis(&coeffs, SpinUncertaintyParams::default()).unwrap();
    let input = MeasuredLines::bundled().composite_input(Some(a.model.clone()));

    let at_opt = composite_frequency(&input, a.optimum.b_star).unwrap();
    assert!((at_opt.component(THEOR_SPIN) - a.optimum.u_min).abs() < 1e-12);
    for b in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let q = composite_frequency(&input, b).unwrap();
        assert!(q.component(THEOR_SPIN) >= a.optimum.u_min - 1e-12);
    }
    let z = line_zeeman(&a, &ZeemanCouplings::default()).unwrap();
    assert_eq!(z.line12_00.a, 0.0);
    assert_eq!(z.line16_00.a, 0.0);
}

#[test]
fn template_file_parses_but_is_empty() {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/hfs_coefficients_template.txt"
    );
    let c = CoefficientFile::load(path).unwrap();
    assert!(c.is_empty());
}

#[test]
fn missing_files_are_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gone = dir.path().join("absent.txt");
    for err in [
        CoefficientFile::load(&gone).unwrap_err(),
        ConstantSet::load(&gone).unwrap_err(),
        ContributionTable::load(&gone).unwrap_err(),
        ZeemanCouplings::load(&gone).unwrap_err(),
    ] {
        assert!(matches!(err, Error::Io { .. }), "{err}");
        assert!(err.is_config());
    }
}

#[test]
fn constants_file_with_missing_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = ConstantsProfile::Codata2018.bundled_text();
    let trimmed: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("r_d"))
        .map(|l| format!("{l}\n"))
        .collect();
    let err = ConstantSet::load(write(&dir, "k.txt", &trimmed)).unwrap_err();
    assert!(err.is_config(), "{err}");
    assert!(err.to_string().contains("r_d"), "{err}");

    let full = ConstantSet::load(write(&dir, "full.txt", text)).unwrap();
    assert_eq!(full, ConstantSet::bundled(ConstantsProfile::Codata2018));
}

#[test]
fn ledger_then_composite_then_extraction() {
    let lines = MeasuredLines::bundled();
    let raw = Quantity::khz(lines.f12.value + 0.4).with(EXP, 0.1);
    let mut entries = vec![ShiftEntry::new(
        "zeeman",
        -0.4,
        0.16,
        ShiftBasis::MeasuredExtrapolation,
        "synthetic",
    )
    .unwrap()];
    entries.extend(standard_entries(0.5));
    let ledger = apply_ledger(&raw, entries).unwrap();
    assert!((ledger.corrected.value - lines.f12.value).abs() < 1e-6);
    assert!((ledger.corrected.component(EXP) - 0.1f64.hypot(0.16)).abs() < 1e-12);

    let mut corrected = lines.clone();
    corrected.f12 = ledger.corrected;
    let comp = hdplus_core::composite::composite_report(
        &corrected.composite_input(None),
        0.5,
        ExpCorrelation::Independent,
    )
    .unwrap();
    assert!((comp.value_khz - 58_605_052_164.255).abs() < 1e-4);

    let codata = ConstantSet::bundled(ConstantsProfile::Codata2018);
    let budget = TheoryBudget {
        u_codata: codata.theory_codata_khz().unwrap(),
        ..TheoryBudget::default()
    };
    let avg = theory_frequency(&ContributionTable::bundled(), &budget).unwrap();
    let model = ScalingModel::new(avg.value, codata.mu_over_me().unwrap());
    let f = Quantity::khz(comp.value_khz)
        .with(EXP, comp.u_exp_khz)
        .with(THEOR_SPIN, comp.u_spin_khz);
    let mu = extract_mu_over_me(&f, &model).unwrap();
    assert!((mu.value() - codata.mu_over_me().unwrap()).abs() < 1e-7);
    assert!(
        (mu.component(EXP) / mu.value() - comp.u_exp_khz / comp.value_khz / 0.4846).abs() < 1e-15
    );
}
