//! Diagonalization of the spin Hamiltonian and (G1, G2, F) labeling of the
//! resulting levels.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::hamiltonian::{
    CouplingOperators, HfsOperators, HyperfineCoefficients, LevelId, N_COEFFS, ROTATIONAL,
};
use super::momentum::ProductBasis;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LevelLabel {
    pub g1: u32,
    pub g2: u32,
    pub f: u32,
}

impl LevelLabel {
    pub const fn new(g1: u32, g2: u32, f: u32) -> Self {
        Self { g1, g2, f }
    }
}

impl std::fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "G1={},G2={},F={}", self.g1, self.g2, self.f)
    }
}

/// One degenerate eigenlevel. `label` is `None` only when several
/// multiplets happen to share an energy (for example H = 0).
#[derive(Clone, Debug)]
pub struct SpinLevel {
    pub label: Option<LevelLabel>,
    /// kHz, relative to the spin-averaged level.
    pub energy: f64,
    pub degeneracy: usize,
    /// Orthonormal eigenvectors spanning the level, one per column.
    pub vectors: DMatrix<f64>,
}

/// How (G1, G2) are assigned once F is known.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelScheme {
    /// Round ⟨G1²⟩ and ⟨G2²⟩ to the nearest j(j+1); fail if either is
    /// further than the window from every allowed value.
    #[default]
    Expectation,
    /// Within each F block, assign the coupling-scheme states in the energy
    /// order they have under the contact terms alone. Levels of equal F and
    /// m_F never cross while the rotational terms are switched on, so the
    /// order is preserved even when G1 and G2 are strongly mixed.
    Correlated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelingOptions {
    /// Eigenvalues closer than this (kHz) belong to the same level.
    pub group_tol: f64,
    /// Largest allowed distance of ⟨J²⟩ from j(j+1) when rounding.
    pub window: f64,
    /// Allowed max-entry size of [H, F_z] and [H, F²] (kHz).
    pub commute_tol: f64,
    pub scheme: LabelScheme,
}

impl Default for LabelingOptions {
    fn default() -> Self {
        Self {
            group_tol: 1e-6,
            window: 0.05,
            commute_tol: 1e-9,
            scheme: LabelScheme::Expectation,
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Mean of ⟨v|X|v⟩ over the columns of `v`.
pub(crate) fn subspace_expectation(x: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    (v.transpose() * x * v).trace() / v.ncols() as f64
}

/// Rounds ⟨J²⟩ to an integer j if it lies within `window` of j(j+1).
fn round_to_j(expect: f64, window: f64) -> Option<u32> {
    if expect < -window {
        return None;
    }
    let j = ((-1.0 + (1.0 + 4.0 * expect.max(0.0)).sqrt()) / 2.0).round();
    ((expect - j * (j + 1.0)).abs() <= window).then_some(j as u32)
}

/// Eigenpairs sorted by eigenvalue.
pub(crate) fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn eigenlevels(h: &DMatrix<f64>, basis: &ProductBasis) -> Result<Vec<SpinLevel>> {
    eigenlevels_with(
        h,
        basis,
        &CouplingOperators::new(basis),
        LabelingOptions::default(),
    )
}

/// Diagonalizes `h` and labels the levels by expectation values. The
/// [`LabelScheme::Correlated`] scheme needs the contact coefficients and is
/// reached through [`SpinStructure`]; here it falls back to expectations.
pub fn eigenlevels_with(
    h: &DMatrix<f64>,
    basis: &ProductBasis,
    coupling: &CouplingOperators,
    opts: LabelingOptions,
) -> Result<Vec<SpinLevel>> {
    let groups = grouped(h, basis, coupling, opts)?;
    label_by_expectation(groups, basis, coupling, opts)
}

/// An eigenvalue group with its exact F, if it is a single multiplet.
struct Group {
    first_index: usize,
    energy: f64,
    vectors: DMatrix<f64>,
    f: Option<u32>,
}

fn grouped(
    h: &DMatrix<f64>,
    basis: &ProductBasis,
    coupling: &CouplingOperators,
    opts: LabelingOptions,
) -> Result<Vec<Group>> {
    let dim = basis.dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::input(format!(
            "Hamiltonian is {}x{}, basis has dimension {dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    let asym = max_abs(&(h - h.transpose()));
    if asym > opts.commute_tol {
        return Err(Error::input(format!(
            "Hamiltonian is not symmetric (max |H - Hᵀ| = {asym:e})"
        )));
    }
    for (name, op) in [("F_z", &coupling.f_z), ("F²", &coupling.f_sq)] {
        let c = max_abs(&(h * op - op * h));
        if c > opts.commute_tol {
            return Err(Error::input(format!(
                "Hamiltonian does not commute with {name} (max entry {c:e} kHz)"
            )));
        }
    }

    let (values, vectors) = sorted_eigen(h);
    let mut groups = Vec::new();
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && values[end] - values[end - 1] <= opts.group_tol {
            end += 1;
        }
        let v = vectors.columns(start, end - start).into_owned();
        // F² is exact; a group that is not one (2F+1)-multiplet is a
        // coincidence of several levels and stays unlabeled.
        let f = round_to_j(subspace_expectation(&coupling.f_sq, &v), opts.window)
            .filter(|&f| 2 * f as usize + 1 == end - start);
        groups.push(Group {
            first_index: start,
            energy: values[start..end].iter().sum::<f64>() / (end - start) as f64,
            vectors: v,
            f,
        });
        start = end;
    }
    Ok(groups)
}

fn finish(groups: Vec<Group>, labels: Vec<Option<LevelLabel>>) -> Vec<SpinLevel> {
    groups
        .into_iter()
        .zip(labels)
        .map(|(g, label)| SpinLevel {
            label,
            energy: g.energy,
            degeneracy: g.vectors.ncols(),
            vectors: g.vectors,
        })
        .collect()
}

fn check_allowed(label: LevelLabel, n: u32, g: &Group) -> Result<()> {
    let LevelLabel { g1, g2, f } = label;
    let g2_ok = if g1 == 0 { g2 == 1 } else { g1 == 1 && g2 <= 2 };
    let f_ok = f + n >= g2 && f <= g2 + n && g2 + f >= n;
    if g2_ok && f_ok {
        Ok(())
    } else {
        Err(Error::Classification(format!(
            "eigenvector {} (E = {:.6} kHz) rounds to {label}, which is not an allowed coupling for N={n}",
            g.first_index, g.energy
        )))
    }
}

fn label_by_expectation(
    groups: Vec<Group>,
    basis: &ProductBasis,
    coupling: &CouplingOperators,
    opts: LabelingOptions,
) -> Result<Vec<SpinLevel>> {
    let mut labels = Vec::with_capacity(groups.len());
    for g in &groups {
        let Some(f) = g.f else {
            labels.push(None);
            continue;
        };
        let round = |what: &str, op: &DMatrix<f64>| {
            let x = subspace_expectation(op, &g.vectors);
            round_to_j(x, opts.window).ok_or_else(|| {
                Error::Classification(format!(
                    "eigenvector {} (E = {:.6} kHz, F = {f}): ⟨{what}⟩ = {x:.4} is more than {} from any j(j+1)",
                    g.first_index, g.energy, opts.window
                ))
            })
        };
        let label = LevelLabel::new(
            round("G1²", &coupling.g1_sq)?,
            round("G2²", &coupling.g2_sq)?,
            f,
        );
        check_allowed(label, basis.rotation(), g)?;
        labels.push(Some(label));
    }
    Ok(finish(groups, labels))
}

/// (G1, G2) states ordered by their energy under the contact terms alone.
#[derive(Clone, Debug, PartialEq)]
struct ContactOrder(Vec<(u32, u32, f64)>);

impl ContactOrder {
    /// At N = 0 F equals G2, so only the two F = 1 levels need a G1 label.
    /// E5 mixes them without crossing, so their order is the one at E5 = 0,
    /// where G1 = 0 lies below G1 = 1 exactly when E4 > 0.
    fn new(coeffs: &HyperfineCoefficients, opts: LabelingOptions) -> Result<Self> {
        let (e4, e5) = (coeffs.get(4), coeffs.get(5));
        let basis = ProductBasis::new(0);
        let c = HyperfineCoefficients::from_pairs(0, 0, &[(4, e4), (5, e5)])?;
        let h = HfsOperators::new(&basis, coeffs.tensor_norm).hamiltonian(&c)?;
        let groups = grouped(&h, &basis, &CouplingOperators::new(&basis), opts)?;
        let degenerate = || {
            Error::Classification(format!(
                "contact terms E4 = {e4}, E5 = {e5} leave coupling-scheme states degenerate"
            ))
        };
        if groups.len() != 4 || e4 == 0.0 {
            return Err(degenerate());
        }
        let mut out = Vec::new();
        let mut f1 = Vec::new();
        for g in &groups {
            match g.f.ok_or_else(degenerate)? {
                0 => out.push((1, 0, g.energy)),
                2 => out.push((1, 2, g.energy)),
                _ => f1.push(g.energy),
            }
        }
        let [lo, hi] = f1[..] else {
            return Err(degenerate());
        };
        let (g1_lo, g1_hi) = if e4 > 0.0 { (0, 1) } else { (1, 0) };
        out.push((g1_lo, 1, lo));
        out.push((g1_hi, 1, hi));
        out.sort_by(|a, b| a.2.total_cmp(&b.2));
        Ok(Self(out))
    }

    /// Coupling-scheme states compatible with total F, lowest energy first.
    fn for_f(&self, f: u32, n: u32) -> Vec<(u32, u32, f64)> {
        self.0
            .iter()
            .copied()
            .filter(|&(_, g2, _)| f + n >= g2 && f <= g2 + n && g2 + f >= n)
            .collect()
    }
}

fn label_by_correlation(
    groups: Vec<Group>,
    basis: &ProductBasis,
    order: &ContactOrder,
    opts: LabelingOptions,
) -> Result<Vec<SpinLevel>> {
    let n = basis.rotation();
    let mut labels: Vec<Option<LevelLabel>> = vec![None; groups.len()];
    let compound = groups.iter().any(|g| g.f.is_none());
    let fs: std::collections::BTreeSet<u32> = groups.iter().filter_map(|g| g.f).collect();
    for f in fs {
        let members: Vec<usize> = (0..groups.len())
            .filter(|&i| groups[i].f == Some(f))
            .collect();
        let states = order.for_f(f, n);
        if members.len() != states.len() {
            if compound {
                continue;
            }
            return Err(Error::Classification(format!(
                "F = {f} has {} levels but {} coupling-scheme states",
                members.len(),
                states.len()
            )));
        }
        for w in states.windows(2) {
            if w[1].2 - w[0].2 <= opts.group_tol {
                return Err(Error::Classification(format!(
                    "contact-only states (G1={},G2={}) and (G1={},G2={}) are degenerate, F = {f} order is ambiguous",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        for (&i, &(g1, g2, _)) in members.iter().zip(&states) {
            labels[i] = Some(LevelLabel::new(g1, g2, f));
        }
    }
    Ok(finish(groups, labels))
}

/// Field-free spin structure of one rovibrational level.
#[derive(Clone, Debug)]
pub struct SpinStructure {
    coeffs: HyperfineCoefficients,
    basis: ProductBasis,
    ops: HfsOperators,
    coupling: CouplingOperators,
    hamiltonian: DMatrix<f64>,
    levels: Vec<SpinLevel>,
    opts: LabelingOptions,
    order: Option<ContactOrder>,
}

impl SpinStructure {
    pub fn new(coeffs: &HyperfineCoefficients) -> Result<Self> {
        Self::with_options(coeffs, LabelingOptions::default())
    }

    pub fn with_options(coeffs: &HyperfineCoefficients, opts: LabelingOptions) -> Result<Self> {
        let basis = ProductBasis::new(coeffs.level.n);
        let ops = HfsOperators::new(&basis, coeffs.tensor_norm);
        let coupling = CouplingOperators::new(&basis);
        let hamiltonian = ops.hamiltonian(coeffs)?;
        let order = match opts.scheme {
            LabelScheme::Expectation => None,
            LabelScheme::Correlated => Some(ContactOrder::new(coeffs, opts)?),
        };
        let levels = label_levels(&hamiltonian, &basis, &coupling, opts, order.as_ref())?;
        Ok(Self {
            coeffs: coeffs.clone(),
            basis,
            ops,
            coupling,
            hamiltonian,
            levels,
            opts,
            order,
        })
    }

    pub fn options(&self) -> LabelingOptions {
        self.opts
    }

    pub fn coefficients(&self) -> &HyperfineCoefficients {
        &self.coeffs
    }

    pub fn level_id(&self) -> LevelId {
        self.coeffs.level
    }

    pub fn basis(&self) -> &ProductBasis {
        &self.basis
    }

    pub fn operators(&self) -> &HfsOperators {
        &self.ops
    }

    pub fn coupling(&self) -> &CouplingOperators {
        &self.coupling
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian
    }

    pub fn levels(&self) -> &[SpinLevel] {
        &self.levels
    }

    pub fn level(&self, label: LevelLabel) -> Result<&SpinLevel> {
        find_level(&self.levels, label).map_err(|msg| {
            Error::Lookup(format!("level {} of {}: {msg}", label, self.coeffs.level))
        })
    }

    pub fn energy(&self, label: LevelLabel) -> Result<f64> {
        Ok(self.level(label)?.energy)
    }

    /// Hellmann–Feynman sensitivities γ_k = ∂E/∂E_k = ⟨O_k⟩, averaged over
    /// the degenerate subspace of the level.
    pub fn sensitivities(&self, label: LevelLabel) -> Result<[f64; N_COEFFS]> {
        let level = self.level(label)?;
        Ok(std::array::from_fn(|i| {
            subspace_expectation(self.ops.term(i + 1), &level.vectors)
        }))
    }

    /// Central finite-difference sensitivities with step `step` (kHz). The
    /// level is re-identified by its label at each displaced point.
    pub fn sensitivities_fd(&self, label: LevelLabel, step: f64) -> Result<[f64; N_COEFFS]> {
        let v0 = &self.level(label)?.vectors;
        let mut out = [0.0; N_COEFFS];
        for (i, slot) in out.iter_mut().enumerate() {
            let k = i + 1;
            if self.basis.rotation() == 0 && ROTATIONAL.contains(&k) {
                continue;
            }
            let op = self.ops.term(k);
            let mut shifted = [0.0; 2];
            for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                let h_step = sign * step;
                let h = &self.hamiltonian + op * h_step;
                let levels = label_levels(
                    &h,
                    &self.basis,
                    &self.coupling,
                    self.opts,
                    self.order.as_ref(),
                )
                .map_err(|e| Error::Tracking(format!("E{k} {h_step:+e}: {e}")))?;
                let v1 = &find_level(&levels, label)
                    .map_err(|msg| {
                        Error::Tracking(format!(
                            "level {label} lost after shifting E{k} by {h_step:+e} kHz: {msg}"
                        ))
                    })?
                    .vectors;
                // E' − E = h·tr[(V'ᵀ O V)(V'ᵀ V)⁻¹]/d holds exactly for the
                // displaced and undisplaced eigenspaces. It avoids the
                // cancellation of E' − E between eigenvalues of order 1e5 kHz.
                let overlap = v1.transpose() * v0;
                let inv = overlap.clone().try_inverse().ok_or_else(|| {
                    Error::Tracking(format!(
                        "level {label} rotated out of its eigenspace at E{k} {h_step:+e}"
                    ))
                })?;
                shifted[s] = h_step * (v1.transpose() * op * v0 * inv).trace() / v0.ncols() as f64;
            }
            *slot = (shifted[0] - shifted[1]) / (2.0 * step);
        }
        Ok(out)
    }
}

fn label_levels(
    h: &DMatrix<f64>,
    basis: &ProductBasis,
    coupling: &CouplingOperators,
    opts: LabelingOptions,
    order: Option<&ContactOrder>,
) -> Result<Vec<SpinLevel>> {
    let groups = grouped(h, basis, coupling, opts)?;
    match order {
        Some(order) => label_by_correlation(groups, basis, order, opts),
        None => label_by_expectation(groups, basis, coupling, opts),
    }
}

fn find_level(levels: &[SpinLevel], label: LevelLabel) -> std::result::Result<&SpinLevel, String> {
    let mut hits = levels.iter().filter(|l| l.label == Some(label));
    match (hits.next(), hits.next()) {
        (Some(l), None) => Ok(l),
        (None, _) => Err("no level carries this label".into()),
        (Some(_), Some(_)) => Err("label is not unique".into()),
    }
}

/// E(upper level) − E(lower level), kHz.
pub fn spin_frequency(
    upper: &SpinStructure,
    upper_label: LevelLabel,
    lower: &SpinStructure,
    lower_label: LevelLabel,
) -> Result<f64> {
    Ok(upper.energy(upper_label)? - lower.energy(lower_label)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn generic_n1() -> HyperfineCoefficients {
        HyperfineCoefficients::from_array(
            1,
            1,
            [
                31_984.9, -31.3, -4.8, 904_500.0, 138_700.0, 8.6, 1.37, -3.05, 0.4,
            ],
        )
        .unwrap()
    }

    fn correlated() -> LabelingOptions {
        LabelingOptions {
            scheme: LabelScheme::Correlated,
            ..Default::default()
        }
    }

    fn generic_n0() -> HyperfineCoefficients {
        HyperfineCoefficients::from_pairs(0, 0, &[(4, 925_394.2), (5, 142_287.6)]).unwrap()
    }

    #[test]
    fn n0_has_four_levels() {
        let s = SpinStructure::new(&generic_n0()).unwrap();
        let levels = s.levels();
        assert_eq!(levels.len(), 4);
        let mut fs: Vec<u32> = levels.iter().map(|l| l.label.unwrap().f).collect();
        fs.sort();
        assert_eq!(fs, vec![0, 1, 1, 2]);
        let mut degs: Vec<usize> = levels.iter().map(|l| l.degeneracy).collect();
        degs.sort();
        assert_eq!(degs, vec![1, 3, 3, 5]);
        assert_eq!(degs.iter().sum::<usize>(), 12);
        assert!(s.level(LevelLabel::new(1, 2, 2)).is_ok());
    }

    #[test]
    fn n1_has_ten_levels() {
        let s = SpinStructure::with_options(&generic_n1(), correlated()).unwrap();
        let levels = s.levels();
        assert_eq!(levels.len(), 10);
        assert_eq!(levels.iter().map(|l| l.degeneracy).sum::<usize>(), 36);
        let fs: std::collections::BTreeSet<u32> =
            levels.iter().map(|l| l.label.unwrap().f).collect();
        assert_eq!(fs.into_iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        for l in levels {
            assert_eq!(l.degeneracy, 2 * l.label.unwrap().f as usize + 1);
        }
        assert!(s.level(LevelLabel::new(1, 2, 1)).is_ok());
        assert!(s.level(LevelLabel::new(1, 2, 3)).is_ok());
    }

    #[test]
    fn zero_hamiltonian_is_one_unlabeled_level() {
        for n in [0, 1] {
            let basis = ProductBasis::new(n);
            let h = DMatrix::zeros(basis.dim(), basis.dim());
            let levels = eigenlevels(&h, &basis).unwrap();
            assert_eq!(levels.len(), 1);
            assert_eq!(levels[0].degeneracy, basis.dim());
            assert!(levels[0].label.is_none());
        }
    }

    #[test]
    fn weighted_mean_energy_vanishes_without_quadrupole() {
        let mut c = generic_n1();
        c.set(9, 0.0).unwrap();
        let s = SpinStructure::with_options(&c, correlated()).unwrap();
        let mean: f64 = s
            .levels()
            .iter()
            .map(|l| l.energy * l.degeneracy as f64)
            .sum::<f64>()
            / 36.0;
        assert!(mean.abs() < 1e-6);
    }

    #[test]
    fn rotational_mixing_defeats_expectation_rounding() {
        // E1 at a fifth of E5 admixes G2 = 1 into the G2 = 0 level by several
        // percent, beyond the rounding window.
        assert!(matches!(
            SpinStructure::new(&generic_n1()),
            Err(Error::Classification(_))
        ));
        assert!(SpinStructure::with_options(&generic_n1(), correlated()).is_ok());
    }

    #[test]
    fn schemes_agree_when_mixing_is_weak() {
        let c = HyperfineCoefficients::from_array(
            1,
            1,
            [
                300.0, -31.3, -4.8, 904_500.0, 138_700.0, 8.6, 1.37, -3.05, 0.4,
            ],
        )
        .unwrap();
        let a = SpinStructure::new(&c).unwrap();
        let b = SpinStructure::with_options(&c, correlated()).unwrap();
        let la: Vec<_> = a.levels().iter().map(|l| l.label).collect();
        let lb: Vec<_> = b.levels().iter().map(|l| l.label).collect();
        assert_eq!(la, lb);
        assert!(la.iter().all(|l| l.is_some()));
    }

    #[test]
    fn lookup_of_missing_label_fails() {
        let s = SpinStructure::new(&generic_n0()).unwrap();
        assert!(matches!(
            s.level(LevelLabel::new(1, 2, 3)),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn spin_frequency_trivial_cases() {
        let s = SpinStructure::new(&generic_n0()).unwrap();
        let l = LevelLabel::new(1, 2, 2);
        assert_eq!(spin_frequency(&s, l, &s, l).unwrap(), 0.0);

        let z0 = SpinStructure::new(&HyperfineCoefficients::from_pairs(0, 0, &[(4, 0.0)]).unwrap())
            .unwrap();
        assert_eq!(z0.levels().len(), 1);
    }

    #[test]
    fn contact_sensitivity_of_stretched_ground_level() {
        let s = SpinStructure::new(&generic_n0()).unwrap();
        let g = s.sensitivities(LevelLabel::new(1, 2, 2)).unwrap();
        assert!((g[3] - 0.25).abs() < 1e-12);
        assert!((g[4] - 0.5).abs() < 1e-12);
        for k in ROTATIONAL {
            assert_eq!(g[k - 1], 0.0);
        }
    }

    #[test]
    fn sensitivities_sum_to_trace() {
        let s = SpinStructure::with_options(&generic_n1(), correlated()).unwrap();
        let mut sums = [0.0; N_COEFFS];
        for l in s.levels() {
            let g = s.sensitivities(l.label.unwrap()).unwrap();
            for (sum, gk) in sums.iter_mut().zip(g) {
                *sum += gk * l.degeneracy as f64;
            }
        }
        for (k, sum) in sums[..8].iter().enumerate() {
            assert!(sum.abs() < 1e-9, "E{} sum {}", k + 1, sum);
        }
        let tr9 = s.operators().term(9).trace();
        assert!((sums[8] - tr9).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hellmann_feynman_matches_finite_differences(
            scale in prop::array::uniform9(0.5f64..1.5),
        ) {
            let base = [3_000.0, -30.0, -5.0, 90_000.0, 14_000.0, 8.0, 1.4, -3.0, 0.4];
            let e: [f64; 9] = std::array::from_fn(|i| base[i] * scale[i]);
            let c = HyperfineCoefficients::from_array(1, 1, e).unwrap();
            let s = SpinStructure::with_options(&c, correlated()).unwrap();
            for l in s.levels() {
                let label = l.label.unwrap();
                let hf = s.sensitivities(label).unwrap();
                let fd = s.sensitivities_fd(label, 1e-4).unwrap();
                for k in 0..N_COEFFS {
                    let tol = 1e-6 * hf[k].abs().max(1e-3);
                    prop_assert!((hf[k] - fd[k]).abs() <= tol, "{} E{}: {} vs {}", label, k + 1, hf[k], fd[k]);
                    prop_assert!(hf[k].abs() <= 3.0);
                }
            }
        }
    }
}
