//! Effective spin Hamiltonian of one rovibrational level.
//!
//! H = E1 (N·s_e) + E2 (N·I_p) + E3 (N·I_d) + E4 (I_p·s_e) + E5 (I_d·s_e)
//!   + E6 T(N; I_p, s_e) + E7 T(N; I_d, s_e) + E8 T(N; I_p, I_d) + E9 Q(N; I_d)
//!
//! with all coefficients in kHz. Each term has its own constructor below so the
//! tensor normalization can be changed in one place.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::momentum::{dot, ProductBasis, Slot, VectorOp};
use crate::error::{Error, Result};

pub const N_COEFFS: usize = 9;

/// Coefficients that multiply operators involving N (zero for N = 0).
pub const ROTATIONAL: [usize; 7] = [1, 2, 3, 6, 7, 8, 9];

/// Prefactor applied to the rank-2 tensor terms E6…E9.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorNorm {
    /// 1 / ((2N-1)(2N+3))
    #[default]
    Reduced,
    /// No prefactor.
    Unit,
}

impl TensorNorm {
    pub fn factor(self, n: u32) -> f64 {
        match self {
            TensorNorm::Reduced => {
                let n = n as f64;
                1.0 / ((2.0 * n - 1.0) * (2.0 * n + 3.0))
            }
            TensorNorm::Unit => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LevelId {
    pub v: u32,
    pub n: u32,
}

impl std::fmt::Display for LevelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v={},N={}", self.v, self.n)
    }
}

/// E1…E9 of one level. Absent coefficients count as zero in the Hamiltonian
/// but are reported as missing wherever an uncertainty budget needs them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperfineCoefficients {
    pub level: LevelId,
    values: [Option<f64>; N_COEFFS],
    /// Per-coefficient fractional uncertainty overrides.
    eps: [Option<f64>; N_COEFFS],
    pub tensor_norm: TensorNorm,
}

impl HyperfineCoefficients {
    pub fn new(v: u32, n: u32) -> Self {
        Self {
            level: LevelId { v, n },
            values: [None; N_COEFFS],
            eps: [None; N_COEFFS],
            tensor_norm: TensorNorm::default(),
        }
    }

    /// Builds a coefficient set from `(k, value)` pairs, `k` in 1..=9.
    pub fn from_pairs(v: u32, n: u32, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut c = Self::new(v, n);
        for &(k, x) in pairs {
            c.set(k, x)?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Full set with every coefficient present, `values[k-1] = E_k`.
    pub fn from_array(v: u32, n: u32, values: [f64; N_COEFFS]) -> Result<Self> {
        let mut c = Self::new(v, n);
        for (i, x) in values.into_iter().enumerate() {
            c.set(i + 1, x)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn check_index(k: usize) -> Result<usize> {
        if (1..=N_COEFFS).contains(&k) {
            Ok(k - 1)
        } else {
            Err(Error::input(format!(
                "coefficient index E{k} out of range 1..=9"
            )))
        }
    }

    pub fn set(&mut self, k: usize, value: f64) -> Result<()> {
        let i = Self::check_index(k)?;
        if !value.is_finite() {
            return Err(Error::input(format!("E{k} must be finite")));
        }
        self.values[i] = Some(value);
        Ok(())
    }

    pub fn set_eps(&mut self, k: usize, eps: f64) -> Result<()> {
        let i = Self::check_index(k)?;
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::input(format!("eps_E{k} must be positive")));
        }
        self.eps[i] = Some(eps);
        Ok(())
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        Self::check_index(k).ok().and_then(|i| self.values[i])
    }

    /// Coefficient value, zero when absent.
    pub fn get(&self, k: usize) -> f64 {
        self.value(k).unwrap_or(0.0)
    }

    pub fn require(&self, k: usize) -> Result<f64> {
        self.value(k).ok_or_else(|| {
            Error::input(format!("coefficient E{k} missing for level {}", self.level))
        })
    }

    pub fn eps_override(&self, k: usize) -> Option<f64> {
        Self::check_index(k).ok().and_then(|i| self.eps[i])
    }

    /// N = 0 levels may only carry the contact terms E4 and E5.
    pub fn validate(&self) -> Result<()> {
        if self.level.n == 0 {
            for k in ROTATIONAL {
                if self.get(k) != 0.0 {
                    return Err(Error::input(format!(
                        "level {} has N = 0 but E{k} = {} is nonzero",
                        self.level,
                        self.get(k)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; N_COEFFS] {
        std::array::from_fn(|i| self.values[i].unwrap_or(0.0))
    }
}

/// `N·A`, the spin–rotation coupling with slot `a`.
pub fn spin_rotation_term(basis: &ProductBasis, a: Slot) -> DMatrix<f64> {
    dot(&basis.vector(Slot::Rotation), &basis.vector(a))
}

/// `A·B` between two spin slots.
pub fn contact_term(basis: &ProductBasis, a: Slot, b: Slot) -> DMatrix<f64> {
    dot(&basis.vector(a), &basis.vector(b))
}

/// `norm · [2N²(A·B) − 3((N·A)(N·B) + (N·B)(N·A))]`.
pub fn tensor_term(basis: &ProductBasis, a: Slot, b: Slot, norm: TensorNorm) -> DMatrix<f64> {
    let n = basis.vector(Slot::Rotation);
    let va = basis.vector(a);
    let vb = basis.vector(b);
    let n2 = n.squared();
    let ab = dot(&va, &vb);
    let na = dot(&n, &va);
    let nb = dot(&n, &vb);
    let op = (&n2 * &ab) * 2.0 - (&na * &nb + &nb * &na) * 3.0;
    op * norm.factor(basis.rotation())
}

/// `norm · [2N²I_d² − (3/2)(N·I_d) − 3(N·I_d)²]`. Unlike the other tensor
/// terms this operator is not traceless.
pub fn quadrupole_term(basis: &ProductBasis, norm: TensorNorm) -> DMatrix<f64> {
    let n = basis.vector(Slot::Rotation);
    let d = basis.vector(Slot::DeuteronSpin);
    let n2 = n.squared();
    let d2 = d.squared();
    let nd = dot(&n, &d);
    let op = (&n2 * &d2) * 2.0 - &nd * 1.5 - (&nd * &nd) * 3.0;
    op * norm.factor(basis.rotation())
}

/// The nine operators multiplying E1…E9, built once per basis.
#[derive(Clone, Debug)]
pub struct HfsOperators {
    basis: ProductBasis,
    norm: TensorNorm,
    terms: Vec<DMatrix<f64>>,
}

impl HfsOperators {
    pub fn new(basis: &ProductBasis, norm: TensorNorm) -> Self {
        use Slot::*;
        let terms = vec![
            spin_rotation_term(basis, ElectronSpin),
            spin_rotation_term(basis, ProtonSpin),
            spin_rotation_term(basis, DeuteronSpin),
            contact_term(basis, ProtonSpin, ElectronSpin),
            contact_term(basis, DeuteronSpin, ElectronSpin),
            tensor_term(basis, ProtonSpin, ElectronSpin, norm),
            tensor_term(basis, DeuteronSpin, ElectronSpin, norm),
            tensor_term(basis, ProtonSpin, DeuteronSpin, norm),
            quadrupole_term(basis, norm),
        ];
        Self {
            basis: basis.clone(),
            norm,
            terms,
        }
    }

    pub fn basis(&self) -> &ProductBasis {
        &self.basis
    }

    pub fn norm(&self) -> TensorNorm {
        self.norm
    }

    /// Operator multiplying E_k, `k` in 1..=9.
    pub fn term(&self, k: usize) -> &DMatrix<f64> {
        &self.terms[k - 1]
    }

    pub fn hamiltonian(&self, coeffs: &HyperfineCoefficients) -> Result<DMatrix<f64>> {
        if coeffs.level.n != self.basis.rotation() {
            return Err(Error::input(format!(
                "coefficients for {} do not match a basis with N = {}",
                coeffs.level,
                self.basis.rotation()
            )));
        }
        coeffs.validate()?;
        let dim = self.basis.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for k in 1..=N_COEFFS {
            let e = coeffs.get(k);
            if e != 0.0 {
                h += self.term(k) * e;
            }
        }
        Ok(h)
    }
}

pub fn build_hfs(coeffs: &HyperfineCoefficients, basis: &ProductBasis) -> Result<DMatrix<f64>> {
    HfsOperators::new(basis, coeffs.tensor_norm).hamiltonian(coeffs)
}

/// Total angular momentum F = s_e + I_p + I_d + N and its intermediate
/// couplings G1 = s_e + I_p, G2 = G1 + I_d.
#[derive(Clone, Debug)]
pub struct CouplingOperators {
    pub g1_sq: DMatrix<f64>,
    pub g2_sq: DMatrix<f64>,
    pub f_sq: DMatrix<f64>,
    pub f_z: DMatrix<f64>,
}

impl CouplingOperators {
    pub fn new(basis: &ProductBasis) -> Self {
        let g1: VectorOp = &basis.vector(Slot::ElectronSpin) + &basis.vector(Slot::ProtonSpin);
        let g2 = &g1 + &basis.vector(Slot::DeuteronSpin);
        let f = &g2 + &basis.vector(Slot::Rotation);
        Self {
            g1_sq: g1.squared(),
            g2_sq: g2.squared(),
            f_sq: f.squared(),
            f_z: f.z.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    fn eigs(m: &DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Closed-form N = 0 spectrum: G2=2 (×5), G2=0 (×1) and the 2×2 mixing of
    /// the two G2=1 triplets, whose off-diagonal element E5/√2 follows from
    /// Tr(H²) = 9/4 E4² + 6 E5².
    fn analytic_n0(e4: f64, e5: f64) -> Vec<f64> {
        let a = -0.75 * e4;
        let b = 0.25 * e4 - 0.5 * e5;
        let x = e5 / 2f64.sqrt();
        let m = DMatrix::from_row_slice(2, 2, &[a, x, x, b]);
        let pair = eigs(&m);
        let mut out = vec![0.25 * e4 + 0.5 * e5; 5];
        out.push(0.25 * e4 - e5);
        for p in pair {
            out.extend(std::iter::repeat_n(p, 3));
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn generic_n1() -> HyperfineCoefficients {
        HyperfineCoefficients::from_array(
            1,
            1,
            [
                31_984.9, -31.3, -4.8, 904_500.0, 138_700.0, 8.6, 1.37, -3.05, 0.4,
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_coefficients_give_zero_matrix() {
        let b = ProductBasis::new(1);
        let h = build_hfs(
            &HyperfineCoefficients::from_array(1, 1, [0.0; 9]).unwrap(),
            &b,
        )
        .unwrap();
        assert_eq!(max_abs(&h), 0.0);
    }

    #[test]
    fn pure_e4_spectrum() {
        let b = ProductBasis::new(0);
        let c = HyperfineCoefficients::from_pairs(0, 0, &[(4, 1.0), (5, 0.0)]).unwrap();
        let e = eigs(&build_hfs(&c, &b).unwrap());
        assert_eq!(e.iter().filter(|&&x| (x - 0.25).abs() < 1e-12).count(), 9);
        assert_eq!(e.iter().filter(|&&x| (x + 0.75).abs() < 1e-12).count(), 3);
    }

    #[test]
    fn n0_rejects_rotational_coefficients() {
        let mut c = HyperfineCoefficients::new(0, 0);
        c.set(1, 5.0).unwrap();
        assert!(matches!(
            build_hfs(&c, &ProductBasis::new(0)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn basis_mismatch_rejected() {
        let c = HyperfineCoefficients::from_pairs(0, 0, &[(4, 1.0)]).unwrap();
        assert!(build_hfs(&c, &ProductBasis::new(1)).is_err());
    }

    #[test]
    fn hamiltonian_is_symmetric_and_commutes_with_f() {
        let b = ProductBasis::new(1);
        let h = build_hfs(&generic_n1(), &b).unwrap();
        assert_eq!(h.transpose(), h);
        let f = CouplingOperators::new(&b);
        assert!(max_abs(&(&h * &f.f_z - &f.f_z * &h)) < 1e-9);
        assert!(max_abs(&(&h * &f.f_sq - &f.f_sq * &h)) < 1e-9);
    }

    #[test]
    fn tensor_terms_are_traceless_except_quadrupole() {
        let b = ProductBasis::new(1);
        let ops = HfsOperators::new(&b, TensorNorm::Reduced);
        for k in 1..=8 {
            assert!(ops.term(k).trace().abs() < 1e-10, "E{k} trace");
        }
        assert!(ops.term(9).trace().abs() > 1e-3);
    }

    #[test]
    fn tensor_term_vanishes_when_rotation_is_zero() {
        let b = ProductBasis::new(0);
        let ops = HfsOperators::new(&b, TensorNorm::Reduced);
        for k in ROTATIONAL {
            assert_eq!(max_abs(ops.term(k)), 0.0);
        }
    }

    #[test]
    fn tensor_term_has_vanishing_partial_trace_over_rotation() {
        // rank 2 in N: Tr_N T = 0 as an operator on the spins
        let b = ProductBasis::new(1);
        let t = tensor_term(&b, Slot::ProtonSpin, Slot::ElectronSpin, TensorNorm::Unit);
        let rot = b.slot_dim(Slot::Rotation);
        for block in 0..(b.dim() / rot) {
            let partial: f64 = (0..rot)
                .map(|m| t[(block * rot + m, block * rot + m)])
                .sum();
            assert!(partial.abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_switch_scales_tensor_terms_only() {
        let b = ProductBasis::new(1);
        let r = HfsOperators::new(&b, TensorNorm::Reduced);
        let u = HfsOperators::new(&b, TensorNorm::Unit);
        for k in 1..=5 {
            assert_eq!(r.term(k), u.term(k));
        }
        for k in 6..=9 {
            assert!(max_abs(&(r.term(k) * 5.0 - u.term(k))) < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn n0_matches_analytic_block(e4 in -1e5f64..1e5, e5 in -1e5f64..1e5) {
            let b = ProductBasis::new(0);
            let c = HyperfineCoefficients::from_pairs(0, 0, &[(4, e4), (5, e5)]).unwrap();
            let got = eigs(&build_hfs(&c, &b).unwrap());
            let want = analytic_n0(e4, e5);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-9, "{} vs {}", g, w);
            }
        }

        #[test]
        fn n0_matches_analytic_block_at_ghz_scale(e4 in -2e6f64..2e6, e5 in -5e5f64..5e5) {
            // At MHz-scale eigenvalues a 1e-9 kHz absolute bound is below a
            // few ulps, so the comparison is relative to the spectral radius.
            let b = ProductBasis::new(0);
            let c = HyperfineCoefficients::from_pairs(0, 0, &[(4, e4), (5, e5)]).unwrap();
            let got = eigs(&build_hfs(&c, &b).unwrap());
            let want = analytic_n0(e4, e5);
            let scale = e4.abs() + e5.abs();
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-14 * scale, "{} vs {}", g, w);
            }
        }

        #[test]
        fn block_structure_for_random_coefficients(
            e in prop::array::uniform9(-1e3f64..1e3)
        ) {
            let b = ProductBasis::new(1);
            let h = build_hfs(&HyperfineCoefficients::from_array(1, 1, e).unwrap(), &b).unwrap();
            let f = CouplingOperators::new(&b);
            prop_assert_eq!(h.transpose(), h.clone());
            prop_assert!(max_abs(&(&h * &f.f_z - &f.f_z * &h)) < 1e-9);
            prop_assert!(max_abs(&(&h * &f.f_sq - &f.f_sq * &h)) < 1e-9);
        }

        #[test]
        fn n0_spectrum_ignores_rotational_terms(
            e4 in -1e6f64..1e6, e5 in -1e6f64..1e6,
        ) {
            // With N = 0 the rotational operators vanish identically, so the
            // full operator set gives the same matrix as E4/E5 alone.
            let b = ProductBasis::new(0);
            let ops = HfsOperators::new(&b, TensorNorm::Reduced);
            let c = HyperfineCoefficients::from_pairs(0, 0, &[(4, e4), (5, e5)]).unwrap();
            let h = ops.hamiltonian(&c).unwrap();
            let mut h2 = h.clone();
            for k in ROTATIONAL {
                h2 += ops.term(k) * 123.0;
            }
            prop_assert_eq!(eigs(&h), eigs(&h2));
        }
    }
}
