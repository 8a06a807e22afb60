//! Ladder-operator matrices and the uncoupled product basis
//! |m_se, m_Ip, m_Id, m_N⟩.

use std::ops::Add;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `J_z`, `J_+`, `J_-` for one angular momentum in the |j, m⟩ basis, rows
/// ordered m = j, j-1, …, -j. All entries are real (Condon–Shortley phases).
#[derive(Clone, Debug)]
pub struct AngularMomentumSet {
    two_j: u32,
    pub jz: DMatrix<f64>,
    pub jplus: DMatrix<f64>,
    pub jminus: DMatrix<f64>,
}

impl AngularMomentumSet {
    pub fn from_twice(two_j: u32) -> Self {
        let dim = two_j as usize + 1;
        let j = two_j as f64 / 2.0;
        let m_of = |i: usize| j - i as f64;
        let jz = DMatrix::from_fn(dim, dim, |r, c| if r == c { m_of(r) } else { 0.0 });
        // J+|m⟩ = sqrt(j(j+1) - m(m+1)) |m+1⟩, and |m+1⟩ sits one row up.
        let jplus = DMatrix::from_fn(dim, dim, |r, c| {
            if c == r + 1 {
                let m = m_of(c);
                (j * (j + 1.0) - m * (m + 1.0)).sqrt()
            } else {
                0.0
            }
        });
        let jminus = jplus.transpose();
        Self {
            two_j,
            jz,
            jplus,
            jminus,
        }
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn jx(&self) -> DMatrix<f64> {
        (&self.jplus + &self.jminus) * 0.5
    }

    /// `J_x² + J_y² + J_z²` assembled from the ladder operators.
    pub fn casimir(&self) -> DMatrix<f64> {
        &self.jz * &self.jz + (&self.jplus * &self.jminus + &self.jminus * &self.jplus) * 0.5
    }
}

/// Ladder matrices for angular momentum `j`, which must be a non-negative
/// multiple of 1/2.
pub fn jmatrices(j: f64) -> Result<AngularMomentumSet> {
    let twice = 2.0 * j;
    if !twice.is_finite() || twice < 0.0 || twice.fract() != 0.0 || twice > 64.0 {
        return Err(Error::input(format!(
            "angular momentum must be a non-negative half-integer, got {j}"
        )));
    }
    Ok(AngularMomentumSet::from_twice(twice as u32))
}

/// The four angular momenta of the molecule, in basis-slot order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    ElectronSpin,
    ProtonSpin,
    DeuteronSpin,
    Rotation,
}

impl Slot {
    pub const ALL: [Slot; 4] = [
        Slot::ElectronSpin,
        Slot::ProtonSpin,
        Slot::DeuteronSpin,
        Slot::Rotation,
    ];

    pub fn position(self) -> usize {
        match self {
            Slot::ElectronSpin => 0,
            Slot::ProtonSpin => 1,
            Slot::DeuteronSpin => 2,
            Slot::Rotation => 3,
        }
    }
}

/// Uncoupled product basis s_e(½) ⊗ I_p(½) ⊗ I_d(1) ⊗ N. The electron slot is
/// the most significant digit of the basis index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductBasis {
    n: u32,
    two_j: [u32; 4],
    dim: usize,
}

impl ProductBasis {
    pub fn new(n: u32) -> Self {
        let two_j = [1, 1, 2, 2 * n];
        let dim = two_j.iter().map(|&t| t as usize + 1).product();
        Self { n, two_j, dim }
    }

    pub fn rotation(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slot_two_j(&self, slot: Slot) -> u32 {
        self.two_j[slot.position()]
    }

    pub fn slot_dim(&self, slot: Slot) -> usize {
        self.slot_two_j(slot) as usize + 1
    }

    /// Basis index of the product state with the given doubled projections
    /// `2m` per slot, or `None` if any projection is out of range.
    pub fn index_of(&self, two_m: [i32; 4]) -> Option<usize> {
        let mut index = 0usize;
        for (k, &tm) in two_m.iter().enumerate() {
            let tj = self.two_j[k] as i32;
            if tm.abs() > tj || (tj - tm) % 2 != 0 {
                return None;
            }
            let pos = ((tj - tm) / 2) as usize;
            index = index * (tj as usize + 1) + pos;
        }
        Some(index)
    }

    /// Doubled projections of basis state `index`.
    pub fn state(&self, index: usize) -> [i32; 4] {
        let mut rest = index;
        let mut out = [0i32; 4];
        for k in (0..4).rev() {
            let d = self.two_j[k] as usize + 1;
            let pos = rest % d;
            rest /= d;
            out[k] = self.two_j[k] as i32 - 2 * pos as i32;
        }
        out
    }

    /// Doubled total projection 2M_F of basis state `index`.
    pub fn two_m_total(&self, index: usize) -> i32 {
        self.state(index).iter().sum()
    }

    pub fn momentum(&self, slot: Slot) -> AngularMomentumSet {
        AngularMomentumSet::from_twice(self.slot_two_j(slot))
    }

    /// Embedded `(J_z, J_+, J_-)` of one slot.
    pub fn vector(&self, slot: Slot) -> VectorOp {
        let m = self.momentum(slot);
        let e = |op: &DMatrix<f64>| embed(op, slot, self).expect("slot dimensions agree");
        VectorOp {
            z: e(&m.jz),
            plus: e(&m.jplus),
            minus: e(&m.jminus),
        }
    }
}

/// Tensor-product embedding of a single-slot operator, identity elsewhere.
pub fn embed(op: &DMatrix<f64>, slot: Slot, basis: &ProductBasis) -> Result<DMatrix<f64>> {
    let want = basis.slot_dim(slot);
    if op.nrows() != want || op.ncols() != want {
        return Err(Error::input(format!(
            "operator is {}x{} but slot {:?} has dimension {}",
            op.nrows(),
            op.ncols(),
            slot,
            want
        )));
    }
    let mut out = DMatrix::<f64>::identity(1, 1);
    for s in Slot::ALL {
        let factor = if s == slot {
            op.clone()
        } else {
            DMatrix::identity(basis.slot_dim(s), basis.slot_dim(s))
        };
        out = out.kronecker(&factor);
    }
    Ok(out)
}

/// A vector operator in the full space, stored as its spherical-ish
/// components `(V_z, V_+, V_-)`.
#[derive(Clone, Debug)]
pub struct VectorOp {
    pub z: DMatrix<f64>,
    pub plus: DMatrix<f64>,
    pub minus: DMatrix<f64>,
}

impl VectorOp {
    pub fn zeros(dim: usize) -> Self {
        Self {
            z: DMatrix::zeros(dim, dim),
            plus: DMatrix::zeros(dim, dim),
            minus: DMatrix::zeros(dim, dim),
        }
    }

    pub fn squared(&self) -> DMatrix<f64> {
        dot(self, self)
    }
}

impl Add for &VectorOp {
    type Output = VectorOp;

    fn add(self, rhs: &VectorOp) -> VectorOp {
        VectorOp {
            z: &self.z + &rhs.z,
            plus: &self.plus + &rhs.plus,
            minus: &self.minus + &rhs.minus,
        }
    }
}

/// Scalar product `A·B = A_z B_z + (A_+ B_- + A_- B_+)/2`.
pub fn dot(a: &VectorOp, b: &VectorOp) -> DMatrix<f64> {
    &a.z * &b.z + (&a.plus * &b.minus + &a.minus * &b.plus) * 0.5
}
