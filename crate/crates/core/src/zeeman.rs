//! Zeeman structure in a static field along z: field-dependent level maps
//! with adiabatic tracking, transition Zeeman coefficients and zero-field
//! extrapolation of measured frequencies.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::angular::{LevelId, LevelLabel, ProductBasis, Slot, SpinStructure};
use crate::error::{read_text, Error, Result};
use crate::fit::{extrapolate, fit_basis, Extrapolation};
use crate::quantity::Quantity;
use crate::textio::{parse_f64, parse_key_values};

pub const BUNDLED_COUPLINGS: &str = include_str!("../data/zeeman_couplings.txt");

/// Couplings in kHz/G multiplying B·s_e, B·I_p, B·I_d and B·N.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeemanCouplings {
    pub c_e: f64,
    pub c_p: f64,
    pub c_d: f64,
    pub c_n: f64,
}

impl Default for ZeemanCouplings {
    /// Free-particle values: g_e μ_B/h for the electron, −g μ_N/h for the
    /// nuclei. The rotational coupling is not known from free-particle
    /// constants and defaults to zero.
    fn default() -> Self {
        Self {
            c_e: 2_802.495_2,
            c_p: -4.257_748_1,
            c_d: -0.653_599_0,
            c_n: 0.0,
        }
    }
}

impl ZeemanCouplings {
    pub const ZERO: Self = Self {
        c_e: 0.0,
        c_p: 0.0,
        c_d: 0.0,
        c_n: 0.0,
    };

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    /// Reads `c_e`, `c_p`, `c_d`, `c_N` (kHz/G). All four are required.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 4] = [None; 4];
        for kv in parse_key_values(text, origin)? {
            let slot = match kv.key.as_str() {
                "c_e" => 0,
                "c_p" => 1,
                "c_d" => 2,
                "c_N" => 3,
                other => {
                    return Err(Error::parse(
                        origin,
                        kv.line,
                        format!("unknown key '{other}'"),
                    ))
                }
            };
            vals[slot] = Some(parse_f64(&kv.value, origin, kv.line)?);
        }
        let get = |i: usize, name: &str| {
            vals[i].ok_or_else(|| Error::Config(format!("{origin}: missing key '{name}'")))
        };
        Ok(Self {
            c_e: get(0, "c_e")?,
            c_p: get(1, "c_p")?,
            c_d: get(2, "c_d")?,
            c_n: get(3, "c_N")?,
        })
    }
}

/// Zeeman operator per gauss, B·(c_e s_ez + c_p I_pz + c_d I_dz + c_N N_z)/B.
pub fn zeeman_per_gauss(couplings: &ZeemanCouplings, basis: &ProductBasis) -> DMatrix<f64> {
    let z = |slot| basis.vector(slot).z;
    z(Slot::ElectronSpin) * couplings.c_e
        + z(Slot::ProtonSpin) * couplings.c_p
        + z(Slot::DeuteronSpin) * couplings.c_d
        + z(Slot::Rotation) * couplings.c_n
}

pub fn build_zeeman(
    couplings: &ZeemanCouplings,
    b_gauss: f64,
    basis: &ProductBasis,
) -> Result<DMatrix<f64>> {
    if !(b_gauss >= 0.0) || !b_gauss.is_finite() {
        return Err(Error::input(format!(
            "field must be finite and non-negative, got {b_gauss} G"
        )));
    }
    Ok(zeeman_per_gauss(couplings, basis) * b_gauss)
}

/// A Zeeman sublevel identified by its field-free level and m_F.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId {
    pub label: LevelLabel,
    pub m_f: i32,
}

impl StateId {
    pub const fn new(label: LevelLabel, m_f: i32) -> Self {
        Self { label, m_f }
    }

    /// Time-reversal partner with opposite projection.
    pub fn mirrored(self) -> Self {
        Self {
            label: self.label,
            m_f: -self.m_f,
        }
    }
}

impl std::fmt::Display for StateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},mF={}", self.label, self.m_f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackedState {
    pub id: StateId,
    /// kHz, one entry per grid point.
    pub energies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeemanMap {
    pub level: LevelId,
    pub grid: Vec<f64>,
    pub states: Vec<TrackedState>,
}

impl ZeemanMap {
    pub fn state(&self, id: StateId) -> Result<&TrackedState> {
        self.states.iter().find(|s| s.id == id).ok_or_else(|| {
            Error::Lookup(format!(
                "state {id} not in the Zeeman map of {}",
                self.level
            ))
        })
    }

    /// Long-format CSV: `B_gauss, G1, G2, F, mF, energy_khz`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["B_gauss", "G1", "G2", "F", "mF", "energy_khz"])?;
        for (i, b) in self.grid.iter().enumerate() {
            for s in &self.states {
                let l = s.id.label;
                w.write_record([
                    b.to_string(),
                    l.g1.to_string(),
                    l.g2.to_string(),
                    l.f.to_string(),
                    s.id.m_f.to_string(),
                    s.energies[i].to_string(),
                ])?;
            }
        }
        csv_string(w)
    }
}

pub(crate) fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}

/// Field grid used when none is given, in gauss.
pub fn default_grid() -> Vec<f64> {
    vec![0.0, 0.05, 0.1, 0.15, 0.2]
}

/// Minimum eigenvector overlap accepted between neighbouring grid points.
pub const MIN_OVERLAP: f64 = 0.9;

struct Block {
    two_m: i32,
    indices: Vec<usize>,
}

fn m_blocks(basis: &ProductBasis) -> Vec<Block> {
    let mut blocks: Vec<Block> = Vec::new();
    for i in 0..basis.dim() {
        let two_m = basis.two_m_total(i);
        match blocks.iter_mut().find(|b| b.two_m == two_m) {
            Some(b) => b.indices.push(i),
            None => blocks.push(Block {
                two_m,
                indices: vec![i],
            }),
        }
    }
    blocks.sort_by_key(|b| -b.two_m);
    blocks
}

fn sub(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Block eigenpairs at B = 0 assigned to field-free levels by energy.
fn field_free_block_states(
    structure: &SpinStructure,
    h_block: &DMatrix<f64>,
    two_m: i32,
) -> Result<Vec<(StateId, f64, nalgebra::DVector<f64>)>> {
    let (values, vectors) = crate::angular::sorted_eigen(h_block);
    let tol = structure.options().group_tol.max(1e-9);
    let mut out = Vec::with_capacity(values.len());
    for (i, &e) in values.iter().enumerate() {
        let level = structure
            .levels()
            .iter()
            .find(|l| (l.energy - e).abs() <= tol * 10.0 + 1e-12 * e.abs())
            .ok_or_else(|| {
                Error::Tracking(format!(
                    "B = 0 eigenvalue {e} kHz matches no field-free level"
                ))
            })?;
        let label = level.label.ok_or_else(|| {
            Error::Tracking(format!(
                "field-free level at {:.6} kHz has no (G1,G2,F) label; Zeeman states cannot be named",
                level.energy
            ))
        })?;
        out.push((
            StateId::new(label, two_m / 2),
            level.energy,
            vectors.column(i).into_owned(),
        ));
    }
    Ok(out)
}

/// Eigenvalues of H_hfs + H_Z(B) on `grid`, followed by eigenvector overlap
/// from the labeled field-free levels at B = 0.
pub fn zeeman_map(
    structure: &SpinStructure,
    couplings: &ZeemanCouplings,
    grid: &[f64],
) -> Result<ZeemanMap> {
    if grid.first() != Some(&0.0) {
        return Err(Error::input("field grid must start at B = 0"));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::input(format!(
            "field grid not strictly increasing at {} G",
            w[1]
        )));
    }
    let basis = structure.basis();
    let hz = zeeman_per_gauss(couplings, basis);
    let h0 = structure.hamiltonian();
    let mut states = Vec::new();
    for block in m_blocks(basis) {
        let h0b = sub(h0, &block.indices);
        let hzb = sub(&hz, &block.indices);
        let start = field_free_block_states(structure, &h0b, block.two_m)?;
        let mut current: Vec<nalgebra::DVector<f64>> = start.iter().map(|s| s.2.clone()).collect();
        let mut energies: Vec<Vec<f64>> = start.iter().map(|s| vec![s.1]).collect();
        for &b in &grid[1..] {
            let (values, vectors) = crate::angular::sorted_eigen(&(&h0b + &hzb * b));
            let mut taken = vec![false; values.len()];
            for (j, prev) in current.iter_mut().enumerate() {
                let overlaps = vectors.transpose() * &*prev;
                let (best, ov) = overlaps
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(i, &o)| (i, o))
                    .expect("non-empty block");
                if ov.abs() <= MIN_OVERLAP || taken[best] {
                    return Err(Error::Tracking(format!(
                        "state {} at B = {b} G: best overlap {:.4} (grid too coarse near a crossing)",
                        start[j].0,
                        ov.abs()
                    )));
                }
                taken[best] = true;
                *prev = vectors.column(best) * ov.signum();
                energies[j].push(values[best]);
            }
        }
        for ((id, _, _), e) in start.into_iter().zip(energies) {
            states.push(TrackedState { id, energies: e });
        }
    }
    states.sort_by_key(|s| s.id);
    Ok(ZeemanMap {
        level: structure.level_id(),
        grid: grid.to_vec(),
        states,
    })
}

/// Δf(B) ≈ a·B + c·B² of one Zeeman component of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionZeemanModel {
    /// kHz/G
    pub a: f64,
    /// kHz/G²
    pub c: f64,
    pub sigma_a: f64,
    pub sigma_c: f64,
    /// Largest |B| of the fit, G.
    pub b_max: f64,
}

impl TransitionZeemanModel {
    pub fn shift(&self, b_gauss: f64) -> f64 {
        self.a * b_gauss + self.c * b_gauss * b_gauss
    }
}

/// Fits a·B + c·B² to the Zeeman shift of lower → upper. Points at −B are
/// supplied by the time-reversed components (−m_F → −m_F′) at +B, so the
/// fit is symmetric and a vanishes exactly for m_F = 0 → m_F′ = 0.
pub fn transition_coeffs(
    lower: &ZeemanMap,
    upper: &ZeemanMap,
    lower_state: StateId,
    upper_state: StateId,
) -> Result<TransitionZeemanModel> {
    if lower.grid != upper.grid {
        return Err(Error::input(
            "lower and upper Zeeman maps use different field grids",
        ));
    }
    let grid = &lower.grid;
    let shift = |l: &TrackedState, u: &TrackedState, i: usize| {
        (u.energies[i] - u.energies[0]) - (l.energies[i] - l.energies[0])
    };
    let (l, u) = (lower.state(lower_state)?, upper.state(upper_state)?);
    let (lm, um) = (
        lower.state(lower_state.mirrored())?,
        upper.state(upper_state.mirrored())?,
    );
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, &b) in grid.iter().enumerate() {
        x.push(b);
        y.push(shift(l, u, i));
        if b > 0.0 {
            x.push(-b);
            y.push(shift(lm, um, i));
        }
    }
    if x.len() < 3 {
        return Err(Error::input(format!(
            "need at least 3 field points, grid gives {}",
            x.len()
        )));
    }
    let fit = fit_basis(&x, &y, None, &[|b| b, |b| b * b])?;
    Ok(TransitionZeemanModel {
        a: fit.params[0],
        c: fit.params[1],
        sigma_a: fit.sigma(0),
        sigma_c: fit.sigma(1),
        b_max: grid.iter().copied().fold(0.0, f64::max),
    })
}

/// First- and second-order perturbation coefficients (kHz/G, kHz/G²) of
/// one Zeeman sublevel, as an independent check of the diagonalization path.
pub fn perturbative_coeffs(
    structure: &SpinStructure,
    couplings: &ZeemanCouplings,
    id: StateId,
) -> Result<(f64, f64)> {
    let basis = structure.basis();
    let block = m_blocks(basis)
        .into_iter()
        .find(|b| b.two_m == 2 * id.m_f)
        .ok_or_else(|| Error::Lookup(format!("no m_F = {} states", id.m_f)))?;
    let h0b = sub(structure.hamiltonian(), &block.indices);
    let hzb = sub(&zeeman_per_gauss(couplings, basis), &block.indices);
    let states = field_free_block_states(structure, &h0b, block.two_m)?;
    let i = states
        .iter()
        .position(|s| s.0 == id)
        .ok_or_else(|| Error::Lookup(format!("state {id} not found")))?;
    let v = &states[i].2;
    let linear = (v.transpose() * &hzb * v)[(0, 0)];
    let mut quad = 0.0;
    for (j, (_, e, w)) in states.iter().enumerate() {
        if j != i {
            let me = (w.transpose() * &hzb * v)[(0, 0)];
            quad += me * me / (states[i].1 - e);
        }
    }
    Ok((linear, quad))
}

/// Weighted fit of f = f₀ + c·B² to measurements at several fields.
pub fn extrapolate_to_zero_field(points: &[(f64, Quantity)]) -> Result<Extrapolation> {
    if let Some((b, _)) = points.iter().find(|(b, _)| !(b.is_finite() && *b >= 0.0)) {
        return Err(Error::input(format!(
            "field must be finite and non-negative, got {b} G"
        )));
    }
    extrapolate(points, |b| b * b, "B")
}
