//! Angular-momentum algebra and the hyperfine structure of HD⁺ levels.

mod coeff_file;
mod hamiltonian;
mod levels;
mod momentum;
mod sensitivity;

pub use coeff_file::CoefficientFile;
pub use hamiltonian::{
    build_hfs, contact_term, quadrupole_term, spin_rotation_term, tensor_term, CouplingOperators,
    HfsOperators, HyperfineCoefficients, LevelId, TensorNorm, N_COEFFS, ROTATIONAL,
};
pub(crate) use levels::sorted_eigen;
pub use levels::{
    eigenlevels, eigenlevels_with, spin_frequency, LabelScheme, LabelingOptions, LevelLabel,
    SpinLevel, SpinStructure,
};
pub use momentum::{dot, embed, jmatrices, AngularMomentumSet, ProductBasis, Slot, VectorOp};
pub use sensitivity::{
    spin_uncertainty, weighted_spin_uncertainty, SensitivityTable, SpinUncertaintyParams,
    TransitionSensitivity, ALPHA, BREIT_PAULI_SET, FERMI_SET,
};
