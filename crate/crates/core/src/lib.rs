//! Analysis chain for rovibrational spectroscopy of HD⁺: hyperfine and Zeeman
//! structure, line fitting, systematic shifts, composite frequencies and
//! mass-ratio extraction.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod carrier;
pub mod composite;
pub mod constants;
pub mod error;
pub mod fit;
pub mod lineshape;
pub mod metrology;
pub mod quantity;
pub mod reproduce;
pub mod systematics;
pub mod textio;
pub mod zeeman;

pub use error::{Error, Result};
pub use quantity::{combine_linear, total_uncertainty, Combination, Quantity};
