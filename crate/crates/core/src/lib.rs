#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod constructions;
pub mod error;
pub mod expr;
pub mod hamiltonian;
pub mod hypersurface;
pub mod integrate;
pub mod isotopy;
pub mod map;
pub mod profile;
pub mod region;
pub mod sampling;
pub mod skeleton;
pub mod smooth;
pub mod square;
pub mod strip;
pub mod svg;
pub mod symplectic;
pub mod workbench;

pub use error::{Error, Result};
