//! Scale-resolved decomposition of the quantum information in a
//! one-dimensional many-body state, with the length scales derived from it.
//!
//! Three entropy backends feed the [`lattice`] builder: exact dense state
//! vectors ([`dense`]), free-fermion covariance matrices ([`gaussian`]) and
//! matrix-product states ([`mps`]). The [`kitaev`] module builds the
//! disordered interacting Kitaev chain, and [`ensemble`] runs disorder
//! sweeps over it.

pub mod dense;
pub mod ensemble;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod kitaev;
pub mod lattice;
pub mod lengths;
pub mod linalg;
pub mod mps;

pub use error::{Error, Result};
pub use lattice::{
    info_per_scale, local_information, local_information_up_to, subsystem_decomposition_check, EntropyProvider,
    InformationLattice, ScaleProfile, SubsystemId,
};
pub use lengths::LengthSummary;
