//! Exact multi-soliton solutions of the Heisenberg ferromagnet equation
//! `m_t = m x m_zz` built from matrix triplets.
//!
//! Spectral data are realized as a triplet `(A, B, C)`, embedded into a block system,
//! and the magnetization is read off the solution of the Marchenko equation in closed
//! form. The [`verify`] module checks results against the field equation and against a
//! direct scattering pass.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod marchenko;
pub mod reconstruct;
pub mod spectral;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result, SpectralDataError};
pub use linalg::CMatrix;
pub use marchenko::{oracle_solve, MarchenkoSolution, QuadratureRule, QuadratureSpec};
pub use reconstruct::{
    field_on_grid, magnetization, one_soliton_closed_form, transmission, MagnetizationField,
    ScatteringCoeffs, Spin,
};
pub use spectral::{embed, realize_triplet, BlockSystem, Eigenvalue, SpectralData, Triplet};
pub use tolerances::Tolerances;
pub use verify::{direct_scatter, pde_residual, roundtrip_report, IntegrationSpec};
