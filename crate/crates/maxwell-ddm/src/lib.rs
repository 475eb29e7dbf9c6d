//! Edge-element solver for the time-harmonic Maxwell equation with absorption
//! on box domains, preconditioned by one-level and hybrid two-level weighted
//! additive Schwarz methods with impedance subproblems.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`] — structured tetrahedral box meshes (Freudenthal 6-tet split),
//!   boundary classification, point location, VTK export.
//! * [`quadrature`] — tetrahedron / triangle / segment rules.
//! * [`linalg`] — complex CSR matrices, sparse LU, a Hermitian-definite
//!   generalized eigensolver, and (weighted) GMRES.
//! * [`nedelec`] — lowest-order edge elements: DOF maps, element matrices,
//!   global assembly, interpolation, discrete norms.
//! * [`decomposition`] — overlapping box decomposition and partition of unity.
//! * [`local_problems`] — local impedance systems and the discrete
//!   Maxwell-harmonic basis obtained by lifting interface data.
//! * [`coarse_spectral`] — adaptive coarse space from per-subdomain
//!   generalized eigenproblems with tolerance-based mode selection.
//! * [`coarse_economical`] — eigenproblem-free coarse space from vector
//!   spherical harmonics pulled back through a star-shape map.
//! * [`preconditioner`] — one-level / hybrid application, grid coarse space,
//!   field-of-values diagnostics.
//! * [`harness`] — experiment driver: problem cases, parameter rules,
//!   reports, sweeps, convergence studies.

pub mod coarse_economical;
pub mod coarse_spectral;
pub mod decomposition;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod local_problems;
pub mod mesh;
pub mod nedelec;
pub mod preconditioner;
pub mod quadrature;

pub use error::Error;

/// Double-precision complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
