//! Finite element solver for the Fermi pencil-beam equation
//!
//! ```text
//! du/dx + eta du/dy = (sigma_tr / 2) d2u/deta2      on I_x x I_y x I_eta
//! ```
//!
//! The penetration coordinate x acts as time: the (y, eta) phase-space
//! cross-section is discretized with P1 triangles and marched in x by
//! backward Euler. Three spatial discretizations are provided (standard
//! Galerkin, semi-streamline diffusion, and a characteristic scheme that
//! transports along beam trajectories), together with red-green adaptive
//! mesh refinement driven by the closed-form Gaussian solution, and a
//! Kronecker tensor-product stepper for the full 3D phase space
//! (y, z, eta, xi).

pub mod adapt;
pub mod analytic;
pub mod assembly;
pub mod error;
pub mod mesh;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod stepper;
pub mod tensor3d;

pub use error::{Error, Result};
pub use mesh::{BoundaryTag, Rect, TriMesh};
pub use sparse::SparseMatrix;
