//! Mixed finite element computation of real transmission eigenvalues for
//! anisotropic media with unit index of refraction.
//!
//! The pipeline is
//!
//! 1. [`mesh`]: simplicial meshes of the benchmark domains, uniform red
//!    refinement with curved-boundary projection, text I/O;
//! 2. [`material`]: the anisotropy matrix `A`, its regime and the weight
//!    matrices of the mixed bilinear forms;
//! 3. [`assembly`]: the P1 x P0^d x P1 block matrices, the zero-mean
//!    constraint vectors and the full pencil `(K, M)`;
//! 4. [`deflation`]: elimination of the piecewise-constant block, giving the
//!    reduced pencil `(K_hat, M_hat)` that shares every finite eigenvalue;
//! 5. [`eigen`]: shift-invert Krylov-Schur over a sparse LU, plus a dense QZ
//!    oracle for small pencils;
//! 6. [`harness`]: convergence studies, benchmark presets and CSV output.

pub mod assembly;
pub mod deflation;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod material;
pub mod mesh;
pub mod sparse;

pub use assembly::{BlockPencil, DofMap, BlockSet};
pub use deflation::ReducedPencil;
pub use eigen::{EigenPair, EigenSolution, ShiftInvertConfig};
pub use error::{Error, Result};
pub use harness::{ConvergenceReport, Preset};
pub use material::{MaterialModel, Regime};
pub use mesh::{DomainSpec, Mesh};
pub use sparse::CsrMatrix;
