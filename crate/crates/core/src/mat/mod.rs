//! Core matrix kernel: dense containers plus the three structured sparse
//! forms used by the operator builders, with deterministic reductions,
//! budgeted densification and Matrix Market I/O.

mod banded;
mod block;
mod dense;
mod lifted;
pub mod market;

pub use banded::{BandedMatrix, DEFAULT_DENSIFY_BUDGET};
pub use block::BlockLowerTriangular;
pub use dense::{dense_matmul, DenseMat, DenseVec};
pub use lifted::LiftedAttnMatrix;
