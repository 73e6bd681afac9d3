//! Kernel spectral clustering with executable margin bounds.
//!
//! Builds affinity graphs from exponential-power kernels, forms the
//! unnormalized, normalized and self-loop-free normalized Laplacians, embeds
//! points with their leading eigenvectors, and checks the resulting embeddings
//! against closed-form eigenvector, eigenvalue and maximum-margin bounds. A
//! density-estimation layer truncates samples to an estimated level set and
//! counts its connected components from the scaled spectrum.

pub mod bounds;
pub mod cluster;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod graph;
pub mod kde;
pub mod kernel;
pub mod matrix;
pub mod points;

pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::Variant;
pub use kernel::KernelSpec;
pub use matrix::DenseMatrix;
pub use points::{Partition, PointSet};
