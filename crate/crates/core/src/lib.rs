//! Localized spectral graph filter frames.
//!
//! The crate covers the whole pipeline for dictionaries whose atoms are
//! spectral filters localized at center vertices, `phi_{i,j} = g_j(L) delta_i`:
//!
//! * [`graph`] / [`laplacian`] / [`eigen`]: sparse graphs, Laplacians, spectral
//!   range estimates and the exact dense eigendecomposition used as an oracle.
//! * [`spectrum`]: eigenvalue and training-energy cumulative densities, exact
//!   and by kernel polynomial (KPM) estimation.
//! * [`kernel`] / [`design`]: kernel families, warpings and filter banks.
//! * [`chebyshev`]: Chebyshev / Jackson-Chebyshev approximation and `O(K|E|)`
//!   filtering.
//! * [`frame`]: the dictionary with analysis, synthesis, frame bounds and the
//!   three fast inverse transforms.
//! * [`sampling`]: center-vertex selection and band-by-band reconstruction.
//! * [`tasks`]: SURE soft-threshold denoising, OMP and hard-threshold
//!   compression, metrics.
//! * [`io`], [`config`], [`pipeline`]: file formats and the CLI plumbing.

pub mod chebyshev;
pub mod config;
pub mod design;
pub mod eigen;
pub mod error;
pub mod frame;
pub mod generators;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod laplacian;
pub mod linalg;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod signals;
pub mod spectrum;
pub mod tasks;

pub use chebyshev::ChebyshevApprox;
pub use design::FilterBank;
pub use eigen::EigenDecomposition;
pub use error::{Error, Result};
pub use frame::{Coefficients, Dictionary, FrameBounds, Inverse};
pub use graph::SparseGraph;
pub use kernel::{Kernel, KernelShape, Warping};
pub use laplacian::{Laplacian, LaplacianKind};
pub use spectrum::{EnergyCdf, SpectralCdf};
