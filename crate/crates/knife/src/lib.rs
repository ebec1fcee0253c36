//! Feature-weighted kernel regression and classification with sparse
//! feature selection.
//!
//! The toolkit fits kernel models in which every input feature carries a
//! weight inside the kernel. Weights are estimated jointly with the model
//! coefficients by alternating between a convex coefficient step and a
//! box-constrained weight step on an element-wise linearization of the
//! kernel matrix. An L1 penalty on the weights drives irrelevant features
//! to exact zeros, and a path algorithm traces each feature's weight as the
//! sparsity penalty grows until the model is empty.
//!
//! Besides the core fitting loop the crate ships the synthetic benchmark
//! generators, reference baselines (ridge, kernel ridge, smoothed-hinge SVM,
//! correlation screening, recursive feature elimination), parameter
//! selection, a replicated benchmark harness, and a CLI over CSV/JSON files.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod losses;
pub mod model;
pub mod optim;
pub mod rng;

pub use error::{KnifeError, Result};
pub use kernels::{KernelSpec, LinearizedKernel, WeightVector};
pub use losses::LossSpec;
pub use model::{FitConfig, GridSpec, KnifeModel, PathResult};
pub use optim::SolverOptions;
