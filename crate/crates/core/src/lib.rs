//! Tensor recovery built around the *full feature measure* (FFM), a tensor
//! sparsity measure that averages the ranks of every mode-`k` matrix
//! unfolding and every mode-`k1k2` tensor unfolding of an `N`-order tensor.
//!
//! The crate provides:
//!
//! * dense tensors with the unfolding/folding operators the measure is built
//!   on ([`tensor`]),
//! * the tensor-tensor product, transpose, and t-SVD from which tubal ranks
//!   are defined ([`tprod`]),
//! * closed-form proximal ("shrinkage") operators for the log-sum relaxation
//!   of rank ([`shrinkage`]),
//! * the measure itself plus classical baselines (SNN, TNN) ([`ffm`]),
//! * ADMM solvers for tensor completion and tensor robust PCA that minimize
//!   the relaxed measure ([`solvers`]),
//! * reconstruction quality metrics ([`metrics`]),
//! * a small binary tensor file format, deterministic degradation
//!   generators, and CSV convergence reports ([`io`]).
//!
//! Conventions used throughout: tensors are stored as flat `f64` buffers in
//! first-index-fastest (column-major) order, modes are numbered `1..=N` in
//! the public API, and every operation is a pure function of its inputs.

pub mod error;
pub mod ffm;
pub mod io;
pub mod metrics;
pub mod shrinkage;
pub mod solvers;
pub mod tensor;
pub mod tprod;

#[cfg(any(test, feature = "testsupport"))]
pub mod testsupport;

pub use error::{Error, Result};
pub use ffm::{MeasureReport, ModePairWeights};
pub use io::{ObservationMask, SplitMix64, TensorFileHeader};
pub use metrics::{BandMode, MetricConfig, PeakMode};
pub use shrinkage::LogShrinkParams;
pub use solvers::{RpcaConfig, SolveReport, TcConfig, Termination};
pub use tensor::{DenseTensor, ModePair};
pub use tprod::{ComplexTensor3, TsvdFactors};
