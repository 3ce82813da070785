//! Interpolatory model reduction of polynomial dynamical systems
//! `E ẋ = A x + Σ H_ξ x^{⊗ξ} + Σ N_η (u ⊗ x^{⊗η}) + B u`, `y = C x`,
//! with optional CUR hyper-reduction of the reduced nonlinearities.

pub mod benchmarks;
pub mod cur;
pub mod dense;
pub mod error;
pub mod interp;
pub mod kron;
pub mod linsolve;
pub mod loewner;
pub mod mmio;
pub mod rom;
pub mod sim;
pub mod sparse;
pub mod system;
pub mod transfer;

pub use benchmarks::{make_chafee, make_chafee_parametric, make_fhn, Benchmark, BenchmarkName, BenchmarkSpec};
pub use cur::{build_hyper, hyper_rhs, CurHyperModel, Selection};
pub use error::{Error, Result};
pub use interp::{InterpMode, InterpolationSet, RawBases};
pub use loewner::{reduce, reduce_parametric, LoewnerPencil, OrderSpec, ReduceOptions, ReductionResult};
pub use rom::{ParametricReducedSystem, ReducedSystem};
pub use sim::{compare, integrate, Dynamics, ErrorReport, InputSignal, IntegratorOptions, Trajectory};
pub use sparse::SparseMatrix;
pub use system::{
    lift_cubic_to_qb, AffineParametricSystem, AffineTerm, Coefficient, HadamardTerm, Nonlinearity, PolynomialSystem,
};
pub use transfer::{FullModel, TfKind, TransferModel, C64};
