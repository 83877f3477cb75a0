//! Parareal with a fast-wave-averaged coarse propagator for equations of the
//! form `u_t + (1/ε) L u + N(u, u) = 0`, applied to the 1-D rotating shallow
//! water equations.
//!
//! * [`spectral`]: Fourier discretization, the linear symbol and its exact
//!   exponential.
//! * [`kernel`]: averaging kernels, the averaged nonlinearity and `Λ(η)`.
//! * [`propagators`]: the fine (Strang) and coarse (averaged) solvers.
//! * [`parareal`]: the Parareal iteration.
//! * [`resonance`]: triad enumeration and the mismatch spectrum.
//! * [`window_opt`]: optimal averaging-window prediction.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`.

pub mod error;
pub mod kernel;
pub mod parareal;
pub mod propagators;
pub mod resonance;
pub mod scalar;
pub mod spectral;
pub mod system;
pub mod window_opt;

pub use error::{Error, Result};
pub use kernel::{
    averaged_nonlinear, averaged_nonlinear_with, lambda_functional, AveragingConfig, AveragingQuadrature, Kernel,
    KernelKind, KernelTransform,
};
pub use parareal::{
    error_vs_iteration, initial_coarse_sweep, parareal_iterate, run_apint, PararealConfig, PararealRun, RunStatus,
    Schedule,
};
pub use propagators::{
    coarse_error_norm, coarse_propagate, fine_propagate, fine_step, CoarseConfig, CoarsePropagator, FineConfig,
    FinePropagator, Propagator,
};
pub use resonance::{classify_shells, enumerate_triads, mismatch_spectrum, Triad, TriadTable};
pub use scalar::Real;
pub use spectral::{EigenDecomposition, ModelConfig, RsweModel, SpectralState};
pub use system::{LinearPart, OscillatorySystem};
pub use window_opt::{
    fit_constants, objective, optimize_full, optimize_simple, scaling_heuristic, FitConstants, Measurement,
    StiffnessModel, WindowPrediction,
};

pub type State = SpectralState<f64>;
pub type Model = RsweModel<f64>;
pub type Config = ModelConfig<f64>;
pub type Run = PararealRun<f64>;

pub type StateF32 = SpectralState<f32>;
pub type ModelF32 = RsweModel<f32>;
