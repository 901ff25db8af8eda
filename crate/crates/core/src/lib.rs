//! Metropolis-adjusted Langevin sampling with a trace-aware step-size
//! policy, plus numerical checks of the quantities that control its
//! acceptance rate and mixing time.
//!
//! MALA is implemented as Metropolized HMC with a single leapfrog step:
//!
//! ```text
//! q_η = q₀ + η p₀ − (η²/2) ∇f(q₀)
//! p_η = p₀ − (η/2) ∇f(q₀) − (η/2) ∇f(q_η)
//! ```
//!
//! accepted with probability `min{1, exp(−Δ_η)}` where `Δ_η` is the change
//! in `f(q) + ½‖p‖²`.

pub mod error;
pub mod kernel;
pub mod mixing;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod targets;
pub mod theory;
pub mod trajectory;
pub mod vecops;

pub use error::{Error, Result};
pub use kernel::{
    acceptance_probability, energy_difference, leapfrog, mala_step, run_chain, theorem1_policy, ChainState,
    ChainStats, Init, PhasePoint, RunOptions, StepSizePolicy, C0,
};
pub use targets::{
    make_anisotropic, make_cosine_perturbed, make_flat, make_isotropic, make_quadratic, Psi, SmoothnessProfile,
    TargetDensity,
};
pub use trajectory::Trajectory;
