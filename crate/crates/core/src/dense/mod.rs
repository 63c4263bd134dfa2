//! Reference integrator over the full cavity ⊗ ancilla (⊗ readout) space.

pub mod hybrid;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod rwa;

pub use hybrid::{hybrid_model, simulate_aqec_hybrid, HybridState};
pub use integrator::{integrate_ode, IntegratorOptions, Trajectory};
pub use model::{lindblad_rhs, Coefficient, LindbladModel};
pub use noise::{
    amplitude_damping_functions, phase_damping_rate, simulate_amplitude_damping, simulate_phase_damping,
    AmplitudeDampingParams, PhaseDampingParams,
};
pub use rwa::{simulate_rwa_three_mode, RwaConfig, RwaResult};
