//! Simulation and discovery toolkit for autonomous quantum error correction
//! in a bosonic cavity coupled to a dissipative ancilla.
//!
//! Fock indices are zero-based throughout and time is the dimensionless
//! product `γ_a t`.

pub mod analytic;
pub mod benchmark;
pub mod codes;
pub mod dense;
pub mod error;
pub mod fidelity;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod params;
pub mod rl;

pub use analytic::{
    build_diagonal_generator, evolve, evolve_series, solve_diagonal, AnalyticSolver, DiagonalGenerator,
};
pub use codes::{named_code, CodeName, Codeword, NamedCode, Recovery};
pub use error::{Error, Result};
pub use fidelity::{breakeven_reference, cardinal_states, gain, mean_fidelity, CardinalSet, SolverChoice};
pub use fock::{
    apply_lindblad_an, apply_lindblad_eng, assemble_from_diagonals, extract_diagonal, DiagonalVector,
    FockDensityMatrix, ProjectorLadder,
};
pub use params::{LossChannelSet, SystemParams};
