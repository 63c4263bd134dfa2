//! Reinforcement-learning search over codewords and recovery ladders.

pub mod curriculum;
pub mod env;
pub mod nn;
pub mod policy;
pub mod ppo;

pub use curriculum::{
    evaluate_action, run_curriculum, BestCode, EpisodeSummary, JsonlWriter, TrainConfig, TrainingArtifact,
};
pub use env::{
    grl_action, reward_delta_fidelity, run_scripted, ActionVector, AqecEnv, CurriculumSchedule, EpisodeRecord,
    Observation, RewardConfig, RewardMode, Termination, OBS_DIM,
};
pub use policy::{ActorCritic, NetworkConfig};
pub use ppo::{compute_advantages, ppo_update, PpoConfig, Transition};
