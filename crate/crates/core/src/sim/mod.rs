//! Synthetic denoiser for end-to-end runs without a diffusion model.
//!
//! Each object token gets a Gaussian logit blob. The first step places it at
//! the object's bias. Later steps move it toward where the previous step's
//! submitted attention put the object, by the scene's feedback share.

mod denoiser;
mod eval;
mod oracle;
mod scene;
mod suite;
mod synth;

pub use denoiser::SimDenoiser;
pub use eval::{evaluate_layout, ObjectOutcome, SimResult};
pub use oracle::brute_force_locate;
pub use scene::{
    misplaced_scene, SimObject, SimScene, BIAS_CLEARANCE, DEFAULT_AMPLITUDE, DEFAULT_BACKGROUND, DEFAULT_FEEDBACK,
    DEFAULT_NOISE, DEFAULT_OFFSET, DEFAULT_RESOLUTIONS, DEFAULT_SIGMA,
};
pub use suite::{generate_cases, run_case, run_suite, SceneCase, SceneRun, SuiteSummary};
pub use synth::{blob_centers, synth_step};
