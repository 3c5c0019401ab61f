//! Rectification of cross-attention logits against a target layout.

mod apply;
mod config;
mod offline;
mod ops;
mod plan;
mod session;

pub use apply::rectify_stack;
pub use config::{
    CalibrationConfig, SkipLayers, DEFAULT_ALPHA, DEFAULT_GUIDANCE_RATIO, DEFAULT_STEPS, DEFAULT_T_LOC,
};
pub use offline::{rectify_file, RecordedSource};
pub use ops::{adjustment_mask, inter_adjust, intra_adjust, transfer_activation};
pub use plan::{build_plan, LayerRegions, PlanEntry, RectificationPlan};
pub use session::{
    run_calibration, run_calibration_with, AttentionSource, CalibrationReport, CalibrationSession, Outcome,
    Phase, PhaseRecord, StepAttention, StepRecord,
};
