//! Training-free layout calibration for text-to-image diffusion.
//!
//! The crate follows a check, locate, rectify pipeline over cross-attention
//! maps:
//!
//! - [`layout`] turns a prompt into a target layout (one relative box per
//!   object) using a closed spatial-relation grammar.
//! - [`attention`] holds the attention tensor model plus the merging,
//!   discrepancy check and sliding-window localization.
//! - [`rectify`] moves and re-weights pre-softmax activations and drives a
//!   whole calibration session step by step.
//! - [`sim`] is a deterministic synthetic denoiser that produces attention
//!   tensors and reacts to rectified logits, so the pipeline can be checked
//!   end to end without a diffusion model.
//! - [`bench`] regenerates superlative-relation benchmark prompts with gold
//!   annotations.
//!
//! The `layoutcal` binary exposes the same operations over files; see
//! [`cli`].

pub mod attention;
pub mod bench;
pub mod cli;
pub mod error;
pub mod layout;
pub mod rectify;
pub mod sim;

pub use error::{Error, Result};
