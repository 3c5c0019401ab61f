use super::config::CalibrationConfig;
use super::session::{run_calibration_with, AttentionSource, CalibrationReport, StepAttention};
use crate::attention::{AttnStack, MapKind, TensorFile};
use crate::error::{Error, Result};
use crate::layout::{LayoutConfig, RelationVocabulary};

/// Replays recorded logits, one stack per step, and collects what the
/// session submits back.
#[derive(Debug)]
pub struct RecordedSource {
    stacks: Vec<AttnStack>,
    submitted: Vec<AttnStack>,
}

impl RecordedSource {
    pub fn new(file: TensorFile) -> Result<Self> {
        if file.kind() != MapKind::Logits {
            return Err(Error::KindMismatch {
                expected: "logits",
                found: "probs",
            });
        }
        Ok(RecordedSource {
            stacks: file.into_stacks(),
            submitted: Vec::new(),
        })
    }

    pub fn steps(&self) -> usize {
        self.stacks.len()
    }

    pub fn into_output(self) -> Result<TensorFile> {
        TensorFile::new(self.submitted)
    }

    fn stack(&self, step: usize) -> Result<&AttnStack> {
        self.stacks
            .iter()
            .find(|s| s.step == step)
            .ok_or_else(|| Error::InvalidValue(format!("no recorded stack for step {step}")))
    }
}

impl AttentionSource for RecordedSource {
    fn attention(&mut self, step: usize) -> Result<StepAttention> {
        let logits = self.stack(step)?.clone();
        let probs = logits.softmax_tokens()?;
        Ok(StepAttention { logits, probs })
    }

    fn submit(&mut self, step: usize, logits: AttnStack) -> Result<()> {
        self.stack(step)?;
        self.submitted.push(logits);
        Ok(())
    }
}

/// Runs a session over a recorded logits file. The step count comes from
/// the file; probs are the per-position softmax of the logits.
pub fn rectify_file(
    input: TensorFile,
    prompt: &str,
    cfg: &CalibrationConfig,
    vocab: &RelationVocabulary,
    layout_cfg: &LayoutConfig,
) -> Result<(TensorFile, CalibrationReport)> {
    let mut source = RecordedSource::new(input)?;
    let cfg = CalibrationConfig {
        steps: source.steps(),
        ..cfg.clone()
    };
    let report = run_calibration_with(prompt, &mut source, &cfg, vocab, layout_cfg)?;
    Ok((source.into_output()?, report))
}
