use super::scene::SimScene;
use super::synth::synth_step;
use crate::attention::AttnStack;
use crate::error::{Error, Result};
use crate::rectify::{AttentionSource, StepAttention};

/// Step-by-step synthetic denoiser that reacts to submitted logits.
#[derive(Debug, Clone)]
pub struct SimDenoiser {
    scene: SimScene,
    steps: usize,
    pending: Option<StepAttention>,
    prev_rectified: Option<AttnStack>,
    final_probs: Option<AttnStack>,
    record: bool,
    submitted: Vec<AttnStack>,
}

impl SimDenoiser {
    pub fn new(scene: SimScene, steps: usize) -> Result<Self> {
        scene.validate()?;
        if steps == 0 {
            return Err(Error::InvalidConfig("need at least one step".into()));
        }
        Ok(SimDenoiser {
            scene,
            steps,
            pending: None,
            prev_rectified: None,
            final_probs: None,
            record: false,
            submitted: Vec::new(),
        })
    }

    /// Keeps every submitted logits stack, for export.
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn scene(&self) -> &SimScene {
        &self.scene
    }

    /// Probs synthesized at step 1, before any rectification of that step.
    pub fn final_probs(&self) -> Option<&AttnStack> {
        self.final_probs.as_ref()
    }

    pub fn submitted(&self) -> &[AttnStack] {
        &self.submitted
    }

    /// Runs every step without touching the attention.
    pub fn run_unmodified(&mut self) -> Result<()> {
        for t in (1..=self.steps).rev() {
            let att = self.attention(t)?;
            self.submit(t, att.logits)?;
        }
        Ok(())
    }
}

impl AttentionSource for SimDenoiser {
    fn attention(&mut self, step: usize) -> Result<StepAttention> {
        let att = synth_step(&self.scene, step, self.steps, self.prev_rectified.as_ref())?;
        if step == 1 {
            self.final_probs = Some(att.probs.clone());
        }
        self.pending = Some(att.clone());
        Ok(att)
    }

    fn submit(&mut self, step: usize, logits: AttnStack) -> Result<()> {
        let pending = self
            .pending
            .take()
            .ok_or_else(|| Error::InvalidValue(format!("step {step} submitted before it was read")))?;
        if pending.logits.step != step {
            return Err(Error::InvalidValue(format!(
                "submitted step {step}, expected {}",
                pending.logits.step
            )));
        }
        let probs = if logits == pending.logits {
            pending.probs
        } else {
            logits.softmax_tokens()?
        };
        if self.record {
            self.submitted.push(logits);
        }
        self.prev_rectified = Some(probs);
        Ok(())
    }
}
