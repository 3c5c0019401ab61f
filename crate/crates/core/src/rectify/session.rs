use std::collections::BTreeSet;

use serde::Serialize;

use super::apply::rectify_stack;
use super::config::CalibrationConfig;
use super::plan::{build_plan, RectificationPlan};
use crate::attention::{check_discrepancy, layered_merge, temporal_merge, AttnMap, AttnStack, MapKind, ObjectCheck, Verdict};
use crate::error::{Error, Result};
use crate::layout::{parse_layout, LayoutConfig, ParsedLayout, RelationVocabulary};

/// Attention captured at one denoising step.
#[derive(Debug, Clone)]
pub struct StepAttention {
    pub logits: AttnStack,
    pub probs: AttnStack,
}

/// A denoiser seen through its cross-attention layers.
///
/// Steps count down from `T` to 1. For each step the session reads the
/// attention with [`attention`](Self::attention) and hands back the logits
/// the denoiser must continue with through [`submit`](Self::submit).
pub trait AttentionSource {
    fn attention(&mut self, step: usize) -> Result<StepAttention>;
    fn submit(&mut self, step: usize, logits: AttnStack) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Checking,
    Locating,
    Rectifying,
    PassThrough,
}

impl Phase {
    fn can_follow(self, from: Phase) -> bool {
        matches!(
            (from, self),
            (Phase::Checking, Phase::Locating)
                | (Phase::Checking, Phase::PassThrough)
                | (Phase::Locating, Phase::Rectifying)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseRecord {
    pub phase: Phase,
    /// Step at which the phase was entered.
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub phase: Phase,
    /// Token maps whose logits changed, summed over layers.
    pub modified_maps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    PassThrough,
    Rectified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub prompt: String,
    pub outcome: Outcome,
    /// Why the run passed through, when it did.
    pub reason: Option<String>,
    pub config: CalibrationConfig,
    pub layout: Option<ParsedLayout>,
    pub checks: Vec<ObjectCheck>,
    pub plan: Option<RectificationPlan>,
    pub phases: Vec<PhaseRecord>,
    pub steps: Vec<StepRecord>,
    pub warnings: Vec<String>,
}

impl CalibrationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn count_modified(before: &AttnStack, after: &AttnStack) -> usize {
    before
        .layers()
        .iter()
        .zip(after.layers())
        .map(|(a, b)| a.grids().iter().zip(b.grids()).filter(|(x, y)| x != y).count())
        .sum()
}

/// Step-by-step driver of check, locate and rectify for one prompt.
#[derive(Debug)]
pub struct CalibrationSession {
    prompt: String,
    cfg: CalibrationConfig,
    vocab: RelationVocabulary,
    layout_cfg: LayoutConfig,
    phase: Phase,
    next_step: usize,
    layout: Option<ParsedLayout>,
    checks: Vec<ObjectCheck>,
    stored: Vec<AttnMap>,
    plan: Option<RectificationPlan>,
    skip: BTreeSet<usize>,
    reason: Option<String>,
    phases: Vec<PhaseRecord>,
    steps: Vec<StepRecord>,
    warnings: Vec<String>,
}

impl CalibrationSession {
    pub fn new(prompt: &str, cfg: CalibrationConfig, vocab: RelationVocabulary, layout_cfg: LayoutConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(CalibrationSession {
            prompt: prompt.to_string(),
            next_step: cfg.steps,
            vocab,
            layout_cfg,
            phase: Phase::Checking,
            layout: None,
            checks: Vec::new(),
            stored: Vec::new(),
            plan: None,
            skip: BTreeSet::new(),
            reason: None,
            phases: vec![PhaseRecord {
                phase: Phase::Checking,
                step: cfg.steps,
            }],
            steps: Vec::new(),
            warnings: Vec::new(),
            cfg,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn plan(&self) -> Option<&RectificationPlan> {
        self.plan.as_ref()
    }

    fn enter(&mut self, phase: Phase, step: usize) {
        debug_assert!(phase.can_follow(self.phase), "{:?} -> {phase:?}", self.phase);
        self.phase = phase;
        self.phases.push(PhaseRecord { phase, step });
    }

    fn pass_through(&mut self, step: usize, reason: String) {
        log::warn!("{}: passing through: {reason}", self.prompt);
        self.warnings.push(reason.clone());
        self.reason = Some(reason);
        self.enter(Phase::PassThrough, step);
    }

    fn check(&mut self, step: usize, probs: &AttnStack) -> Result<()> {
        let layout = match parse_layout(&self.prompt, &self.vocab, &self.layout_cfg) {
            Ok(layout) => layout,
            Err(e) if e.is_parse_error() => {
                self.pass_through(step, e.to_string());
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let merged = layered_merge(probs)?;
        self.checks = check_discrepancy(&merged, &layout, self.cfg.threshold)?;
        self.layout = Some(layout);
        if self.checks.iter().all(|c| c.verdict == Verdict::Aligned) {
            self.pass_through(step, "no discrepancy between attention and layout".into());
        } else {
            self.enter(Phase::Locating, step);
            self.stored.push(merged);
        }
        Ok(())
    }

    fn locate_plan(&mut self, step: usize, stack: &AttnStack) -> Result<()> {
        let merged = temporal_merge(&self.stored)?;
        let layout = self.layout.as_ref().expect("layout parsed before locating");
        let plan = build_plan(&merged, layout, &self.checks, &stack.resolutions())?;
        self.skip = self.cfg.skip_layers.resolve(stack.n_layers());
        self.stored.clear();
        self.plan = Some(plan);
        self.enter(Phase::Rectifying, step);
        Ok(())
    }

    /// Consumes the attention of the next step and returns the logits the
    /// denoiser should continue with.
    pub fn process_step(&mut self, step: usize, attention: &StepAttention) -> Result<AttnStack> {
        if step != self.next_step || step == 0 {
            return Err(Error::InvalidValue(format!(
                "expected step {}, got {step}",
                self.next_step
            )));
        }
        let StepAttention { logits, probs } = attention;
        if logits.kind() != MapKind::Logits || probs.kind() != MapKind::Probs {
            return Err(Error::KindMismatch {
                expected: "logits and probs",
                found: "swapped or repeated kinds",
            });
        }
        if logits.resolutions() != probs.resolutions() || logits.n_tokens() != probs.n_tokens() {
            return Err(Error::ShapeMismatch("logits and probs differ in shape".into()));
        }
        self.next_step -= 1;
        let phase = self.phase;
        let out = match phase {
            Phase::Checking => {
                self.check(step, probs)?;
                if self.phase == Phase::Locating && step == self.cfg.last_locate_step() {
                    self.locate_plan(step, logits)?;
                }
                logits.clone()
            }
            Phase::Locating => {
                self.stored.push(layered_merge(probs)?);
                if step == self.cfg.last_locate_step() {
                    self.locate_plan(step, logits)?;
                }
                logits.clone()
            }
            Phase::Rectifying => {
                let plan = self.plan.as_ref().expect("plan built before rectifying");
                rectify_stack(logits, plan, self.cfg.alpha, &self.skip)?
            }
            Phase::PassThrough => logits.clone(),
        };
        self.steps.push(StepRecord {
            step,
            phase,
            modified_maps: count_modified(logits, &out),
        });
        Ok(out)
    }

    pub fn finish(self) -> CalibrationReport {
        let outcome = if self.plan.is_some() {
            Outcome::Rectified
        } else {
            Outcome::PassThrough
        };
        CalibrationReport {
            prompt: self.prompt,
            outcome,
            reason: self.reason,
            config: self.cfg,
            layout: self.layout,
            checks: self.checks,
            plan: self.plan,
            phases: self.phases,
            steps: self.steps,
            warnings: self.warnings,
        }
    }
}

/// Runs a full calibration over `source` with the default vocabulary and
/// layout settings.
pub fn run_calibration(prompt: &str, source: &mut dyn AttentionSource, cfg: &CalibrationConfig) -> Result<CalibrationReport> {
    run_calibration_with(prompt, source, cfg, &RelationVocabulary::default(), &LayoutConfig::default())
}

pub fn run_calibration_with(
    prompt: &str,
    source: &mut dyn AttentionSource,
    cfg: &CalibrationConfig,
    vocab: &RelationVocabulary,
    layout_cfg: &LayoutConfig,
) -> Result<CalibrationReport> {
    let mut session = CalibrationSession::new(prompt, cfg.clone(), vocab.clone(), *layout_cfg)?;
    for step in (1..=cfg.steps).rev() {
        let attention = source.attention(step)?;
        let logits = session.process_step(step, &attention)?;
        source.submit(step, logits)?;
    }
    Ok(session.finish())
}
