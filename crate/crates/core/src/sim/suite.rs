use rayon::prelude::*;
use serde::Serialize;

use super::denoiser::SimDenoiser;
use super::eval::{evaluate_layout, SimResult};
use super::scene::{misplaced_scene, SimScene};
use crate::bench::{generate_benchmark, BenchConfig, CountSpec};
use crate::error::{Error, Result};
use crate::layout::{parse_layout, LayoutConfig, ParsedLayout, RelationVocabulary};
use crate::rectify::{run_calibration, CalibrationConfig, Outcome};

/// One prompt, its target layout and the scene that misplaces it.
#[derive(Debug, Clone)]
pub struct SceneCase {
    pub id: usize,
    pub layout: ParsedLayout,
    pub scene: SimScene,
}

fn scene_seed(seed: u64, id: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id as u64)
}

impl SceneCase {
    /// Parses `prompt` and biases each of its objects away from its box.
    pub fn from_prompt(id: usize, prompt: &str, seed: u64, feedback: f64) -> Result<Self> {
        let layout = parse_layout(prompt, &RelationVocabulary::default(), &LayoutConfig::default())?;
        Self::from_layout(id, layout, seed, feedback)
    }

    pub fn from_layout(id: usize, layout: ParsedLayout, seed: u64, feedback: f64) -> Result<Self> {
        let scene = misplaced_scene(&layout, scene_seed(seed, id), feedback)?;
        Ok(SceneCase { id, layout, scene })
    }
}

/// Seeded cases with one to `max_objects` objects, each biased outside its
/// target box.
pub fn generate_cases(n: usize, max_objects: usize, seed: u64, feedback: f64) -> Result<Vec<SceneCase>> {
    if max_objects == 0 {
        return Err(Error::InvalidConfig("scenes need at least one object".into()));
    }
    let bench = BenchConfig {
        counts: CountSpec::Weights(vec![1.0; max_objects]),
        seed,
        ..Default::default()
    };
    generate_benchmark(n, &bench)?
        .into_iter()
        .map(|p| SceneCase::from_prompt(p.id, &p.text, seed, feedback))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneRun {
    pub id: usize,
    pub prompt: String,
    pub result: SimResult,
    /// `None` when calibration was off.
    pub outcome: Option<Outcome>,
    pub rectified_steps: usize,
}

/// Runs one case with calibration, or untouched when `calibration` is
/// `None`. Both use the same number of steps.
pub fn run_case(case: &SceneCase, calibration: &CalibrationConfig, calibrate: bool) -> Result<SceneRun> {
    let mut sim = SimDenoiser::new(case.scene.clone(), calibration.steps)?;
    let (outcome, rectified_steps) = if calibrate {
        let report = run_calibration(&case.layout.prompt, &mut sim, calibration)?;
        let rectified = report.steps.iter().filter(|s| s.modified_maps > 0).count();
        (Some(report.outcome), rectified)
    } else {
        sim.run_unmodified()?;
        (None, 0)
    };
    let final_probs = sim.final_probs().expect("step 1 was synthesized");
    Ok(SceneRun {
        id: case.id,
        prompt: case.layout.prompt.clone(),
        result: evaluate_layout(final_probs, &case.layout)?,
        outcome,
        rectified_steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub calibrated: bool,
    pub scenes: usize,
    /// Share of scenes with every object inside its box.
    pub scene_accuracy: f64,
    /// Share of objects inside their boxes.
    pub object_accuracy: f64,
    pub runs: Vec<SceneRun>,
}

pub fn run_suite(cases: &[SceneCase], calibration: &CalibrationConfig, calibrate: bool) -> Result<SuiteSummary> {
    let runs = cases
        .par_iter()
        .map(|c| run_case(c, calibration, calibrate))
        .collect::<Result<Vec<_>>>()?;
    let scenes = runs.len();
    let correct = runs.iter().filter(|r| r.result.all_correct()).count();
    let objects: usize = runs.iter().map(|r| r.result.objects.len()).sum();
    let successes: usize = runs.iter().map(|r| r.result.successes).sum();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(SuiteSummary {
        calibrated: calibrate,
        scenes,
        scene_accuracy: ratio(correct, scenes),
        object_accuracy: ratio(successes, objects),
        runs,
    })
}
