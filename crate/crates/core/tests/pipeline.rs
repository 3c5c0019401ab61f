use std::collections::BTreeSet;

use layoutcal::attention::{AttnMap, AttnStack, Grid, MapKind, PixelRegion, TensorFile};
use layoutcal::layout::{parse_layout, LayoutConfig, RelBox, RelationVocabulary};
use layoutcal::rectify::{
    inter_adjust, intra_adjust, rectify_file, rectify_stack, run_calibration, transfer_activation, AttentionSource,
    CalibrationConfig, CalibrationSession, LayerRegions, Outcome, Phase, PlanEntry, RectificationPlan, SkipLayers,
    StepAttention,
};
use layoutcal::sim::{synth_step, SceneCase, SimDenoiser, SimObject, SimScene};
use layoutcal::Error;

fn scene(prompt: &str, objects: Vec<SimObject>) -> SimScene {
    SimScene {
        objects,
        ..SimScene::from_json(&format!(r#"{{"prompt":"{prompt}","objects":[]}}"#)).unwrap()
    }
}

fn blob(token: usize, bias: [f64; 2]) -> SimObject {
    SimObject {
        token,
        bias,
        sigma: 0.08,
        amplitude: 12.0,
    }
}

#[test]
fn no_keywords_passes_through() {
    let mut sim = SimDenoiser::new(scene("a photo of a horse", vec![blob(4, [0.7, 0.5])]), 20).unwrap();
    let report = run_calibration("a photo of a horse", &mut sim, &CalibrationConfig::default()).unwrap();
    assert_eq!(report.outcome, Outcome::PassThrough);
    assert_eq!(report.steps.len(), 20);
    assert!(report.steps.iter().all(|s| s.modified_maps == 0 && s.phase != Phase::Rectifying));
    assert!(report.plan.is_none());
    assert_eq!(report.phases.last().unwrap().phase, Phase::PassThrough);
}

#[test]
fn aligned_objects_pass_through() {
    let prompt = "a dog on the left";
    let mut sim = SimDenoiser::new(scene(prompt, vec![blob(1, [0.2, 0.5])]), 20).unwrap();
    let report = run_calibration(prompt, &mut sim, &CalibrationConfig::default()).unwrap();
    assert_eq!(report.outcome, Outcome::PassThrough);
    assert!(report.checks[0].inside_fraction >= 0.2);
    assert!(report.steps.iter().all(|s| s.modified_maps == 0));
}

#[test]
fn ambiguous_prompt_degrades_with_warning() {
    let prompt = "a dog on";
    let mut sim = SimDenoiser::new(scene(prompt, vec![blob(1, [0.7, 0.5])]), 20).unwrap();
    let report = run_calibration(prompt, &mut sim, &CalibrationConfig::default()).unwrap();
    assert_eq!(report.outcome, Outcome::PassThrough);
    assert_eq!(report.warnings.len(), 1);
    assert!(report.reason.as_deref().unwrap().contains("ambiguous"));
}

#[test]
fn one_misplaced_object_rectifies_nineteen_steps() {
    let prompt = "a dog on the left";
    let mut sim = SimDenoiser::new(scene(prompt, vec![blob(1, [0.8, 0.5])]), 20).unwrap();
    let report = run_calibration(prompt, &mut sim, &CalibrationConfig::default()).unwrap();
    assert_eq!(report.outcome, Outcome::Rectified);
    assert_eq!(report.plan.as_ref().unwrap().entries.len(), 1);
    let rectified: Vec<usize> = report.steps.iter().filter(|s| s.modified_maps > 0).map(|s| s.step).collect();
    assert_eq!(rectified, (1..=19).rev().collect::<Vec<_>>());
    let phases: Vec<(Phase, usize)> = report.phases.iter().map(|p| (p.phase, p.step)).collect();
    assert_eq!(
        phases,
        [(Phase::Checking, 20), (Phase::Locating, 20), (Phase::Rectifying, 20)]
    );
    // 4 of 6 layers, every token of a 6-token prompt touched by the mask or the edit
    assert!(report.steps[1..].iter().all(|s| s.modified_maps == 4 * 6));
}

#[test]
fn later_localization_stores_more_steps() {
    let prompt = "a dog on the left";
    let cfg = CalibrationConfig {
        t_loc: 5,
        ..Default::default()
    };
    let mut sim = SimDenoiser::new(scene(prompt, vec![blob(1, [0.8, 0.5])]), 20).unwrap();
    let report = run_calibration(prompt, &mut sim, &cfg).unwrap();
    assert_eq!(report.phases.last().unwrap().step, 16);
    assert_eq!(report.steps.iter().filter(|s| s.modified_maps > 0).count(), 15);
}

#[test]
fn report_json_has_the_contract_fields() {
    let case = SceneCase::from_prompt(0, "a cat on the right and a bus on the left", 3, 0.8).unwrap();
    let mut sim = SimDenoiser::new(case.scene, 20).unwrap();
    let report = run_calibration("a cat on the right and a bus on the left", &mut sim, &CalibrationConfig::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    for key in ["phases", "plan", "steps", "config", "checks", "outcome"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["config"]["alpha"], 10.0);
    assert_eq!(v["config"]["guidance_ratio"], 5.0);
    let entry = &v["plan"]["entries"][0];
    assert_eq!(entry["layers"].as_array().unwrap().len(), 6);
    assert!(entry["layers"][0]["source"]["col_start"].is_u64());
}

#[test]
fn session_rejects_out_of_order_steps() {
    let s = scene("a dog on the left", vec![blob(1, [0.8, 0.5])]);
    let mut session = CalibrationSession::new(
        "a dog on the left",
        CalibrationConfig::default(),
        RelationVocabulary::default(),
        LayoutConfig::default(),
    )
    .unwrap();
    let att = synth_step(&s, 19, 20, None).unwrap();
    assert!(session.process_step(19, &att).is_err());
    let swapped = StepAttention {
        logits: att.probs.clone(),
        probs: att.logits.clone(),
    };
    assert!(matches!(session.process_step(20, &swapped), Err(Error::KindMismatch { .. })));
}

fn toy_stack(n_layers: usize) -> AttnStack {
    let layers = (0..n_layers)
        .map(|l| {
            let grids = (0..3)
                .map(|k| Grid::from_fn(8, 8, |r, c| ((r * 8 + c) as f64 * 0.37 + k as f64 + l as f64).sin()).unwrap())
                .collect();
            AttnMap::new(MapKind::Logits, grids).unwrap()
        })
        .collect();
    AttnStack::new(5, layers).unwrap()
}

fn toy_plan(n_layers: usize) -> RectificationPlan {
    let source = PixelRegion::new(2, 5, 4, 7).unwrap();
    let target = PixelRegion::new(0, 3, 0, 3).unwrap();
    RectificationPlan {
        merged_width: 8,
        merged_height: 8,
        entries: vec![PlanEntry {
            object: 0,
            token: 1,
            target_box: RelBox::new(0.1875, 0.1875, 0.375, 0.375).unwrap(),
            source,
            target,
            layers: vec![
                LayerRegions {
                    width: 8,
                    height: 8,
                    source,
                    target,
                };
                n_layers
            ],
        }],
    }
}

#[test]
fn empty_plan_leaves_stack_unchanged() {
    let stack = toy_stack(3);
    let plan = RectificationPlan {
        merged_width: 8,
        merged_height: 8,
        entries: vec![],
    };
    assert_eq!(rectify_stack(&stack, &plan, 10.0, &BTreeSet::new()).unwrap(), stack);
}

#[test]
fn skip_layers_untouched() {
    let stack = toy_stack(3);
    let skip = SkipLayers::FirstAndLast.resolve(3);
    let out = rectify_stack(&stack, &toy_plan(3), 10.0, &skip).unwrap();
    assert_eq!(out.layer(0), stack.layer(0));
    assert_eq!(out.layer(2), stack.layer(2));
    assert_ne!(out.layer(1), stack.layer(1));
}

#[test]
fn stack_edit_equals_composed_sub_operations() {
    let stack = toy_stack(2);
    let plan = toy_plan(2);
    let out = rectify_stack(&stack, &plan, 10.0, &BTreeSet::new()).unwrap();
    let entry = &plan.entries[0];
    for l in 0..2 {
        let layer = stack.layer(l);
        let moved = transfer_activation(layer.token(1), &entry.source, &entry.target).unwrap();
        let adjusted = intra_adjust(&moved, &entry.target, 10.0).unwrap();
        let mut grids = layer.grids().to_vec();
        grids[1] = adjusted;
        let expected = inter_adjust(&AttnMap::new(MapKind::Logits, grids).unwrap(), 1).unwrap();
        assert_eq!(out.layer(l), &expected);
    }
}

#[test]
fn plan_stack_mismatch() {
    let stack = toy_stack(2);
    assert!(matches!(
        rectify_stack(&stack, &toy_plan(3), 10.0, &BTreeSet::new()),
        Err(Error::PlanStackMismatch(_))
    ));
    let mut plan = toy_plan(2);
    plan.entries[0].layers[1].width = 16;
    assert!(matches!(
        rectify_stack(&stack, &plan, 10.0, &BTreeSet::new()),
        Err(Error::PlanStackMismatch(_))
    ));
    let probs = stack.softmax_tokens().unwrap();
    assert!(rectify_stack(&probs, &toy_plan(2), 10.0, &BTreeSet::new()).is_err());
}

fn recorded(prompt: &str, bias: [f64; 2], steps: usize) -> TensorFile {
    let s = scene(prompt, vec![blob(1, bias)]);
    let stacks = (1..=steps)
        .rev()
        .map(|t| synth_step(&s, t, steps, None).unwrap().logits)
        .collect();
    TensorFile::new(stacks).unwrap()
}

#[test]
fn offline_pass_through_is_byte_identical() {
    let input = recorded("a dog in a park", [0.8, 0.5], 4);
    let bytes = input.to_bytes();
    let (out, report) = rectify_file(
        input,
        "a dog in a park",
        &CalibrationConfig::default(),
        &RelationVocabulary::default(),
        &LayoutConfig::default(),
    )
    .unwrap();
    assert_eq!(report.outcome, Outcome::PassThrough);
    assert_eq!(out.to_bytes(), bytes);
}

#[test]
fn offline_rectification_changes_later_steps_only() {
    let input = recorded("a dog on the left", [0.8, 0.5], 4);
    let before = input.clone();
    let (out, report) = rectify_file(
        input,
        "a dog on the left",
        &CalibrationConfig::default(),
        &RelationVocabulary::default(),
        &LayoutConfig::default(),
    )
    .unwrap();
    assert_eq!(report.outcome, Outcome::Rectified);
    assert_eq!(report.config.steps, 4);
    assert_eq!(out.stacks()[0], before.stacks()[0]);
    for (a, b) in out.stacks()[1..].iter().zip(&before.stacks()[1..]) {
        assert_ne!(a, b);
        assert_eq!(a.layer(0), b.layer(0));
    }
}

#[test]
fn layout_drives_the_check() {
    let layout = parse_layout("a dog on the left", &RelationVocabulary::default(), &LayoutConfig::default()).unwrap();
    let mut sim = SimDenoiser::new(scene("a dog on the left", vec![blob(1, [0.8, 0.5])]), 20).unwrap();
    let first = sim.attention(20).unwrap();
    let merged = layoutcal::attention::layered_merge(&first.probs).unwrap();
    let checks = layoutcal::attention::check_discrepancy(&merged, &layout, 0.2).unwrap();
    assert_eq!(checks.len(), 1);
    assert!(checks[0].inside_fraction < 0.05);
}
