//! Full check, locate and rectify run against the synthetic denoiser.
//!
//! cargo run --release --example calibrate_session -- "a dog on the left and a cat on the right"

use layoutcal::rectify::{run_calibration, CalibrationConfig};
use layoutcal::sim::{evaluate_layout, SceneCase, SimDenoiser};

fn main() -> layoutcal::Result<()> {
    let prompt = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "a dog on the left and a cat on the right".into());
    let case = SceneCase::from_prompt(0, &prompt, 5, 0.8)?;
    let cfg = CalibrationConfig::default();

    let mut plain = SimDenoiser::new(case.scene.clone(), cfg.steps)?;
    plain.run_unmodified()?;
    let before = evaluate_layout(plain.final_probs().unwrap(), &case.layout)?;

    let mut sim = SimDenoiser::new(case.scene.clone(), cfg.steps)?;
    let report = run_calibration(&prompt, &mut sim, &cfg)?;
    let after = evaluate_layout(sim.final_probs().unwrap(), &case.layout)?;

    println!("outcome {:?}", report.outcome);
    for p in &report.phases {
        println!("  {:?} from step {}", p.phase, p.step);
    }
    if let Some(plan) = &report.plan {
        for e in &plan.entries {
            println!("  token {} moves {} -> {}", e.token, e.source, e.target);
        }
    }
    let modified: usize = report.steps.iter().map(|s| s.modified_maps).sum();
    println!("  modified maps over all steps: {modified}");
    for (b, a) in before.objects.iter().zip(&after.objects) {
        println!(
            "  object {} box {}: uncalibrated {:.2?} {}, calibrated {:.2?} {}",
            a.object, a.target, b.center, b.success, a.center, a.success
        );
    }
    Ok(())
}
