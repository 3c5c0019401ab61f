//! Runs the simulator suite with calibration on and off.
//!
//! cargo run --release --example simulate_scene -- [scenes] [feedback] [alpha] [t_loc]

use layoutcal::rectify::CalibrationConfig;
use layoutcal::sim::{generate_cases, run_suite};

fn main() -> layoutcal::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let n = arg(0, 40.0) as usize;
    let feedback = arg(1, 0.8);
    let cfg = CalibrationConfig {
        alpha: arg(2, 10.0),
        t_loc: arg(3, 1.0) as usize,
        ..Default::default()
    };
    let cases = generate_cases(n, 3, 1, feedback)?;
    for calibrate in [true, false] {
        let s = run_suite(&cases, &cfg, calibrate)?;
        println!(
            "calibrated={calibrate} scenes={} scene_acc={:.3} object_acc={:.3}",
            s.scenes, s.scene_accuracy, s.object_accuracy
        );
        for r in s.runs.iter().filter(|r| !r.result.all_correct()).take(5) {
            let centers: Vec<_> = r.result.objects.iter().map(|o| (o.center, o.target.as_array())).collect();
            println!("  miss {}: {centers:?}", r.prompt);
        }
    }
    Ok(())
}
