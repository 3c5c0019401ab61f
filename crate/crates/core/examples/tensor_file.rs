//! Writes synthetic attention to the tensor exchange format and reads it back.

use layoutcal::attention::TensorFile;
use layoutcal::sim::{synth_step, SimObject, SimScene};

fn main() -> layoutcal::Result<()> {
    let scene = SimScene {
        objects: vec![SimObject {
            token: 1,
            bias: [0.7, 0.3],
            sigma: 0.08,
            amplitude: 12.0,
        }],
        resolutions: vec![[16, 16], [8, 8]],
        ..SimScene::from_json(r#"{"prompt":"a dog on the left","objects":[]}"#)?
    };
    let steps = 3;
    let stacks = (1..=steps)
        .rev()
        .map(|t| synth_step(&scene, t, steps, None).map(|a| a.logits))
        .collect::<layoutcal::Result<Vec<_>>>()?;
    let file = TensorFile::new(stacks)?;
    let bytes = file.to_bytes();
    let back = TensorFile::from_bytes(&bytes)?;
    println!(
        "{} bytes, {} steps, {} layers, {} tokens, kind {}",
        bytes.len(),
        back.steps(),
        back.stacks()[0].n_layers(),
        back.stacks()[0].n_tokens(),
        back.kind().as_str()
    );
    println!("round trip identical: {}", back.to_bytes() == bytes);
    Ok(())
}
