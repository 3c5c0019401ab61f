//! Keyword detection and per-object discrepancy check on synthetic attention.

use layoutcal::attention::{check_discrepancy, layered_merge};
use layoutcal::layout::{detect_layout_requirement, parse_layout, LayoutConfig, RelationVocabulary};
use layoutcal::sim::{synth_step, SimObject, SimScene};

fn main() -> layoutcal::Result<()> {
    let vocab = RelationVocabulary::default();
    for prompt in ["a red tomato on the left", "a photo of a horse"] {
        let d = detect_layout_requirement(prompt, &vocab);
        let words: Vec<_> = d.matches.iter().map(|m| m.word.as_str()).collect();
        println!("{prompt:?}: detected={} words={words:?}", d.detected);
    }

    let prompt = "a red tomato on the left";
    let layout = parse_layout(prompt, &vocab, &LayoutConfig::default())?;
    let token = layout.objects[0].head_token_index;
    for bias in [[0.2, 0.5], [0.8, 0.5]] {
        let scene = SimScene::from_json(&format!(r#"{{"prompt":"{prompt}","objects":[]}}"#))?;
        let scene = SimScene {
            objects: vec![SimObject {
                token,
                bias,
                sigma: 0.08,
                amplitude: 12.0,
            }],
            ..scene
        };
        let att = synth_step(&scene, 1, 1, None)?;
        let checks = check_discrepancy(&layered_merge(&att.probs)?, &layout, 0.2)?;
        for c in checks {
            println!(
                "blob at {bias:?}: inside={:.3} {:?}",
                c.inside_fraction, c.verdict
            );
        }
    }
    Ok(())
}
