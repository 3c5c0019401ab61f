use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scene::SimScene;
use crate::attention::{layered_merge_token, AttnMap, AttnStack, Grid, MapKind};
use crate::error::{Error, Result};
use crate::rectify::StepAttention;

/// Blob centers for step `t`: the bias at the first step, otherwise pulled
/// toward the center of mass of the previous step's rectified probs.
pub fn blob_centers(scene: &SimScene, t: usize, steps: usize, prev: Option<&AttnStack>) -> Result<Vec<(f64, f64)>> {
    let bias = scene.objects.iter().map(|o| (o.bias[0], o.bias[1]));
    let prev = match prev {
        Some(p) if t < steps => p,
        _ => return Ok(bias.collect()),
    };
    if prev.n_tokens() != scene.n_tokens() {
        return Err(Error::ShapeMismatch(format!(
            "previous stack has {} tokens, scene has {}",
            prev.n_tokens(),
            scene.n_tokens()
        )));
    }
    let lambda = scene.feedback;
    scene
        .objects
        .iter()
        .zip(bias)
        .map(|(o, (bx, by))| {
            let (mx, my) = layered_merge_token(prev, o.token)?.center_of_mass();
            Ok(((1.0 - lambda) * bx + lambda * mx, (1.0 - lambda) * by + lambda * my))
        })
        .collect()
}

fn noise_rng(seed: u64, t: usize, layer: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((t as u64) << 16) | layer as u64);
    rng
}

/// Logits and probs of step `t` (counting down from `steps`).
///
/// `prev` is the previous step's rectified probs stack; it is ignored at
/// the first step.
pub fn synth_step(scene: &SimScene, t: usize, steps: usize, prev: Option<&AttnStack>) -> Result<StepAttention> {
    scene.validate()?;
    if t == 0 || t > steps {
        return Err(Error::InvalidValue(format!("step {t} outside 1..={steps}")));
    }
    let centers = blob_centers(scene, t, steps, prev)?;
    let n = scene.n_tokens();
    let background = scene.background_token();
    let normal = Normal::new(0.0, scene.noise_sigma).expect("validated noise sigma");
    let mut layers = Vec::with_capacity(scene.resolutions.len());
    for (l, &[w, h]) in scene.resolutions.iter().enumerate() {
        let mut rng = noise_rng(scene.seed, t, l);
        let mut values = vec![vec![0.0; w * h]; n];
        for r in 0..h {
            let y = (r as f64 + 0.5) / h as f64;
            for c in 0..w {
                let x = (c as f64 + 0.5) / w as f64;
                for tok in values.iter_mut() {
                    tok[r * w + c] = scene.logit_offset + normal.sample(&mut rng);
                }
                values[background][r * w + c] += scene.background_logit;
                for (o, &(cx, cy)) in scene.objects.iter().zip(&centers) {
                    let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                    values[o.token][r * w + c] += o.amplitude * (-d2 / (2.0 * o.sigma * o.sigma)).exp();
                }
            }
        }
        let grids = values
            .into_iter()
            .map(|v| Grid::new(w, h, v))
            .collect::<Result<Vec<_>>>()?;
        layers.push(AttnMap::new(MapKind::Logits, grids)?);
    }
    let logits = AttnStack::new(t, layers)?;
    let probs = logits.softmax_tokens()?;
    Ok(StepAttention { logits, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::TensorFile;
    use crate::sim::scene::SimObject;

    fn scene(feedback: f64) -> SimScene {
        SimScene {
            prompt: "a dog on the left".into(),
            objects: vec![SimObject {
                token: 1,
                bias: [0.8, 0.3],
                sigma: 0.08,
                amplitude: 12.0,
            }],
            resolutions: vec![[16, 16], [8, 8]],
            noise_sigma: 0.1,
            seed: 42,
            feedback,
            background_logit: 8.0,
            logit_offset: 4.0,
        }
    }

    fn concentrated(at: (usize, usize)) -> AttnStack {
        let s = scene(1.0);
        let n = s.n_tokens();
        let layers = s
            .resolutions
            .iter()
            .map(|&[w, h]| {
                let grids = (0..n)
                    .map(|k| {
                        Grid::from_fn(w, h, |r, c| {
                            let hit = r * h / 16 == at.0 * h / 16 && c * w / 16 == at.1 * w / 16;
                            match (k == 1, hit) {
                                (true, true) => 1.0,
                                (true, false) => 0.0,
                                (false, _) => 0.0,
                            }
                        })
                        .unwrap()
                    })
                    .collect();
                AttnMap::new(MapKind::Probs, grids).unwrap()
            })
            .collect();
        AttnStack::new(3, layers).unwrap()
    }

    #[test]
    fn no_feedback_keeps_bias() {
        let s = scene(0.0);
        let prev = concentrated((8, 3));
        for t in 1..20 {
            assert_eq!(blob_centers(&s, t, 20, Some(&prev)).unwrap(), vec![(0.8, 0.3)]);
        }
    }

    #[test]
    fn full_feedback_follows_mass() {
        // cell (8, 3) of 16 has its center at (0.21875, 0.53125)
        let s = scene(1.0);
        let c = blob_centers(&s, 2, 20, Some(&concentrated((8, 3)))).unwrap()[0];
        assert!((c.0 - 0.2).abs() <= 1.0 / 16.0 && (c.1 - 0.5).abs() <= 1.0 / 16.0, "{c:?}");
        assert_eq!(blob_centers(&s, 20, 20, Some(&concentrated((8, 3)))).unwrap(), vec![(0.8, 0.3)]);
    }

    #[test]
    fn deterministic_bytes() {
        let s = scene(0.8);
        let a = synth_step(&s, 1, 1, None).unwrap();
        let b = synth_step(&s, 1, 1, None).unwrap();
        let encode = |x: &StepAttention| TensorFile::new(vec![x.logits.clone()]).unwrap().to_bytes();
        assert_eq!(encode(&a), encode(&b));
        let other = synth_step(&SimScene { seed: 43, ..s }, 1, 1, None).unwrap();
        assert_ne!(encode(&a), encode(&other));
    }

    #[test]
    fn probs_normalized_with_background() {
        let att = synth_step(&scene(0.8), 20, 20, None).unwrap();
        for layer in att.probs.layers() {
            for i in 0..layer.width() * layer.height() {
                let total: f64 = layer.grids().iter().map(|g| g.values()[i]).sum();
                assert!((total - 1.0).abs() <= 1e-5);
            }
        }
        assert_eq!(att.probs.n_tokens(), 6);
    }

    #[test]
    fn blob_peaks_at_bias() {
        let att = synth_step(&scene(0.8), 20, 20, None).unwrap();
        let (x, y) = att.probs.layer(0).token(1).center_of_mass();
        assert!((x - 0.8).abs() < 0.03 && (y - 0.3).abs() < 0.03, "{x} {y}");
    }
}
