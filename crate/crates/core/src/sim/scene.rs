use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{tokenize, ParsedLayout, RelBox};

pub const DEFAULT_RESOLUTIONS: [[usize; 2]; 6] = [[64, 64], [32, 32], [32, 32], [16, 16], [16, 16], [8, 8]];
pub const DEFAULT_SIGMA: f64 = 0.08;
pub const DEFAULT_AMPLITUDE: f64 = 12.0;
pub const DEFAULT_NOISE: f64 = 0.1;
pub const DEFAULT_BACKGROUND: f64 = 8.0;
pub const DEFAULT_OFFSET: f64 = 4.0;
pub const DEFAULT_FEEDBACK: f64 = 0.8;

/// Gap kept between a generated bias and its target box, on every side.
pub const BIAS_CLEARANCE: f64 = 0.1;
const BIAS_RANGE: (f64, f64) = (0.08, 0.92);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub token: usize,
    /// Where the blob sits when nothing pulls it elsewhere.
    pub bias: [f64; 2],
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}
fn default_amplitude() -> f64 {
    DEFAULT_AMPLITUDE
}
fn default_resolutions() -> Vec<[usize; 2]> {
    DEFAULT_RESOLUTIONS.to_vec()
}
fn default_noise() -> f64 {
    DEFAULT_NOISE
}
fn default_background() -> f64 {
    DEFAULT_BACKGROUND
}
fn default_offset() -> f64 {
    DEFAULT_OFFSET
}
fn default_feedback() -> f64 {
    DEFAULT_FEEDBACK
}

/// A synthetic denoiser configuration for one prompt.
///
/// Token maps are one per prompt token plus a trailing background token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScene {
    pub prompt: String,
    pub objects: Vec<SimObject>,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<[usize; 2]>,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Share of the next blob center taken from the previous step's
    /// rectified attention.
    #[serde(default = "default_feedback")]
    pub feedback: f64,
    /// Extra logit of the background token.
    #[serde(default = "default_background")]
    pub background_logit: f64,
    /// Logit added to every token. Leaves probs unchanged.
    #[serde(default = "default_offset")]
    pub logit_offset: f64,
}

impl SimScene {
    pub fn n_tokens(&self) -> usize {
        tokenize(&self.prompt).len() + 1
    }

    pub fn background_token(&self) -> usize {
        self.n_tokens() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let prompt_tokens = self.n_tokens() - 1;
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.objects {
            if o.token >= prompt_tokens {
                return Err(Error::InvalidConfig(format!(
                    "object token {} outside a {prompt_tokens}-token prompt",
                    o.token
                )));
            }
            if !seen.insert(o.token) {
                return Err(Error::InvalidConfig(format!("token {} used by two objects", o.token)));
            }
            if !(o.amplitude > 0.0 && o.amplitude.is_finite()) || !(o.sigma > 0.0 && o.sigma.is_finite()) {
                return Err(Error::InvalidConfig("amplitude and sigma must be positive".into()));
            }
            if o.bias.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidConfig("bias must lie in the unit square".into()));
            }
        }
        if self.resolutions.is_empty() || self.resolutions.iter().any(|[w, h]| *w < 4 || *h < 4) {
            return Err(Error::InvalidConfig("layer resolutions must be at least 4x4".into()));
        }
        if !(0.0..=1.0).contains(&self.feedback) {
            return Err(Error::InvalidConfig(format!("feedback must lie in [0, 1], got {}", self.feedback)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise sigma must be non-negative".into()));
        }
        if !self.background_logit.is_finite() || !self.logit_offset.is_finite() {
            return Err(Error::InvalidConfig("logit constants must be finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scene: SimScene = serde_json::from_str(s)?;
        scene.validate()?;
        Ok(scene)
    }
}

fn clear_of(b: &RelBox, x: f64, y: f64) -> bool {
    x < b.x0() - BIAS_CLEARANCE || x > b.x1() + BIAS_CLEARANCE || y < b.y0() - BIAS_CLEARANCE || y > b.y1() + BIAS_CLEARANCE
}

/// Builds a scene for a parsed prompt with every object biased away from
/// its target box.
pub fn misplaced_scene(layout: &ParsedLayout, seed: u64, feedback: f64) -> Result<SimScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::with_capacity(layout.objects.len());
    for (token, target) in layout.targets() {
        let mut bias = None;
        for _ in 0..10_000 {
            let x = rng.random_range(BIAS_RANGE.0..=BIAS_RANGE.1);
            let y = rng.random_range(BIAS_RANGE.0..=BIAS_RANGE.1);
            if clear_of(&target, x, y) {
                bias = Some([x, y]);
                break;
            }
        }
        let bias = bias.ok_or_else(|| Error::InvalidConfig(format!("box {target} leaves no room for a bias")))?;
        objects.push(SimObject {
            token,
            bias,
            sigma: DEFAULT_SIGMA,
            amplitude: DEFAULT_AMPLITUDE,
        });
    }
    let scene = SimScene {
        prompt: layout.prompt.clone(),
        objects,
        resolutions: default_resolutions(),
        noise_sigma: DEFAULT_NOISE,
        seed,
        feedback,
        background_logit: DEFAULT_BACKGROUND,
        logit_offset: DEFAULT_OFFSET,
    };
    scene.validate()?;
    Ok(scene)
}
