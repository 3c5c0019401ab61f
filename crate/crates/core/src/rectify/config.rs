use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::attention::DEFAULT_THRESHOLD;
use crate::error::{Error, Result};

pub const DEFAULT_STEPS: usize = 20;
pub const DEFAULT_T_LOC: usize = 1;
pub const DEFAULT_ALPHA: f64 = 10.0;
pub const DEFAULT_GUIDANCE_RATIO: f64 = 5.0;

/// Layers left untouched by rectification, as 1-based layer numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SkipLayers {
    /// The first and the last cross-attention layer.
    #[default]
    FirstAndLast,
    Explicit(BTreeSet<usize>),
}

impl SkipLayers {
    pub fn none() -> Self {
        SkipLayers::Explicit(BTreeSet::new())
    }

    pub fn resolve(&self, n_layers: usize) -> BTreeSet<usize> {
        match self {
            SkipLayers::FirstAndLast => [1, n_layers].into_iter().collect(),
            SkipLayers::Explicit(set) => set.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Total denoising steps `T`.
    pub steps: usize,
    /// Localization steps before rectification begins.
    pub t_loc: usize,
    /// Intra-map adjustment strength.
    pub alpha: f64,
    /// Inside-fraction below which an object counts as misplaced.
    pub threshold: f64,
    pub skip_layers: SkipLayers,
    /// Classifier-free guidance of the generating pipeline. Recorded only.
    pub guidance_ratio: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            steps: DEFAULT_STEPS,
            t_loc: DEFAULT_T_LOC,
            alpha: DEFAULT_ALPHA,
            threshold: DEFAULT_THRESHOLD,
            skip_layers: SkipLayers::default(),
            guidance_ratio: DEFAULT_GUIDANCE_RATIO,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_loc < 1 || self.t_loc >= self.steps {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= t_loc < steps, got t_loc={} steps={}",
                self.t_loc, self.steps
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if let SkipLayers::Explicit(set) = &self.skip_layers {
            if set.contains(&0) {
                return Err(Error::InvalidConfig("skip layers are numbered from 1".into()));
            }
        }
        Ok(())
    }

    /// Last step (counting down) whose maps are stored for localization.
    pub fn last_locate_step(&self) -> usize {
        self.steps + 1 - self.t_loc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = CalibrationConfig::default();
        assert_eq!((c.steps, c.t_loc, c.alpha, c.guidance_ratio), (20, 1, 10.0, 5.0));
        assert_eq!(c.threshold, 0.2);
        c.validate().unwrap();
        assert_eq!(c.last_locate_step(), 20);
        assert_eq!(c.skip_layers.resolve(6), BTreeSet::from([1, 6]));
    }

    #[test]
    fn rejects_invalid() {
        let bad = [
            CalibrationConfig { t_loc: 0, ..Default::default() },
            CalibrationConfig { t_loc: 20, ..Default::default() },
            CalibrationConfig { alpha: 0.0, ..Default::default() },
            CalibrationConfig { alpha: f64::NAN, ..Default::default() },
            CalibrationConfig { threshold: 1.0, ..Default::default() },
            CalibrationConfig { skip_layers: SkipLayers::Explicit([0].into()), ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
