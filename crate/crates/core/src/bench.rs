//! Seeded generator of superlative-layout evaluation prompts.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::SuperlativeTerm;

/// The 28 benchmark items: single words, phrases, and colored objects.
pub const DEFAULT_OBJECTS: [&str; 28] = [
    "backpack",
    "flower",
    "crown",
    "towel",
    "scarf",
    "beach",
    "clouds",
    "tree",
    "table",
    "book",
    "handbag",
    "bus",
    "bicycle",
    "car",
    "motorcycle",
    "cat",
    "dog",
    "horse",
    "chocolate cookie",
    "strawberry cake",
    "vanilla ice cream cone",
    "yellow sunflower",
    "gray mountain",
    "white daisy",
    "pink cupcake",
    "red tomato",
    "golden saxophone",
    "green broccoli",
];

/// Prompts per object count (1 to 4) in the reference benchmark.
pub const REFERENCE_COUNTS: [usize; 4] = [36, 96, 56, 15];

/// Occurrences per superlative term in the reference benchmark, in
/// [`SuperlativeTerm::ALL`] order.
pub const REFERENCE_TERM_COUNTS: [usize; 9] = [55, 55, 49, 49, 56, 48, 48, 48, 48];

/// How many objects each prompt receives.
#[derive(Debug, Clone, PartialEq)]
pub enum CountSpec {
    /// Relative weights for 1, 2, ... objects, drawn per prompt.
    Weights(Vec<f64>),
    /// Exact number of prompts for 1, 2, ... objects; must sum to `n`.
    Exact(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub objects: Vec<String>,
    pub terms: Vec<SuperlativeTerm>,
    pub counts: CountSpec,
    /// Exact occurrences per entry of `terms`, when set.
    pub term_quota: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            objects: DEFAULT_OBJECTS.iter().map(|s| s.to_string()).collect(),
            terms: SuperlativeTerm::ALL.to_vec(),
            counts: CountSpec::Weights(REFERENCE_COUNTS.iter().map(|&c| c as f64).collect()),
            term_quota: None,
            seed: 0,
        }
    }
}

impl BenchConfig {
    /// The reference shape: exact object counts and term occurrences.
    pub fn reference(seed: u64) -> Self {
        BenchConfig {
            counts: CountSpec::Exact(REFERENCE_COUNTS.to_vec()),
            term_quota: Some(REFERENCE_TERM_COUNTS.to_vec()),
            seed,
            ..Default::default()
        }
    }

    fn max_count(&self) -> usize {
        match &self.counts {
            CountSpec::Weights(w) => w.len(),
            CountSpec::Exact(c) => c.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let distinct: HashSet<&String> = self.objects.iter().collect();
        if distinct.len() != self.objects.len() || self.objects.is_empty() {
            return Err(Error::InvalidConfig("object set must be non-empty and distinct".into()));
        }
        let terms: HashSet<&SuperlativeTerm> = self.terms.iter().collect();
        if terms.len() != self.terms.len() || self.terms.is_empty() {
            return Err(Error::InvalidConfig("term set must be non-empty and distinct".into()));
        }
        let max = self.max_count();
        if max == 0 || max > self.objects.len() || max > self.terms.len() {
            return Err(Error::InvalidConfig(format!(
                "object counts up to {max} need that many objects and terms"
            )));
        }
        if let CountSpec::Weights(w) = &self.counts {
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidConfig("count weights must be non-negative with a positive sum".into()));
            }
        }
        if let Some(q) = &self.term_quota {
            if q.len() != self.terms.len() {
                return Err(Error::InvalidConfig("term quota needs one entry per term".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchPrompt {
    pub id: usize,
    pub text: String,
    pub objects: Vec<String>,
    pub superlatives: Vec<SuperlativeTerm>,
    pub num_objects: usize,
}

impl BenchPrompt {
    fn new(id: usize, objects: Vec<String>, superlatives: Vec<SuperlativeTerm>) -> Self {
        BenchPrompt {
            id,
            text: render(&objects, &superlatives),
            num_objects: objects.len(),
            objects,
            superlatives,
        }
    }
}

fn phrase(term: SuperlativeTerm) -> String {
    match term {
        SuperlativeTerm::Above => "on the top".into(),
        SuperlativeTerm::Below => "on the bottom".into(),
        SuperlativeTerm::Middle => "in the middle".into(),
        t => format!("on the {}", t.as_str()),
    }
}

/// Renders "a {object} on the {term}" fragments joined with "and".
pub fn render(objects: &[String], terms: &[SuperlativeTerm]) -> String {
    objects
        .iter()
        .zip(terms)
        .map(|(o, t)| format!("a {o} {}", phrase(*t)))
        .collect::<Vec<_>>()
        .join(" and ")
}

fn pick<T: Clone>(rng: &mut impl Rng, items: &[T], amount: usize) -> Vec<T> {
    index::sample(rng, items.len(), amount)
        .into_iter()
        .map(|i| items[i].clone())
        .collect()
}

/// Draws `count` distinct terms, weighted by what is left of each quota.
fn pick_quota(rng: &mut impl Rng, terms: &[SuperlativeTerm], left: &mut [usize], count: usize) -> Option<Vec<SuperlativeTerm>> {
    let mut weights: Vec<f64> = left.iter().map(|&q| q as f64).collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let dist = WeightedIndex::new(&weights).ok()?;
        let i = dist.sample(rng);
        weights[i] = 0.0;
        left[i] -= 1;
        out.push(terms[i]);
    }
    Some(out)
}

/// Samples one prompt: object count, then distinct terms, then distinct
/// objects.
pub fn sample_prompt(rng: &mut impl Rng, cfg: &BenchConfig) -> Result<BenchPrompt> {
    cfg.validate()?;
    let count = match &cfg.counts {
        CountSpec::Weights(w) => WeightedIndex::new(w).expect("validated weights").sample(rng) + 1,
        CountSpec::Exact(c) => {
            let weights: Vec<f64> = c.iter().map(|&x| x as f64).collect();
            WeightedIndex::new(&weights)
                .map_err(|_| Error::InvalidConfig("exact counts are all zero".into()))?
                .sample(rng)
                + 1
        }
    };
    let terms = pick(rng, &cfg.terms, count);
    let objects = pick(rng, &cfg.objects, count);
    Ok(BenchPrompt::new(0, objects, terms))
}

fn permutations(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

const MAX_QUOTA_RESTARTS: usize = 1000;

/// Generates `n` distinct prompts, resampling objects on a textual
/// collision.
pub fn generate_benchmark(n: usize, cfg: &BenchConfig) -> Result<Vec<BenchPrompt>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("benchmark needs at least one prompt".into()));
    }
    let space = |c: usize| permutations(cfg.objects.len(), c) * permutations(cfg.terms.len(), c);
    let counts: Option<Vec<usize>> = match &cfg.counts {
        CountSpec::Exact(c) => {
            if c.iter().sum::<usize>() != n {
                return Err(Error::InvalidConfig(format!(
                    "exact counts sum to {}, expected {n}",
                    c.iter().sum::<usize>()
                )));
            }
            for (i, &k) in c.iter().enumerate() {
                if k as f64 > space(i + 1) {
                    return Err(Error::ExhaustedSpace {
                        requested: k,
                        reason: format!("only {} distinct prompts with {} objects", space(i + 1), i + 1),
                    });
                }
            }
            Some(c.clone())
        }
        CountSpec::Weights(w) => {
            let total: f64 = w.iter().enumerate().filter(|(_, x)| **x > 0.0).map(|(i, _)| space(i + 1)).sum();
            if n as f64 > total {
                return Err(Error::ExhaustedSpace {
                    requested: n,
                    reason: format!("only {total} distinct prompts exist"),
                });
            }
            None
        }
    };
    if let Some(q) = &cfg.term_quota {
        let slots: usize = match &counts {
            Some(c) => c.iter().enumerate().map(|(i, k)| (i + 1) * k).sum(),
            None => return Err(Error::InvalidConfig("term quotas need exact object counts".into())),
        };
        if q.iter().sum::<usize>() != slots {
            return Err(Error::InvalidConfig(format!(
                "term quotas sum to {}, prompts have {slots} slots",
                q.iter().sum::<usize>()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_attempts = 1000 + 100 * n;
    for _ in 0..MAX_QUOTA_RESTARTS {
        let sizes: Vec<usize> = match &counts {
            Some(c) => {
                let mut sizes: Vec<usize> = c.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i + 1, k)).collect();
                // larger prompts first so quotas are not starved at the end
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                sizes
            }
            None => Vec::new(),
        };
        let mut quota_left = cfg.term_quota.clone();
        let mut seen = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        let mut stuck = false;
        while out.len() < n {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::ExhaustedSpace {
                    requested: n,
                    reason: format!("no new distinct prompt after {max_attempts} draws"),
                });
            }
            let mut prompt = match &counts {
                None => sample_prompt(&mut rng, cfg)?,
                Some(_) => {
                    let c = sizes[out.len()];
                    let terms = match quota_left.as_mut() {
                        Some(left) => {
                            let mut trial = left.clone();
                            match pick_quota(&mut rng, &cfg.terms, &mut trial, c) {
                                Some(t) => {
                                    *left = trial;
                                    t
                                }
                                None => {
                                    stuck = true;
                                    break;
                                }
                            }
                        }
                        None => pick(&mut rng, &cfg.terms, c),
                    };
                    let mut objects = pick(&mut rng, &cfg.objects, c);
                    let mut text = render(&objects, &terms);
                    while seen.contains(&text) {
                        attempts += 1;
                        if attempts > max_attempts {
                            return Err(Error::ExhaustedSpace {
                                requested: n,
                                reason: format!("no new distinct prompt after {max_attempts} draws"),
                            });
                        }
                        objects = pick(&mut rng, &cfg.objects, c);
                        text = render(&objects, &terms);
                    }
                    BenchPrompt::new(0, objects, terms)
                }
            };
            if seen.insert(prompt.text.clone()) {
                prompt.id = out.len();
                out.push(prompt);
            }
        }
        if !stuck {
            if counts.is_some() {
                out.shuffle(&mut rng);
                for (i, p) in out.iter_mut().enumerate() {
                    p.id = i;
                }
            }
            return Ok(out);
        }
    }
    Err(Error::ExhaustedSpace {
        requested: n,
        reason: "term quotas could not be met".into(),
    })
}

pub fn write_jsonl(prompts: &[BenchPrompt], mut w: impl Write) -> Result<()> {
    for p in prompts {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(r: impl BufRead) -> Result<Vec<BenchPrompt>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
