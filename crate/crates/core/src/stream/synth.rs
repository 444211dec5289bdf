//! Seeded synthetic streams of labelled feature vectors.
//!
//! Each concept models the features of a class as independent Gaussians.
//! Labels are drawn first, as an exact quota shuffled with the seed, then
//! each instance's features come from its class under the concept active
//! at its position.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Instance;
use crate::commgraph::{FeatureVector, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::records::Outcome;

/// Indices of features bounded to [0, 1].
const UNIT_FEATURES: [usize; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 9, 10];
const GROUP_INOUT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    /// `[success, fail]` means per feature.
    pub means: [[f64; FEATURE_COUNT]; 2],
    /// `[success, fail]` standard deviations per feature.
    pub stds: [[f64; FEATURE_COUNT]; 2],
}

impl Concept {
    /// Plausible communication metrics for both classes, identical except
    /// for a mild shift in group in/out-degree centralization.
    pub fn communication() -> Self {
        let means = [
            0.30, 0.30, 0.25, 0.45, 0.45, 0.20, 0.15, 0.20, 2.5, 0.70, 0.25, 8.0, 14.0, 3.0, 5.0,
        ];
        let stds = [
            0.12, 0.12, 0.10, 0.15, 0.15, 0.10, 0.08, 0.10, 1.0, 0.15, 0.10, 3.0, 6.0, 1.5, 3.0,
        ];
        let mut fail = means;
        fail[GROUP_INOUT] = 0.40;
        Concept {
            means: [means, fail],
            stds: [stds, stds],
        }
    }

    /// Every feature separates the classes. Class means sit 0.5 reference
    /// standard deviation either side of the reference mean (2.5 for group
    /// in/out-degree centralization, the single best attribute), with half
    /// the reference spread.
    pub fn separable() -> Self {
        let base = Self::communication();
        let mut c = base.clone();
        for f in 0..FEATURE_COUNT {
            let (mean, sd) = (base.means[0][f], base.stds[0][f]);
            let shift = if f == GROUP_INOUT { 2.5 } else { 0.5 };
            c.means[0][f] = mean - shift * sd;
            c.means[1][f] = mean + shift * sd;
            c.stds[0][f] = 0.5 * sd;
            c.stds[1][f] = 0.5 * sd;
        }
        c
    }

    /// Classes far apart on group in/out-degree centralization only.
    pub fn single_threshold() -> Self {
        let mut c = Self::uninformative();
        c.means[0][GROUP_INOUT] = 0.2;
        c.means[1][GROUP_INOUT] = 0.8;
        c.stds[0][GROUP_INOUT] = 0.05;
        c.stds[1][GROUP_INOUT] = 0.05;
        c
    }

    /// Both classes share one distribution.
    pub fn uninformative() -> Self {
        let base = Self::communication();
        Concept {
            means: [base.means[0], base.means[0]],
            stds: base.stds,
        }
    }

    /// The same distributions with class roles exchanged.
    pub fn flipped(&self) -> Self {
        Concept {
            means: [self.means[1], self.means[0]],
            stds: [self.stds[1], self.stds[0]],
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = self.means.iter().flatten().all(|m| m.is_finite());
        let positive = self.stds.iter().flatten().all(|s| s.is_finite() && *s >= 0.0);
        if !(finite && positive) {
            return Err(Error::argument("concept means must be finite and stds non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_instances: usize,
    /// Relative weights `(success, fail)`.
    pub class_ratio: (f64, f64),
    pub concept: Concept,
    /// `(index, concept)` pairs; the concept applies from `index` onwards.
    pub drift_points: Vec<(usize, Concept)>,
    pub seed: u64,
}

impl SynthConfig {
    /// 199 instances in a 127:72 success/fail ratio.
    pub fn reference(seed: u64) -> Self {
        SynthConfig {
            n_instances: 199,
            class_ratio: (127.0, 72.0),
            concept: Concept::communication(),
            drift_points: Vec::new(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (s, f) = self.class_ratio;
        if !(s >= 0.0 && f >= 0.0 && s + f > 0.0 && (s + f).is_finite()) {
            return Err(Error::argument("class ratio weights must be non-negative with a positive sum"));
        }
        self.concept.validate()?;
        let mut prev = None;
        for (idx, concept) in &self.drift_points {
            if *idx >= self.n_instances {
                return Err(Error::argument(format!(
                    "drift point {idx} is outside a stream of {}",
                    self.n_instances
                )));
            }
            if prev.is_some_and(|p| *idx <= p) {
                return Err(Error::argument("drift points must be strictly increasing"));
            }
            concept.validate()?;
            prev = Some(*idx);
        }
        Ok(())
    }

    /// Number of `success` labels in the stream.
    pub fn success_quota(&self) -> usize {
        let (s, f) = self.class_ratio;
        ((self.n_instances as f64) * s / (s + f)).round() as usize
    }
}

fn clamp_to_domain(values: &mut [f64; FEATURE_COUNT]) {
    for (i, v) in values.iter_mut().enumerate() {
        if UNIT_FEATURES.contains(&i) {
            *v = v.clamp(0.0, 1.0);
        } else if i >= 11 {
            *v = v.round().max(0.0);
        } else {
            *v = v.max(0.0);
        }
    }
}

pub fn synth_stream(config: &SynthConfig) -> Result<Vec<Instance>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let successes = config.success_quota();
    let mut labels: Vec<Outcome> = (0..config.n_instances)
        .map(|i| if i < successes { Outcome::Success } else { Outcome::Fail })
        .collect();
    labels.shuffle(&mut rng);

    let mut concept = &config.concept;
    let mut drifts = config.drift_points.iter().peekable();
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            while let Some((_, next)) = drifts.next_if(|(at, _)| *at <= i) {
                concept = next;
            }
            let class = match label {
                Outcome::Success => 0,
                Outcome::Fail => 1,
            };
            let mut values = [0.0; FEATURE_COUNT];
            for (f, v) in values.iter_mut().enumerate() {
                let (mean, sd) = (concept.means[class][f], concept.stds[class][f]);
                *v = Normal::new(mean, sd)
                    .map_err(|e| Error::argument(e.to_string()))?
                    .sample(&mut rng);
            }
            clamp_to_domain(&mut values);
            Ok(Instance {
                id: format!("synth-{i:05}"),
                features: FeatureVector::from_array(values)?,
                label,
            })
        })
        .collect()
}
