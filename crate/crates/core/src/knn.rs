//! Streaming k-nearest-neighbour baseline.
//!
//! Raw vectors are stored; every query standardises stored and query
//! features with the running mean and standard deviation of everything
//! inserted so far, so the model never uses statistics from the future.

use crate::error::{Error, Result};
use crate::records::Outcome;
use crate::stream::{ConfusionMatrix, Instance};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct RunningMoments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    fn add(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    /// Population standard deviation, 1 when the feature has not varied.
    fn scale(&self) -> f64 {
        let sd = if self.n > 0.0 { (self.m2 / self.n).max(0.0).sqrt() } else { 0.0 };
        if sd > 0.0 {
            sd
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    store: Vec<(Vec<f64>, Outcome)>,
    moments: Vec<RunningMoments>,
}

impl KnnModel {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::argument("k must be at least 1"));
        }
        Ok(KnnModel {
            k,
            store: Vec::new(),
            moments: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn clear(&mut self) {
        self.store.clear();
        self.moments.clear();
    }

    pub fn insert(&mut self, x: &[f64], label: Outcome) {
        if self.moments.is_empty() {
            self.moments = vec![RunningMoments::default(); x.len()];
        }
        assert_eq!(x.len(), self.moments.len(), "feature arity changed");
        for (m, &v) in self.moments.iter_mut().zip(x) {
            m.add(v);
        }
        self.store.push((x.to_vec(), label));
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.moments)
            .map(|(v, m)| (v - m.mean) / m.scale())
            .collect()
    }

    /// Store indices and distances of the `min(k, len)` nearest points,
    /// nearest first; equal distances keep insertion order.
    pub fn neighbours(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        if self.store.is_empty() {
            return Err(Error::EmptyModel);
        }
        assert_eq!(x.len(), self.moments.len(), "feature arity mismatch");
        let q = self.standardize(x);
        let mut scored: Vec<(usize, f64)> = self
            .store
            .iter()
            .enumerate()
            .map(|(i, (p, _))| {
                let d2: f64 = self
                    .standardize(p)
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (i, d2.sqrt())
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        scored.truncate(self.k.min(self.store.len()));
        Ok(scored)
    }

    /// Majority label among the nearest neighbours; ties go to `success`.
    pub fn predict(&self, x: &[f64]) -> Result<Outcome> {
        let nn = self.neighbours(x)?;
        let fails = nn
            .iter()
            .filter(|(i, _)| self.store[*i].1 == Outcome::Fail)
            .count();
        Ok(if 2 * fails > nn.len() { Outcome::Fail } else { Outcome::Success })
    }
}

/// How the baseline is scored over the evaluated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnnProtocol {
    /// Predict each instance from those before it, then insert it.
    #[default]
    Prequential,
    /// Insert every evaluated instance, then predict each of them.
    Resubstitution,
}

/// Drops the first `warmup` instances and scores the rest. An empty store
/// predicts the majority prior, `success`.
pub fn knn_evaluate(
    instances: &[Instance],
    k: usize,
    warmup: usize,
    protocol: KnnProtocol,
) -> Result<ConfusionMatrix> {
    if instances.len() <= warmup {
        return Err(Error::argument(format!(
            "need more than {warmup} instances, got {}",
            instances.len()
        )));
    }
    let mut model = KnnModel::new(k)?;
    let evaluated = &instances[warmup..];
    let mut matrix = ConfusionMatrix::default();
    match protocol {
        KnnProtocol::Prequential => {
            for inst in evaluated {
                let x = inst.features.to_array();
                let predicted = if model.is_empty() {
                    Outcome::Success
                } else {
                    model.predict(&x)?
                };
                matrix.record(inst.label, predicted);
                model.insert(&x, inst.label);
            }
        }
        KnnProtocol::Resubstitution => {
            for inst in evaluated {
                model.insert(&inst.features.to_array(), inst.label);
            }
            for inst in evaluated {
                matrix.record(inst.label, model.predict(&inst.features.to_array())?);
            }
        }
    }
    Ok(matrix)
}

/// The reference protocol: first 20 instances excluded, prequential scoring.
pub fn knn_prequential(instances: &[Instance], k: usize) -> Result<ConfusionMatrix> {
    knn_evaluate(instances, k, crate::stream::DEFAULT_WARMUP, KnnProtocol::Prequential)
}
