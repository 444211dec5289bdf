//! Chronological stream simulation and prequential (test-then-train) evaluation.

mod synth;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adwin::Adwin;
use crate::commgraph::FeatureVector;
use crate::error::{Error, Result};
use crate::hoeffding::{DriftEvent, HoeffdingTree};
use crate::knn::KnnModel;
use crate::records::{BuildRecord, Outcome};

pub use synth::{synth_stream, Concept, SynthConfig};

/// Instances used for training only before scoring starts.
pub const DEFAULT_WARMUP: usize = 20;

/// One labelled element of the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub features: FeatureVector,
    pub label: Outcome,
}

/// Counts laid out by actual class, then by whether the prediction was right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub success_correct: u64,
    pub success_incorrect: u64,
    pub fail_correct: u64,
    pub fail_incorrect: u64,
}

impl ConfusionMatrix {
    pub fn new(success_correct: u64, success_incorrect: u64, fail_correct: u64, fail_incorrect: u64) -> Self {
        ConfusionMatrix {
            success_correct,
            success_incorrect,
            fail_correct,
            fail_incorrect,
        }
    }

    pub fn record(&mut self, actual: Outcome, predicted: Outcome) {
        match (actual, actual == predicted) {
            (Outcome::Success, true) => self.success_correct += 1,
            (Outcome::Success, false) => self.success_incorrect += 1,
            (Outcome::Fail, true) => self.fail_correct += 1,
            (Outcome::Fail, false) => self.fail_incorrect += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.success_total() + self.fail_total()
    }

    pub fn success_total(&self) -> u64 {
        self.success_correct + self.success_incorrect
    }

    pub fn fail_total(&self) -> u64 {
        self.fail_correct + self.fail_incorrect
    }

    pub fn correct(&self) -> u64 {
        self.success_correct + self.fail_correct
    }

    /// Fraction correct; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }

    /// Recall of one class, `None` before the class has been seen.
    pub fn recall(&self, class: Outcome) -> Option<f64> {
        let (hit, total) = match class {
            Outcome::Success => (self.success_correct, self.success_total()),
            Outcome::Fail => (self.fail_correct, self.fail_total()),
        };
        (total > 0).then(|| hit as f64 / total as f64)
    }
}

/// A learner that can be driven through a stream.
pub trait StreamClassifier {
    fn predict(&self, features: &FeatureVector) -> Outcome;
    /// Learns from one instance; reports any drift-triggered pruning.
    fn learn(&mut self, instance: &Instance) -> Vec<DriftEvent>;
    /// Forgets everything learned.
    fn reset(&mut self);
}

impl StreamClassifier for HoeffdingTree {
    fn predict(&self, features: &FeatureVector) -> Outcome {
        HoeffdingTree::predict(self, &features.to_array()).predicted
    }

    fn learn(&mut self, instance: &Instance) -> Vec<DriftEvent> {
        self.train(&instance.features.to_array(), instance.label)
    }

    fn reset(&mut self) {
        HoeffdingTree::reset(self)
    }
}

impl StreamClassifier for KnnModel {
    fn predict(&self, features: &FeatureVector) -> Outcome {
        if self.is_empty() {
            return Outcome::Success;
        }
        KnnModel::predict(self, &features.to_array()).expect("store is non-empty")
    }

    fn learn(&mut self, instance: &Instance) -> Vec<DriftEvent> {
        self.insert(&instance.features.to_array(), instance.label);
        Vec::new()
    }

    fn reset(&mut self) {
        self.clear()
    }
}

/// Stable ascending sort by start time; equal times fall back to build id.
pub fn order_chronologically(mut builds: Vec<BuildRecord>) -> Vec<BuildRecord> {
    builds.sort_by(|a, b| {
        a.started_at
            .cmp(&b.started_at)
            .then_with(|| a.build_id.cmp(&b.build_id))
    });
    builds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrequentialRecord {
    /// Position in the full stream, warmup included.
    pub index: usize,
    pub build_id: String,
    pub predicted: Outcome,
    pub actual: Outcome,
    pub cum_accuracy: f64,
    pub cum_recall_success: Option<f64>,
    pub cum_recall_fail: Option<f64>,
    /// Subtrees pruned while learning this instance.
    pub drift_events: Vec<DriftEvent>,
    /// The stream-level detector fired on this instance.
    pub global_drift: bool,
}

impl PrequentialRecord {
    pub fn drift_flag(&self) -> bool {
        self.global_drift || !self.drift_events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrequentialLog {
    pub warmup: usize,
    pub records: Vec<PrequentialRecord>,
    pub matrix: ConfusionMatrix,
    /// Stream indices at which any drift response fired, warmup included.
    pub drift_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrequentialConfig {
    pub warmup: usize,
    /// When set, an ADWIN detector with this delta watches the stream's
    /// 0/1 error and resets the model on a rise.
    pub global_drift_delta: Option<f64>,
}

impl PrequentialConfig {
    pub fn with_warmup(warmup: usize) -> Self {
        PrequentialConfig {
            warmup,
            global_drift_delta: None,
        }
    }
}

/// Trains on the first `warmup` instances, then predicts, logs and trains on
/// each remaining instance in turn.
pub fn run_prequential<M: StreamClassifier + ?Sized>(
    model: &mut M,
    instances: &[Instance],
    warmup: usize,
) -> Result<PrequentialLog> {
    run_prequential_with(model, instances, &PrequentialConfig::with_warmup(warmup))
}

pub fn run_prequential_with<M: StreamClassifier + ?Sized>(
    model: &mut M,
    instances: &[Instance],
    config: &PrequentialConfig,
) -> Result<PrequentialLog> {
    run_prequential_observed(model, instances, config, |_, _| {})
}

/// As [`run_prequential_with`], calling `on_drift(index, model)` after the
/// model has learned any instance that triggered a drift response.
pub fn run_prequential_observed<M, F>(
    model: &mut M,
    instances: &[Instance],
    config: &PrequentialConfig,
    mut on_drift: F,
) -> Result<PrequentialLog>
where
    M: StreamClassifier + ?Sized,
    F: FnMut(usize, &M),
{
    let warmup = config.warmup;
    if instances.len() <= warmup {
        return Err(Error::argument(format!(
            "need more than {warmup} instances for prequential evaluation, got {}",
            instances.len()
        )));
    }
    let mut global = config.global_drift_delta.map(Adwin::new).transpose()?;
    let mut drift_indices = Vec::new();
    for (index, inst) in instances[..warmup].iter().enumerate() {
        if !model.learn(inst).is_empty() {
            drift_indices.push(index);
            on_drift(index, model);
        }
    }

    let mut matrix = ConfusionMatrix::default();
    let mut records = Vec::with_capacity(instances.len() - warmup);
    for (index, inst) in instances.iter().enumerate().skip(warmup) {
        let predicted = model.predict(&inst.features);
        matrix.record(inst.label, predicted);

        let mut global_drift = false;
        if let Some(det) = global.as_mut() {
            let before = det.window_stats().map(|s| s.1).ok();
            let error = if predicted == inst.label { 0.0 } else { 1.0 };
            if det.update(error)?.drift_detected {
                let after = det.window_stats().map(|s| s.1).unwrap_or(error);
                if before.is_some_and(|b| after > b) {
                    model.reset();
                    global_drift = true;
                }
            }
        }
        let drift_events = model.learn(inst);
        if global_drift || !drift_events.is_empty() {
            drift_indices.push(index);
            on_drift(index, model);
        }
        records.push(PrequentialRecord {
            index,
            build_id: inst.id.clone(),
            predicted,
            actual: inst.label,
            cum_accuracy: matrix.accuracy(),
            cum_recall_success: matrix.recall(Outcome::Success),
            cum_recall_fail: matrix.recall(Outcome::Fail),
            drift_events,
            global_drift,
        });
    }
    Ok(PrequentialLog {
        warmup,
        records,
        matrix,
        drift_indices,
    })
}

/// Running per-class recall over the log: `(success, fail)`.
/// Entries before a class's first scored instance are `None`.
pub fn sensitivities(log: &PrequentialLog) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    log.records
        .iter()
        .map(|r| (r.cum_recall_success, r.cum_recall_fail))
        .unzip()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl PrequentialLog {
    pub fn accuracy(&self) -> f64 {
        self.matrix.accuracy()
    }

    /// One row per scored instance; absent recalls are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "index",
            "predicted",
            "actual",
            "cum_accuracy",
            "cum_recall_success",
            "cum_recall_fail",
            "drift_flag",
        ])?;
        for r in &self.records {
            w.write_record([
                r.index.to_string(),
                r.predicted.to_string(),
                r.actual.to_string(),
                r.cum_accuracy.to_string(),
                opt(r.cum_recall_success),
                opt(r.cum_recall_fail),
                (r.drift_flag() as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Accuracy over the scored records whose stream index lies in `range`;
    /// 0 when there are none.
    pub fn window_accuracy(&self, range: std::ops::Range<usize>) -> f64 {
        let (hits, n) = self
            .records
            .iter()
            .filter(|r| range.contains(&r.index))
            .fold((0usize, 0usize), |(h, n), r| (h + usize::from(r.predicted == r.actual), n + 1));
        if n == 0 {
            return 0.0;
        }
        hits as f64 / n as f64
    }
}
