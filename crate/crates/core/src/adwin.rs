//! Adaptive windowing change detector over a stream of values in [0, 1].
//!
//! The window is stored as an exponential histogram: row `r` holds at most
//! [`MAX_BUCKETS_PER_ROW`] buckets of `2^r` consecutive values each, so
//! memory grows with the logarithm of the window length. After every update
//! each bucket boundary splits the window into an older and a newer part.
//! When the two means differ by more than
//!
//! ```text
//! eps_cut = sqrt( ln(4 / delta') / (2 m) ),   m = 1 / (1/n0 + 1/n1)
//! ```
//!
//! with `delta' = delta / boundaries`, the older part is discarded. Cutting
//! repeats until no boundary rejects.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BUCKETS_PER_ROW: usize = 5;
/// Sub-windows shorter than this are never tested.
pub const MIN_SUB_WINDOW: u64 = 5;
pub const DEFAULT_DELTA: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    sum: f64,
    /// Sum of squared deviations from the bucket mean.
    m2: f64,
    count: u64,
    /// Stream index of the oldest value in the bucket.
    first_index: u64,
}

impl Bucket {
    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    fn merge(older: Bucket, newer: Bucket) -> Bucket {
        let count = older.count + newer.count;
        let d = older.mean() - newer.mean();
        Bucket {
            sum: older.sum + newer.sum,
            m2: older.m2
                + newer.m2
                + d * d * (older.count as f64 * newer.count as f64) / count as f64,
            count,
            first_index: older.first_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftSignal {
    pub drift_detected: bool,
    pub window_size_after: u64,
    /// Stream index of the oldest retained value, set only on detection.
    pub cut_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    delta: f64,
    /// `rows[r]` holds buckets of capacity `2^r`, oldest at the front.
    rows: Vec<VecDeque<Bucket>>,
    total_count: u64,
    total_sum: f64,
    total_m2: f64,
    seen: u64,
    detections: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Adwin::new(DEFAULT_DELTA).expect("default delta is valid")
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::argument(format!("adwin delta must be in (0, 1), got {delta}")));
        }
        Ok(Adwin {
            delta,
            rows: Vec::new(),
            total_count: 0,
            total_sum: 0.0,
            total_m2: 0.0,
            seen: 0,
            detections: 0,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> u64 {
        self.total_count
    }

    pub fn is_empty(&self) -> bool {
        self.total_count == 0
    }

    /// Number of values ever passed to [`update`](Self::update).
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn detections(&self) -> u64 {
        self.detections
    }

    pub fn bucket_count(&self) -> usize {
        self.rows.iter().map(VecDeque::len).sum()
    }

    /// `(size, mean, population variance)` of the retained window.
    pub fn window_stats(&self) -> Result<(u64, f64, f64)> {
        if self.total_count == 0 {
            return Err(Error::EmptyWindow);
        }
        let n = self.total_count as f64;
        let mean = (self.total_sum / n).clamp(0.0, 1.0);
        Ok((self.total_count, mean, (self.total_m2 / n).max(0.0)))
    }

    /// Stream index of the oldest retained value.
    pub fn oldest_index(&self) -> Option<u64> {
        self.buckets_oldest_first().next().map(|b| b.first_index)
    }

    /// Start indices of all buckets, oldest first.
    pub fn bucket_starts(&self) -> Vec<u64> {
        self.buckets_oldest_first().map(|b| b.first_index).collect()
    }

    pub fn update(&mut self, value: f64) -> Result<DriftSignal> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::argument(format!("adwin input must be in [0, 1], got {value}")));
        }
        self.insert(value);

        let mut detected = false;
        while let Some(drop) = self.find_cut() {
            for _ in 0..drop {
                self.pop_oldest();
            }
            self.recompute_totals();
            detected = true;
        }
        if detected {
            self.detections += 1;
        }
        Ok(DriftSignal {
            drift_detected: detected,
            window_size_after: self.total_count,
            cut_index: if detected { self.oldest_index() } else { None },
        })
    }

    fn insert(&mut self, value: f64) {
        let index = self.seen;
        self.seen += 1;
        if self.total_count > 0 {
            let n = self.total_count as f64;
            let d = value - self.total_sum / n;
            self.total_m2 += d * d * n / (n + 1.0);
        }
        self.total_count += 1;
        self.total_sum += value;

        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_back(Bucket {
            sum: value,
            m2: 0.0,
            count: 1,
            first_index: index,
        });
        let mut r = 0;
        while r < self.rows.len() && self.rows[r].len() > MAX_BUCKETS_PER_ROW {
            let older = self.rows[r].pop_front().expect("row over capacity");
            let newer = self.rows[r].pop_front().expect("row over capacity");
            if r + 1 == self.rows.len() {
                self.rows.push(VecDeque::new());
            }
            self.rows[r + 1].push_back(Bucket::merge(older, newer));
            r += 1;
        }
    }

    fn buckets_oldest_first(&self) -> impl Iterator<Item = &Bucket> + '_ {
        self.rows.iter().rev().flat_map(|row| row.iter())
    }

    /// Number of oldest buckets to drop for the first rejecting boundary.
    fn find_cut(&self) -> Option<usize> {
        let buckets = self.bucket_count();
        if buckets < 2 || self.total_count < 2 * MIN_SUB_WINDOW {
            return None;
        }
        let delta_prime = self.delta / (buckets - 1) as f64;
        let log_term = (4.0 / delta_prime).ln();
        let (mut n0, mut s0) = (0u64, 0.0f64);
        for (i, b) in self.buckets_oldest_first().take(buckets - 1).enumerate() {
            n0 += b.count;
            s0 += b.sum;
            let n1 = self.total_count - n0;
            if n0 < MIN_SUB_WINDOW || n1 < MIN_SUB_WINDOW {
                continue;
            }
            let mean0 = s0 / n0 as f64;
            let mean1 = (self.total_sum - s0) / n1 as f64;
            let m = 1.0 / (1.0 / n0 as f64 + 1.0 / n1 as f64);
            let eps = (log_term / (2.0 * m)).sqrt();
            if (mean0 - mean1).abs() > eps {
                return Some(i + 1);
            }
        }
        None
    }

    fn pop_oldest(&mut self) {
        if let Some(row) = self.rows.iter_mut().rev().find(|row| !row.is_empty()) {
            row.pop_front();
        }
        while self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
    }

    fn recompute_totals(&mut self) {
        let merged = self
            .buckets_oldest_first()
            .copied()
            .reduce(Bucket::merge);
        match merged {
            Some(b) => {
                self.total_count = b.count;
                self.total_sum = b.sum;
                self.total_m2 = b.m2;
            }
            None => {
                self.total_count = 0;
                self.total_sum = 0.0;
                self.total_m2 = 0.0;
            }
        }
    }
}
