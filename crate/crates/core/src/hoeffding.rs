//! Incremental Hoeffding-tree classifier for the two build outcomes.
//!
//! Leaves keep class counts plus, per attribute and class, a Gaussian
//! summary of the values seen. Every `grace_period` instances a leaf scores
//! ten candidate thresholds per attribute by information gain and splits
//! when the best attribute beats the runner-up by more than the Hoeffding
//! bound, or when the bound has shrunk below the tie threshold.
//!
//! Each internal node owns an [`Adwin`] detector fed with the 0/1 error of
//! the tree's prediction for every instance routed through it. When a
//! detector sees the error rate rise, the node's subtree is replaced by a
//! fresh leaf.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adwin::Adwin;
use crate::commgraph::FEATURE_NAMES;
use crate::error::{Error, Result};
use crate::records::Outcome;

/// Number of candidate thresholds evaluated per attribute.
pub const CANDIDATE_THRESHOLDS: usize = 10;
/// A split branch must receive at least this fraction of the leaf's mass.
pub const MIN_BRANCH_FRACTION: f64 = 0.01;
pub const SNAPSHOT_VERSION: u32 = 1;

const FAIL: usize = 0;
const SUCCESS: usize = 1;

fn class_index(label: Outcome) -> usize {
    match label {
        Outcome::Fail => FAIL,
        Outcome::Success => SUCCESS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub grace_period: u64,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    /// Range of the split criterion; 1 for binary-class information gain.
    pub range: f64,
    pub drift_delta: f64,
    /// Attach a drift detector to every internal node.
    pub per_node_drift: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            grace_period: 20,
            split_confidence: 0.05,
            tie_threshold: 0.1,
            range: 1.0,
            drift_delta: 0.002,
            per_node_drift: true,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if self.grace_period == 0 {
            return Err(Error::argument("grace period must be positive"));
        }
        if !open_unit(self.split_confidence) {
            return Err(Error::argument("split confidence must be in (0, 1)"));
        }
        if !open_unit(self.tie_threshold) {
            return Err(Error::argument("tie threshold must be in (0, 1)"));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::argument("range must be positive"));
        }
        if !open_unit(self.drift_delta) {
            return Err(Error::argument("drift delta must be in (0, 1)"));
        }
        Ok(())
    }
}

/// `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: u64) -> Result<f64> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::argument(format!("range must be positive, got {range}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::argument(format!("delta must be in (0, 1], got {delta}")));
    }
    if n == 0 {
        return Err(Error::argument("hoeffding bound needs at least one observation"));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// The split rule: informative, and either clearly better than the
/// runner-up or too close to call with a bound already below `tie`.
pub fn should_split(best_gain: f64, second_gain: f64, epsilon: f64, tie: f64) -> bool {
    best_gain > 0.0 && (best_gain - second_gain > epsilon || epsilon < tie)
}

/// Running count, mean and squared-deviation sum (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub count: f64,
    pub mean: f64,
    pub m2: f64,
}

impl GaussianSummary {
    pub fn add(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.count > 1.0 {
            (self.m2 / (self.count - 1.0)).max(0.0)
        } else {
            0.0
        }
    }

    /// Estimated number of observations `<= t`.
    pub fn mass_at_or_below(&self, t: f64) -> f64 {
        if self.count == 0.0 {
            return 0.0;
        }
        let sd = self.variance().sqrt();
        if sd == 0.0 {
            return if self.mean <= t { self.count } else { 0.0 };
        }
        let z = (t - self.mean) / sd;
        self.count * 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafStats {
    /// Weighted votes `[fail, success]`, including mass inherited on split.
    pub class_counts: [f64; 2],
    /// Per attribute, per class `[fail, success]`.
    pub observers: Vec<[GaussianSummary; 2]>,
    /// Observed `(min, max)` per attribute.
    pub ranges: Vec<Option<(f64, f64)>>,
    pub instances_since_eval: u64,
    /// Instances routed here since the leaf was created.
    pub observed: u64,
}

impl LeafStats {
    pub fn new(attributes: usize) -> Self {
        Self::with_counts(attributes, 0.0, 0.0)
    }

    pub fn with_counts(attributes: usize, fail: f64, success: f64) -> Self {
        LeafStats {
            class_counts: [fail, success],
            observers: vec![[GaussianSummary::default(); 2]; attributes],
            ranges: vec![None; attributes],
            instances_since_eval: 0,
            observed: 0,
        }
    }

    fn learn(&mut self, x: &[f64], label: Outcome) {
        let c = class_index(label);
        self.class_counts[c] += 1.0;
        for (i, &v) in x.iter().enumerate() {
            self.observers[i][c].add(v);
            self.ranges[i] = Some(match self.ranges[i] {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
        self.instances_since_eval += 1;
        self.observed += 1;
    }

    pub fn votes(&self) -> VoteReport {
        VoteReport::from_counts(self.class_counts)
    }

    pub fn total(&self) -> f64 {
        self.class_counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteReport {
    pub predicted: Outcome,
    pub votes_fail: f64,
    pub votes_success: f64,
}

impl VoteReport {
    /// Argmax of the votes; equal votes go to `success`.
    pub fn from_counts(counts: [f64; 2]) -> Self {
        let predicted = if counts[FAIL] > counts[SUCCESS] {
            Outcome::Fail
        } else {
            Outcome::Success
        };
        VoteReport {
            predicted,
            votes_fail: counts[FAIL],
            votes_success: counts[SUCCESS],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub attribute: usize,
    /// Values `<= threshold` go left.
    pub threshold: f64,
    pub left: Box<Node>,
    pub right: Box<Node>,
    pub detector: Option<Adwin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf(LeafStats),
    Split(SplitNode),
}

impl Node {
    pub fn split(attribute: usize, threshold: f64, left: Node, right: Node) -> Node {
        Node::Split(SplitNode {
            attribute,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
            detector: None,
        })
    }

    fn leaf_mass(&self) -> f64 {
        match self {
            Node::Leaf(l) => l.total(),
            Node::Split(s) => s.left.leaf_mass() + s.right.leaf_mass(),
        }
    }

    fn count(&self) -> (usize, usize, usize) {
        match self {
            Node::Leaf(_) => (0, 1, 1),
            Node::Split(s) => {
                let (sl, ll, dl) = s.left.count();
                let (sr, lr, dr) = s.right.count();
                (sl + sr + 1, ll + lr, dl.max(dr) + 1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub attribute: usize,
    pub threshold: f64,
    pub gain: f64,
    /// Class mass `[fail, success]` estimated to fall on each side.
    pub left: [f64; 2],
    pub right: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDecision {
    pub best: Option<SplitCandidate>,
    pub second_gain: f64,
    pub epsilon: f64,
    pub split: bool,
}

/// A subtree discarded because its error rate rose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    /// Branch path from the root, `L`/`R` per level; empty for the root.
    pub path: String,
    pub depth: usize,
    /// Leaf vote mass removed with the subtree.
    pub discarded: f64,
}

fn entropy(counts: &[f64; 2]) -> f64 {
    let total = counts[0] + counts[1];
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

fn information_gain(parent: &[f64; 2], left: &[f64; 2], right: &[f64; 2]) -> Option<f64> {
    let total = parent[0] + parent[1];
    let (nl, nr) = (left[0] + left[1], right[0] + right[1]);
    if total <= 0.0 || nl / total < MIN_BRANCH_FRACTION || nr / total < MIN_BRANCH_FRACTION {
        return None;
    }
    Some(entropy(parent) - (nl / total) * entropy(left) - (nr / total) * entropy(right))
}

/// Midpoints of ten equal-width bins over `(lo, hi)`; empty if `lo == hi`.
pub fn candidate_thresholds(lo: f64, hi: f64) -> Vec<f64> {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Vec::new();
    }
    let width = (hi - lo) / CANDIDATE_THRESHOLDS as f64;
    (0..CANDIDATE_THRESHOLDS)
        .map(|k| lo + (k as f64 + 0.5) * width)
        .filter(|t| *t > lo && *t < hi)
        .collect()
}

fn best_for_attribute(leaf: &LeafStats, attribute: usize) -> Option<SplitCandidate> {
    let (lo, hi) = leaf.ranges[attribute]?;
    let obs = &leaf.observers[attribute];
    let parent = [obs[FAIL].count, obs[SUCCESS].count];
    let mut best: Option<SplitCandidate> = None;
    for t in candidate_thresholds(lo, hi) {
        let left = [obs[FAIL].mass_at_or_below(t), obs[SUCCESS].mass_at_or_below(t)];
        let right = [parent[FAIL] - left[FAIL], parent[SUCCESS] - left[SUCCESS]];
        let Some(gain) = information_gain(&parent, &left, &right) else {
            continue;
        };
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate {
                attribute,
                threshold: t,
                gain,
                left,
                right,
            });
        }
    }
    best
}

/// Scores every attribute at `leaf` and applies the split rule.
pub fn try_split(leaf: &LeafStats, params: &TreeParams) -> SplitDecision {
    let mut scored: Vec<SplitCandidate> = (0..leaf.observers.len())
        .filter_map(|a| best_for_attribute(leaf, a))
        .collect();
    // stable: among equal gains the lowest attribute index wins
    scored.sort_by(|a, b| b.gain.total_cmp(&a.gain));
    let epsilon = hoeffding_bound(params.range, params.split_confidence, leaf.observed.max(1))
        .expect("validated params");
    let best = scored.first().copied();
    let second_gain = scored.get(1).map_or(0.0, |c| c.gain);
    let split = best.is_some_and(|b| should_split(b.gain, second_gain, epsilon, params.tie_threshold));
    SplitDecision {
        best,
        second_gain,
        epsilon,
        split,
    }
}

/// Child leaves of a split. Each class's votes are shared out in the
/// proportion its Gaussian summary places on either side, so no vote mass
/// is created or lost.
fn split_children(leaf: &LeafStats, cand: &SplitCandidate) -> (LeafStats, LeafStats) {
    let attrs = leaf.observers.len();
    let observed_left = cand.left[FAIL] + cand.left[SUCCESS];
    let observed_total = observed_left + cand.right[FAIL] + cand.right[SUCCESS];
    let overall = if observed_total > 0.0 { observed_left / observed_total } else { 0.5 };
    let mut left = [0.0; 2];
    let mut right = [0.0; 2];
    for c in [FAIL, SUCCESS] {
        let seen = cand.left[c] + cand.right[c];
        let frac = if seen > 0.0 { cand.left[c] / seen } else { overall };
        left[c] = leaf.class_counts[c] * frac;
        right[c] = leaf.class_counts[c] - left[c];
    }
    (
        LeafStats::with_counts(attrs, left[FAIL], left[SUCCESS]),
        LeafStats::with_counts(attrs, right[FAIL], right[SUCCESS]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    params: TreeParams,
    attribute_names: Vec<String>,
    root: Node,
    trained: u64,
    discarded: f64,
    split_evaluations: u64,
    splits: u64,
}

/// Versioned JSON document for a tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeSnapshot {
    format_version: u32,
    #[serde(flatten)]
    tree: HoeffdingTree,
}

impl HoeffdingTree {
    /// A tree over the fifteen communication features.
    pub fn new(params: TreeParams) -> Result<Self> {
        Self::with_attributes(params, FEATURE_NAMES.iter().map(|s| s.to_string()).collect())
    }

    pub fn with_attributes(params: TreeParams, attribute_names: Vec<String>) -> Result<Self> {
        let root = Node::Leaf(LeafStats::new(attribute_names.len()));
        Self::from_root(params, attribute_names, root)
    }

    /// Wraps a hand-assembled node structure.
    pub fn from_root(params: TreeParams, attribute_names: Vec<String>, root: Node) -> Result<Self> {
        params.validate()?;
        if attribute_names.is_empty() {
            return Err(Error::argument("tree needs at least one attribute"));
        }
        check_structure(&root, attribute_names.len())?;
        let trained = root.leaf_mass().round() as u64;
        Ok(HoeffdingTree {
            params,
            attribute_names,
            root,
            trained,
            discarded: 0.0,
            split_evaluations: 0,
            splits: 0,
        })
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn trained(&self) -> u64 {
        self.trained
    }

    /// Vote mass removed by drift-triggered subtree replacement.
    pub fn discarded(&self) -> f64 {
        self.discarded
    }

    pub fn split_evaluations(&self) -> u64 {
        self.split_evaluations
    }

    pub fn splits(&self) -> u64 {
        self.splits
    }

    /// Sum of votes over all leaves.
    pub fn leaf_mass(&self) -> f64 {
        self.root.leaf_mass()
    }

    pub fn split_count(&self) -> usize {
        self.root.count().0
    }

    pub fn leaf_count(&self) -> usize {
        self.root.count().1
    }

    pub fn depth(&self) -> usize {
        self.root.count().2 - 1
    }

    /// Drops everything learned, keeping parameters.
    pub fn reset(&mut self) {
        self.discarded += self.root.leaf_mass();
        self.root = Node::Leaf(LeafStats::new(self.attribute_names.len()));
    }

    fn check_arity(&self, x: &[f64]) {
        assert_eq!(
            x.len(),
            self.attribute_names.len(),
            "instance has {} attributes, tree expects {}",
            x.len(),
            self.attribute_names.len()
        );
    }

    pub fn predict(&self, x: &[f64]) -> VoteReport {
        self.check_arity(x);
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(leaf) => return leaf.votes(),
                Node::Split(s) => {
                    node = if x[s.attribute] <= s.threshold { &s.left } else { &s.right };
                }
            }
        }
    }

    /// Test-then-learn on one instance; returns any subtree replacements.
    pub fn train(&mut self, x: &[f64], label: Outcome) -> Vec<DriftEvent> {
        self.check_arity(x);
        let error = if self.predict(x).predicted == label { 0.0 } else { 1.0 };
        let attrs = self.attribute_names.len();

        let mut events = Vec::new();
        if self.params.per_node_drift {
            if let Some(event) = feed_detectors(&mut self.root, x, error, attrs, &mut String::new()) {
                self.discarded += event.discarded;
                events.push(event);
            }
        }

        self.trained += 1;
        let params = self.params;
        let mut node = &mut self.root;
        while let Node::Split(s) = node {
            node = if x[s.attribute] <= s.threshold { &mut s.left } else { &mut s.right };
        }
        let Node::Leaf(leaf) = node else { unreachable!() };
        leaf.learn(x, label);
        if leaf.instances_since_eval >= params.grace_period {
            leaf.instances_since_eval = 0;
            self.split_evaluations += 1;
            let decision = try_split(leaf, &params);
            if let (true, Some(cand)) = (decision.split, decision.best) {
                let (left, right) = split_children(leaf, &cand);
                let detector = params
                    .per_node_drift
                    .then(|| Adwin::new(params.drift_delta).expect("validated params"));
                *node = Node::Split(SplitNode {
                    attribute: cand.attribute,
                    threshold: cand.threshold,
                    left: Box::new(Node::Leaf(left)),
                    right: Box::new(Node::Leaf(right)),
                    detector,
                });
                self.splits += 1;
            }
        }
        events
    }

    /// Indented text rendering; leaves show `fail_votes | success_votes`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_node(&self.root, &self.attribute_names, 0, "", &mut out);
        out
    }

    /// Graphviz DOT rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph hoeffding_tree {\n  node [shape=box, fontname=\"monospace\"];\n");
        let mut next = 0usize;
        dot_node(&self.root, &self.attribute_names, &mut next, &mut out);
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let snapshot = TreeSnapshot {
            format_version: SNAPSHOT_VERSION,
            tree: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&snapshot)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let snapshot: TreeSnapshot = serde_json::from_str(json)?;
        if snapshot.format_version != SNAPSHOT_VERSION {
            return Err(Error::schema(format!(
                "unsupported tree snapshot version {}",
                snapshot.format_version
            )));
        }
        let tree = snapshot.tree;
        tree.params.validate()?;
        check_structure(&tree.root, tree.attribute_names.len())?;
        Ok(tree)
    }
}

fn check_structure(node: &Node, attrs: usize) -> Result<()> {
    match node {
        Node::Leaf(l) => {
            if l.observers.len() != attrs || l.ranges.len() != attrs {
                return Err(Error::schema("leaf attribute count does not match tree"));
            }
            if l.class_counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::schema("leaf votes must be finite and non-negative"));
            }
            Ok(())
        }
        Node::Split(s) => {
            if s.attribute >= attrs {
                return Err(Error::schema(format!("split attribute {} out of range", s.attribute)));
            }
            if !s.threshold.is_finite() {
                return Err(Error::schema("split threshold must be finite"));
            }
            check_structure(&s.left, attrs)?;
            check_structure(&s.right, attrs)
        }
    }
}

/// Feeds the error to every detector on the instance's path. Replaces the
/// shallowest subtree whose detector saw the error rate rise.
fn feed_detectors(
    node: &mut Node,
    x: &[f64],
    error: f64,
    attrs: usize,
    path: &mut String,
) -> Option<DriftEvent> {
    let Node::Split(s) = node else {
        return None;
    };
    let mut rose = false;
    if let Some(det) = s.detector.as_mut() {
        let before = det.window_stats().map(|(_, m, _)| m).ok();
        let signal = det.update(error).expect("error is 0 or 1");
        if signal.drift_detected {
            let after = det.window_stats().map(|(_, m, _)| m).unwrap_or(error);
            rose = before.is_some_and(|b| after > b);
        }
    }
    let go_left = x[s.attribute] <= s.threshold;
    path.push(if go_left { 'L' } else { 'R' });
    let child = if go_left { &mut s.left } else { &mut s.right };
    let deeper = feed_detectors(child, x, error, attrs, path);
    path.pop();
    if rose {
        let discarded = node.leaf_mass();
        *node = Node::Leaf(LeafStats::new(attrs));
        return Some(DriftEvent {
            depth: path.len(),
            path: path.clone(),
            discarded,
        });
    }
    deeper
}

fn fmt_votes(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{:.0}", v.round())
    } else {
        format!("{v:.3}")
    }
}

fn render_node(node: &Node, names: &[String], indent: usize, prefix: &str, out: &mut String) {
    let pad = "  ".repeat(indent);
    match node {
        Node::Leaf(l) => {
            let _ = writeln!(
                out,
                "{pad}{prefix}leaf: {} | {}",
                fmt_votes(l.class_counts[FAIL]),
                fmt_votes(l.class_counts[SUCCESS])
            );
        }
        Node::Split(s) => {
            let _ = writeln!(out, "{pad}{prefix}{} <= {}", names[s.attribute], s.threshold);
            render_node(&s.left, names, indent + 1, "yes -> ", out);
            render_node(&s.right, names, indent + 1, "no  -> ", out);
        }
    }
}

fn dot_node(node: &Node, names: &[String], next: &mut usize, out: &mut String) -> usize {
    let id = *next;
    *next += 1;
    match node {
        Node::Leaf(l) => {
            let votes = l.votes();
            let _ = writeln!(
                out,
                "  n{id} [label=\"{}\\n{} | {}\"];",
                votes.predicted,
                fmt_votes(votes.votes_fail),
                fmt_votes(votes.votes_success)
            );
        }
        Node::Split(s) => {
            let _ = writeln!(out, "  n{id} [label=\"{}\"];", names[s.attribute]);
            let left = dot_node(&s.left, names, next, out);
            let _ = writeln!(out, "  n{id} -> n{left} [label=\"<= {}\"];", s.threshold);
            let right = dot_node(&s.right, names, next, out);
            let _ = writeln!(out, "  n{id} -> n{right} [label=\"> {}\"];", s.threshold);
        }
    }
    id
}
