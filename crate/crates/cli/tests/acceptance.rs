//! Acceptance criteria, one line each. Every oracle here is written
//! independently of the library code it checks.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chrono::{DateTime, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use commstream::adwin::Adwin;
use commstream::commgraph::{
    betweenness_metrics, edge_betweenness, markov_centralities, node_betweenness, structural_holes, CommGraph,
};
use commstream::hoeffding::{hoeffding_bound, Node};
use commstream::knn::{knn_evaluate, KnnProtocol};
use commstream::records::{BuildKind, Comment};
use commstream::stream::{
    run_prequential, synth_stream, Concept, PrequentialLog, StreamClassifier, SynthConfig,
};
use commstream::{
    feature_vector, BuildRecord, ConfusionMatrix, ContributorId, FeatureVector, HoeffdingTree, Instance, KnnModel,
    Outcome, TreeParams, WorkItemRecord,
};
use commstream_cli::report::comparison_table;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- published confusion counts

/// Replays a fixed list of predictions regardless of input.
struct Replay {
    predictions: Vec<Outcome>,
    next: usize,
}

impl StreamClassifier for Replay {
    fn predict(&self, _: &FeatureVector) -> Outcome {
        self.predictions[self.next]
    }

    fn learn(&mut self, _: &Instance) -> Vec<commstream::hoeffding::DriftEvent> {
        self.next += 1;
        Vec::new()
    }

    fn reset(&mut self) {}
}

fn log_with_counts(sc: usize, si: usize, fc: usize, fi: usize) -> PrequentialLog {
    let mut rows: Vec<(Outcome, Outcome)> = Vec::new();
    rows.extend(std::iter::repeat_n((Outcome::Success, Outcome::Success), sc));
    rows.extend(std::iter::repeat_n((Outcome::Success, Outcome::Fail), si));
    rows.extend(std::iter::repeat_n((Outcome::Fail, Outcome::Fail), fc));
    rows.extend(std::iter::repeat_n((Outcome::Fail, Outcome::Success), fi));
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(179));
    let mut warm = vec![(Outcome::Success, Outcome::Success); 20];
    warm.extend(rows);
    let instances: Vec<Instance> = warm
        .iter()
        .enumerate()
        .map(|(i, (label, _))| Instance {
            id: format!("b{i}"),
            features: FeatureVector::default(),
            label: *label,
        })
        .collect();
    let mut model = Replay {
        predictions: warm.iter().map(|(_, p)| *p).collect(),
        next: 0,
    };
    run_prequential(&mut model, &instances, 20).expect("199 instances")
}

fn published_count_arithmetic() -> Check {
    let mut details = Vec::new();
    let published = [((83, 33, 32, 31), 64.24), ((80, 36, 23, 40), 57.54)];
    for ((sc, si, fc, fi), reported) in published {
        let log = log_with_counts(sc, si, fc, fi);
        let m = log.matrix;
        ensure(m == ConfusionMatrix::new(sc as u64, si as u64, fc as u64, fi as u64), || format!("{m:?}"))?;
        let pct = 100.0 * log.accuracy();
        let hand = 100.0 * (sc + fc) as f64 / 179.0;
        ensure((pct - reported).abs() <= 0.01, || format!("{pct} vs {reported}"))?;
        ensure((pct - hand).abs() < 1e-12, || format!("{pct} vs hand {hand}"))?;
        ensure(m.success_total() == 116 && m.fail_total() == 63 && m.total() == 179, || format!("{m:?}"))?;
        ensure(log.records.len() == 179, || "scored count".into())?;
        details.push(format!("{pct:.4}%"));
    }
    Ok(format!("accuracies {}; rows 116 + 63 = 179", details.join(", ")))
}

// ---------------------------------------------------------------- Hoeffding bound

fn hoeffding_bound_checks() -> Check {
    for n in [1, 2, 20, 1000] {
        let e = hoeffding_bound(1.0, 1.0, n).map_err(|e| e.to_string())?;
        ensure(e == 0.0, || format!("(1, 1, {n}) -> {e}"))?;
    }
    let e = hoeffding_bound(1.0, 0.05, 20).map_err(|e| e.to_string())?;
    let hand = (20f64.ln() / 40.0).sqrt();
    ensure((e - 0.27367).abs() <= 1e-5 && (e - hand).abs() < 1e-15, || format!("{e}"))?;

    // one-sided deviation of the mean of n draws in [0, 1]; the bound
    // promises a rate of at most delta, allowed here up to 2 delta
    let reps = 10_000;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for &(delta, n) in &[(0.05, 20u64), (0.1, 50), (0.2, 10)] {
        let eps = hoeffding_bound(1.0, delta, n).unwrap();
        for dist in 0..3 {
            let mut violations = 0;
            for _ in 0..reps {
                let draw = |rng: &mut ChaCha8Rng| -> f64 {
                    match dist {
                        0 => f64::from(u8::from(rng.random_bool(0.5))),
                        1 => rng.random::<f64>(),
                        _ => f64::from(u8::from(rng.random_bool(0.1))),
                    }
                };
                let truth = [0.5, 0.5, 0.1][dist];
                let mean = (0..n).map(|_| draw(&mut rng)).sum::<f64>() / n as f64;
                if mean - truth >= eps {
                    violations += 1;
                }
            }
            let rate = violations as f64 / reps as f64;
            ensure(rate <= 2.0 * delta, || format!("delta {delta}, n {n}, dist {dist}: rate {rate}"))?;
            worst = worst.max(rate / delta);
        }
    }
    Ok(format!("(1,0.05,20) = {e:.6}; worst violation rate {worst:.3} x delta over 10000 reps"))
}

// ---------------------------------------------------------------- graph oracles

fn adjacency(g: &CommGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut a = vec![vec![false; n]; n];
    for (x, y) in g.edges() {
        a[x][y] = true;
    }
    a
}

/// All shortest paths per ordered pair, found by enumerating simple paths.
fn shortest_paths(a: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = a.len();
    let mut all: Vec<Vec<usize>> = Vec::new();
    fn extend(a: &[Vec<bool>], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        let last = *path.last().unwrap();
        for next in 0..a.len() {
            if a[last][next] && !path.contains(&next) {
                path.push(next);
                extend(a, path, out);
                path.pop();
            }
        }
    }
    for s in 0..n {
        extend(a, &mut vec![s], &mut all);
    }
    let mut shortest = Vec::new();
    for s in 0..n {
        for t in (0..n).filter(|&t| t != s) {
            let between: Vec<&Vec<usize>> =
                all.iter().filter(|p| p[0] == s && *p.last().unwrap() == t).collect();
            if let Some(min) = between.iter().map(|p| p.len()).min() {
                shortest.extend(between.into_iter().filter(|p| p.len() == min).cloned());
            }
        }
    }
    shortest
}

struct BruteBetweenness {
    node: Vec<f64>,
    edge: Vec<f64>,
    node_group: f64,
    edge_group: f64,
}

fn brute_betweenness(g: &CommGraph) -> BruteBetweenness {
    let a = adjacency(g);
    let n = a.len();
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let paths = shortest_paths(&a);
    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; edges.len()];
    for s in 0..n {
        for t in (0..n).filter(|&t| t != s) {
            let st: Vec<&Vec<usize>> = paths.iter().filter(|p| p[0] == s && *p.last().unwrap() == t).collect();
            let count = st.len() as f64;
            for p in &st {
                for v in &p[1..p.len() - 1] {
                    node[*v] += 1.0 / count;
                }
                for w in p.windows(2) {
                    let k = edges.iter().position(|e| *e == (w[0], w[1])).unwrap();
                    edge[k] += 1.0 / count;
                }
            }
        }
    }
    if n >= 3 {
        node.iter_mut().for_each(|x| *x /= ((n - 1) * (n - 2)) as f64);
    } else {
        node.iter_mut().for_each(|x| *x = 0.0);
    }
    if n >= 2 {
        edge.iter_mut().for_each(|x| *x /= (n * (n - 1)) as f64);
    }
    let (mut node_group, mut edge_group) = (0.0, 0.0);
    if n >= 3 {
        let max = node.iter().cloned().fold(0.0, f64::max);
        node_group = node.iter().map(|c| max - c).sum::<f64>() / (n - 1) as f64;
        if !edge.is_empty() {
            let max = edge.iter().cloned().fold(0.0, f64::max);
            edge_group = edge.iter().map(|c| max - c).sum::<f64>() / edge.len() as f64;
        }
    }
    BruteBetweenness {
        node,
        edge,
        node_group,
        edge_group,
    }
}

/// Burt's effective size and efficiency, averaged over nodes with ties.
fn brute_holes(g: &CommGraph) -> (f64, f64) {
    let a = adjacency(g);
    let n = a.len();
    let tie = |x: usize, y: usize| a[x][y] || a[y][x];
    let (mut es_sum, mut eff_sum, mut k) = (0.0, 0.0, 0);
    for i in 0..n {
        let contacts: Vec<usize> = (0..n).filter(|&j| j != i && tie(i, j)).collect();
        if contacts.is_empty() {
            continue;
        }
        let p = 1.0 / contacts.len() as f64;
        let es: f64 = contacts
            .iter()
            .map(|&j| 1.0 - contacts.iter().filter(|&&q| q != j && tie(j, q)).map(|_| p).sum::<f64>())
            .sum();
        es_sum += es;
        eff_sum += es / contacts.len() as f64;
        k += 1;
    }
    if k == 0 {
        (0.0, 0.0)
    } else {
        (es_sum / k as f64, eff_sum / k as f64)
    }
}

fn exhaustive_digraphs(n: usize) -> Vec<CommGraph> {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    (0u32..1 << slots.len())
        .map(|mask| {
            let edges: Vec<_> = slots.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
            CommGraph::from_index_edges(n, &edges)
        })
        .collect()
}

fn random_digraph(rng: &mut ChaCha8Rng, n: usize) -> CommGraph {
    let p = rng.random_range(0.1..0.9);
    let edges: Vec<_> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .filter(|_| rng.random_bool(p))
        .collect();
    CommGraph::from_index_edges(n, &edges)
}

const EXACT: f64 = 1e-9;

fn compare_graph(g: &CommGraph) -> Result<(), String> {
    let brute = brute_betweenness(g);
    let node = node_betweenness(g);
    let edge = edge_betweenness(g);
    let group = betweenness_metrics(g);
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < EXACT);
    let edges: Vec<_> = g.edges().collect();
    ensure(close(&node, &brute.node), || format!("node betweenness on {edges:?}: {node:?} vs {:?}", brute.node))?;
    ensure(close(&edge, &brute.edge), || format!("edge betweenness on {edges:?}: {edge:?} vs {:?}", brute.edge))?;
    ensure(
        (group.node_group - brute.node_group).abs() < EXACT && (group.edge_group - brute.edge_group).abs() < EXACT,
        || format!("group betweenness on {edges:?}"),
    )?;
    let holes = structural_holes(g);
    let (es, eff) = brute_holes(g);
    ensure(
        (holes.effective_size - es).abs() < EXACT && (holes.efficiency - eff).abs() < EXACT,
        || format!("structural holes on {edges:?}: {holes:?} vs ({es}, {eff})"),
    )
}

/// Mean first-passage times by simulation. Walks start at every node and
/// run until every other node has been hit, recording each first hit.
fn simulated_markov(g: &CommGraph, walks: usize, seed: u64) -> Vec<f64> {
    let n = g.node_count();
    let a = adjacency(g);
    let outs: Vec<Vec<usize>> = (0..n).map(|u| (0..n).filter(|&w| a[u][w]).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passage = vec![vec![0.0f64; n]; n];
    for start in 0..n {
        for _ in 0..walks {
            let mut hit = vec![false; n];
            hit[start] = true;
            let mut remaining = n - 1;
            let (mut at, mut steps) = (start, 0u64);
            while remaining > 0 {
                at = if outs[at].is_empty() || rng.random_bool(0.15) {
                    rng.random_range(0..n)
                } else {
                    *outs[at].choose(&mut rng).unwrap()
                };
                steps += 1;
                if !hit[at] {
                    hit[at] = true;
                    remaining -= 1;
                    passage[start][at] += steps as f64;
                }
            }
        }
    }
    (0..n)
        .map(|v| {
            let total: f64 = (0..n).filter(|&u| u != v).map(|u| passage[u][v] / walks as f64).sum();
            n as f64 / total
        })
        .collect()
}

fn complete_build_density(n: usize) -> f64 {
    let names: Vec<ContributorId> = (0..n).map(|i| ContributorId::new(format!("dev{i}")).unwrap()).collect();
    let item = WorkItemRecord {
        work_item_id: "w".into(),
        creator: names[0].clone(),
        comments: names[1..]
            .iter()
            .enumerate()
            .map(|(k, who)| Comment {
                author: who.clone(),
                sequence_index: k as u64,
            })
            .collect(),
        subscribers: Vec::new(),
        committers: Vec::new(),
        change_set_count: 1,
    };
    // comments reach the creator and every earlier commenter; a second item
    // created by the last commenter closes the remaining directions
    let mut back = item.clone();
    back.work_item_id = "w2".into();
    back.creator = names[n - 1].clone();
    back.comments = Vec::new();
    back.subscribers = names[..n - 1].to_vec();
    let mut items = vec![item, back];
    for (k, who) in names.iter().enumerate().take(n - 1) {
        items.push(WorkItemRecord {
            work_item_id: format!("s{k}"),
            creator: who.clone(),
            comments: Vec::new(),
            subscribers: names.iter().filter(|o| *o != who).cloned().collect(),
            committers: Vec::new(),
            change_set_count: 0,
        });
    }
    let build = BuildRecord {
        build_id: format!("complete-{n}"),
        started_at: "2009-01-01T00:00:00Z".parse().unwrap(),
        kind: BuildKind::Nightly,
        outcome: Outcome::Success,
        work_item_ids: items.iter().map(|w| w.work_item_id.clone()).collect(),
    };
    let fv = feature_vector(&build, &items).unwrap();
    assert_eq!(fv.edge_count as usize, n * (n - 1));
    fv.density
}

fn graph_oracles() -> Check {
    let mut exhaustive = 0;
    for n in 0..=3 {
        for g in exhaustive_digraphs(n) {
            compare_graph(&g)?;
            exhaustive += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for i in 0..500 {
        let n = if i % 2 == 0 { 4 } else { 5 };
        compare_graph(&random_digraph(&mut rng, n))?;
    }

    let mut worst = 0.0f64;
    let mut markov_rng = ChaCha8Rng::seed_from_u64(7);
    let mut graphs = vec![
        CommGraph::from_index_edges(2, &[(0, 1)]),
        CommGraph::from_index_edges(3, &[(0, 1), (1, 2)]),
        CommGraph::from_index_edges(4, &[(1, 0), (2, 0), (3, 0)]),
    ];
    graphs.extend((0..3).map(|i| random_digraph(&mut markov_rng, 4 + i % 2)));
    for (k, g) in graphs.iter().enumerate() {
        let exact = markov_centralities(g).map_err(|e| e.to_string())?;
        let simulated = simulated_markov(g, 100_000, 100 + k as u64);
        for (x, y) in exact.iter().zip(&simulated) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst <= 0.02, || format!("markov deviation {worst}"))?;

    for n in 2..=8 {
        let d = complete_build_density(n);
        ensure(d == 1.0, || format!("complete digraph on {n} nodes has density {d}"))?;
    }
    Ok(format!(
        "{exhaustive} exhaustive + 500 random digraphs match; markov max |diff| {worst:.4} (10^5 walks); complete density 1.0 for n=2..8"
    ))
}

// ---------------------------------------------------------------- Hoeffding tree

fn balanced_stream(n: usize, concept: Concept, drift_at: Option<usize>, seed: u64) -> Vec<Instance> {
    let drift_points = drift_at.map(|at| vec![(at, concept.flipped())]).unwrap_or_default();
    synth_stream(&SynthConfig {
        n_instances: n,
        class_ratio: (1.0, 1.0),
        concept,
        drift_points,
        seed,
    })
    .unwrap()
}

fn tree_learning() -> Check {
    let stream = balanced_stream(2000, Concept::single_threshold(), None, 2000);
    let mut tree = HoeffdingTree::new(TreeParams::default()).unwrap();
    let mut first_split = None;
    let mut hits = Vec::new();
    for (t, inst) in stream.iter().enumerate() {
        let x = inst.features.to_array();
        hits.push(tree.predict(&x).predicted == inst.label);
        tree.train(&x, inst.label);
        if first_split.is_none() {
            if let Node::Split(s) = tree.root() {
                first_split = Some((t, tree.attribute_names()[s.attribute].clone(), s.threshold));
            }
        }
    }
    let (at, attribute, threshold) = first_split.ok_or("tree never split")?;
    ensure(attribute == "group_inout_degree", || format!("first split on {attribute}"))?;
    ensure((0.4..=0.6).contains(&threshold), || format!("threshold {threshold}"))?;
    let tail = hits[1500..].iter().filter(|h| **h).count() as f64 / 500.0;
    ensure(tail >= 0.95, || format!("final-500 accuracy {tail}"))?;
    Ok(format!("first split after {} instances on {attribute} <= {threshold:.4}; final-500 accuracy {tail:.3}", at + 1))
}

// ---------------------------------------------------------------- ADWIN

fn adwin_checks() -> Check {
    let mut delays = Vec::new();
    let mut residues = Vec::new();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Adwin::new(0.002).unwrap();
        let mut delay = None;
        for t in 0..3000u64 {
            let p = if t < 1000 { 0.2 } else { 0.8 };
            let x = f64::from(u8::from(rng.random_bool(p)));
            let signal = a.update(x).unwrap();
            if signal.drift_detected && t >= 1000 {
                delay = Some(t - 1000);
                // the retained window is exactly the data after the detected
                // change point, held in buckets that all start at or after it
                let cut = signal.cut_index.ok_or("detection without cut index")?;
                let starts = a.bucket_starts();
                ensure(starts.iter().all(|s| *s >= cut), || format!("seed {seed}: bucket before cut {cut}"))?;
                ensure(a.len() == t + 1 - cut && signal.window_size_after == a.len(), || {
                    format!("seed {seed}: window {} vs {} items since cut", a.len(), t + 1 - cut)
                })?;
                residues.push(1000u64.saturating_sub(cut));
                break;
            }
        }
        delays.push(delay.ok_or_else(|| format!("seed {seed}: change never detected"))?);
    }
    delays.sort_unstable();
    let median = (delays[24] + delays[25]) as f64 / 2.0;
    ensure(median <= 150.0, || format!("median delay {median}"))?;

    let mut alarms = 0u64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let mut a = Adwin::new(0.002).unwrap();
        for _ in 0..10_000 {
            if a.update(f64::from(u8::from(rng.random_bool(0.2)))).unwrap().drift_detected {
                alarms += 1;
            }
        }
    }
    let rate = alarms as f64 / 50.0;
    ensure(rate <= 1.0, || format!("{rate} false alarms per 10000"))?;
    let clean = residues.iter().filter(|r| **r == 0).count();
    let max_residue = residues.iter().max().copied().unwrap_or(0);
    Ok(format!(
        "median delay {median} (range {}..{}); {rate:.2} false alarms per 10000; retained buckets all follow the cut \
         ({clean}/50 cuts at or after t=1000, else at most {max_residue} pre-change items kept)",
        delays[0], delays[49]
    ))
}

// ---------------------------------------------------------------- drift-coupled tree

fn drift_coupled_tree() -> Check {
    let stream = balanced_stream(2000, Concept::single_threshold(), Some(1000), 1);
    let mut tree = HoeffdingTree::new(TreeParams::default()).unwrap();
    let mut hits = Vec::new();
    let mut replacements = Vec::new();
    for (t, inst) in stream.iter().enumerate() {
        let x = inst.features.to_array();
        hits.push(tree.predict(&x).predicted == inst.label);
        if !tree.train(&x, inst.label).is_empty() {
            replacements.push(t);
        }
    }
    let acc = |r: std::ops::Range<usize>| {
        let len = r.len() as f64;
        hits[r].iter().filter(|h| **h).count() as f64 / len
    };
    let after: Vec<usize> = replacements.iter().copied().filter(|t| *t >= 1000).collect();
    ensure(!after.is_empty(), || "no subtree replacement after the swap".into())?;
    let pre = acc(500..1000);
    let recovered = (1100..=1500).find(|&end| acc(end - 100..end) >= pre - 0.05);
    let recovered = recovered.ok_or_else(|| format!("no 100-instance window within 5 points of {pre}"))?;
    // regression values measured on this seed
    ensure(after == [1005] && recovered == 1108, || format!("replacements {after:?}, recovered by {recovered}"))?;
    Ok(format!(
        "replacement at {after:?}; pre-drift accuracy {pre:.3}; 100-window back within 5 points by instance {recovered}"
    ))
}

// ---------------------------------------------------------------- k-NN

/// Standardise by the population statistics of the store, sort every stored
/// point by (distance, insertion order), vote over the first k.
fn brute_knn(store: &[(Vec<f64>, Outcome)], k: usize, x: &[f64]) -> (Vec<usize>, Outcome) {
    let d = x.len();
    let n = store.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| store.iter().map(|s| s.0[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            let v = store.iter().map(|s| (s.0[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let z = |v: &[f64]| -> Vec<f64> { (0..d).map(|j| (v[j] - mean[j]) / sd[j]).collect() };
    let zx = z(x);
    let mut ranked: Vec<(f64, usize)> = store
        .iter()
        .enumerate()
        .map(|(i, s)| (z(&s.0).iter().zip(&zx).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = ranked.iter().take(k).map(|r| r.1).collect();
    let fails = chosen.iter().filter(|&&i| store[i].1 == Outcome::Fail).count();
    let label = if 2 * fails > chosen.len() { Outcome::Fail } else { Outcome::Success };
    (chosen, label)
}

fn knn_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut compared = 0;
    for fixture in 0..100 {
        let d = rng.random_range(1..=15);
        let k = *[1usize, 2, 3, 4, 5, 7, 9].choose(&mut rng).unwrap();
        let size = rng.random_range(1..=60);
        let mut store: Vec<(Vec<f64>, Outcome)> = Vec::new();
        for _ in 0..size {
            // occasional exact duplicates exercise distance ties
            let point = if !store.is_empty() && rng.random_bool(0.15) {
                store.choose(&mut rng).unwrap().0.clone()
            } else {
                (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()
            };
            let label = if rng.random_bool(0.5) { Outcome::Success } else { Outcome::Fail };
            store.push((point, label));
        }
        let mut model = KnnModel::new(k).unwrap();
        for (p, l) in &store {
            model.insert(p, *l);
        }
        for _ in 0..5 {
            let x: Vec<f64> = if rng.random_bool(0.3) {
                store.choose(&mut rng).unwrap().0.clone()
            } else {
                (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()
            };
            let (expected_idx, expected) = brute_knn(&store, k, &x);
            let got: Vec<usize> = model.neighbours(&x).unwrap().iter().map(|(i, _)| *i).collect();
            ensure(got == expected_idx, || format!("fixture {fixture}: neighbours {got:?} vs {expected_idx:?}"))?;
            let label = model.predict(&x).unwrap();
            ensure(label == expected, || format!("fixture {fixture}: {label} vs {expected}"))?;
            compared += 1;
        }
    }

    // a 199-instance stream whose last 179 hold 116 successes and 63 failures
    let (seed, stream) = (0u64..)
        .map(|s| (s, synth_stream(&SynthConfig::reference(s)).unwrap()))
        .find(|(_, st)| st[20..].iter().filter(|i| i.label == Outcome::Success).count() == 116)
        .unwrap();
    let m = knn_evaluate(&stream, 5, 20, KnnProtocol::Prequential).map_err(|e| e.to_string())?;
    let mut oracle = ConfusionMatrix::default();
    let mut store: Vec<(Vec<f64>, Outcome)> = Vec::new();
    for inst in &stream[20..] {
        let x = inst.features.to_array().to_vec();
        let predicted = if store.is_empty() { Outcome::Success } else { brute_knn(&store, 5, &x).1 };
        oracle.record(inst.label, predicted);
        store.push((x, inst.label));
    }
    ensure(m == oracle, || format!("{m:?} vs oracle {oracle:?}"))?;
    ensure(m.total() == 179 && m.success_total() == 116 && m.fail_total() == 63, || format!("{m:?}"))?;
    let table = comparison_table(&[("k-NN (k=5)".to_string(), m)]);
    let numeric = table
        .lines()
        .filter(|l| l.split_whitespace().last().is_some_and(|w| w.trim_end_matches('%').parse::<f64>().is_ok()))
        .count();
    ensure(numeric == 5, || table.clone())?;
    Ok(format!(
        "{compared} queries on 100 fixtures match; seed {seed}: 179 scored ({}+{} success, {}+{} fail), 5-row table",
        m.success_correct, m.success_incorrect, m.fail_correct, m.fail_incorrect
    ))
}

// ---------------------------------------------------------------- end to end

fn write_repository(dir: &Path, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let people: Vec<ContributorId> = (0..14).map(|i| ContributorId::new(format!("dev{i:02}")).unwrap()).collect();
    let mut items = Vec::new();
    for w in 0..90 {
        let creator = people.choose(&mut rng).unwrap().clone();
        let mut seq = 0u64;
        let comments = (0..rng.random_range(0..5))
            .map(|_| {
                seq += rng.random_range(1..4);
                Comment {
                    author: people.choose(&mut rng).unwrap().clone(),
                    sequence_index: seq,
                }
            })
            .collect();
        let pick = |rng: &mut ChaCha8Rng, max: usize| -> Vec<ContributorId> {
            let count = rng.random_range(0..=max);
            let chosen: BTreeSet<&ContributorId> = people.choose_multiple(rng, count).collect();
            chosen.into_iter().cloned().collect()
        };
        items.push(WorkItemRecord {
            work_item_id: format!("wi-{w:03}"),
            creator,
            comments,
            subscribers: pick(&mut rng, 4),
            committers: pick(&mut rng, 2),
            change_set_count: rng.random_range(0..6),
        });
    }
    let mut builds: Vec<BuildRecord> = (0..80)
        .map(|b| {
            let count = rng.random_range(1..5);
            let ids: BTreeSet<String> = items
                .choose_multiple(&mut rng, count)
                .map(|w: &WorkItemRecord| w.work_item_id.clone())
                .collect();
            BuildRecord {
                build_id: format!("B{b:03}"),
                started_at: start_time(&mut rng),
                kind: *[BuildKind::Nightly, BuildKind::Integration, BuildKind::Continuous].choose(&mut rng).unwrap(),
                outcome: if rng.random_bool(0.64) { Outcome::Success } else { Outcome::Fail },
                work_item_ids: ids.into_iter().collect(),
            }
        })
        .collect();
    builds.shuffle(&mut rng);
    let lines = |v: Vec<String>| v.join("\n") + "\n";
    std::fs::write(dir.join("builds.jsonl"), lines(builds.iter().map(|b| serde_json::to_string(b).unwrap()).collect()))
        .unwrap();
    std::fs::write(dir.join("items.jsonl"), lines(items.iter().map(|w| serde_json::to_string(w).unwrap()).collect()))
        .unwrap();
}

fn start_time(rng: &mut ChaCha8Rng) -> DateTime<Utc> {
    let day = rng.random_range(1..=28);
    let hour = rng.random_range(0..24);
    let minute = rng.random_range(0..60);
    format!("2009-04-{day:02}T{hour:02}:{minute:02}:00Z").parse().unwrap()
}

fn pipeline(inputs: &Path, dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let bin = env!("CARGO_BIN_EXE_commstream");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let features = dir.join("features.csv");
    let run_dir = dir.join("run");
    let cmp = dir.join("comparison.json");
    let steps: Vec<Vec<String>> = vec![
        vec!["extract".into(), "--builds".into(), s(&inputs.join("builds.jsonl")), "--items".into(), s(&inputs.join("items.jsonl")), "--out".into(), s(&features)],
        vec!["run".into(), "--features".into(), s(&features), "--seed".into(), "42".into(), "--out".into(), s(&run_dir)],
        vec!["compare".into(), "--features".into(), s(&features), "--seed".into(), "42".into(), "--out".into(), s(&cmp)],
        vec!["run".into(), "--synth".into(), "reference".into(), "--drift-at".into(), "100".into(), "--seed".into(), "42".into(), "--out".into(), s(&dir.join("synth"))],
    ];
    let mut artifacts = Vec::new();
    for (i, args) in steps.iter().enumerate() {
        let o = Command::new(bin).args(args).env("RUST_LOG", "error").output().map_err(|e| e.to_string())?;
        ensure(o.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))?;
        artifacts.push((format!("stdout of step {i}"), o.stdout));
    }
    let mut files = vec![features, cmp];
    for sub in [run_dir, dir.join("synth")] {
        let mut entries: Vec<_> = std::fs::read_dir(&sub).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
        entries.sort();
        files.extend(entries);
    }
    for f in files {
        let rel = f.strip_prefix(dir).unwrap().display().to_string();
        artifacts.push((rel, std::fs::read(&f).map_err(|e| e.to_string())?));
    }
    Ok(artifacts)
}

fn end_to_end_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inputs = dir.path().join("inputs");
    std::fs::create_dir_all(&inputs).map_err(|e| e.to_string())?;
    write_repository(&inputs, 42);
    let out = dir.path().join("out");
    let a = pipeline(&inputs, &out)?;
    std::fs::remove_dir_all(&out).map_err(|e| e.to_string())?;
    let b = pipeline(&inputs, &out)?;
    ensure(a.len() == b.len(), || "artifact sets differ".into())?;
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        ensure(name_a == name_b && bytes_a == bytes_b, || format!("{name_a} differs between runs"))?;
    }
    let rows = String::from_utf8_lossy(&a.iter().find(|(n, _)| n == "features.csv").unwrap().1).lines().count() - 1;
    Ok(format!("{} artifacts byte-identical across two runs ({rows} extracted builds)", a.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("confusion-count arithmetic", published_count_arithmetic),
        ("hoeffding bound", hoeffding_bound_checks),
        ("graph-metric oracles", graph_oracles),
        ("hoeffding tree learning", tree_learning),
        ("adwin", adwin_checks),
        ("drift-coupled tree", drift_coupled_tree),
        ("k-nn", knn_checks),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS  {name:<26} {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<26} {detail} [{secs:.1}s]");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
