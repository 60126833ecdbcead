//! Exact best-first tree growing on presorted feature orders.
//!
//! Every node owns the same contiguous segment `[start, end)` of each
//! per-feature row order, and each segment stays sorted by its feature value.
//! Splitting a node stably partitions the segments, so finding the best
//! threshold is a single linear scan per feature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::impurity::SplitScore;
use super::{check_inputs, FittedModel, ModelSpec, ModelState, Task};
use crate::rng::StageRng;
use crate::tabular::FeatureMatrix;
use crate::Result;

const LEAF: u32 = u32::MAX;

/// One node of a flat tree. Split nodes store the threshold and the index of
/// their left child (the right child follows it); leaves store their value
/// and sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    feature: u32,
    aux: u32,
    value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

impl TreeNode {
    fn leaf(value: f64, n_samples: f64) -> Self {
        Self {
            feature: LEAF,
            aux: n_samples.round().min(f64::from(u32::MAX - 1)) as u32,
            value,
        }
    }

    pub fn kind(&self) -> NodeKind {
        if self.feature == LEAF {
            NodeKind::Leaf {
                value: self.value,
                n_samples: self.aux as usize,
            }
        } else {
            NodeKind::Split {
                feature: self.feature as usize,
                threshold: self.value,
                left: self.aux as usize,
                right: self.aux as usize + 1,
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }

    /// Output of a leaf node.
    pub(crate) fn value_of_leaf(&self) -> f64 {
        self.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let n = &self.nodes[i];
            if n.feature == LEAF {
                return n.value;
            }
            i = if x[n.feature as usize] <= n.value {
                n.aux as usize
            } else {
                n.aux as usize + 1
            };
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i].kind() {
                NodeKind::Leaf { .. } => 0,
                NodeKind::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for n in self.nodes.iter_mut().filter(|n| n.feature == LEAF) {
            n.value *= factor;
        }
    }
}

/// Column-major feature values with every column's row order sorted ascending
/// (ties by row index).
pub(crate) struct Presorted {
    pub cols: Vec<Vec<f64>>,
    pub order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &FeatureMatrix) -> Self {
        let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
        let order = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]));
                idx
            })
            .collect();
        Self { cols, order }
    }

    /// Row orders restricted to rows with positive weight.
    pub fn in_bag(&self, weights: &[f64]) -> Vec<Vec<u32>> {
        self.order
            .iter()
            .map(|o| o.iter().copied().filter(|&r| weights[r as usize] > 0.0).collect())
            .collect()
    }
}

pub(crate) struct GrowParams {
    pub score: SplitScore,
    pub max_depth: Option<usize>,
    pub min_split: f64,
    pub min_leaf: f64,
    pub min_hessian: f64,
    pub max_leaves: Option<usize>,
    /// Features examined per node; all allowed features when at least their count.
    pub max_features: usize,
    pub random_thresholds: bool,
    /// Boosting splits only on strictly positive gain; CART splits any impure node.
    pub require_positive_gain: bool,
}

/// Per-row statistics indexed by row id: count weight `n` and the criterion
/// accumulators `a`, `b` (see [`SplitScore`]).
pub(crate) struct RowStats<'a> {
    pub n: &'a [f64],
    pub a: &'a [f64],
    pub b: &'a [f64],
}

pub(crate) enum Purity<'a> {
    /// `b` counts positives out of `a`; pure when either class is absent.
    Classes,
    /// Pure when every target in the node is identical.
    Targets(&'a [f64]),
    Never,
}

pub(crate) struct GrowOutput {
    pub tree: Tree,
    /// `(node, start, end)` of each leaf within `rows`.
    pub leaves: Vec<(usize, usize, usize)>,
    /// In-bag rows, grouped by leaf.
    pub rows: Vec<u32>,
}

#[derive(Clone, Copy)]
struct NodeInfo {
    start: usize,
    end: usize,
    depth: usize,
    n: f64,
    a: f64,
    b: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    node: usize,
    gain: f64,
    feature: usize,
    threshold: f64,
    n_left: usize,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.gain > other.gain
            || (self.gain == other.gain
                && (self.feature < other.feature
                    || (self.feature == other.feature && self.threshold < other.threshold)))
    }
}

struct Queued(Candidate);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // Largest gain first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .gain
            .total_cmp(&other.0.gain)
            .then(other.0.node.cmp(&self.0.node))
    }
}

struct Grower<'a> {
    cols: &'a [Vec<f64>],
    order: Vec<Vec<u32>>,
    stats: RowStats<'a>,
    purity: Purity<'a>,
    allowed: &'a [usize],
    params: &'a GrowParams,
    rng: &'a mut StageRng,
    goes_left: Vec<bool>,
    buf: Vec<u32>,
    feature_pool: Vec<usize>,
}

/// Grow one tree. `order[f]` must hold the in-bag rows sorted by feature `f`
/// for every `f` in `allowed` (other entries may be empty).
pub(crate) fn grow(
    cols: &[Vec<f64>],
    order: Vec<Vec<u32>>,
    stats: RowStats<'_>,
    purity: Purity<'_>,
    allowed: &[usize],
    params: &GrowParams,
    rng: &mut StageRng,
) -> GrowOutput {
    let n_total = cols.first().map_or(0, Vec::len);
    let reference = allowed[0];
    let len = order[reference].len();
    let mut g = Grower {
        cols,
        order,
        stats,
        purity,
        allowed,
        params,
        rng,
        goes_left: vec![false; n_total],
        buf: vec![0; len],
        feature_pool: allowed.to_vec(),
    };

    let mut info = vec![g.node_info(0, len, 0)];
    let mut nodes = vec![TreeNode::leaf(0.0, 0.0)];
    let mut heap = BinaryHeap::new();
    if let Some(c) = g.best_split(0, &info[0]) {
        heap.push(Queued(c));
    }
    let mut n_leaves = 1usize;
    while let Some(Queued(c)) = heap.pop() {
        if params.max_leaves.is_some_and(|m| n_leaves >= m) {
            break;
        }
        let parent = info[c.node];
        let mid = parent.start + c.n_left;
        g.partition(&parent, c.feature, mid);
        let left = nodes.len();
        nodes[c.node] = TreeNode {
            feature: c.feature as u32,
            aux: left as u32,
            value: c.threshold,
        };
        nodes.push(TreeNode::leaf(0.0, 0.0));
        nodes.push(TreeNode::leaf(0.0, 0.0));
        info.push(g.node_info(parent.start, mid, parent.depth + 1));
        info.push(g.node_info(mid, parent.end, parent.depth + 1));
        n_leaves += 1;
        for child in [left, left + 1] {
            if let Some(cc) = g.best_split(child, &info[child]) {
                heap.push(Queued(cc));
            }
        }
    }

    let mut leaves = Vec::with_capacity(n_leaves);
    for (i, node) in nodes.iter_mut().enumerate() {
        if node.is_leaf() {
            let nf = &info[i];
            *node = TreeNode::leaf(params.score.leaf_value(nf.a, nf.b), nf.n);
            leaves.push((i, nf.start, nf.end));
        }
    }
    let rows = std::mem::take(&mut g.order[reference]);
    GrowOutput {
        tree: Tree { nodes },
        leaves,
        rows,
    }
}

impl Grower<'_> {
    fn node_info(&self, start: usize, end: usize, depth: usize) -> NodeInfo {
        let (mut n, mut a, mut b) = (0.0, 0.0, 0.0);
        for &r in &self.order[self.allowed[0]][start..end] {
            let r = r as usize;
            n += self.stats.n[r];
            a += self.stats.a[r];
            b += self.stats.b[r];
        }
        NodeInfo {
            start,
            end,
            depth,
            n,
            a,
            b,
        }
    }

    fn is_pure(&self, node: &NodeInfo) -> bool {
        match self.purity {
            Purity::Classes => node.b <= 0.0 || node.b >= node.a,
            Purity::Targets(y) => {
                let seg = &self.order[self.allowed[0]][node.start..node.end];
                let y0 = y[seg[0] as usize];
                seg.iter().all(|&r| y[r as usize] == y0)
            }
            Purity::Never => false,
        }
    }

    fn best_split(&mut self, id: usize, node: &NodeInfo) -> Option<Candidate> {
        let p = self.params;
        if p.max_depth.is_some_and(|d| node.depth >= d)
            || node.n < p.min_split
            || node.n < 2.0 * p.min_leaf
            || node.end - node.start < 2
            || self.is_pure(node)
        {
            return None;
        }
        let parent_score = p.score.score(node.a, node.b);
        let mut best: Option<Candidate> = None;
        let n_allowed = self.allowed.len();
        let sample = p.max_features < n_allowed;
        let mut evaluated = 0usize;
        for k in 0..n_allowed {
            if sample && evaluated >= p.max_features {
                break;
            }
            let f = if sample {
                let j = self.rng.gen_range(k..n_allowed);
                self.feature_pool.swap(k, j);
                self.feature_pool[k]
            } else {
                self.allowed[k]
            };
            let seg = &self.order[f][node.start..node.end];
            let col = &self.cols[f];
            let lo = col[seg[0] as usize];
            let hi = col[seg[seg.len() - 1] as usize];
            if lo == hi {
                continue;
            }
            evaluated += 1;
            let found = if p.random_thresholds {
                let u: f64 = self.rng.gen();
                self.scan_threshold(id, f, node, parent_score, lo, hi, u)
            } else {
                self.scan_exact(id, f, node, parent_score)
            };
            if let Some(c) = found {
                if best.as_ref().map_or(true, |b| c.beats(b)) {
                    best = Some(c);
                }
            }
        }
        if sample {
            // Keep draws independent of earlier nodes' swaps.
            self.feature_pool.copy_from_slice(self.allowed);
        }
        best.filter(|c| !p.require_positive_gain || c.gain > 0.0)
    }

    fn admissible(&self, node: &NodeInfo, ln: f64, la: f64) -> bool {
        let p = self.params;
        ln >= p.min_leaf
            && node.n - ln >= p.min_leaf
            && la >= p.min_hessian
            && node.a - la >= p.min_hessian
    }

    fn scan_exact(&self, id: usize, f: usize, node: &NodeInfo, parent: f64) -> Option<Candidate> {
        let seg = &self.order[f][node.start..node.end];
        let col = &self.cols[f];
        let s = &self.stats;
        let score = self.params.score;
        let (mut ln, mut la, mut lb) = (0.0, 0.0, 0.0);
        let mut best: Option<Candidate> = None;
        let mut v = col[seg[0] as usize];
        for i in 0..seg.len() - 1 {
            let r = seg[i] as usize;
            ln += s.n[r];
            la += s.a[r];
            lb += s.b[r];
            let vn = col[seg[i + 1] as usize];
            if v == vn {
                continue;
            }
            let cur = v;
            v = vn;
            if node.n - ln < self.params.min_leaf {
                break;
            }
            if !self.admissible(node, ln, la) {
                continue;
            }
            let gain = score.score(la, lb) + score.score(node.a - la, node.b - lb) - parent;
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(Candidate {
                    node: id,
                    gain,
                    feature: f,
                    threshold: midpoint(cur, vn),
                    n_left: i + 1,
                });
            }
        }
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn scan_threshold(
        &self,
        id: usize,
        f: usize,
        node: &NodeInfo,
        parent: f64,
        lo: f64,
        hi: f64,
        u: f64,
    ) -> Option<Candidate> {
        let mut t = lo + u * (hi - lo);
        if !(t < hi) {
            t = lo;
        }
        let seg = &self.order[f][node.start..node.end];
        let col = &self.cols[f];
        let s = &self.stats;
        let (mut ln, mut la, mut lb) = (0.0, 0.0, 0.0);
        let mut n_left = 0;
        for &r in seg {
            let r = r as usize;
            if col[r] > t {
                break;
            }
            ln += s.n[r];
            la += s.a[r];
            lb += s.b[r];
            n_left += 1;
        }
        if !self.admissible(node, ln, la) {
            return None;
        }
        let score = self.params.score;
        Some(Candidate {
            node: id,
            gain: score.score(la, lb) + score.score(node.a - la, node.b - lb) - parent,
            feature: f,
            threshold: t,
            n_left,
        })
    }

    fn partition(&mut self, node: &NodeInfo, feature: usize, mid: usize) {
        let seg = &self.order[feature];
        for &r in &seg[node.start..mid] {
            self.goes_left[r as usize] = true;
        }
        for &r in &seg[mid..node.end] {
            self.goes_left[r as usize] = false;
        }
        for &f in self.allowed {
            if f == feature {
                continue;
            }
            let seg = &mut self.order[f][node.start..node.end];
            let mut li = 0;
            let mut ri = 0;
            for i in 0..seg.len() {
                let r = seg[i];
                if self.goes_left[r as usize] {
                    seg[li] = r;
                    li += 1;
                } else {
                    self.buf[ri] = r;
                    ri += 1;
                }
            }
            seg[li..].copy_from_slice(&self.buf[..ri]);
        }
    }
}

/// Threshold strictly between `a < b` such that `a <= t < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m >= a && m < b {
        m
    } else {
        a
    }
}

pub(crate) fn cart_params(spec: &ModelSpec, max_features: usize) -> GrowParams {
    let h = &spec.hyperparameters;
    GrowParams {
        score: SplitScore::from_criterion(spec.criterion()),
        max_depth: h.max_depth,
        min_split: h.min_samples_split.unwrap_or(2).max(2) as f64,
        min_leaf: spec.min_leaf() as f64,
        min_hessian: 0.0,
        max_leaves: spec.max_leaves(),
        max_features,
        random_thresholds: false,
        require_positive_gain: false,
    }
}

/// Grow a CART tree on `(x, y)` with row weights (bootstrap counts).
pub(crate) fn grow_cart(
    pre: &Presorted,
    y: &[f64],
    weights: &[f64],
    spec: &ModelSpec,
    params: &GrowParams,
    rng: &mut StageRng,
) -> Tree {
    let wy: Vec<f64> = weights.iter().zip(y).map(|(w, v)| w * v).collect();
    let order = if weights.iter().all(|&w| w == 1.0) {
        pre.order.clone()
    } else {
        pre.in_bag(weights)
    };
    let allowed: Vec<usize> = (0..pre.cols.len()).collect();
    let purity = match spec.task {
        Task::Classification => Purity::Classes,
        Task::Regression => Purity::Targets(y),
    };
    let stats = RowStats {
        n: weights,
        a: weights,
        b: &wy,
    };
    grow(&pre.cols, order, stats, purity, &allowed, params, rng).tree
}

/// A single CART tree using every feature at every split.
pub fn fit_tree(x: &FeatureMatrix, y: &[f64], spec: &ModelSpec) -> Result<FittedModel> {
    check_inputs(x, y, spec)?;
    let pre = Presorted::new(x);
    let params = cart_params(spec, x.n_cols());
    let weights = vec![1.0; x.n_rows()];
    let mut rng = crate::rng::seeded(spec.seed);
    let tree = grow_cart(&pre, y, &weights, spec, &params, &mut rng);
    Ok(FittedModel {
        spec: spec.clone(),
        feature_names: x.names().to_vec(),
        state: ModelState::Tree(tree),
        training_loss: Vec::new(),
    })
}
