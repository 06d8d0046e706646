//! CART decision trees: variance reduction for coordinates, Gini for keys.
//!
//! Split search is exhaustive over midpoints of consecutive distinct
//! feature values, scanned incrementally over sorted samples. Ties on
//! impurity go to the lowest feature index, then the lowest threshold, so
//! fitting is deterministic regardless of iteration incidentals.

use super::TrainError;
use rand::seq::index::sample as index_sample;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Number of features drawn (without replacement) as split candidates
    /// at each node. Equal to the feature count for deterministic trees.
    pub mtry: usize,
}

impl TreeParams {
    pub fn new(max_depth: usize, min_leaf: usize, mtry: usize) -> Result<Self, TrainError> {
        if max_depth == 0 {
            return Err(TrainError::BadHyper("max_depth must be positive".into()));
        }
        if min_leaf == 0 {
            return Err(TrainError::BadHyper("min_leaf must be positive".into()));
        }
        if mtry == 0 {
            return Err(TrainError::BadHyper("mtry must be positive".into()));
        }
        Ok(TreeParams {
            max_depth,
            min_leaf,
            mtry,
        })
    }

    /// Params with every feature in play at every split.
    pub fn full(max_depth: usize, min_leaf: usize, d: usize) -> Result<Self, TrainError> {
        Self::new(max_depth, min_leaf, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<L> {
    Leaf(L),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node<L>>,
        right: Box<Node<L>>,
    },
}

impl<L: Copy> Node<L> {
    fn predict(&self, x: &[f64]) -> L {
        match self {
            Node::Leaf(v) => *v,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// The split candidates at one node: the drawn feature subset, in
/// ascending order so the lowest-feature tie-break is by construction.
fn feature_subset(d: usize, mtry: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if mtry >= d {
        (0..d).collect()
    } else {
        let mut subset = index_sample(rng, d, mtry).into_vec();
        subset.sort_unstable();
        subset
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// Impurity sum of both children; lower is better.
    score: f64,
    /// Samples (by position in the node's sorted order) going left.
    n_left: usize,
}

/// Multi-output regression tree over 2D targets; leaves hold the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RegTree {
    root: Node<[f64; 2]>,
}

impl RegTree {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[[f64; 2]],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> RegTree {
        let idx: Vec<usize> = (0..x.len()).collect();
        RegTree {
            root: grow_reg(x, y, idx, params.max_depth, params, rng),
        }
    }

    pub fn predict(&self, x: &[f64]) -> [f64; 2] {
        self.root.predict(x)
    }

    /// Longest root-to-leaf path, in splits.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub(super) fn root(&self) -> &Node<[f64; 2]> {
        &self.root
    }

    pub(super) fn from_root(root: Node<[f64; 2]>) -> RegTree {
        RegTree { root }
    }
}

fn mean2(y: &[[f64; 2]], idx: &[usize]) -> [f64; 2] {
    let mut m = [0.0f64; 2];
    for &i in idx {
        m[0] += y[i][0];
        m[1] += y[i][1];
    }
    let n = idx.len() as f64;
    [m[0] / n, m[1] / n]
}

fn grow_reg(
    x: &[Vec<f64>],
    y: &[[f64; 2]],
    idx: Vec<usize>,
    depth_left: usize,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Node<[f64; 2]> {
    let leaf = || Node::Leaf(mean2(y, &idx));
    if depth_left == 0 || idx.len() < 2 * params.min_leaf {
        return leaf();
    }
    let d = x[idx[0]].len();
    let features = feature_subset(d, params.mtry, rng);

    let mut best: Option<BestSplit> = None;
    let mut order = idx.clone();
    for &f in &features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        // Sweep: left accumulates prefix sums; SSE computed from sums and
        // squared sums per axis, summed over axes.
        let n = order.len();
        let mut tot = [0.0f64; 2];
        let mut tot_sq = [0.0f64; 2];
        for &i in &order {
            for a in 0..2 {
                tot[a] += y[i][a];
                tot_sq[a] += y[i][a] * y[i][a];
            }
        }
        let mut left = [0.0f64; 2];
        let mut left_sq = [0.0f64; 2];
        for cut in 1..n {
            let i = order[cut - 1];
            for a in 0..2 {
                left[a] += y[i][a];
                left_sq[a] += y[i][a] * y[i][a];
            }
            let lo = x[order[cut - 1]][f];
            let hi = x[order[cut]][f];
            if lo == hi {
                continue; // not a boundary between distinct values
            }
            if cut < params.min_leaf || n - cut < params.min_leaf {
                continue;
            }
            let nl = cut as f64;
            let nr = (n - cut) as f64;
            let mut score = 0.0;
            for a in 0..2 {
                let right = tot[a] - left[a];
                let right_sq = tot_sq[a] - left_sq[a];
                score += left_sq[a] - left[a] * left[a] / nl;
                score += right_sq - right * right / nr;
            }
            let threshold = lo + (hi - lo) / 2.0;
            let better = match &best {
                None => true,
                Some(b) => {
                    score < b.score - 1e-12
                        || (score <= b.score + 1e-12
                            && score >= b.score - 1e-12
                            && (f, threshold) < (b.feature, b.threshold))
                }
            };
            if better {
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    score,
                    n_left: cut,
                });
            }
        }
    }

    match best {
        None => leaf(),
        Some(b) => {
            let (li, ri) = partition(x, &idx, b.feature, b.threshold);
            debug_assert_eq!(li.len(), b.n_left);
            Node::Split {
                feature: b.feature,
                threshold: b.threshold,
                left: Box::new(grow_reg(x, y, li, depth_left - 1, params, rng)),
                right: Box::new(grow_reg(x, y, ri, depth_left - 1, params, rng)),
            }
        }
    }
}

fn partition(
    x: &[Vec<f64>],
    idx: &[usize],
    feature: usize,
    threshold: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &i in idx {
        if x[i][feature] <= threshold {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    (left, right)
}

/// Classification tree; leaves hold a label index (majority, ties to the
/// lowest label).
#[derive(Debug, Clone, PartialEq)]
pub struct ClsTree {
    root: Node<usize>,
    pub(super) n_labels: usize,
}

impl ClsTree {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_labels: usize,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> ClsTree {
        let idx: Vec<usize> = (0..x.len()).collect();
        ClsTree {
            root: grow_cls(x, y, n_labels, idx, params.max_depth, params, rng),
            n_labels,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        self.root.predict(x)
    }

    /// Longest root-to-leaf path, in splits.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub(super) fn root(&self) -> &Node<usize> {
        &self.root
    }

    pub(super) fn from_root(root: Node<usize>, n_labels: usize) -> ClsTree {
        ClsTree { root, n_labels }
    }
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (label, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = label;
        }
    }
    best
}

fn gini_sum(counts: &[usize], n: f64) -> f64 {
    // n * gini = n - sum(c^2)/n, written to avoid the division by zero on
    // empty sides (callers never pass n = 0).
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n - sq / n
}

fn grow_cls(
    x: &[Vec<f64>],
    y: &[usize],
    n_labels: usize,
    idx: Vec<usize>,
    depth_left: usize,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Node<usize> {
    let mut counts = vec![0usize; n_labels];
    for &i in &idx {
        counts[y[i]] += 1;
    }
    let leaf = |counts: &[usize]| Node::Leaf(majority(counts));
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if depth_left == 0 || pure || idx.len() < 2 * params.min_leaf {
        return leaf(&counts);
    }
    let d = x[idx[0]].len();
    let features = feature_subset(d, params.mtry, rng);

    let mut best: Option<BestSplit> = None;
    let mut order = idx.clone();
    for &f in &features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let n = order.len();
        let mut left_counts = vec![0usize; n_labels];
        let mut left_n = 0usize;
        for cut in 1..n {
            let i = order[cut - 1];
            left_counts[y[i]] += 1;
            left_n += 1;
            let lo = x[order[cut - 1]][f];
            let hi = x[order[cut]][f];
            if lo == hi {
                continue;
            }
            if cut < params.min_leaf || n - cut < params.min_leaf {
                continue;
            }
            let right_counts: Vec<usize> = counts
                .iter()
                .zip(&left_counts)
                .map(|(t, l)| t - l)
                .collect();
            let score = gini_sum(&left_counts, left_n as f64)
                + gini_sum(&right_counts, (n - left_n) as f64);
            let threshold = lo + (hi - lo) / 2.0;
            let better = match &best {
                None => true,
                Some(b) => {
                    score < b.score - 1e-12
                        || (score <= b.score + 1e-12
                            && score >= b.score - 1e-12
                            && (f, threshold) < (b.feature, b.threshold))
                }
            };
            if better {
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    score,
                    n_left: cut,
                });
            }
        }
    }

    match best {
        None => leaf(&counts),
        Some(b) => {
            let (li, ri) = partition(x, &idx, b.feature, b.threshold);
            debug_assert_eq!(li.len(), b.n_left);
            Node::Split {
                feature: b.feature,
                threshold: b.threshold,
                left: Box::new(grow_cls(x, y, n_labels, li, depth_left - 1, params, rng)),
                right: Box::new(grow_cls(x, y, n_labels, ri, depth_left - 1, params, rng)),
            }
        }
    }
}
