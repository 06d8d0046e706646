//! Bootstrap ensembles of CART trees.
//!
//! Tree `i` draws its bootstrap sample and split candidates from a ChaCha
//! stream keyed by `(seed, i)`, so the forest is reproducible and any
//! prefix of it is stable: growing a forest never reshuffles the trees
//! that are already there.

use super::tree::{ClsTree, RegTree, TreeParams};
use super::TrainError;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    rng
}

fn bootstrap_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegForest {
    trees: Vec<RegTree>,
}

impl RegForest {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[[f64; 2]],
        n_trees: usize,
        params: &TreeParams,
        bootstrap: bool,
        seed: u64,
    ) -> Result<RegForest, TrainError> {
        if n_trees == 0 {
            return Err(TrainError::BadHyper("n_trees must be positive".into()));
        }
        let trees = (0..n_trees)
            .map(|i| {
                let mut rng = tree_rng(seed, i);
                if bootstrap {
                    let idx = bootstrap_indices(x.len(), &mut rng);
                    let bx: Vec<Vec<f64>> = idx.iter().map(|&j| x[j].clone()).collect();
                    let by: Vec<[f64; 2]> = idx.iter().map(|&j| y[j]).collect();
                    RegTree::fit(&bx, &by, params, &mut rng)
                } else {
                    RegTree::fit(x, y, params, &mut rng)
                }
            })
            .collect();
        Ok(RegForest { trees })
    }

    /// Mean of the member predictions.
    pub fn predict(&self, x: &[f64]) -> [f64; 2] {
        let mut acc = [0.0f64; 2];
        for t in &self.trees {
            let p = t.predict(x);
            acc[0] += p[0];
            acc[1] += p[1];
        }
        let n = self.trees.len() as f64;
        [acc[0] / n, acc[1] / n]
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(super) fn trees(&self) -> &[RegTree] {
        &self.trees
    }

    pub(super) fn from_trees(trees: Vec<RegTree>) -> RegForest {
        RegForest { trees }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClsForest {
    trees: Vec<ClsTree>,
    n_labels: usize,
}

impl ClsForest {
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_labels: usize,
        n_trees: usize,
        params: &TreeParams,
        bootstrap: bool,
        seed: u64,
    ) -> Result<ClsForest, TrainError> {
        if n_trees == 0 {
            return Err(TrainError::BadHyper("n_trees must be positive".into()));
        }
        let trees = (0..n_trees)
            .map(|i| {
                let mut rng = tree_rng(seed, i);
                if bootstrap {
                    let idx = bootstrap_indices(x.len(), &mut rng);
                    let bx: Vec<Vec<f64>> = idx.iter().map(|&j| x[j].clone()).collect();
                    let by: Vec<usize> = idx.iter().map(|&j| y[j]).collect();
                    ClsTree::fit(&bx, &by, n_labels, params, &mut rng)
                } else {
                    ClsTree::fit(x, y, n_labels, params, &mut rng)
                }
            })
            .collect();
        Ok(ClsForest { trees, n_labels })
    }

    /// Majority vote; ties break to the lowest label index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_labels];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        let mut best = 0;
        for (label, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = label;
            }
        }
        best
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(super) fn trees(&self) -> &[ClsTree] {
        &self.trees
    }

    pub(super) fn labels(&self) -> usize {
        self.n_labels
    }

    pub(super) fn from_trees(trees: Vec<ClsTree>, n_labels: usize) -> ClsForest {
        ClsForest { trees, n_labels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_reg(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<[f64; 2]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.gen_range(0.0..10.0)).collect())
            .collect();
        let y: Vec<[f64; 2]> = x
            .iter()
            .map(|v| [v[0] * 2.0 + v[1], v[2] - v[3] + rng.gen_range(-0.1..0.1)])
            .collect();
        (x, y)
    }

    #[test]
    fn single_tree_without_bootstrap_or_subsampling_is_a_plain_tree() {
        let (x, y) = toy_reg(120, 1);
        let params = TreeParams::full(8, 2, 4).unwrap();
        let forest = RegForest::fit(&x, &y, 1, &params, false, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7); // irrelevant: mtry = d
        let tree = RegTree::fit(&x, &y, &params, &mut rng);
        for row in &x {
            assert_eq!(forest.predict(row), tree.predict(row));
        }
    }

    #[test]
    fn forest_prefix_is_stable_as_trees_are_added() {
        let (x, y) = toy_reg(80, 2);
        let params = TreeParams::new(6, 2, 2).unwrap();
        let small = RegForest::fit(&x, &y, 3, &params, true, 9).unwrap();
        let large = RegForest::fit(&x, &y, 10, &params, true, 9).unwrap();
        assert_eq!(small.trees(), &large.trees()[..3]);
    }

    #[test]
    fn forest_smooths_over_its_members() {
        let (x, y) = toy_reg(150, 3);
        let params = TreeParams::new(6, 2, 2).unwrap();
        let forest = RegForest::fit(&x, &y, 30, &params, true, 4).unwrap();
        // Ensemble mean equals the average of member predictions.
        let row = &x[0];
        let mean: f64 = forest
            .trees()
            .iter()
            .map(|t| t.predict(row)[0])
            .sum::<f64>()
            / forest.n_trees() as f64;
        assert!((forest.predict(row)[0] - mean).abs() < 1e-12);
    }

    #[test]
    fn classification_vote_ties_break_low() {
        // Two trees disagreeing 1 vs 1: label 0 must win the tie against
        // label 2 regardless of which tree voted for it.
        let x = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let y = vec![2, 2, 0, 0];
        let params = TreeParams::full(1, 1, 1).unwrap();
        let forest = ClsForest::fit(&x, &y, 3, 2, &params, true, 11).unwrap();
        let mut votes = [0usize; 3];
        for t in forest.trees() {
            votes[t.predict(&[5.0])] += 1;
        }
        if votes[0] == votes[2] && votes[0] > 0 {
            assert_eq!(forest.predict(&[5.0]), 0);
        }
    }

    #[test]
    fn forests_are_deterministic_in_the_seed() {
        let (x, y) = toy_reg(60, 5);
        let params = TreeParams::new(5, 2, 2).unwrap();
        let a = RegForest::fit(&x, &y, 8, &params, true, 100).unwrap();
        let b = RegForest::fit(&x, &y, 8, &params, true, 100).unwrap();
        let c = RegForest::fit(&x, &y, 8, &params, true, 101).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
