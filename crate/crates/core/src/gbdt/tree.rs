//! CART-style regression trees grown level by level over presorted columns.

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;

const NO_NODE: u32 = u32::MAX;

/// Binary regression tree stored as parallel arrays. Node 0 is the root;
/// `split_feature[k] < 0` marks a leaf. Rows with `x[f] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub split_feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub value: Vec<f64>,
    pub max_depth: usize,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        Self {
            split_feature: vec![-1],
            threshold: vec![0.0],
            left: vec![0],
            right: vec![0],
            value: vec![value],
            max_depth: 0,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.value.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.split_feature.iter().filter(|&&f| f < 0).count()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.split_feature[node] < 0
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0usize;
        loop {
            let f = self.split_feature[k];
            if f < 0 {
                return self.value[k];
            }
            k = if x[f as usize] <= self.threshold[k] {
                self.left[k] as usize
            } else {
                self.right[k] as usize
            };
        }
    }

    /// Depth of the deepest leaf.
    pub fn depth(&self) -> usize {
        fn walk(t: &RegressionTree, k: usize) -> usize {
            if t.is_leaf(k) {
                0
            } else {
                1 + walk(t, t.left[k] as usize).max(walk(t, t.right[k] as usize))
            }
        }
        walk(self, 0)
    }

    /// Checks the structural invariants: binary, acyclic, every node
    /// reachable exactly once from the root, finite leaf values.
    pub fn is_well_formed(&self) -> bool {
        let n = self.num_nodes();
        if n == 0
            || [self.threshold.len(), self.left.len(), self.right.len(), self.split_feature.len()]
                .iter()
                .any(|&l| l != n)
        {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(k) = stack.pop() {
            if k >= n || seen[k] {
                return false;
            }
            seen[k] = true;
            if self.is_leaf(k) {
                if !self.value[k].is_finite() {
                    return false;
                }
            } else {
                stack.push(self.left[k] as usize);
                stack.push(self.right[k] as usize);
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Row order of every column, sorted by value with row index as tie-break.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    order: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(x: &FeatureMatrix) -> Self {
        let order = (0..x.num_cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.num_rows() as u32).collect();
                idx.sort_by(|&a, &b| {
                    x.get(a as usize, f)
                        .total_cmp(&x.get(b as usize, f))
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Self { order }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub lambda_leaf: f64,
}

#[derive(Debug, Clone, Copy)]
struct NodeStats {
    count: usize,
    sum: f64,
    min_r: f64,
    max_r: f64,
}

impl NodeStats {
    fn empty() -> Self {
        Self {
            count: 0,
            sum: 0.0,
            min_r: f64::INFINITY,
            max_r: f64::NEG_INFINITY,
        }
    }

    fn add(&mut self, r: f64) {
        self.count += 1;
        self.sum += r;
        self.min_r = self.min_r.min(r);
        self.max_r = self.max_r.max(r);
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Debug, Clone, Copy)]
struct Scan {
    count: usize,
    sum: f64,
    last: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m < b {
        m
    } else {
        a
    }
}

/// Grows one tree on the rows flagged in `in_sample` (all rows when `None`),
/// considering only `features`.
///
/// Each node picks the `(feature, threshold)` maximising
/// `sum_L^2 / n_L + sum_R^2 / n_R`, which is the same as minimising the
/// summed squared error around the child means. Candidates are visited by
/// increasing feature then increasing threshold and only a strictly better
/// score replaces the incumbent.
pub(crate) fn grow(
    x: &FeatureMatrix,
    residuals: &[f64],
    in_sample: Option<&[bool]>,
    sorted: &SortedColumns,
    features: &[usize],
    p: GrowParams,
) -> RegressionTree {
    let n = x.num_rows();
    let mut node_of = vec![NO_NODE; n];
    let mut root = NodeStats::empty();
    for i in 0..n {
        if in_sample.is_none_or(|m| m[i]) {
            node_of[i] = 0;
            root.add(residuals[i]);
        }
    }

    let mut tree = RegressionTree {
        split_feature: vec![-1],
        threshold: vec![0.0],
        left: vec![0],
        right: vec![0],
        value: vec![0.0],
        max_depth: p.max_depth,
    };
    let mut stats = vec![root];
    let mut frontier = vec![0usize];

    for _depth in 0..p.max_depth {
        let splittable: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&k| {
                let s = stats[k];
                s.count >= 2 * p.min_samples_leaf && s.max_r > s.min_r
            })
            .collect();
        if splittable.is_empty() {
            break;
        }
        let num_nodes = stats.len();
        let mut open = vec![false; num_nodes];
        for &k in &splittable {
            open[k] = true;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; num_nodes];
        let mut scan = vec![
            Scan {
                count: 0,
                sum: 0.0,
                last: 0.0
            };
            num_nodes
        ];

        for &f in features {
            for &k in &splittable {
                scan[k] = Scan {
                    count: 0,
                    sum: 0.0,
                    last: 0.0,
                };
            }
            for &i in &sorted.order[f] {
                let i = i as usize;
                let k = node_of[i];
                if k == NO_NODE || !open[k as usize] {
                    continue;
                }
                let k = k as usize;
                let v = x.get(i, f);
                let st = &mut scan[k];
                let total = stats[k];
                if st.count >= p.min_samples_leaf
                    && v > st.last
                    && total.count - st.count >= p.min_samples_leaf
                {
                    let right_sum = total.sum - st.sum;
                    let score = st.sum * st.sum / st.count as f64
                        + right_sum * right_sum / (total.count - st.count) as f64;
                    if best[k].is_none_or(|b| score > b.score) {
                        best[k] = Some(Candidate {
                            score,
                            feature: f,
                            threshold: midpoint(st.last, v),
                        });
                    }
                }
                st.count += 1;
                st.sum += residuals[i];
                st.last = v;
            }
        }

        let mut children = vec![(NO_NODE, NO_NODE); num_nodes];
        let mut next_frontier = Vec::new();
        for &k in &splittable {
            let Some(c) = best[k] else { continue };
            let parent_score = stats[k].sum * stats[k].sum / stats[k].count as f64;
            if !(c.score > parent_score) {
                continue;
            }
            let l = stats.len();
            for _ in 0..2 {
                stats.push(NodeStats::empty());
                tree.split_feature.push(-1);
                tree.threshold.push(0.0);
                tree.left.push(0);
                tree.right.push(0);
                tree.value.push(0.0);
            }
            tree.split_feature[k] = c.feature as i32;
            tree.threshold[k] = c.threshold;
            tree.left[k] = l as u32;
            tree.right[k] = (l + 1) as u32;
            children[k] = (l as u32, (l + 1) as u32);
            next_frontier.push(l);
            next_frontier.push(l + 1);
        }
        if next_frontier.is_empty() {
            break;
        }
        for i in 0..n {
            let k = node_of[i];
            if k == NO_NODE || (k as usize) >= num_nodes || children[k as usize].0 == NO_NODE {
                continue;
            }
            let k = k as usize;
            let f = tree.split_feature[k] as usize;
            let child = if x.get(i, f) <= tree.threshold[k] {
                children[k].0
            } else {
                children[k].1
            };
            node_of[i] = child;
            stats[child as usize].add(residuals[i]);
        }
        frontier = next_frontier;
    }

    for (k, s) in stats.iter().enumerate() {
        if tree.is_leaf(k) {
            tree.value[k] = if s.count == 0 {
                0.0
            } else {
                s.sum / (s.count as f64 + p.lambda_leaf)
            };
        }
    }
    tree
}
