//! Packed, branch-free evaluation of a tree ensemble.

use super::RegressionTree;

const LANES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[repr(C)]
struct Node {
    threshold: f64,
    feature: u32,
    /// Left child; the right child is `left + 1`. Leaves point at themselves
    /// with an infinite threshold, so extra descent steps are no-ops.
    left: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Forest {
    nodes: Vec<Node>,
    values: Vec<f64>,
    /// Padded to a multiple of `LANES` with a zero-valued leaf.
    roots: Vec<u32>,
    depth: usize,
    /// One past the largest feature index any split reads.
    width: usize,
}

impl Forest {
    pub fn compile(trees: &[RegressionTree]) -> Self {
        let mut f = Forest::default();
        for t in trees {
            let root = f.nodes.len() as u32;
            f.roots.push(root);
            f.depth = f.depth.max(t.depth());
            f.nodes.push(Node {
                threshold: f64::INFINITY,
                feature: 0,
                left: root,
            });
            f.values.push(0.0);
            let mut stack = vec![(0usize, root as usize)];
            while let Some((k, slot)) = stack.pop() {
                if t.is_leaf(k) {
                    f.values[slot] = t.value[k];
                    f.nodes[slot] = Node {
                        threshold: f64::INFINITY,
                        feature: 0,
                        left: slot as u32,
                    };
                    continue;
                }
                let l = f.nodes.len();
                for _ in 0..2 {
                    f.nodes.push(Node {
                        threshold: f64::INFINITY,
                        feature: 0,
                        left: 0,
                    });
                    f.values.push(0.0);
                }
                f.nodes[slot] = Node {
                    threshold: t.threshold[k],
                    feature: t.split_feature[k] as u32,
                    left: l as u32,
                };
                stack.push((t.left[k] as usize, l));
                stack.push((t.right[k] as usize, l + 1));
            }
        }
        f.width = f.nodes.iter().map(|n| n.feature as usize + 1).max().unwrap_or(0);
        if f.roots.len() % LANES != 0 {
            let pad = f.nodes.len() as u32;
            f.nodes.push(Node {
                threshold: f64::INFINITY,
                feature: 0,
                left: pad,
            });
            f.values.push(0.0);
            while f.roots.len() % LANES != 0 {
                f.roots.push(pad);
            }
        }
        f
    }

    /// `f0 + sum_k step * tree_k(x)`, accumulated in tree order. Padding
    /// trees add `+0.0` at the end, which leaves the sum unchanged.
    #[inline]
    pub fn predict(&self, x: &[f64], f0: f64, step: f64) -> f64 {
        assert!(x.len() >= self.width, "input narrower than the forest");
        let nodes = self.nodes.as_slice();
        let mut acc = f0;
        for chunk in self.roots.chunks_exact(LANES) {
            let mut idx = [0u32; LANES];
            idx.copy_from_slice(chunk);
            for _ in 0..self.depth {
                for slot in &mut idx {
                    // SAFETY: `compile` only emits child indices inside
                    // `nodes` and features below `width <= x.len()`.
                    unsafe {
                        let n = nodes.get_unchecked(*slot as usize);
                        let v = *x.get_unchecked(n.feature as usize);
                        *slot = n.left + (v > n.threshold) as u32;
                    }
                }
            }
            for &slot in &idx {
                acc += step * self.values[slot as usize];
            }
        }
        acc
    }
}
