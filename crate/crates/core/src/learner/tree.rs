//! CART classification tree with Gini impurity and midpoint thresholds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;

/// Two impurities closer than this are treated as equal when breaking ties.
const IMPURITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    /// Size-weighted Gini impurity of the two children, `n_l G_l + n_r G_r`.
    pub weighted_impurity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        positive_rate: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    dim: usize,
}

/// Size-weighted Gini impurity of a node with `pos` positives out of `n`.
#[inline]
fn weighted_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64;
    let q = (n - pos) as f64;
    n as f64 - (p * p + q * q) / n as f64
}

fn better(candidate: &Split, best: &Option<Split>) -> bool {
    match best {
        None => true,
        Some(b) => {
            let d = candidate.weighted_impurity - b.weighted_impurity;
            if d.abs() > IMPURITY_EPS {
                return d < 0.0;
            }
            (candidate.feature, candidate.threshold) < (b.feature, b.threshold)
        }
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Best split of `rows` on one feature, reusing `buf` for the sorted values.
fn best_on_feature(
    x: &Matrix,
    y: &[bool],
    rows: &[usize],
    feature: usize,
    min_leaf: usize,
    buf: &mut Vec<(f64, bool)>,
) -> Option<Split> {
    buf.clear();
    buf.extend(rows.iter().map(|&r| (x.get(r, feature), y[r])));
    buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let n = buf.len();
    let total_pos = buf.iter().filter(|(_, l)| *l).count();
    let mut left_pos = 0;
    let mut best: Option<Split> = None;
    for i in 0..n - 1 {
        left_pos += usize::from(buf[i].1);
        let left_n = i + 1;
        if buf[i].0 == buf[i + 1].0 || left_n < min_leaf || n - left_n < min_leaf {
            continue;
        }
        let cand = Split {
            feature,
            threshold: midpoint(buf[i].0, buf[i + 1].0),
            weighted_impurity: weighted_gini(left_pos, left_n)
                + weighted_gini(total_pos - left_pos, n - left_n),
        };
        if better(&cand, &best) {
            best = Some(cand);
        }
    }
    best
}

/// Lowest-impurity split over `features`, ties going to the lowest feature
/// index and then the lowest threshold. `None` when no feature separates the
/// rows while leaving at least `min_leaf` on each side.
pub fn best_split(
    x: &Matrix,
    y: &[bool],
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let mut buf = Vec::with_capacity(rows.len());
    let mut best = None;
    if rows.len() < 2 {
        return None;
    }
    for &f in features {
        if let Some(s) = best_on_feature(x, y, rows, f, min_leaf, &mut buf) {
            if better(&s, &best) {
                best = Some(s);
            }
        }
    }
    best
}

pub(crate) struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: usize,
}

impl DecisionTree {
    /// Grows a tree on `rows` (indices into `x`, duplicates allowed).
    ///
    /// At each node, features are drawn in random order until
    /// `features_per_split` of them have been found that are non-constant on
    /// the node; the best split among those is taken.
    pub(crate) fn grow<R: Rng>(
        x: &Matrix,
        y: &[bool],
        mut rows: Vec<usize>,
        cfg: &TreeConfig,
        rng: &mut R,
    ) -> Self {
        let dim = x.dim();
        let mut nodes = vec![Node::Leaf { positive_rate: 0.0 }];
        let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
        let mut order: Vec<usize> = (0..dim).collect();
        let mut buf = Vec::with_capacity(rows.len());

        while let Some((slot, start, end, depth)) = stack.pop() {
            let node_rows = &rows[start..end];
            let n = node_rows.len();
            let pos = node_rows.iter().filter(|&&r| y[r]).count();
            let leaf = Node::Leaf {
                positive_rate: pos as f64 / n as f64,
            };
            let splittable = pos != 0
                && pos != n
                && n >= 2 * cfg.min_leaf
                && cfg.max_depth.is_none_or(|d| depth < d);
            if !splittable {
                nodes[slot] = leaf;
                continue;
            }

            let mut best: Option<Split> = None;
            let mut visited = 0;
            let mut useful = 0;
            while visited < dim && useful < cfg.features_per_split {
                let pick = rng.gen_range(visited..dim);
                order.swap(visited, pick);
                let f = order[visited];
                visited += 1;
                let first = x.get(node_rows[0], f);
                if node_rows.iter().all(|&r| x.get(r, f) == first) {
                    continue;
                }
                useful += 1;
                if let Some(s) = best_on_feature(x, y, node_rows, f, cfg.min_leaf, &mut buf) {
                    if better(&s, &best) {
                        best = Some(s);
                    }
                }
            }

            let Some(split) = best else {
                nodes[slot] = leaf;
                continue;
            };
            let segment = &mut rows[start..end];
            let mut mid = 0;
            for i in 0..segment.len() {
                if x.get(segment[i], split.feature) <= split.threshold {
                    segment.swap(i, mid);
                    mid += 1;
                }
            }
            let left = nodes.len();
            nodes.push(Node::Leaf { positive_rate: 0.0 });
            nodes.push(Node::Leaf { positive_rate: 0.0 });
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, start + mid, end, depth + 1));
            stack.push((left, start, start + mid, depth + 1));
        }
        DecisionTree { nodes, dim }
    }

    /// Positive-class frequency of the leaf reached by `row`.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive_rate } => return positive_rate,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, left as usize).max(go(nodes, right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }

    /// Every split feature index is below `dim` and every leaf rate is in `[0, 1]`.
    pub fn is_well_formed(&self) -> bool {
        self.nodes.iter().all(|n| match *n {
            Node::Leaf { positive_rate } => (0.0..=1.0).contains(&positive_rate),
            Node::Split { feature, .. } => feature < self.dim,
        })
    }
}
