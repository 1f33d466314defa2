//! CART decision tree shared by the impurity-importance ranker and the
//! decision-tree validator.
//!
//! Gini impurity for classification, variance for regression. Every feature
//! is considered at every node; among equally good splits the lower feature
//! index wins, then the lower threshold. Each feature is sorted once at the
//! root and the sorted segments are partitioned stably as the tree grows.

use crate::datagen::Task;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    /// Unnormalized impurity decrease per feature, weighted by node share.
    importances: Vec<f64>,
}

struct Candidate {
    feature: usize,
    /// Position in the feature's sorted segment where the right child starts.
    cut: usize,
    threshold: f64,
    score: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    task: Task,
    n_classes: usize,
    params: TreeParams,
    /// One sorted copy of the sample ids per feature.
    order: Vec<Vec<u32>>,
    buf: Vec<u32>,
    goes_left: Vec<bool>,
    nodes: Vec<Node>,
    importances: Vec<f64>,
    counts: Vec<f64>,
}

impl DecisionTree {
    pub fn fit(x: &Matrix, y: &[f64], task: Task, params: TreeParams) -> Result<Self> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::EmptyTrain);
        }
        if y.len() != n {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: n,
            });
        }
        let p = x.cols();
        let n_classes = match task {
            Task::Classification => y.iter().fold(0usize, |m, &v| m.max(v as usize + 1)),
            Task::Regression => 0,
        };
        let order = (0..p)
            .map(|f| {
                let mut ids: Vec<u32> = (0..n as u32).collect();
                ids.sort_by(|&a, &b| {
                    x.get(a as usize, f)
                        .partial_cmp(&x.get(b as usize, f))
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                ids
            })
            .collect();
        let mut b = Builder {
            x,
            y,
            task,
            n_classes,
            params,
            order,
            buf: vec![0; n],
            goes_left: vec![false; n],
            nodes: Vec::new(),
            importances: vec![0.0; p],
            counts: vec![0.0; n_classes.max(1)],
        };
        b.grow(n);
        let total = n as f64;
        let importances = b.importances.iter().map(|v| v / total).collect();
        Ok(Self {
            nodes: b.nodes,
            n_features: p,
            importances,
        })
    }

    /// Per-feature `sum (N_node / N) * (impurity - weighted child impurity)`.
    pub fn raw_importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.cols(),
            });
        }
        Ok((0..x.rows()).map(|r| self.predict_row(x.row(r))).collect())
    }
}

impl Builder<'_> {
    fn grow(&mut self, n: usize) {
        // (segment start, segment end, depth, node slot)
        self.nodes.push(Node::Leaf { value: 0.0 });
        let mut stack = vec![(0usize, n, 0usize, 0usize)];
        while let Some((start, end, depth, slot)) = stack.pop() {
            let (impurity, leaf_value) = self.node_stats(start, end);
            let size = end - start;
            let can_split = impurity > 0.0
                && size >= self.params.min_samples_split
                && self.params.max_depth.is_none_or(|d| depth < d);
            let best = if can_split {
                self.best_split(start, end)
            } else {
                None
            };
            let Some(best) = best else {
                self.nodes[slot] = Node::Leaf { value: leaf_value };
                continue;
            };
            // score is size * (impurity - weighted child impurity); /N applied at the end.
            self.importances[best.feature] += best.score;
            let mid = self.partition(start, end, best.feature, best.cut);
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf { value: 0.0 });
            let right = self.nodes.len();
            self.nodes.push(Node::Leaf { value: 0.0 });
            self.nodes[slot] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
            };
            stack.push((mid, end, depth + 1, right));
            stack.push((start, mid, depth + 1, left));
        }
    }

    /// Impurity of the node and its leaf prediction.
    fn node_stats(&mut self, start: usize, end: usize) -> (f64, f64) {
        let ids = &self.order[0][start..end];
        let n = (end - start) as f64;
        match self.task {
            Task::Classification => {
                self.counts.iter_mut().for_each(|c| *c = 0.0);
                for &i in ids {
                    self.counts[self.y[i as usize] as usize] += 1.0;
                }
                let sum_sq: f64 = self.counts.iter().map(|c| c * c).sum();
                let mut best = 0;
                for (c, &cnt) in self.counts.iter().enumerate() {
                    if cnt > self.counts[best] {
                        best = c;
                    }
                }
                let pure = self.counts.iter().filter(|&&c| c > 0.0).count() <= 1;
                let gini = if pure { 0.0 } else { 1.0 - sum_sq / (n * n) };
                (gini, best as f64)
            }
            Task::Regression => {
                let (mut s, mut s2) = (0.0, 0.0);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for &i in ids {
                    let v = self.y[i as usize];
                    s += v;
                    s2 += v * v;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let mean = s / n;
                let var = if lo == hi { 0.0 } else { (s2 / n - mean * mean).max(0.0) };
                (var, mean)
            }
        }
    }

    /// Best split by the proxy score `sum_children (size * impurity)` reduction.
    ///
    /// `score` holds `size * impurity - sum_children(size_c * impurity_c)`.
    fn best_split(&mut self, start: usize, end: usize) -> Option<Candidate> {
        let n = end - start;
        let mut best: Option<Candidate> = None;
        let p = self.order.len();
        match self.task {
            Task::Classification => {
                let k = self.n_classes;
                let mut total = vec![0.0f64; k];
                for &i in &self.order[0][start..end] {
                    total[self.y[i as usize] as usize] += 1.0;
                }
                let total_sq: f64 = total.iter().map(|c| c * c).sum();
                let parent = n as f64 - total_sq / n as f64;
                let mut left = vec![0.0f64; k];
                for f in 0..p {
                    left.iter_mut().for_each(|c| *c = 0.0);
                    let mut left_sq = 0.0;
                    let mut right_sq = total_sq;
                    let seg = &self.order[f][start..end];
                    for pos in 0..n - 1 {
                        let id = seg[pos] as usize;
                        let c = self.y[id] as usize;
                        let r = total[c] - left[c];
                        left_sq += 2.0 * left[c] + 1.0;
                        right_sq -= 2.0 * r - 1.0;
                        left[c] += 1.0;
                        let a = self.x.get(id, f);
                        let b = self.x.get(seg[pos + 1] as usize, f);
                        if a >= b {
                            continue;
                        }
                        let nl = (pos + 1) as f64;
                        let nr = (n - pos - 1) as f64;
                        let children = (nl - left_sq / nl) + (nr - right_sq / nr);
                        let score = parent - children;
                        if best.as_ref().is_none_or(|bst| score > bst.score) {
                            best = Some(Candidate {
                                feature: f,
                                cut: pos + 1,
                                threshold: midpoint(a, b),
                                score,
                            });
                        }
                    }
                }
            }
            Task::Regression => {
                let (mut s, mut s2) = (0.0, 0.0);
                for &i in &self.order[0][start..end] {
                    let v = self.y[i as usize];
                    s += v;
                    s2 += v * v;
                }
                let parent = s2 - s * s / n as f64;
                for f in 0..p {
                    let seg = &self.order[f][start..end];
                    let (mut ls, mut ls2) = (0.0, 0.0);
                    for pos in 0..n - 1 {
                        let id = seg[pos] as usize;
                        let v = self.y[id];
                        ls += v;
                        ls2 += v * v;
                        let a = self.x.get(id, f);
                        let b = self.x.get(seg[pos + 1] as usize, f);
                        if a >= b {
                            continue;
                        }
                        let nl = (pos + 1) as f64;
                        let nr = (n - pos - 1) as f64;
                        let rs = s - ls;
                        let rs2 = s2 - ls2;
                        let children = (ls2 - ls * ls / nl).max(0.0) + (rs2 - rs * rs / nr).max(0.0);
                        let score = parent - children;
                        if best.as_ref().is_none_or(|bst| score > bst.score) {
                            best = Some(Candidate {
                                feature: f,
                                cut: pos + 1,
                                threshold: midpoint(a, b),
                                score,
                            });
                        }
                    }
                }
            }
        }
        best.map(|mut b| {
            // Score is in units of "size * impurity"; callers expect the same.
            b.score = b.score.max(0.0);
            b
        })
    }

    /// Stable partition of every feature's segment; returns the boundary.
    fn partition(&mut self, start: usize, end: usize, feature: usize, cut: usize) -> usize {
        for &i in &self.order[feature][start..start + cut] {
            self.goes_left[i as usize] = true;
        }
        let mid = start + cut;
        for f in 0..self.order.len() {
            if f == feature {
                continue;
            }
            let seg = &mut self.order[f][start..end];
            let mut l = 0;
            let mut r = 0;
            for pos in 0..seg.len() {
                let id = seg[pos];
                if self.goes_left[id as usize] {
                    seg[l] = id;
                    l += 1;
                } else {
                    self.buf[r] = id;
                    r += 1;
                }
            }
            seg[l..].copy_from_slice(&self.buf[..r]);
        }
        for &i in &self.order[feature][start..mid] {
            self.goes_left[i as usize] = false;
        }
        mid
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}
