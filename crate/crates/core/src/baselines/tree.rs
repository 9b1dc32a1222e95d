use serde::{Deserialize, Serialize};

use super::{check_dim, check_fit, BaselineError, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Binary labels; leaves hold the positive fraction.
    Gini,
    /// Real-valued labels; leaves hold the mean.
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// CART tree grown greedily to `max_depth`. Among equally good splits the
/// lowest feature index wins, then the lowest threshold; thresholds are
/// midpoints between consecutive distinct values and rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub max_depth: usize,
    pub criterion: Criterion,
    pub cols: usize,
    nodes: Vec<Node>,
}

/// Summed impurity of a node with `n` rows, label sum `s` and squared sum `ss`.
fn impurity(criterion: Criterion, n: f64, s: f64, ss: f64) -> f64 {
    match criterion {
        Criterion::Gini => n - (s * s + (n - s) * (n - s)) / n,
        Criterion::SquaredError => ss - s * s / n,
    }
}

impl DecisionTree {
    pub fn fit(x: &Matrix, y: &[f64], max_depth: usize, criterion: Criterion) -> Result<Self, BaselineError> {
        check_fit(x, y, criterion == Criterion::Gini)?;
        let mut tree = Self {
            max_depth,
            criterion,
            cols: x.cols,
            nodes: Vec::new(),
        };
        let rows: Vec<usize> = (0..x.rows()).collect();
        tree.grow(x, y, rows, 0);
        Ok(tree)
    }

    fn grow(&mut self, x: &Matrix, y: &[f64], rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let n = rows.len() as f64;
        let s: f64 = rows.iter().map(|&i| y[i]).sum();
        let ss: f64 = rows.iter().map(|&i| y[i] * y[i]).sum();
        self.nodes.push(Node::Leaf { value: s / n });
        let parent = impurity(self.criterion, n, s, ss);
        if depth >= self.max_depth || rows.len() < 2 || parent <= 0.0 {
            return id;
        }

        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = rows.clone();
        for f in 0..x.cols {
            let val = |i: usize| x.data[i * x.cols + f];
            order.sort_by(|&a, &b| val(a).total_cmp(&val(b)));
            let (mut ls, mut lss) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let yi = y[order[k]];
                ls += yi;
                lss += yi * yi;
                let (lo, hi) = (val(order[k]), val(order[k + 1]));
                if lo == hi {
                    continue;
                }
                let nl = (k + 1) as f64;
                let total = impurity(self.criterion, nl, ls, lss) + impurity(self.criterion, n - nl, s - ls, ss - lss);
                let threshold = lo + (hi - lo) / 2.0;
                if best.is_none_or(|(b, _, _)| total < b) {
                    best = Some((total, f, threshold));
                }
            }
        }
        let Some((total, feature, threshold)) = best else {
            return id;
        };
        if total >= parent {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| x.data[i * x.cols + feature] <= threshold);
        let left = self.grow(x, y, l, depth + 1);
        let right = self.grow(x, y, r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, BaselineError> {
        check_dim(self.cols, x)?;
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return Ok(*value),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
