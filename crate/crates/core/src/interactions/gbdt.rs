use serde::{Deserialize, Serialize};

use super::InteractionError;
use crate::baselines::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 6,
            learning_rate: 0.3,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Gradient-boosted trees on logistic loss with exact greedy splits: split
/// gain `G_L²/H_L + G_R²/H_R − G²/H`, leaf weight `−G/H` scaled by the
/// learning rate, no regularization terms. Among equal gains the lowest
/// feature, then the lowest threshold, wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtProxy {
    pub config: GbdtConfig,
    /// Initial margin: log-odds of the training prior.
    pub base_score: f64,
    /// Set when the labels hold a single class; the model then predicts this
    /// prior everywhere.
    pub constant: Option<f64>,
    trees: Vec<Tree>,
    cols: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct NodeStats {
    g: f64,
    h: f64,
    // sweep state for the current feature
    gl: f64,
    hl: f64,
    last: Option<f64>,
    best_gain: f64,
    best: Option<(usize, f64)>,
}

impl GbdtProxy {
    pub fn fit(x: &Matrix, y: &[f64], config: &GbdtConfig) -> Result<Self, InteractionError> {
        let n = x.rows();
        if n == 0 || n != y.len() {
            return Err(InteractionError::Empty);
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(InteractionError::NonBinaryLabels);
        }
        if x.data.iter().any(|v| !v.is_finite()) {
            return Err(InteractionError::NonFinite);
        }
        let prior = y.iter().sum::<f64>() / n as f64;
        let mut model = Self {
            config: config.clone(),
            base_score: (prior / (1.0 - prior)).ln(),
            constant: None,
            trees: Vec::new(),
            cols: x.cols,
        };
        if prior == 0.0 || prior == 1.0 {
            model.constant = Some(prior);
            return Ok(model);
        }
        let d = x.cols;
        let sorted: Vec<Vec<u32>> = (0..d)
            .map(|f| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| x.data[a as usize * d + f].total_cmp(&x.data[b as usize * d + f]));
                idx
            })
            .collect();
        let mut margin = vec![model.base_score; n];
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        for _ in 0..config.n_trees {
            for i in 0..n {
                let p = sigmoid(margin[i]);
                g[i] = p - y[i];
                h[i] = p * (1.0 - p);
            }
            let tree = grow_tree(x, &sorted, &g, &h, config);
            for (i, m) in margin.iter_mut().enumerate() {
                *m += tree.predict(x.row(i));
            }
            model.trees.push(tree);
        }
        Ok(model)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.cols, "feature count differs from training data");
        if let Some(p) = self.constant {
            return p;
        }
        sigmoid(self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>())
    }
}

/// Level-wise exact greedy growth: one sweep over each presorted column per
/// depth evaluates every candidate split of every open node.
fn grow_tree(x: &Matrix, sorted: &[Vec<u32>], g: &[f64], h: &[f64], cfg: &GbdtConfig) -> Tree {
    const CLOSED: usize = usize::MAX;
    let n = g.len();
    let d = x.cols;
    let mut nodes = vec![Node::Leaf(0.0)];
    let mut node_of = vec![0usize; n];
    let mut open = vec![0usize];
    let mut totals = vec![(g.iter().sum::<f64>(), h.iter().sum::<f64>())];
    let leaf = |gs: f64, hs: f64| -gs / hs * cfg.learning_rate;

    for _depth in 0..cfg.max_depth {
        if open.is_empty() {
            break;
        }
        // slot of each open node in `stats`
        let mut slot = vec![CLOSED; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            slot[id] = s;
        }
        let mut stats: Vec<NodeStats> = open
            .iter()
            .enumerate()
            .map(|(s, _)| NodeStats {
                g: totals[s].0,
                h: totals[s].1,
                gl: 0.0,
                hl: 0.0,
                last: None,
                best_gain: 0.0,
                best: None,
            })
            .collect();
        for f in 0..d {
            for st in stats.iter_mut() {
                st.gl = 0.0;
                st.hl = 0.0;
                st.last = None;
            }
            for &r in &sorted[f] {
                let r = r as usize;
                let node = node_of[r];
                if node == CLOSED || slot[node] == CLOSED {
                    continue;
                }
                let st = &mut stats[slot[node]];
                let v = x.data[r * d + f];
                if let Some(last) = st.last {
                    if v != last {
                        let (gr, hr) = (st.g - st.gl, st.h - st.hl);
                        if st.hl >= cfg.min_child_weight && hr >= cfg.min_child_weight {
                            let gain = st.gl * st.gl / st.hl + gr * gr / hr - st.g * st.g / st.h;
                            if gain > st.best_gain {
                                st.best_gain = gain;
                                st.best = Some((f, last + (v - last) / 2.0));
                            }
                        }
                    }
                }
                st.gl += g[r];
                st.hl += h[r];
                st.last = Some(v);
            }
        }

        let mut next_open = Vec::new();
        let mut next_totals = Vec::new();
        let mut child_of = vec![(CLOSED, CLOSED); open.len()];
        for (s, &id) in open.iter().enumerate() {
            match stats[s].best {
                Some((feature, threshold)) => {
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[id] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    child_of[s] = (left, right);
                    next_open.push(left);
                    next_open.push(right);
                    next_totals.push((0.0, 0.0));
                    next_totals.push((0.0, 0.0));
                }
                None => nodes[id] = Node::Leaf(leaf(stats[s].g, stats[s].h)),
            }
        }
        let mut next_slot = vec![CLOSED; nodes.len()];
        for (s, &id) in next_open.iter().enumerate() {
            next_slot[id] = s;
        }
        for r in 0..n {
            let node = node_of[r];
            if node == CLOSED || slot[node] == CLOSED {
                continue;
            }
            let s = slot[node];
            let (left, right) = child_of[s];
            if left == CLOSED {
                node_of[r] = CLOSED;
                continue;
            }
            let Node::Split { feature, threshold, .. } = nodes[node] else {
                unreachable!("open node with a chosen split")
            };
            let child = if x.data[r * d + feature] <= threshold { left } else { right };
            node_of[r] = child;
            let t = &mut next_totals[next_slot[child]];
            t.0 += g[r];
            t.1 += h[r];
        }
        open = next_open;
        totals = next_totals;
    }
    for (s, &id) in open.iter().enumerate() {
        nodes[id] = Node::Leaf(leaf(totals[s].0, totals[s].1));
    }
    Tree { nodes }
}
