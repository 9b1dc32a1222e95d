use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;

use super::masked::column_support;
use super::NnError;
use crate::eventlog::{FeatureInfo, SeqView};
use crate::seed;

/// Gate order used for every gate-indexed tensor.
pub const GATES: [&str; 4] = ["forget", "input", "output", "candidate"];
const FORGET: usize = 0;
const INPUT: usize = 1;
const OUTPUT: usize = 2;
const CANDIDATE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Sigmoid,
    Identity,
}

/// `Interpretable` gives each feature (and each interaction pair) its own
/// masked corridor; `Unrestricted` is one shared all-ones LSTM cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Interpretable,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub static_features: Vec<FeatureInfo>,
    pub seq_features: Vec<FeatureInfo>,
    pub hidden_static: usize,
    /// Corridor width `m` (the total hidden size for an unrestricted cell).
    pub corridor_width: usize,
    /// Unordered pairs of sequential feature indices, `i < j`.
    pub interactions: Vec<(usize, usize)>,
    pub cell: CellKind,
    pub head: Head,
}

impl Architecture {
    pub fn interpretable(
        static_features: Vec<FeatureInfo>,
        seq_features: Vec<FeatureInfo>,
        hidden_static: usize,
        corridor_width: usize,
        head: Head,
    ) -> Self {
        Self {
            static_features,
            seq_features,
            hidden_static,
            corridor_width,
            interactions: Vec::new(),
            cell: CellKind::Interpretable,
            head,
        }
    }

    /// Resolves feature-name pairs into index pairs.
    pub fn with_interactions<S: AsRef<str>>(mut self, pairs: &[(S, S)]) -> Result<Self, NnError> {
        let index = |name: &str| {
            self.seq_features
                .iter()
                .position(|f| f.name == name)
                .ok_or_else(|| NnError::UnknownFeature(name.to_string()))
        };
        let mut out = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let (i, j) = (index(a.as_ref())?, index(b.as_ref())?);
            out.push((i.min(j), i.max(j)));
        }
        self.interactions = out;
        Ok(self)
    }
}

/// Column block of the hidden state owned by one sequential feature or pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corridor {
    pub name: String,
    /// Input rows (sequential feature indices) the corridor reads.
    pub inputs: Vec<usize>,
    pub start: usize,
    pub width: usize,
}

impl Corridor {
    pub fn cols(&self) -> Range<usize> {
        self.start..self.start + self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    u: [usize; 4],
    v: [usize; 4],
    b: [usize; 4],
    w_static: usize,
    w_seq: usize,
    bias: usize,
    total: usize,
}

/// Named view into the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub range: Range<usize>,
}

/// Reusable forward buffers; kept by the caller for backprop.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    steps: usize,
    static_hidden: Vec<f64>,
    static_out: Vec<f64>,
    hs: Vec<f64>,
    cs: Vec<f64>,
    gates: Vec<f64>,
    pub logit: f64,
    pub prediction: f64,
}

impl Trace {
    /// Hidden state after the last processed step.
    pub fn final_hidden(&self) -> &[f64] {
        let hh = self.hs.len() / (self.steps + 1);
        &self.hs[self.steps * hh..]
    }

    /// Outputs `o^l` of the static MLPs.
    pub fn static_outputs(&self) -> &[f64] {
        &self.static_out
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

#[derive(Debug, Default)]
pub(crate) struct Scratch {
    dh: Vec<f64>,
    dc: Vec<f64>,
    dh_prev: Vec<f64>,
}

/// Cell and hidden state of the masked LSTM, plus the gate activations of
/// the step that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ILstmState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub forget: Vec<f64>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub candidate: Vec<f64>,
}

/// Hidden and cell state used when stepping a single corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorState {
    h: Vec<f64>,
    c: Vec<f64>,
    next_h: Vec<f64>,
}

/// Additive split of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub bias: f64,
    /// `w_static[l] · o^l` per static feature.
    pub static_effects: Vec<f64>,
    /// `⟨w_seq block, h block⟩` per corridor.
    pub corridor_effects: Vec<f64>,
    pub logit: f64,
    pub prediction: f64,
}

/// Additive network: one MLP per static feature, a corridor-masked LSTM for
/// the sequential features and a linear connection layer.
///
/// All parameters live in one flat vector (see [`PatWayNet::tensors`]); the
/// masks are fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PatWayNet {
    arch: Architecture,
    corridors: Vec<Corridor>,
    hidden: usize,
    off: Offsets,
    params: Vec<f64>,
    u_mask: Vec<u8>,
    v_mask: Vec<u8>,
    u_cols: Vec<Vec<u32>>,
    v_cols: Vec<Vec<u32>>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn build_corridors(arch: &Architecture) -> Result<Vec<Corridor>, NnError> {
    let p = arch.seq_features.len();
    let m = arch.corridor_width;
    if m == 0 && p > 0 {
        return Err(NnError::Config("corridor width must be at least 1".into()));
    }
    match arch.cell {
        CellKind::Unrestricted => {
            if !arch.interactions.is_empty() {
                return Err(NnError::Config("an unrestricted cell takes no interaction corridors".into()));
            }
            if p == 0 {
                return Ok(Vec::new());
            }
            Ok(vec![Corridor {
                name: "lstm".into(),
                inputs: (0..p).collect(),
                start: 0,
                width: m,
            }])
        }
        CellKind::Interpretable => {
            let mut out: Vec<Corridor> = arch
                .seq_features
                .iter()
                .enumerate()
                .map(|(j, f)| Corridor {
                    name: f.name.clone(),
                    inputs: vec![j],
                    start: j * m,
                    width: m,
                })
                .collect();
            for (n, &(a, b)) in arch.interactions.iter().enumerate() {
                if a >= p || b >= p {
                    return Err(NnError::UnknownFeature(format!("sequential index {}", a.max(b))));
                }
                if a == b {
                    return Err(NnError::Config(format!(
                        "interaction of '{}' with itself",
                        arch.seq_features[a].name
                    )));
                }
                if arch.interactions[..n].iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a.min(b), a.max(b))) {
                    return Err(NnError::Config("duplicate interaction pair".into()));
                }
                out.push(Corridor {
                    name: format!("{} × {}", arch.seq_features[a].name, arch.seq_features[b].name),
                    inputs: vec![a.min(b), a.max(b)],
                    start: (p + n) * m,
                    width: m,
                });
            }
            Ok(out)
        }
    }
}

impl PatWayNet {
    /// Builds the masks and draws the initial weights.
    ///
    /// Every tensor entry is uniform in `±1/√fan_in`; for masked matrices the
    /// fan-in of a gate unit counts only its unmasked inputs, and masked
    /// entries are set to exactly zero.
    pub fn new(arch: Architecture, seed_value: u64) -> Result<Self, NnError> {
        let mut net = Self::zeroed(arch)?;
        let mut rng = seed::rng(seed_value, &[0x1417]);
        let h = net.arch.hidden_static;
        let (q, hh) = (net.q(), net.hidden);
        fn fill(rng: &mut impl Rng, params: &mut [f64], range: Range<usize>, bound: f64) {
            for w in &mut params[range] {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        let o = net.off.clone();
        fill(&mut rng, &mut net.params, o.w1..o.w1 + q * h, 1.0);
        fill(&mut rng, &mut net.params, o.b1..o.b1 + q * h, 1.0);
        let bound2 = 1.0 / (h.max(1) as f64).sqrt();
        fill(&mut rng, &mut net.params, o.w2..o.w2 + q * h, bound2);
        fill(&mut rng, &mut net.params, o.b2..o.b2 + q, bound2);
        for g in 0..4 {
            for c in 0..hh {
                let fan_in = (net.u_cols[c].len() + net.v_cols[c].len()).max(1);
                let bound = 1.0 / (fan_in as f64).sqrt();
                for &r in &net.u_cols[c] {
                    net.params[o.u[g] + r as usize * hh + c] = rng.gen_range(-bound..=bound);
                }
                for &r in &net.v_cols[c] {
                    net.params[o.v[g] + r as usize * hh + c] = rng.gen_range(-bound..=bound);
                }
                net.params[o.b[g] + c] = rng.gen_range(-bound..=bound);
            }
        }
        let bound_c = 1.0 / ((q + hh).max(1) as f64).sqrt();
        fill(&mut rng, &mut net.params, o.w_static..o.w_static + q, bound_c);
        fill(&mut rng, &mut net.params, o.w_seq..o.w_seq + hh, bound_c);
        fill(&mut rng, &mut net.params, o.bias..o.bias + 1, bound_c);
        Ok(net)
    }

    /// Rebuilds a model from stored parameters; masked entries must be zero.
    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self, NnError> {
        let mut net = Self::zeroed(arch)?;
        if params.len() != net.params.len() {
            return Err(NnError::Shape(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        if net.masked_residual() != 0.0 {
            return Err(NnError::Config("masked weight entries are non-zero".into()));
        }
        Ok(net)
    }

    fn zeroed(arch: Architecture) -> Result<Self, NnError> {
        if arch.hidden_static == 0 && !arch.static_features.is_empty() {
            return Err(NnError::Config("static hidden size must be at least 1".into()));
        }
        let corridors = build_corridors(&arch)?;
        let hidden: usize = corridors.iter().map(|c| c.width).sum();
        let (q, h, p) = (arch.static_features.len(), arch.hidden_static, arch.seq_features.len());
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let w1 = take(q * h);
        let b1 = take(q * h);
        let w2 = take(q * h);
        let b2 = take(q);
        let u = [0; 4].map(|_| take(p * hidden));
        let v = [0; 4].map(|_| take(hidden * hidden));
        let b = [0; 4].map(|_| take(hidden));
        let w_static = take(q);
        let w_seq = take(hidden);
        let bias = take(1);
        let off = Offsets {
            w1,
            b1,
            w2,
            b2,
            u,
            v,
            b,
            w_static,
            w_seq,
            bias,
            total: at,
        };

        let mut u_mask = vec![0u8; p * hidden];
        let mut v_mask = vec![0u8; hidden * hidden];
        for cor in &corridors {
            for c in cor.cols() {
                for &r in &cor.inputs {
                    u_mask[r * hidden + c] = 1;
                }
                for r in cor.cols() {
                    v_mask[r * hidden + c] = 1;
                }
            }
        }
        let u_cols = column_support(&u_mask, p, hidden);
        let v_cols = column_support(&v_mask, hidden, hidden);
        Ok(Self {
            arch,
            corridors,
            hidden,
            params: vec![0.0; off.total],
            off,
            u_mask,
            v_mask,
            u_cols,
            v_cols,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn corridors(&self) -> &[Corridor] {
        &self.corridors
    }

    pub fn corridor_index(&self, name: &str) -> Option<usize> {
        self.corridors.iter().position(|c| c.name == name)
    }

    /// Corridor of an interaction pair given by sequential feature indices.
    pub fn interaction_corridor(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        let p = self.p();
        self.arch.interactions.iter().position(|&pair| pair == key).map(|n| p + n)
    }

    pub fn q(&self) -> usize {
        self.arch.static_features.len()
    }

    pub fn p(&self) -> usize {
        self.arch.seq_features.len()
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn head(&self) -> Head {
        self.arch.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// `U_m` (`p × H`) and `V_m` (`H × H`), row-major.
    pub fn masks(&self) -> (&[u8], &[u8]) {
        (&self.u_mask, &self.v_mask)
    }

    /// Named tensors in storage order.
    pub fn tensors(&self) -> Vec<TensorSpec> {
        let (q, h, p, hh) = (self.q(), self.arch.hidden_static, self.p(), self.hidden);
        let o = &self.off;
        let spec = |name: String, shape: Vec<usize>, start: usize| {
            let n: usize = shape.iter().product();
            TensorSpec {
                name,
                shape,
                range: start..start + n,
            }
        };
        let mut out = vec![
            spec("static.w1".into(), vec![q, h], o.w1),
            spec("static.b1".into(), vec![q, h], o.b1),
            spec("static.w2".into(), vec![q, h], o.w2),
            spec("static.b2".into(), vec![q], o.b2),
        ];
        for (g, name) in GATES.iter().enumerate() {
            out.push(spec(format!("ilstm.u_{name}"), vec![p, hh], o.u[g]));
        }
        for (g, name) in GATES.iter().enumerate() {
            out.push(spec(format!("ilstm.v_{name}"), vec![hh, hh], o.v[g]));
        }
        for (g, name) in GATES.iter().enumerate() {
            out.push(spec(format!("ilstm.b_{name}"), vec![hh], o.b[g]));
        }
        out.push(spec("connection.w_static".into(), vec![q], o.w_static));
        out.push(spec("connection.w_seq".into(), vec![hh], o.w_seq));
        out.push(spec("connection.bias".into(), vec![1], o.bias));
        out
    }

    /// Whether parameter `i` is a structurally masked LSTM weight.
    pub fn is_masked(&self, i: usize) -> bool {
        let hh = self.hidden;
        for g in 0..4 {
            let u = self.off.u[g];
            if (u..u + self.u_mask.len()).contains(&i) {
                return self.u_mask[i - u] == 0;
            }
            let v = self.off.v[g];
            if (v..v + self.v_mask.len()).contains(&i) {
                return self.v_mask[i - v] == 0;
            }
        }
        let _ = hh;
        false
    }

    /// Σ |W ∗ (1 − M)| over all masked matrices; zero by construction.
    pub fn masked_residual(&self) -> f64 {
        let mut total = 0.0;
        for g in 0..4 {
            let u = &self.params[self.off.u[g]..self.off.u[g] + self.u_mask.len()];
            total += u.iter().zip(&self.u_mask).filter(|(_, &m)| m == 0).map(|(w, _)| w.abs()).sum::<f64>();
            let v = &self.params[self.off.v[g]..self.off.v[g] + self.v_mask.len()];
            total += v.iter().zip(&self.v_mask).filter(|(_, &m)| m == 0).map(|(w, _)| w.abs()).sum::<f64>();
        }
        total
    }

    pub fn w_static(&self) -> &[f64] {
        &self.params[self.off.w_static..self.off.w_static + self.q()]
    }

    pub fn w_seq(&self) -> &[f64] {
        &self.params[self.off.w_seq..self.off.w_seq + self.hidden]
    }

    pub fn bias(&self) -> f64 {
        self.params[self.off.bias]
    }

    /// Mutable connection weights `(w_static, w_seq, bias)`.
    pub fn connection_mut(&mut self) -> (&mut [f64], &mut [f64], &mut f64) {
        let (q, hh) = (self.q(), self.hidden);
        let o = self.off.clone();
        let (head, tail) = self.params.split_at_mut(o.w_seq);
        let w_static = &mut head[o.w_static..o.w_static + q];
        let (w_seq, rest) = tail.split_at_mut(hh);
        (w_static, w_seq, &mut rest[o.bias - o.w_seq - hh])
    }

    /// Output `o^l = f_MLP^l(v)` of static feature `l`'s network.
    pub fn static_mlp(&self, l: usize, v: f64) -> f64 {
        let h = self.arch.hidden_static;
        let w1 = &self.params[self.off.w1 + l * h..self.off.w1 + (l + 1) * h];
        let b1 = &self.params[self.off.b1 + l * h..self.off.b1 + (l + 1) * h];
        let w2 = &self.params[self.off.w2 + l * h..self.off.w2 + (l + 1) * h];
        let mut o = self.params[self.off.b2 + l];
        for k in 0..h {
            o += w2[k] * (w1[k] * v + b1[k]).tanh();
        }
        o
    }

    pub fn initial_state(&self) -> ILstmState {
        let z = vec![0.0; self.hidden];
        ILstmState {
            c: z.clone(),
            h: z.clone(),
            forget: z.clone(),
            input: z.clone(),
            output: z.clone(),
            candidate: z,
        }
    }

    /// One step of the masked cell.
    pub fn ilstm_step(&self, x_t: &[f64], state: &ILstmState) -> Result<ILstmState, NnError> {
        if x_t.len() != self.p() || state.c.len() != self.hidden || state.h.len() != self.hidden {
            return Err(NnError::Shape("input or state width does not match the cell".into()));
        }
        if x_t.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite);
        }
        let hh = self.hidden;
        let mut gates = vec![0.0; 4 * hh];
        let mut h = vec![0.0; hh];
        let mut c = vec![0.0; hh];
        self.cell_step(x_t, &state.h, &state.c, &mut gates, &mut h, &mut c);
        Ok(ILstmState {
            c,
            h,
            forget: gates[FORGET * hh..(FORGET + 1) * hh].to_vec(),
            input: gates[INPUT * hh..(INPUT + 1) * hh].to_vec(),
            output: gates[OUTPUT * hh..(OUTPUT + 1) * hh].to_vec(),
            candidate: gates[CANDIDATE * hh..(CANDIDATE + 1) * hh].to_vec(),
        })
    }

    /// Gate values, new cell state and new hidden state of column `c`.
    #[inline]
    fn cell_column(&self, c: usize, x: &[f64], h_prev: &[f64], c_prev: f64) -> ([f64; 4], f64, f64) {
        let hh = self.hidden;
        let p = &self.params;
        let mut pre = [0.0; 4];
        for (g, z_out) in pre.iter_mut().enumerate() {
            let u = &p[self.off.u[g]..self.off.u[g] + self.u_mask.len()];
            let v = &p[self.off.v[g]..self.off.v[g] + self.v_mask.len()];
            let mut z = p[self.off.b[g] + c];
            for &r in &self.u_cols[c] {
                z += x[r as usize] * u[r as usize * hh + c];
            }
            for &r in &self.v_cols[c] {
                z += h_prev[r as usize] * v[r as usize * hh + c];
            }
            *z_out = z;
        }
        let f = sigmoid(pre[FORGET]);
        let i = sigmoid(pre[INPUT]);
        let o = sigmoid(pre[OUTPUT]);
        let g = pre[CANDIDATE].tanh();
        let cn = f * c_prev + i * g;
        ([f, i, o, g], cn, o * cn.tanh())
    }

    #[inline]
    fn cell_step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64], gates: &mut [f64], h_out: &mut [f64], c_out: &mut [f64]) {
        let hh = self.hidden;
        for c in 0..hh {
            let (gv, cn, hn) = self.cell_column(c, x, h_prev, c_prev[c]);
            for (g, v) in gv.into_iter().enumerate() {
                gates[g * hh + c] = v;
            }
            c_out[c] = cn;
            h_out[c] = hn;
        }
    }

    /// Fresh zero state for [`PatWayNet::corridor_advance`].
    pub fn corridor_start(&self) -> CorridorState {
        CorridorState {
            h: vec![0.0; self.hidden],
            c: vec![0.0; self.hidden],
            next_h: vec![0.0; self.hidden],
        }
    }

    /// Advances only the columns of corridor `k` by one step. Because the
    /// masks isolate corridors, the result is bitwise identical to the same
    /// columns of a full forward pass.
    pub fn corridor_advance(&self, k: usize, x: &[f64], st: &mut CorridorState) {
        let cols = self.corridors[k].cols();
        for c in cols.clone() {
            let (_, cn, hn) = self.cell_column(c, x, &st.h, st.c[c]);
            st.c[c] = cn;
            st.next_h[c] = hn;
        }
        for c in cols {
            st.h[c] = st.next_h[c];
        }
    }

    /// Connection-weighted contribution of corridor `k` in state `st`.
    pub fn corridor_readout(&self, k: usize, st: &CorridorState) -> f64 {
        corridor_sum(self.w_seq(), &st.h, self.corridors[k].cols())
    }

    /// Contribution of corridor `k` after each step of `seq` (entry `t - 1`
    /// is the effect of the prefix of length `t`).
    pub fn corridor_trajectory(&self, k: usize, seq: SeqView<'_>) -> Vec<f64> {
        let mut st = self.corridor_start();
        (0..seq.len)
            .map(|t| {
                self.corridor_advance(k, seq.step(t), &mut st);
                self.corridor_readout(k, &st)
            })
            .collect()
    }

    /// Forward pass into `tr`, which is kept for [`PatWayNet::backprop`].
    ///
    /// Inputs are trusted (shape-checked only by debug assertions); use
    /// [`PatWayNet::forward`] for validated evaluation.
    pub fn run(&self, x_static: &[f64], seq: SeqView<'_>, tr: &mut Trace) {
        let (q, h, hh) = (self.q(), self.arch.hidden_static, self.hidden);
        debug_assert_eq!(x_static.len(), q);
        debug_assert_eq!(seq.width, self.p());
        tr.static_hidden.resize(q * h, 0.0);
        tr.static_out.resize(q, 0.0);
        let p = &self.params;
        for l in 0..q {
            let x = x_static[l];
            let mut o = p[self.off.b2 + l];
            for k in 0..h {
                let a = (p[self.off.w1 + l * h + k] * x + p[self.off.b1 + l * h + k]).tanh();
                tr.static_hidden[l * h + k] = a;
                o += p[self.off.w2 + l * h + k] * a;
            }
            tr.static_out[l] = o;
        }

        let steps = seq.len;
        tr.steps = steps;
        tr.hs.clear();
        tr.hs.resize((steps + 1) * hh, 0.0);
        tr.cs.clear();
        tr.cs.resize((steps + 1) * hh, 0.0);
        tr.gates.resize(steps * 4 * hh, 0.0);
        for t in 0..steps {
            let (h_done, h_next) = tr.hs.split_at_mut((t + 1) * hh);
            let (c_done, c_next) = tr.cs.split_at_mut((t + 1) * hh);
            self.cell_step(
                seq.step(t),
                &h_done[t * hh..],
                &c_done[t * hh..],
                &mut tr.gates[t * 4 * hh..(t + 1) * 4 * hh],
                &mut h_next[..hh],
                &mut c_next[..hh],
            );
        }

        let w_static = &p[self.off.w_static..self.off.w_static + q];
        let w_seq = &p[self.off.w_seq..self.off.w_seq + hh];
        let h_final = &tr.hs[steps * hh..];
        let mut logit = 0.0;
        for l in 0..q {
            logit += w_static[l] * tr.static_out[l];
        }
        for cor in &self.corridors {
            logit += corridor_sum(w_seq, h_final, cor.cols());
        }
        logit += p[self.off.bias];
        tr.logit = logit;
        tr.prediction = match self.arch.head {
            Head::Sigmoid => sigmoid(logit),
            Head::Identity => logit,
        };
    }

    fn validate_input(&self, x_static: &[f64], seq: SeqView<'_>) -> Result<(), NnError> {
        if x_static.len() != self.q() || seq.width != self.p() {
            return Err(NnError::Shape(format!(
                "input has {} static and {} sequential features, model expects {} and {}",
                x_static.len(),
                seq.width,
                self.q(),
                self.p()
            )));
        }
        if seq.len == 0 {
            return Err(NnError::Shape("prefix must contain at least one step".into()));
        }
        if x_static.iter().chain(seq.data).any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite);
        }
        Ok(())
    }

    /// Validated forward pass returning the prediction and its trace.
    pub fn forward(&self, x_static: &[f64], seq: SeqView<'_>) -> Result<(f64, Trace), NnError> {
        self.validate_input(x_static, seq)?;
        let mut tr = Trace::default();
        self.run(x_static, seq, &mut tr);
        Ok((tr.prediction, tr))
    }

    pub fn predict(&self, x_static: &[f64], seq: SeqView<'_>) -> Result<f64, NnError> {
        self.forward(x_static, seq).map(|(p, _)| p)
    }

    /// Splits the logit into bias, static effects and corridor effects. The
    /// logit is accumulated in exactly the order [`PatWayNet::run`] uses.
    pub fn decompose(&self, x_static: &[f64], seq: SeqView<'_>) -> Result<Decomposition, NnError> {
        let (_, tr) = self.forward(x_static, seq)?;
        Ok(self.decompose_trace(&tr))
    }

    pub fn decompose_trace(&self, tr: &Trace) -> Decomposition {
        let w_static = self.w_static();
        let w_seq = self.w_seq();
        let static_effects: Vec<f64> = w_static.iter().zip(&tr.static_out).map(|(w, o)| w * o).collect();
        let h_final = tr.final_hidden();
        let corridor_effects: Vec<f64> = self
            .corridors
            .iter()
            .map(|cor| corridor_sum(w_seq, h_final, cor.cols()))
            .collect();
        let mut logit = 0.0;
        for e in static_effects.iter().chain(&corridor_effects) {
            logit += e;
        }
        logit += self.bias();
        Decomposition {
            bias: self.bias(),
            static_effects,
            corridor_effects,
            logit,
            prediction: tr.prediction,
        }
    }

    /// Accumulates `∂(d_logit · logit)/∂θ` into `grad` by backprop through
    /// time; masked entries are never touched.
    pub(crate) fn backprop(&self, x_static: &[f64], seq: SeqView<'_>, tr: &Trace, d_logit: f64, grad: &mut [f64], s: &mut Scratch) {
        let (q, h, hh) = (self.q(), self.arch.hidden_static, self.hidden);
        let o = &self.off;
        let p = &self.params;

        grad[o.bias] += d_logit;
        for l in 0..q {
            grad[o.w_static + l] += d_logit * tr.static_out[l];
            let d_out = d_logit * p[o.w_static + l];
            grad[o.b2 + l] += d_out;
            let x = x_static[l];
            for k in 0..h {
                let idx = l * h + k;
                let a = tr.static_hidden[idx];
                grad[o.w2 + idx] += d_out * a;
                let dz = d_out * p[o.w2 + idx] * (1.0 - a * a);
                grad[o.w1 + idx] += dz * x;
                grad[o.b1 + idx] += dz;
            }
        }

        if hh == 0 || tr.steps == 0 {
            return;
        }
        s.dh.clear();
        s.dh.resize(hh, 0.0);
        s.dc.clear();
        s.dc.resize(hh, 0.0);
        s.dh_prev.resize(hh, 0.0);
        let h_final = tr.final_hidden();
        for c in 0..hh {
            grad[o.w_seq + c] += d_logit * h_final[c];
            s.dh[c] = d_logit * p[o.w_seq + c];
        }

        for t in (0..tr.steps).rev() {
            let x = seq.step(t);
            let h_prev = &tr.hs[t * hh..(t + 1) * hh];
            let c_prev = &tr.cs[t * hh..(t + 1) * hh];
            let c_new = &tr.cs[(t + 1) * hh..(t + 2) * hh];
            let gates = &tr.gates[t * 4 * hh..(t + 1) * 4 * hh];
            s.dh_prev.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..hh {
                let f = gates[FORGET * hh + c];
                let i = gates[INPUT * hh + c];
                let og = gates[OUTPUT * hh + c];
                let g = gates[CANDIDATE * hh + c];
                let tc = c_new[c].tanh();
                let dh = s.dh[c];
                let dc = s.dc[c] + dh * og * (1.0 - tc * tc);
                let dz = [
                    dc * c_prev[c] * f * (1.0 - f),
                    dc * g * i * (1.0 - i),
                    dh * tc * og * (1.0 - og),
                    dc * i * (1.0 - g * g),
                ];
                s.dc[c] = dc * f;
                for (gate, &d) in dz.iter().enumerate() {
                    grad[o.b[gate] + c] += d;
                    for &r in &self.u_cols[c] {
                        grad[o.u[gate] + r as usize * hh + c] += x[r as usize] * d;
                    }
                    let v = o.v[gate];
                    for &r in &self.v_cols[c] {
                        let r = r as usize;
                        grad[v + r * hh + c] += h_prev[r] * d;
                        s.dh_prev[r] += p[v + r * hh + c] * d;
                    }
                }
            }
            std::mem::swap(&mut s.dh, &mut s.dh_prev);
        }
    }
}

fn corridor_sum(w_seq: &[f64], h: &[f64], cols: Range<usize>) -> f64 {
    let mut s = 0.0;
    for c in cols {
        s += w_seq[c] * h[c];
    }
    s
}
