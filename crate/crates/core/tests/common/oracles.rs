//! Independent reference computations shared by the oracle tests and the
//! acceptance suite. Each returns the measured discrepancy; callers assert.

use patway_core::eventlog::{SeqView, Task};
use patway_core::nncore::{loss_and_grad, Architecture, CellKind, Head, Loss, PatWayNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{features, random_dataset};

pub fn arch(q: usize, p: usize, h: usize, m: usize, head: Head) -> Architecture {
    Architecture::interpretable(features("a", q), features("s", p), h, m, head)
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn tensor<'a>(net: &'a PatWayNet, name: &str) -> &'a [f64] {
    let t = net.tensors().into_iter().find(|t| t.name == name).unwrap();
    &net.params()[t.range]
}

/// Outcome of a central finite-difference gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradientCheck {
    pub worst_relative_error: f64,
    pub checked: usize,
    /// Masked entries that received a non-zero analytic gradient.
    pub masked_with_gradient: usize,
}

pub fn gradient_check(net: &PatWayNet, loss: Loss, task: Task, seed: u64) -> GradientCheck {
    let ds = random_dataset(net.q(), net.p(), 4, 4, task, seed);
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let (_, grad) = loss_and_grad(net, &ds, &rows, loss).unwrap();
    let eps = 1e-5;
    let mut probe = net.clone();
    let mut out = GradientCheck {
        worst_relative_error: 0.0,
        checked: 0,
        masked_with_gradient: 0,
    };
    for i in 0..net.n_params() {
        if net.is_masked(i) {
            out.masked_with_gradient += usize::from(grad[i] != 0.0);
            continue;
        }
        let w = net.params()[i];
        probe.params_mut()[i] = w + eps;
        let (up, _) = loss_and_grad(&probe, &ds, &rows, loss).unwrap();
        probe.params_mut()[i] = w - eps;
        let (down, _) = loss_and_grad(&probe, &ds, &rows, loss).unwrap();
        probe.params_mut()[i] = w;
        let numeric = (up - down) / (2.0 * eps);
        let scale = grad[i].abs().max(numeric.abs());
        let rel = if scale < 1e-7 { 0.0 } else { (grad[i] - numeric).abs() / scale };
        out.worst_relative_error = out.worst_relative_error.max(rel);
        out.checked += 1;
    }
    out
}

/// The gradient-check configurations: interpretable cells with both losses
/// and heads, one interaction corridor, and an unrestricted cell.
pub fn gradient_configurations() -> Vec<(&'static str, PatWayNet, Loss, Task)> {
    let mut unrestricted = arch(1, 3, 2, 4, Head::Sigmoid);
    unrestricted.cell = CellKind::Unrestricted;
    vec![
        (
            "bce/sigmoid",
            PatWayNet::new(arch(2, 3, 3, 2, Head::Sigmoid), 11).unwrap(),
            Loss::BinaryCrossEntropy,
            Task::Classification,
        ),
        (
            "bce/sigmoid + interaction",
            PatWayNet::new(arch(1, 3, 2, 2, Head::Sigmoid).with_interactions(&[("s0", "s2")]).unwrap(), 12).unwrap(),
            Loss::BinaryCrossEntropy,
            Task::Classification,
        ),
        (
            "mse/identity",
            PatWayNet::new(arch(2, 2, 4, 3, Head::Identity), 13).unwrap(),
            Loss::MeanSquaredError,
            Task::Regression,
        ),
        (
            "mse/sigmoid",
            PatWayNet::new(arch(1, 2, 2, 2, Head::Sigmoid), 14).unwrap(),
            Loss::MeanSquaredError,
            Task::Regression,
        ),
        (
            "bce/unrestricted",
            PatWayNet::new(unrestricted, 15).unwrap(),
            Loss::BinaryCrossEntropy,
            Task::Classification,
        ),
    ]
}

/// Textbook LSTM with dense `[forget, input, output, candidate]` weights.
pub struct ReferenceLstm {
    p: usize,
    h: usize,
    u: Vec<Vec<f64>>, // per gate, p × h
    v: Vec<Vec<f64>>, // per gate, h × h
    b: Vec<Vec<f64>>,
}

pub struct RefStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    pub gates: [Vec<f64>; 4],
    pub c: Vec<f64>,
}

pub type GateGrads = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

impl ReferenceLstm {
    pub fn from_net(net: &PatWayNet) -> Self {
        let names = ["forget", "input", "output", "candidate"];
        Self {
            p: net.p(),
            h: net.hidden(),
            u: names.iter().map(|g| tensor(net, &format!("ilstm.u_{g}")).to_vec()).collect(),
            v: names.iter().map(|g| tensor(net, &format!("ilstm.v_{g}")).to_vec()).collect(),
            b: names.iter().map(|g| tensor(net, &format!("ilstm.b_{g}")).to_vec()).collect(),
        }
    }

    pub fn forward(&self, xs: &[Vec<f64>]) -> Vec<RefStep> {
        let mut h = vec![0.0; self.h];
        let mut c = vec![0.0; self.h];
        let mut steps = Vec::new();
        for x in xs {
            let pre = |g: usize, k: usize| {
                let mut z = self.b[g][k];
                for r in 0..self.p {
                    z += x[r] * self.u[g][r * self.h + k];
                }
                for r in 0..self.h {
                    z += h[r] * self.v[g][r * self.h + k];
                }
                z
            };
            let f: Vec<f64> = (0..self.h).map(|k| sigmoid(pre(0, k))).collect();
            let i: Vec<f64> = (0..self.h).map(|k| sigmoid(pre(1, k))).collect();
            let o: Vec<f64> = (0..self.h).map(|k| sigmoid(pre(2, k))).collect();
            let g: Vec<f64> = (0..self.h).map(|k| pre(3, k).tanh()).collect();
            let c_new: Vec<f64> = (0..self.h).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
            let h_new: Vec<f64> = (0..self.h).map(|k| o[k] * c_new[k].tanh()).collect();
            steps.push(RefStep {
                x: x.clone(),
                h_prev: h.clone(),
                c_prev: c.clone(),
                gates: [f, i, o, g],
                c: c_new.clone(),
            });
            h = h_new;
            c = c_new;
        }
        steps
    }

    /// Gradients of `⟨dh_final, h_T⟩` w.r.t. (u, v, b) per gate.
    pub fn backward(&self, steps: &[RefStep], dh_final: &[f64]) -> GateGrads {
        let mut du = vec![vec![0.0; self.p * self.h]; 4];
        let mut dv = vec![vec![0.0; self.h * self.h]; 4];
        let mut db = vec![vec![0.0; self.h]; 4];
        let mut dh = dh_final.to_vec();
        let mut dc = vec![0.0; self.h];
        for s in steps.iter().rev() {
            let [f, i, o, g] = &s.gates;
            let mut dz = vec![vec![0.0; self.h]; 4];
            for k in 0..self.h {
                let tc = s.c[k].tanh();
                let dck = dc[k] + dh[k] * o[k] * (1.0 - tc * tc);
                dz[0][k] = dck * s.c_prev[k] * f[k] * (1.0 - f[k]);
                dz[1][k] = dck * g[k] * i[k] * (1.0 - i[k]);
                dz[2][k] = dh[k] * tc * o[k] * (1.0 - o[k]);
                dz[3][k] = dck * i[k] * (1.0 - g[k] * g[k]);
                dc[k] = dck * f[k];
            }
            let mut dh_prev = vec![0.0; self.h];
            for gate in 0..4 {
                for k in 0..self.h {
                    db[gate][k] += dz[gate][k];
                    for r in 0..self.p {
                        du[gate][r * self.h + k] += s.x[r] * dz[gate][k];
                    }
                    for r in 0..self.h {
                        dv[gate][r * self.h + k] += s.h_prev[r] * dz[gate][k];
                        dh_prev[r] += self.v[gate][r * self.h + k] * dz[gate][k];
                    }
                }
            }
            dh = dh_prev;
        }
        (du, dv, db)
    }
}

/// Largest forward and backward discrepancies between a single-feature
/// interpretable cell (all-ones masks) and the reference LSTM.
pub fn reference_lstm_errors(net_seed: u64, input_seed: u64, width: usize, len: usize) -> (f64, f64) {
    let net = PatWayNet::new(arch(0, 1, 1, width, Head::Sigmoid), net_seed).unwrap();
    let (u_mask, v_mask) = net.masks();
    assert!(u_mask.iter().chain(v_mask).all(|&m| m == 1), "single corridor must be unmasked");
    let reference = ReferenceLstm::from_net(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(input_seed);
    let xs: Vec<Vec<f64>> = (0..len).map(|_| vec![rng.gen()]).collect();
    let flat: Vec<f64> = xs.iter().flatten().copied().collect();

    let mut fwd: f64 = 0.0;
    let mut state = net.initial_state();
    let steps = reference.forward(&xs);
    for (x, s) in xs.iter().zip(&steps) {
        state = net.ilstm_step(x, &state).unwrap();
        for k in 0..net.hidden() {
            fwd = fwd
                .max((state.c[k] - s.c[k]).abs())
                .max((state.forget[k] - s.gates[0][k]).abs())
                .max((state.candidate[k] - s.gates[3][k]).abs());
        }
    }
    let last = steps.last().unwrap();
    let h_t: Vec<f64> = (0..net.hidden()).map(|k| last.gates[2][k] * last.c[k].tanh()).collect();
    let logit_ref: f64 = net.w_seq().iter().zip(&h_t).map(|(w, h)| w * h).sum::<f64>() + net.bias();
    let (pred, tr) = net.forward(&[], SeqView::new(&flat, 1)).unwrap();
    fwd = fwd.max((tr.logit - logit_ref).abs()).max((pred - sigmoid(logit_ref)).abs());

    // BCE with y = 1 gives dlogit = pred − 1.
    let mut ds = random_dataset(0, 1, 1, 1, Task::Classification, 0);
    ds.pathways[0].x_seq = flat;
    ds.pathways[0].len = len;
    ds.pathways[0].label = 1.0;
    ds.pathways[0].activities = vec!["A".into(); len];
    ds.pathways[0].timestamps = vec![String::new(); len];
    ds.rows[0].prefix_len = len;
    let (_, grad) = loss_and_grad(&net, &ds, &[0], Loss::BinaryCrossEntropy).unwrap();
    let dh: Vec<f64> = net.w_seq().iter().map(|w| w * (pred - 1.0)).collect();
    let (du, dv, db) = reference.backward(&steps, &dh);
    let mut bwd: f64 = 0.0;
    for (g, name) in ["forget", "input", "output", "candidate"].iter().enumerate() {
        for (kind, expected) in [("u", &du[g]), ("v", &dv[g]), ("b", &db[g])] {
            let t = net.tensors().into_iter().find(|t| t.name == format!("ilstm.{kind}_{name}")).unwrap();
            for (a, e) in grad[t.range].iter().zip(expected.iter()) {
                bwd = bwd.max((a - e).abs());
            }
        }
    }
    (fwd, bwd)
}

fn random_net(rng: &mut ChaCha8Rng, seed: u64) -> PatWayNet {
    let q = rng.gen_range(0..4);
    let p = rng.gen_range(2..5);
    let mut a = arch(q, p, rng.gen_range(1..4), rng.gen_range(1..4), Head::Sigmoid);
    let i = rng.gen_range(0..p);
    let j = (i + rng.gen_range(1..p)) % p;
    a = a.with_interactions(&[(format!("s{i}"), format!("s{j}"))]).unwrap();
    PatWayNet::new(a, seed).unwrap()
}

/// Perturbs one sequential feature's whole history on `n` random inputs
/// (across several random architectures with an interaction corridor) and
/// counts corridors not reading that feature whose contribution changed in
/// any bit, plus changed static effects.
pub fn corridor_independence_violations(n: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut net = random_net(&mut rng, seed);
    for trial in 0..n {
        if trial % 100 == 0 {
            net = random_net(&mut rng, seed.wrapping_add(trial as u64));
        }
        let (q, p) = (net.q(), net.p());
        let xs: Vec<f64> = (0..q).map(|_| rng.gen()).collect();
        let len = rng.gen_range(1..10);
        let base: Vec<f64> = (0..len * p).map(|_| rng.gen()).collect();
        let j = rng.gen_range(0..p);
        let mut changed = base.clone();
        for t in 0..len {
            changed[t * p + j] = rng.gen_range(-3.0..3.0);
        }
        let d0 = net.decompose(&xs, SeqView::new(&base, p)).unwrap();
        let d1 = net.decompose(&xs, SeqView::new(&changed, p)).unwrap();
        for (k, c) in net.corridors().iter().enumerate() {
            if !c.inputs.contains(&j) && d0.corridor_effects[k].to_bits() != d1.corridor_effects[k].to_bits() {
                violations += 1;
            }
        }
        violations += d0
            .static_effects
            .iter()
            .zip(&d1.static_effects)
            .filter(|(a, b)| a.to_bits() != b.to_bits())
            .count();
    }
    violations
}

/// Over `n` random inputs: the largest |bias + Σ effects − logit| and
/// |sigmoid(bias + Σ effects) − forward()|.
pub fn additivity_errors(n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = random_net(&mut rng, seed);
    let (mut logit_err, mut pred_err): (f64, f64) = (0.0, 0.0);
    for trial in 0..n {
        if trial % 100 == 0 {
            net = random_net(&mut rng, seed.wrapping_add(trial as u64));
        }
        let (q, p) = (net.q(), net.p());
        let xs: Vec<f64> = (0..q).map(|_| rng.gen()).collect();
        let len = rng.gen_range(1..10);
        let seq: Vec<f64> = (0..len * p).map(|_| rng.gen()).collect();
        let d = net.decompose(&xs, SeqView::new(&seq, p)).unwrap();
        let total = d.bias + d.static_effects.iter().sum::<f64>() + d.corridor_effects.iter().sum::<f64>();
        let (pred, tr) = net.forward(&xs, SeqView::new(&seq, p)).unwrap();
        logit_err = logit_err.max((total - tr.logit).abs());
        pred_err = pred_err.max((sigmoid(total) - pred).abs());
    }
    (logit_err, pred_err)
}

/// AUC by counting every positive/negative pair (ties count ½).
pub fn pairwise_auc(y: &[f64], s: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1.0 && y[j] == 0.0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    wins += 1.0;
                } else if s[i] == s[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Weighted F1 from precision and recall per class; undefined ratios are 0.
pub fn confusion_weighted_f1(y: &[u8], pred: &[u8]) -> f64 {
    let n = y.len() as f64;
    let mut total = 0.0;
    for class in [0u8, 1] {
        let tp = y.iter().zip(pred).filter(|&(&t, &p)| t == class && p == class).count() as f64;
        let predicted = pred.iter().filter(|&&p| p == class).count() as f64;
        let actual = y.iter().filter(|&&t| t == class).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        total += f1 * actual / n;
    }
    total
}
