//! Shape functions, interaction surfaces, transition grids, development
//! trajectories and indicator importance for a trained network.
//!
//! Every value is a deterministic forward evaluation of the model; effects
//! are on the logit scale (connection-weighted contributions).

mod bundle;

pub use bundle::{export_bundle, predict_pathway, BundleConfig, InterpretationBundle, Prediction, Urgency, UrgencyBands, BUNDLE_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::{EncodedDataset, FeatureKind, SeqView};
use crate::nncore::{CellKind, PatWayNet};

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("'{0}' is not a static feature")]
    NotStatic(String),
    #[error("'{0}' is not a sequential feature")]
    NotSequential(String),
    #[error("pair ({0}, {1}) has no interaction corridor")]
    NotAnInteraction(String, String),
    #[error("time step {t} outside 1..={len}")]
    TimeStep { t: usize, len: usize },
    #[error("transition needs a time step of at least 2, got {0}")]
    TransitionStep(usize),
    #[error("unknown pathway '{0}'")]
    UnknownPathway(String),
    #[error("schema mismatch: model {model}, dataset {dataset}")]
    SchemaMismatch { model: String, dataset: String },
    #[error("the model has no per-feature corridors")]
    NotInterpretable,
    #[error("grid resolution must be at least 2")]
    Grid,
    #[error(transparent)]
    Model(#[from] crate::nncore::NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    Static,
    Sequential,
    Interaction,
}

/// Effect of one feature over a grid of input values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurve {
    pub feature: String,
    pub kind: EffectKind,
    pub grid: Vec<f64>,
    /// Raw connection-weighted contribution per grid value.
    pub effect: Vec<f64>,
    /// `effect` shifted so its minimum is 0, for plotting.
    pub display_effect: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_pathway: Option<String>,
}

/// Effect of an interaction corridor over a 2-D grid; `effect` is row-major
/// with rows indexed by the first feature's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSurface {
    pub features: [String; 2],
    pub grid_first: Vec<f64>,
    pub grid_second: Vec<f64>,
    pub effect: Vec<f64>,
    pub time_step: usize,
    pub context_pathway: String,
}

/// `delta_effect[a][b]` (row-major, rows = `prev_grid`): the corridor effect
/// with value `a` at step `t − 1` and `b` at step `t`, minus the effect after
/// step `t − 1` with value `a` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionGrid {
    pub feature: String,
    pub prev_grid: Vec<f64>,
    pub curr_grid: Vec<f64>,
    pub delta_effect: Vec<f64>,
    pub time_step: usize,
    pub context_pathway: String,
}

/// Corridor effect of one feature after each prefix of one pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopmentTrajectory {
    pub feature: String,
    pub pathway: String,
    /// 1-based time points.
    pub time_points: Vec<usize>,
    pub observed: Vec<f64>,
    pub effect: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    pub kind: EffectKind,
    pub score: f64,
}

/// Uniform grid over [0, 1] with `n` points.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn grid_for(kind: FeatureKind, n: usize) -> Vec<f64> {
    match kind {
        FeatureKind::Numeric => uniform_grid(n),
        _ => vec![0.0, 1.0],
    }
}

fn shifted(effect: &[f64]) -> Vec<f64> {
    let min = effect.iter().copied().fold(f64::INFINITY, f64::min);
    effect.iter().map(|e| e - min).collect()
}

fn require_interpretable(net: &PatWayNet) -> Result<(), InterpretError> {
    if net.architecture().cell != CellKind::Interpretable {
        return Err(InterpretError::NotInterpretable);
    }
    Ok(())
}

fn static_index(net: &PatWayNet, feature: &str) -> Result<usize, InterpretError> {
    let arch = net.architecture();
    arch.static_features.iter().position(|f| f.name == feature).ok_or_else(|| {
        if arch.seq_features.iter().any(|f| f.name == feature) {
            InterpretError::NotStatic(feature.into())
        } else {
            InterpretError::UnknownFeature(feature.into())
        }
    })
}

fn seq_index(net: &PatWayNet, feature: &str) -> Result<usize, InterpretError> {
    let arch = net.architecture();
    arch.seq_features.iter().position(|f| f.name == feature).ok_or_else(|| {
        if arch.static_features.iter().any(|f| f.name == feature) {
            InterpretError::NotSequential(feature.into())
        } else {
            InterpretError::UnknownFeature(feature.into())
        }
    })
}

fn check_step(t: usize, len: usize) -> Result<(), InterpretError> {
    if t == 0 || t > len {
        return Err(InterpretError::TimeStep { t, len });
    }
    Ok(())
}

/// `w_static[l] · f_MLP^l(v)` over the grid (levels {0, 1} for binary
/// features).
pub fn static_shape(net: &PatWayNet, feature: &str, n: usize) -> Result<ShapeCurve, InterpretError> {
    if n < 2 {
        return Err(InterpretError::Grid);
    }
    let l = static_index(net, feature)?;
    let grid = grid_for(net.architecture().static_features[l].kind, n);
    let w = net.w_static()[l];
    let effect: Vec<f64> = grid.iter().map(|&v| w * net.static_mlp(l, v)).collect();
    Ok(ShapeCurve {
        feature: feature.into(),
        kind: EffectKind::Static,
        display_effect: shifted(&effect),
        grid,
        effect,
        time_step: None,
        context_pathway: None,
    })
}

/// Corridor effects with the sequence copied once and a few cells overwritten.
struct Substituter<'a> {
    net: &'a PatWayNet,
    buf: Vec<f64>,
    width: usize,
}

impl<'a> Substituter<'a> {
    fn new(net: &'a PatWayNet, seq: SeqView<'_>) -> Self {
        Self {
            net,
            buf: seq.data[..seq.len * seq.width].to_vec(),
            width: seq.width,
        }
    }

    fn set(&mut self, step: usize, j: usize, v: f64) {
        self.buf[step * self.width + j] = v;
    }

    /// Effect of corridor `k` after the first `len` steps.
    fn effect(&self, k: usize, len: usize) -> f64 {
        let mut st = self.net.corridor_start();
        for t in 0..len {
            self.net.corridor_advance(k, &self.buf[t * self.width..(t + 1) * self.width], &mut st);
        }
        self.net.corridor_readout(k, &st)
    }
}

/// Effect of sequential feature `feature` when its value at (1-based) step
/// `t` of the context sequence is replaced by each grid value; the corridor
/// runs over the prefix of length `t`.
pub fn sequential_shape(
    net: &PatWayNet,
    feature: &str,
    seq: SeqView<'_>,
    context_pathway: &str,
    t: usize,
    n: usize,
) -> Result<ShapeCurve, InterpretError> {
    require_interpretable(net)?;
    if n < 2 {
        return Err(InterpretError::Grid);
    }
    let j = seq_index(net, feature)?;
    check_step(t, seq.len)?;
    let grid = grid_for(net.architecture().seq_features[j].kind, n);
    let mut sub = Substituter::new(net, seq);
    let effect: Vec<f64> = grid
        .iter()
        .map(|&v| {
            sub.set(t - 1, j, v);
            sub.effect(j, t)
        })
        .collect();
    Ok(ShapeCurve {
        feature: feature.into(),
        kind: EffectKind::Sequential,
        display_effect: shifted(&effect),
        grid,
        effect,
        time_step: Some(t),
        context_pathway: Some(context_pathway.into()),
    })
}

/// Effect of the interaction corridor of `(first, second)` with both values
/// substituted at step `t`.
pub fn interaction_surface(
    net: &PatWayNet,
    first: &str,
    second: &str,
    seq: SeqView<'_>,
    context_pathway: &str,
    t: usize,
    n: usize,
) -> Result<InteractionSurface, InterpretError> {
    require_interpretable(net)?;
    if n < 2 {
        return Err(InterpretError::Grid);
    }
    let (a, b) = (seq_index(net, first)?, seq_index(net, second)?);
    let k = net
        .interaction_corridor(a, b)
        .ok_or_else(|| InterpretError::NotAnInteraction(first.into(), second.into()))?;
    check_step(t, seq.len)?;
    let feats = &net.architecture().seq_features;
    let (ga, gb) = (grid_for(feats[a].kind, n), grid_for(feats[b].kind, n));
    let mut sub = Substituter::new(net, seq);
    let mut effect = Vec::with_capacity(ga.len() * gb.len());
    for &va in &ga {
        sub.set(t - 1, a, va);
        for &vb in &gb {
            sub.set(t - 1, b, vb);
            effect.push(sub.effect(k, t));
        }
    }
    Ok(InteractionSurface {
        features: [first.into(), second.into()],
        grid_first: ga,
        grid_second: gb,
        effect,
        time_step: t,
        context_pathway: context_pathway.into(),
    })
}

/// Transition grid at (1-based) step `t ≥ 2`: value `a` substituted at
/// `t − 1`, value `b` at `t`, history elsewhere as observed.
pub fn transition(
    net: &PatWayNet,
    feature: &str,
    seq: SeqView<'_>,
    context_pathway: &str,
    t: usize,
    n: usize,
) -> Result<TransitionGrid, InterpretError> {
    require_interpretable(net)?;
    if n < 2 {
        return Err(InterpretError::Grid);
    }
    let j = seq_index(net, feature)?;
    if t < 2 {
        return Err(InterpretError::TransitionStep(t));
    }
    check_step(t, seq.len)?;
    let grid = grid_for(net.architecture().seq_features[j].kind, n);
    let mut sub = Substituter::new(net, seq);
    let mut delta = Vec::with_capacity(grid.len() * grid.len());
    for &a in &grid {
        sub.set(t - 2, j, a);
        // shared history up to t − 1, then one extra step per b
        let mut st = net.corridor_start();
        for s in 0..t - 1 {
            net.corridor_advance(j, &sub.buf[s * sub.width..(s + 1) * sub.width], &mut st);
        }
        let before = net.corridor_readout(j, &st);
        let mut x_t = sub.buf[(t - 1) * sub.width..t * sub.width].to_vec();
        for &b in &grid {
            x_t[j] = b;
            let mut next = st.clone();
            net.corridor_advance(j, &x_t, &mut next);
            delta.push(net.corridor_readout(j, &next) - before);
        }
    }
    Ok(TransitionGrid {
        feature: feature.into(),
        prev_grid: grid.clone(),
        curr_grid: grid,
        delta_effect: delta,
        time_step: t,
        context_pathway: context_pathway.into(),
    })
}

/// Effect of `feature`'s corridor after each prefix `[:t]` of `seq`.
pub fn development(net: &PatWayNet, feature: &str, seq: SeqView<'_>, pathway: &str) -> Result<DevelopmentTrajectory, InterpretError> {
    require_interpretable(net)?;
    let j = seq_index(net, feature)?;
    if seq.len == 0 {
        return Err(InterpretError::TimeStep { t: 0, len: 0 });
    }
    Ok(DevelopmentTrajectory {
        feature: feature.into(),
        pathway: pathway.into(),
        time_points: (1..=seq.len).collect(),
        observed: (0..seq.len).map(|t| seq.step(t)[j]).collect(),
        effect: net.corridor_trajectory(j, seq),
    })
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| (g[1] - g[0]) * (v[0] + v[1]) / 2.0)
        .sum()
}

/// Centred mean absolute effect per feature, sorted descending (ties keep
/// model order: static features, sequential features, interactions).
///
/// * static numeric: `∫₀¹ |e(v) − ē| dv` on a 100-point grid (trapezoid rule);
/// * static binary: mean of `|e − ē|` over the two levels;
/// * sequential and interaction corridors: mean over the dataset's prefixes
///   of `|e(prefix) − ē|`, with `ē` the mean over those prefixes.
pub fn importance(net: &PatWayNet, ds: &EncodedDataset) -> Result<Vec<Importance>, InterpretError> {
    let arch = net.architecture();
    if ds.n_static() != net.q() || ds.n_seq() != net.p() {
        return Err(InterpretError::SchemaMismatch {
            model: crate::eventlog::schema_hash(&arch.static_features, &arch.seq_features),
            dataset: ds.schema_hash(),
        });
    }
    let mut out = Vec::new();
    for f in &arch.static_features {
        let curve = static_shape(net, &f.name, 100)?;
        let mean = curve.effect.iter().sum::<f64>() / curve.effect.len() as f64;
        let dev: Vec<f64> = curve.effect.iter().map(|e| (e - mean).abs()).collect();
        let score = match f.kind {
            FeatureKind::Numeric => trapezoid(&curve.grid, &dev),
            _ => dev.iter().sum::<f64>() / dev.len() as f64,
        };
        out.push(Importance {
            feature: f.name.clone(),
            kind: EffectKind::Static,
            score,
        });
    }

    if arch.cell == CellKind::Interpretable && !ds.is_empty() {
        let n_cor = net.corridors().len();
        let mut by_pathway: Vec<Vec<usize>> = vec![Vec::new(); ds.pathways.len()];
        for (r, row) in ds.rows.iter().enumerate() {
            by_pathway[row.pathway].push(r);
        }
        // effect of every corridor at every dataset prefix
        let mut effects = vec![vec![0.0; ds.n_rows()]; n_cor];
        for (pi, rows) in by_pathway.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            let seq = ds.pathway_seq(pi);
            for (k, slot) in effects.iter_mut().enumerate() {
                let traj = net.corridor_trajectory(k, seq);
                for &r in rows {
                    slot[r] = traj[ds.rows[r].prefix_len - 1];
                }
            }
        }
        for (k, cor) in net.corridors().iter().enumerate() {
            let e = &effects[k];
            let mean = e.iter().sum::<f64>() / e.len() as f64;
            let score = e.iter().map(|v| (v - mean).abs()).sum::<f64>() / e.len() as f64;
            out.push(Importance {
                feature: cor.name.clone(),
                kind: if cor.inputs.len() == 1 {
                    EffectKind::Sequential
                } else {
                    EffectKind::Interaction
                },
                score,
            });
        }
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(out)
}
