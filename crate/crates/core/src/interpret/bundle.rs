use serde::{Deserialize, Serialize};

use super::{
    development, importance, interaction_surface, sequential_shape, static_shape, transition, DevelopmentTrajectory,
    EffectKind, Importance, InteractionSurface, InterpretError, ShapeCurve, TransitionGrid,
};
use crate::eventlog::{schema_hash, EncodedDataset};
use crate::nncore::{CellKind, PatWayNet};

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Urgency {
    Low,
    Elevated,
    High,
}

/// Probability bands: `< low_below` is low, `> high_above` is high,
/// anything in between elevated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrgencyBands {
    pub low_below: f64,
    pub high_above: f64,
}

impl Default for UrgencyBands {
    fn default() -> Self {
        Self {
            low_below: 0.3,
            high_above: 0.7,
        }
    }
}

impl UrgencyBands {
    pub fn classify(&self, p: f64) -> Urgency {
        if p < self.low_below {
            Urgency::Low
        } else if p > self.high_above {
            Urgency::High
        } else {
            Urgency::Elevated
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    /// Number of importances kept (largest first).
    pub top_k: usize,
    /// Resolution of shape curves.
    pub grid: usize,
    /// Per-axis resolution of interaction surfaces and transition grids.
    pub surface_grid: usize,
    /// Prefix length to explain; the whole pathway when `None`.
    pub prefix_len: Option<usize>,
    pub bands: UrgencyBands,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            top_k: 20,
            grid: 100,
            surface_grid: 50,
            prefix_len: None,
            bands: UrgencyBands::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub pathway: String,
    pub prefix_len: usize,
    pub probability: f64,
    pub logit: f64,
    pub urgency: Urgency,
}

/// Everything the dashboard shows for one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationBundle {
    pub version: u32,
    pub model_hash: String,
    pub schema_hash: String,
    pub pathway: String,
    pub prefix_len: usize,
    pub prediction: Prediction,
    pub importances: Vec<Importance>,
    pub shapes: Vec<ShapeCurve>,
    pub interactions: Vec<InteractionSurface>,
    pub transitions: Vec<TransitionGrid>,
    pub developments: Vec<DevelopmentTrajectory>,
}

/// Prediction for `pathway` at the configured prefix.
pub fn predict_pathway(
    net: &PatWayNet,
    ds: &EncodedDataset,
    pathway: &str,
    prefix_len: Option<usize>,
    bands: &UrgencyBands,
) -> Result<Prediction, InterpretError> {
    let pi = ds
        .pathway_index(pathway)
        .ok_or_else(|| InterpretError::UnknownPathway(pathway.into()))?;
    let full = ds.pathway_seq(pi);
    let t = prefix_len.unwrap_or(full.len);
    if t == 0 || t > full.len {
        return Err(InterpretError::TimeStep { t, len: full.len });
    }
    let (probability, tr) = net.forward(&ds.pathways[pi].x_static, full.truncate(t))?;
    Ok(Prediction {
        pathway: pathway.into(),
        prefix_len: t,
        probability,
        logit: tr.logit,
        urgency: bands.classify(probability),
    })
}

fn check_schema(net: &PatWayNet, ds: &EncodedDataset) -> Result<String, InterpretError> {
    let arch = net.architecture();
    let model = schema_hash(&arch.static_features, &arch.seq_features);
    let dataset = ds.schema_hash();
    if model != dataset {
        return Err(InterpretError::SchemaMismatch { model, dataset });
    }
    Ok(model)
}

impl InterpretationBundle {
    /// Builds the bundle from precomputed global importances (sorted
    /// descending, as returned by [`importance`]).
    pub fn build(
        net: &PatWayNet,
        ds: &EncodedDataset,
        pathway: &str,
        cfg: &BundleConfig,
        model_hash: &str,
        importances: &[Importance],
    ) -> Result<Self, InterpretError> {
        let schema = check_schema(net, ds)?;
        let prediction = predict_pathway(net, ds, pathway, cfg.prefix_len, &cfg.bands)?;
        let t = prediction.prefix_len;
        let pi = ds.pathway_index(pathway).expect("checked by predict_pathway");
        let seq = ds.pathway_seq(pi).truncate(t);

        let top: Vec<Importance> = importances.iter().take(cfg.top_k).cloned().collect();
        let mut shapes = Vec::new();
        let mut interactions = Vec::new();
        let mut transitions = Vec::new();
        let mut developments = Vec::new();
        for f in &net.architecture().static_features {
            shapes.push(static_shape(net, &f.name, cfg.grid)?);
        }
        if net.architecture().cell == CellKind::Interpretable {
            for imp in &top {
                match imp.kind {
                    EffectKind::Static => {}
                    EffectKind::Sequential => {
                        shapes.push(sequential_shape(net, &imp.feature, seq, pathway, t, cfg.grid)?);
                        if t >= 2 {
                            transitions.push(transition(net, &imp.feature, seq, pathway, t, cfg.surface_grid)?);
                        }
                        developments.push(development(net, &imp.feature, seq, pathway)?);
                    }
                    EffectKind::Interaction => {
                        let k = net.corridor_index(&imp.feature).ok_or_else(|| InterpretError::UnknownFeature(imp.feature.clone()))?;
                        let inputs = &net.corridors()[k].inputs;
                        let feats = &net.architecture().seq_features;
                        interactions.push(interaction_surface(
                            net,
                            &feats[inputs[0]].name,
                            &feats[inputs[1]].name,
                            seq,
                            pathway,
                            t,
                            cfg.surface_grid,
                        )?);
                    }
                }
            }
        }
        Ok(Self {
            version: super::BUNDLE_VERSION,
            model_hash: model_hash.into(),
            schema_hash: schema,
            pathway: pathway.into(),
            prefix_len: t,
            prediction,
            importances: top,
            shapes,
            interactions,
            transitions,
            developments,
        })
    }
}

/// Computes global importances on `ds` and builds the bundle for `pathway`.
pub fn export_bundle(
    net: &PatWayNet,
    ds: &EncodedDataset,
    pathway: &str,
    cfg: &BundleConfig,
    model_hash: &str,
) -> Result<InterpretationBundle, InterpretError> {
    check_schema(net, ds)?;
    let imp = importance(net, ds)?;
    InterpretationBundle::build(net, ds, pathway, cfg, model_hash, &imp)
}
