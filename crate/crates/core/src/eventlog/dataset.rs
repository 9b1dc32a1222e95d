use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EncodedLog, EventLogError, FeatureKind, PrefixMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub kind: FeatureKind,
    /// Source attribute of a one-hot column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

/// Encoded pathway truncated to its longest leakage-free prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct PathwayData {
    pub id: String,
    pub x_static: Vec<f64>,
    /// Row-major `len × p`.
    pub x_seq: Vec<f64>,
    pub len: usize,
    pub label: f64,
    pub activities: Vec<String>,
    pub timestamps: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub pathway: usize,
    pub prefix_len: usize,
}

/// Borrowed `t* × p` prefix.
#[derive(Debug, Clone, Copy)]
pub struct SeqView<'a> {
    pub data: &'a [f64],
    pub len: usize,
    pub width: usize,
}

impl<'a> SeqView<'a> {
    pub fn new(data: &'a [f64], width: usize) -> Self {
        assert!(width == 0 || data.len().is_multiple_of(width));
        let len = data.len().checked_div(width).unwrap_or(0);
        Self { data, len, width }
    }

    pub fn step(&self, t: usize) -> &'a [f64] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    pub fn truncate(&self, len: usize) -> SeqView<'a> {
        assert!(len <= self.len);
        SeqView {
            data: &self.data[..len * self.width],
            len,
            width: self.width,
        }
    }
}

/// Prefix-level dataset.
///
/// Rows reference their pathway and prefix length instead of copying the
/// sequence; [`EncodedDataset::dense_seq`] materialises the padded
/// `s × T × p` tensor when needed.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub static_features: Vec<FeatureInfo>,
    pub seq_features: Vec<FeatureInfo>,
    pub task: Task,
    pub pathways: Vec<PathwayData>,
    pub rows: Vec<Row>,
}

impl EncodedDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_static(&self) -> usize {
        self.static_features.len()
    }

    pub fn n_seq(&self) -> usize {
        self.seq_features.len()
    }

    pub fn seq_len_max(&self) -> usize {
        self.rows.iter().map(|r| r.prefix_len).max().unwrap_or(0)
    }

    pub fn x_static(&self, row: usize) -> &[f64] {
        &self.pathways[self.rows[row].pathway].x_static
    }

    pub fn x_seq(&self, row: usize) -> SeqView<'_> {
        let r = self.rows[row];
        let p = self.n_seq();
        SeqView::new(&self.pathways[r.pathway].x_seq[..r.prefix_len * p], p)
    }

    pub fn label(&self, row: usize) -> f64 {
        self.pathways[self.rows[row].pathway].label
    }

    pub fn labels(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.label(i)).collect()
    }

    pub fn prefix_len(&self, row: usize) -> usize {
        self.rows[row].prefix_len
    }

    pub fn pathway_of(&self, row: usize) -> &str {
        &self.pathways[self.rows[row].pathway].id
    }

    pub fn pathway_index(&self, id: &str) -> Option<usize> {
        self.pathways.iter().position(|p| p.id == id)
    }

    /// Full (longest retained) prefix of a pathway.
    pub fn pathway_seq(&self, pathway: usize) -> SeqView<'_> {
        SeqView::new(&self.pathways[pathway].x_seq, self.n_seq())
    }

    /// Padded dense `s × T × p` tensor, row-major, padding value 0.
    pub fn dense_seq(&self) -> Vec<f64> {
        let (t_max, p) = (self.seq_len_max(), self.n_seq());
        let mut out = vec![0.0; self.n_rows() * t_max * p];
        for i in 0..self.n_rows() {
            let v = self.x_seq(i);
            out[i * t_max * p..i * t_max * p + v.data.len()].copy_from_slice(v.data);
        }
        out
    }

    /// Keeps the listed pathways (in the given order) with all their rows.
    pub fn subset_pathways(&self, keep: &[usize]) -> EncodedDataset {
        let mut remap = vec![usize::MAX; self.pathways.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut rows: Vec<Row> = self
            .rows
            .iter()
            .filter(|r| remap[r.pathway] != usize::MAX)
            .map(|r| Row {
                pathway: remap[r.pathway],
                prefix_len: r.prefix_len,
            })
            .collect();
        rows.sort_by_key(|r| (r.pathway, r.prefix_len));
        EncodedDataset {
            static_features: self.static_features.clone(),
            seq_features: self.seq_features.clone(),
            task: self.task,
            pathways: keep.iter().map(|&i| self.pathways[i].clone()).collect(),
            rows,
        }
    }

    /// Hash of the feature layout; models and datasets must agree on it.
    pub fn schema_hash(&self) -> String {
        schema_hash(&self.static_features, &self.seq_features)
    }
}

pub fn schema_hash(static_features: &[FeatureInfo], seq_features: &[FeatureInfo]) -> String {
    let canonical = serde_json::to_vec(&(static_features, seq_features)).expect("feature info serializes");
    let digest = Sha256::digest(&canonical);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Emits prefixes and labels.
///
/// With a target activity the label is 1 iff the activity occurs anywhere in
/// the pathway, and every prefix that already contains it is discarded. With
/// a label attribute the task is regression and no prefix is discarded.
pub fn extract_prefixes_and_label(log: EncodedLog) -> Result<EncodedDataset, EventLogError> {
    let p = log.seq_features.len();
    let task = if log.target_activity.is_some() {
        Task::Classification
    } else {
        Task::Regression
    };
    let mut pathways = Vec::new();
    let mut rows = Vec::new();
    for ep in log.pathways {
        let first_target = log
            .target_activity
            .as_ref()
            .and_then(|t| ep.activities.iter().position(|a| a == t));
        let label = match (&log.target_activity, ep.label_value) {
            (Some(_), _) => f64::from(u8::from(first_target.is_some())),
            (None, Some(v)) => v,
            (None, None) => {
                return Err(EventLogError::Invalid(format!("pathway '{}' has no label", ep.id)));
            }
        };
        // Prefixes of length <= first_target never contain the target.
        let max_len = first_target.unwrap_or(ep.x_seq.len());
        if max_len == 0 {
            continue;
        }
        let idx = pathways.len();
        let lens: Vec<usize> = match log.prefixes {
            PrefixMode::All => (1..=max_len).collect(),
            PrefixMode::Longest => vec![max_len],
        };
        rows.extend(lens.into_iter().map(|prefix_len| Row { pathway: idx, prefix_len }));
        let mut x_seq = Vec::with_capacity(max_len * p);
        for r in &ep.x_seq[..max_len] {
            x_seq.extend_from_slice(r);
        }
        pathways.push(PathwayData {
            id: ep.id,
            x_static: ep.x_static,
            x_seq,
            len: max_len,
            label,
            activities: ep.activities[..max_len].to_vec(),
            timestamps: ep.timestamps[..max_len].to_vec(),
        });
    }
    Ok(EncodedDataset {
        static_features: log.static_features,
        seq_features: log.seq_features,
        task,
        pathways,
        rows,
    })
}
