//! Event-log ingestion: parsing, filtering, scaling, encoding, prefix
//! extraction and pathway-atomic splitting.

mod dataset;
mod encode;
mod parse;
mod scale;
mod schema;
mod snapshot;
mod split;

use chrono::NaiveDateTime;
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

pub use dataset::{
    extract_prefixes_and_label, schema_hash, EncodedDataset, FeatureInfo, PathwayData, Row, SeqView, Task,
};
pub use encode::{encode, EncodedLog, EncodedPathway};
pub use parse::{parse_bool, parse_event_log, parse_timestamp};
pub use scale::{fit_scalers, MinMax, ScalerSet};
pub use schema::{CsvConfig, FeatureDef, FeatureKind, FeatureSchema, PrefixMode, SchemaSidecar};
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_VERSION};
pub use split::{split_by_pathway, stratum_of};

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("line {line}: unparseable timestamp '{value}'")]
    Timestamp { line: usize, value: String },
    #[error("pathway '{pathway}': conflicting values for static attribute '{attribute}' ('{first}' vs '{second}')")]
    ConflictingStatic {
        pathway: String,
        attribute: String,
        first: String,
        second: String,
    },
    #[error("feature '{feature}': invalid value '{value}'")]
    InvalidValue { feature: String, value: String },
    #[error("feature '{0}' has no observed values")]
    NoObservedValues(String),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid event log: {0}")]
    Invalid(String),
    #[error("cannot split: {0}")]
    Split(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub activity: String,
    pub timestamp: NaiveDateTime,
    /// Non-empty attribute cells of the row, keyed by column name.
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientPathway {
    pub id: String,
    pub events: Vec<Event>,
    pub static_attrs: BTreeMap<String, String>,
}

impl PatientPathway {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_activity(&self) -> Option<&str> {
        self.events.first().map(|e| e.activity.as_str())
    }
}

/// Parsed log: pathways in first-appearance order, events sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pathways: Vec<PatientPathway>,
    schema: FeatureSchema,
}

impl EventLog {
    pub fn new(pathways: Vec<PatientPathway>, schema: FeatureSchema) -> Result<Self, EventLogError> {
        let mut ids = HashSet::new();
        for p in &pathways {
            if p.events.is_empty() {
                return Err(EventLogError::Invalid(format!("pathway '{}' has no events", p.id)));
            }
            if p.events.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
                return Err(EventLogError::Invalid(format!("pathway '{}' is not time-sorted", p.id)));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(EventLogError::Invalid(format!("duplicate pathway id '{}'", p.id)));
            }
        }
        Ok(Self { pathways, schema })
    }

    pub fn pathways(&self) -> &[PatientPathway] {
        &self.pathways
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.pathways.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pathways.is_empty()
    }
}

/// Outlier filter applied before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PathwayFilter {
    pub min_len_exclusive: usize,
    pub max_len_inclusive: usize,
    pub required_start: Option<String>,
}

impl Default for PathwayFilter {
    fn default() -> Self {
        Self {
            min_len_exclusive: 2,
            max_len_inclusive: 50,
            required_start: Some("ER Registration".to_string()),
        }
    }
}

/// Keeps pathways with `min < len <= max` that start with the required activity.
pub fn filter_pathways(log: EventLog, filter: &PathwayFilter) -> EventLog {
    let EventLog { pathways, schema } = log;
    let pathways = pathways
        .into_iter()
        .filter(|p| p.len() > filter.min_len_exclusive && p.len() <= filter.max_len_inclusive)
        .filter(|p| match &filter.required_start {
            Some(start) => p.first_activity() == Some(start.as_str()),
            None => true,
        })
        .collect();
    EventLog { pathways, schema }
}

/// Full pipeline from CSV to model-ready rows: parse, optionally filter,
/// fit scalers on the (filtered) log, encode and extract prefixes.
pub fn ingest<R: std::io::Read>(
    source: R,
    sidecar: &SchemaSidecar,
    filter: Option<&PathwayFilter>,
) -> Result<EncodedDataset, EventLogError> {
    let mut log = parse_event_log(source, &sidecar.schema, &sidecar.csv)?;
    if let Some(f) = filter {
        let before = log.len();
        log = filter_pathways(log, f);
        log::info!("kept {} of {before} pathways after filtering", log.len());
    }
    if log.is_empty() {
        return Err(EventLogError::Invalid("no pathways left to encode".into()));
    }
    let scalers = fit_scalers(&log, &sidecar.schema)?;
    let encoded = encode(&log, &sidecar.schema, &scalers)?;
    extract_prefixes_and_label(encoded)
}
