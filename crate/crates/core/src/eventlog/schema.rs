use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use super::EventLogError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Binary,
    Categorical,
}

/// One declared input attribute.
///
/// For sequential features `name` is an activity label: a binary channel is the
/// one-hot indicator of that activity, a numeric channel holds the measurement
/// the activity carries (read from `value_column`, defaulting to `name`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_column: Option<String>,
}

impl FeatureDef {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
            value_column: None,
        }
    }

    pub fn value_column(&self) -> &str {
        self.value_column.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixMode {
    /// Every prefix length `1..=L` becomes a row.
    #[default]
    All,
    /// Only the longest leakage-free prefix of each pathway.
    Longest,
}

fn default_activity_feature() -> String {
    "activity".to_string()
}

/// Declares which attributes of an event log are model inputs and how the
/// outcome is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(default = "default_activity_feature")]
    pub activity_feature: String,
    #[serde(default)]
    pub static_features: Vec<FeatureDef>,
    #[serde(default)]
    pub sequential_features: Vec<FeatureDef>,
    /// Classification target: label = 1 iff the pathway contains this activity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_activity: Option<String>,
    /// Regression target: a per-pathway numeric attribute.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_attribute: Option<String>,
    #[serde(default)]
    pub carry_forward: BTreeSet<String>,
    #[serde(default)]
    pub excluded: BTreeSet<String>,
    /// Adds every observed activity that is not declared, excluded or the
    /// target as a binary sequential channel.
    #[serde(default)]
    pub include_all_activities: bool,
    #[serde(default)]
    pub prefixes: PrefixMode,
}

impl FeatureSchema {
    /// Applies the exclusion list and checks the leakage and kind constraints.
    pub fn effective(&self) -> Result<FeatureSchema, EventLogError> {
        let mut out = self.clone();
        out.static_features.retain(|f| !self.excluded.contains(&f.name));
        out.sequential_features.retain(|f| !self.excluded.contains(&f.name));
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), EventLogError> {
        match (&self.target_activity, &self.label_attribute) {
            (Some(_), Some(_)) => {
                return Err(EventLogError::Schema(
                    "target_activity and label_attribute are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(EventLogError::Schema(
                    "one of target_activity or label_attribute must be declared".into(),
                ))
            }
            _ => {}
        }
        if let Some(target) = &self.target_activity {
            let leaks = self
                .static_features
                .iter()
                .chain(&self.sequential_features)
                .any(|f| &f.name == target);
            if leaks {
                return Err(EventLogError::Schema(format!(
                    "target activity '{target}' is listed as an input feature"
                )));
            }
        }
        if let Some(label) = &self.label_attribute {
            if self.static_features.iter().any(|f| &f.name == label) {
                return Err(EventLogError::Schema(format!(
                    "label attribute '{label}' is listed as an input feature"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for f in self.static_features.iter().chain(&self.sequential_features) {
            if !seen.insert(f.name.as_str()) {
                return Err(EventLogError::Schema(format!("feature '{}' declared twice", f.name)));
            }
        }
        if let Some(f) = self
            .sequential_features
            .iter()
            .find(|f| f.kind == FeatureKind::Categorical)
        {
            return Err(EventLogError::Schema(format!(
                "sequential feature '{}' is categorical; only numeric and binary channels are supported",
                f.name
            )));
        }
        for name in &self.carry_forward {
            let ok = self
                .sequential_features
                .iter()
                .any(|f| &f.name == name && f.kind == FeatureKind::Numeric);
            if !ok && !self.excluded.contains(name) {
                return Err(EventLogError::Schema(format!(
                    "carry_forward entry '{name}' is not a numeric sequential feature"
                )));
            }
        }
        Ok(())
    }
}

fn default_delimiter() -> char {
    ','
}
fn default_case_column() -> String {
    "case_id".to_string()
}
fn default_timestamp_column() -> String {
    "timestamp".to_string()
}

/// CSV dialect of an event-log export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvConfig {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_case_column")]
    pub case_id_column: String,
    #[serde(default = "default_timestamp_column")]
    pub timestamp_column: String,
    /// chrono format string; when absent RFC 3339, `%Y-%m-%d %H:%M:%S(.f)`,
    /// `%Y-%m-%dT%H:%M:%S(.f)` and plain epoch seconds are tried in turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_format: Option<String>,
}

impl Default for CsvConfig {
    fn default() -> Self {
        Self {
            delimiter: default_delimiter(),
            case_id_column: default_case_column(),
            timestamp_column: default_timestamp_column(),
            timestamp_format: None,
        }
    }
}

/// Schema sidecar file: the feature schema plus an optional `[csv]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaSidecar {
    #[serde(flatten)]
    pub schema: FeatureSchema,
    #[serde(default)]
    pub csv: CsvConfig,
}

impl SchemaSidecar {
    /// Reads a `.toml` or `.json` sidecar, chosen by extension.
    pub fn load(path: &Path) -> Result<Self, EventLogError> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let sidecar: SchemaSidecar = if is_json {
            serde_json::from_str(&text).map_err(|e| EventLogError::Schema(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| EventLogError::Schema(e.to_string()))?
        };
        sidecar.schema.validate()?;
        Ok(sidecar)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("sidecar is always serializable")
    }
}
