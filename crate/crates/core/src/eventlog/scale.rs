use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::{EventLog, EventLogError, FeatureKind, FeatureSchema};

/// Min-max range observed on the fitting partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    /// Maps into `[0, 1]`; a constant feature maps to 0, values outside the
    /// fitted range are clamped.
    pub fn scale(&self, v: f64) -> f64 {
        if self.max <= self.min {
            0.0
        } else {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalerSet {
    pub static_numeric: BTreeMap<String, MinMax>,
    pub sequential_numeric: BTreeMap<String, MinMax>,
    /// Sorted levels per static categorical feature.
    pub categorical: BTreeMap<String, Vec<String>>,
}

fn parse_num(feature: &str, raw: &str) -> Result<f64, EventLogError> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| EventLogError::InvalidValue {
            feature: feature.to_string(),
            value: raw.to_string(),
        })
}

pub(super) fn parse_numeric(feature: &str, raw: &str) -> Result<f64, EventLogError> {
    parse_num(feature, raw)
}

fn extend(range: &mut Option<MinMax>, v: f64) {
    match range {
        None => *range = Some(MinMax { min: v, max: v }),
        Some(r) => {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
    }
}

/// Fits min-max ranges for numeric features and level tables for static
/// categoricals on the given (training) log.
pub fn fit_scalers(log: &EventLog, schema: &FeatureSchema) -> Result<ScalerSet, EventLogError> {
    if log.is_empty() {
        return Err(EventLogError::Invalid("cannot fit scalers on an empty log".into()));
    }
    let schema = schema.effective()?;
    let mut out = ScalerSet::default();
    for f in &schema.static_features {
        match f.kind {
            FeatureKind::Numeric => {
                let mut range = None;
                for p in log.pathways() {
                    if let Some(raw) = p.static_attrs.get(&f.name) {
                        extend(&mut range, parse_num(&f.name, raw)?);
                    }
                }
                let range = range.ok_or_else(|| EventLogError::NoObservedValues(f.name.clone()))?;
                out.static_numeric.insert(f.name.clone(), range);
            }
            FeatureKind::Categorical => {
                let levels: BTreeSet<String> = log
                    .pathways()
                    .iter()
                    .filter_map(|p| p.static_attrs.get(&f.name).cloned())
                    .collect();
                out.categorical.insert(f.name.clone(), levels.into_iter().collect());
            }
            FeatureKind::Binary => {}
        }
    }
    for f in schema
        .sequential_features
        .iter()
        .filter(|f| f.kind == FeatureKind::Numeric)
    {
        let mut range = None;
        for p in log.pathways() {
            for e in p.events.iter().filter(|e| e.activity == f.name) {
                if let Some(raw) = e.attributes.get(f.value_column()) {
                    extend(&mut range, parse_num(&f.name, raw)?);
                }
            }
        }
        let range = range.ok_or_else(|| EventLogError::NoObservedValues(f.name.clone()))?;
        out.sequential_numeric.insert(f.name.clone(), range);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_map_to_unit_interval() {
        let r = MinMax { min: 40.0, max: 90.0 };
        assert_eq!(r.scale(40.0), 0.0);
        assert_eq!(r.scale(90.0), 1.0);
        assert_eq!(r.scale(65.0), 0.5);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let r = MinMax { min: 3.0, max: 3.0 };
        assert_eq!(r.scale(3.0), 0.0);
        assert_eq!(r.scale(10.0), 0.0);
    }

    #[test]
    fn out_of_range_clamps() {
        let r = MinMax { min: 0.0, max: 10.0 };
        assert_eq!(r.scale(-5.0), 0.0);
        assert_eq!(r.scale(15.0), 1.0);
    }
}
