use std::collections::BTreeSet;

use super::scale::parse_numeric;
use super::{
    parse_bool, EventLog, EventLogError, FeatureInfo, FeatureKind, FeatureSchema, PrefixMode, ScalerSet,
};

/// A pathway after feature encoding, before prefix extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPathway {
    pub id: String,
    pub x_static: Vec<f64>,
    /// One row of `p` channels per event.
    pub x_seq: Vec<Vec<f64>>,
    pub activities: Vec<String>,
    pub timestamps: Vec<String>,
    pub label_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedLog {
    pub static_features: Vec<FeatureInfo>,
    pub seq_features: Vec<FeatureInfo>,
    pub pathways: Vec<EncodedPathway>,
    pub target_activity: Option<String>,
    pub prefixes: PrefixMode,
}

struct Channel {
    activity: String,
    kind: FeatureKind,
    value_column: String,
    carry: bool,
}

/// Encodes static attributes and per-event activity channels.
///
/// Binary activity channels are one-hot. A numeric channel holds the scaled
/// measurement at events of its activity; channels in the carry-forward set
/// keep their last measurement until the next one replaces it.
pub fn encode(log: &EventLog, schema: &FeatureSchema, scalers: &ScalerSet) -> Result<EncodedLog, EventLogError> {
    let schema = schema.effective()?;

    let mut static_features = Vec::new();
    for f in &schema.static_features {
        match f.kind {
            FeatureKind::Categorical => {
                let levels = scalers.categorical.get(&f.name).map(Vec::as_slice).unwrap_or(&[]);
                for level in levels {
                    static_features.push(FeatureInfo {
                        name: format!("{}={}", f.name, level),
                        kind: FeatureKind::Binary,
                        group: Some(f.name.clone()),
                    });
                }
            }
            kind => static_features.push(FeatureInfo {
                name: f.name.clone(),
                kind,
                group: None,
            }),
        }
    }

    let mut channels: Vec<Channel> = schema
        .sequential_features
        .iter()
        .map(|f| Channel {
            activity: f.name.clone(),
            kind: f.kind,
            value_column: f.value_column().to_string(),
            carry: schema.carry_forward.contains(&f.name),
        })
        .collect();
    if schema.include_all_activities {
        let declared: BTreeSet<&str> = channels.iter().map(|c| c.activity.as_str()).collect();
        let observed: BTreeSet<&str> = log
            .pathways()
            .iter()
            .flat_map(|p| p.events.iter().map(|e| e.activity.as_str()))
            .filter(|a| !declared.contains(a))
            .filter(|a| !schema.excluded.contains(*a))
            .filter(|a| schema.target_activity.as_deref() != Some(*a))
            .collect();
        let extra: Vec<Channel> = observed
            .into_iter()
            .map(|a| Channel {
                activity: a.to_string(),
                kind: FeatureKind::Binary,
                value_column: a.to_string(),
                carry: false,
            })
            .collect();
        channels.extend(extra);
    }
    let seq_features = channels
        .iter()
        .map(|c| FeatureInfo {
            name: c.activity.clone(),
            kind: c.kind,
            group: None,
        })
        .collect();

    let mut pathways = Vec::with_capacity(log.len());
    for p in log.pathways() {
        let mut x_static = Vec::with_capacity(static_features.len());
        for f in &schema.static_features {
            let raw = p.static_attrs.get(&f.name);
            match f.kind {
                FeatureKind::Numeric => {
                    let v = match raw {
                        Some(r) => {
                            let range = scalers
                                .static_numeric
                                .get(&f.name)
                                .ok_or_else(|| EventLogError::NoObservedValues(f.name.clone()))?;
                            range.scale(parse_numeric(&f.name, r)?)
                        }
                        None => 0.0,
                    };
                    x_static.push(v);
                }
                FeatureKind::Binary => {
                    let v = match raw {
                        Some(r) => parse_bool(r).ok_or_else(|| EventLogError::InvalidValue {
                            feature: f.name.clone(),
                            value: r.clone(),
                        })?,
                        None => false,
                    };
                    x_static.push(if v { 1.0 } else { 0.0 });
                }
                FeatureKind::Categorical => {
                    let levels = scalers.categorical.get(&f.name).map(Vec::as_slice).unwrap_or(&[]);
                    let hit = raw.and_then(|r| levels.iter().position(|l| l == r));
                    if let (Some(r), None) = (raw, hit) {
                        log::warn!("pathway '{}': unseen level '{}' of '{}' encoded as all zeros", p.id, r, f.name);
                    }
                    x_static.extend((0..levels.len()).map(|i| if Some(i) == hit { 1.0 } else { 0.0 }));
                }
            }
        }

        let mut state = vec![0.0; channels.len()];
        let mut x_seq = Vec::with_capacity(p.len());
        for e in &p.events {
            let mut row = vec![0.0; channels.len()];
            for (c, ch) in channels.iter().enumerate() {
                if ch.carry {
                    row[c] = state[c];
                }
                if e.activity != ch.activity {
                    continue;
                }
                match ch.kind {
                    FeatureKind::Numeric => {
                        if let Some(raw) = e.attributes.get(&ch.value_column) {
                            let range = scalers
                                .sequential_numeric
                                .get(&ch.activity)
                                .ok_or_else(|| EventLogError::NoObservedValues(ch.activity.clone()))?;
                            row[c] = range.scale(parse_numeric(&ch.activity, raw)?);
                        }
                    }
                    _ => row[c] = 1.0,
                }
                if ch.carry {
                    state[c] = row[c];
                }
            }
            x_seq.push(row);
        }

        let label_value = match &schema.label_attribute {
            Some(label) => {
                let raw = p.static_attrs.get(label).ok_or_else(|| {
                    EventLogError::Invalid(format!("pathway '{}' has no value for label '{}'", p.id, label))
                })?;
                Some(parse_numeric(label, raw)?)
            }
            None => None,
        };

        pathways.push(EncodedPathway {
            id: p.id.clone(),
            x_static,
            x_seq,
            activities: p.events.iter().map(|e| e.activity.clone()).collect(),
            timestamps: p
                .events
                .iter()
                .map(|e| e.timestamp.format("%Y-%m-%dT%H:%M:%S%.f").to_string())
                .collect(),
            label_value,
        });
    }

    Ok(EncodedLog {
        static_features,
        seq_features,
        pathways,
        target_activity: schema.target_activity.clone(),
        prefixes: schema.prefixes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::{fit_scalers, parse_event_log, CsvConfig, FeatureDef};

    fn schema() -> FeatureSchema {
        FeatureSchema {
            activity_feature: "activity".into(),
            static_features: vec![
                FeatureDef::new("Age", FeatureKind::Numeric),
                FeatureDef::new("Female", FeatureKind::Binary),
                FeatureDef::new("Ward", FeatureKind::Categorical),
            ],
            sequential_features: vec![
                FeatureDef::new("CRP", FeatureKind::Numeric),
                FeatureDef::new("Give medication", FeatureKind::Binary),
            ],
            target_activity: Some("ICU".into()),
            label_attribute: None,
            carry_forward: ["CRP".to_string()].into(),
            excluded: Default::default(),
            include_all_activities: false,
            prefixes: PrefixMode::All,
        }
    }

    // CRP raw values 0, 40, 70, 100 scale to 0, .4, .7, 1.
    const LOG: &str = "case_id,activity,timestamp,Age,Female,Ward,CRP\n\
        a,ER Registration,2020-01-01 00:00:00,40,true,A,\n\
        a,CRP,2020-01-01 00:01:00,,,,40\n\
        a,Give medication,2020-01-01 00:02:00,,,,\n\
        a,Other,2020-01-01 00:03:00,,,,\n\
        a,CRP,2020-01-01 00:04:00,,,,70\n\
        a,Other,2020-01-01 00:05:00,,,,\n\
        b,ER Registration,2020-01-01 00:00:00,90,false,B,\n\
        b,CRP,2020-01-01 00:01:00,,,,0\n\
        b,CRP,2020-01-01 00:02:00,,,,100\n";

    fn encoded() -> EncodedLog {
        let s = schema();
        let log = parse_event_log(LOG.as_bytes(), &s, &CsvConfig::default()).unwrap();
        let sc = fit_scalers(&log, &s).unwrap();
        encode(&log, &s, &sc).unwrap()
    }

    #[test]
    fn carry_forward_persists_measurement() {
        let enc = encoded();
        let crp: Vec<f64> = enc.pathways[0].x_seq.iter().map(|r| r[0]).collect();
        assert_eq!(crp, vec![0.0, 0.4, 0.4, 0.4, 0.7, 0.7]);
    }

    #[test]
    fn control_flow_activity_is_one_hot() {
        let enc = encoded();
        let med: Vec<f64> = enc.pathways[0].x_seq.iter().map(|r| r[1]).collect();
        assert_eq!(med, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn static_encoding() {
        let enc = encoded();
        let names: Vec<_> = enc.static_features.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["Age", "Female", "Ward=A", "Ward=B"]);
        assert_eq!(enc.pathways[0].x_static, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(enc.pathways[1].x_static, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn unseen_level_is_all_zero() {
        let s = schema();
        let log = parse_event_log(LOG.as_bytes(), &s, &CsvConfig::default()).unwrap();
        let mut sc = fit_scalers(&log, &s).unwrap();
        sc.categorical.insert("Ward".into(), vec!["A".into()]);
        let enc = encode(&log, &s, &sc).unwrap();
        assert_eq!(&enc.pathways[1].x_static[2..], &[0.0]);
    }

    #[test]
    fn include_all_activities_adds_sorted_channels() {
        let mut s = schema();
        s.include_all_activities = true;
        let log = parse_event_log(LOG.as_bytes(), &s, &CsvConfig::default()).unwrap();
        let sc = fit_scalers(&log, &s).unwrap();
        let enc = encode(&log, &s, &sc).unwrap();
        let names: Vec<_> = enc.seq_features.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["CRP", "Give medication", "ER Registration", "Other"]);
    }
}
