//! Synthetic event log with a known additive label.
//!
//! Every pathway has 12 events: `ER Registration`, three `Heart Rate`
//! measurements (steps 2–4), three `Blood Pressure` measurements (steps 5–7)
//! and five medications (four `Medication A`, one `Medication B`, random
//! order; steps 8–12). The label is the sum of five parts, each in
//! `[0, 0.2]`:
//!
//! * gender: `0.2` for female (`Gender = 1`);
//! * age: `−0.8 (age − 0.5)² + 0.2`;
//! * pattern: `0.2` when the medications read A, A, A, A, B;
//! * heart-rate level: `−0.8 (hr₂ − 0.5)² + 0.2` on the first measurement;
//! * heart-rate trend: `0.2` when the heart rate increases.
//!
//! BMI, Foreigner and Blood Pressure are noise.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use thiserror::Error;

use crate::eventlog::{
    CsvConfig, Event, EventLog, EventLogError, FeatureDef, FeatureKind, FeatureSchema, PatientPathway, PrefixMode,
    SchemaSidecar,
};
use crate::seed;

pub const ER_REGISTRATION: &str = "ER Registration";
pub const HEART_RATE: &str = "Heart Rate";
pub const BLOOD_PRESSURE: &str = "Blood Pressure";
pub const MEDICATION_A: &str = "Medication A";
pub const MEDICATION_B: &str = "Medication B";
pub const LABEL: &str = "label";
pub const VALUE: &str = "value";
pub const EVENTS_PER_PATHWAY: usize = 12;
const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("pathway '{id}' is malformed: {reason}")]
    Malformed { id: String, reason: String },
    #[error(transparent)]
    EventLog(#[from] EventLogError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_pathways: usize,
    pub seed: u64,
    /// Relative heart-rate change per measurement.
    pub hr_change: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_pathways: 5_000,
            seed: 0,
            hr_change: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelParts {
    pub gender: f64,
    pub age: f64,
    pub pattern: f64,
    pub hr_nl: f64,
    pub hr: f64,
}

impl LabelParts {
    pub fn total(&self) -> f64 {
        self.gender + self.age + self.pattern + self.hr_nl + self.hr
    }
}

/// Generated log with labels (and their parts) in pathway order.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub log: EventLog,
    pub labels: Vec<f64>,
    pub parts: Vec<LabelParts>,
}

/// Label parts from the raw (unscaled) values.
pub fn parts_from_values(gender: bool, age: f64, meds_b_position: usize, hr: [f64; 3]) -> LabelParts {
    LabelParts {
        gender: if gender { 0.2 } else { 0.0 },
        age: -0.8 * (age - 0.5).powi(2) + 0.2,
        pattern: if meds_b_position == 4 { 0.2 } else { 0.0 },
        hr_nl: -0.8 * (hr[0] - 0.5).powi(2) + 0.2,
        hr: if hr[1] > hr[0] && hr[2] > hr[1] { 0.2 } else { 0.0 },
    }
}

/// Feature schema matching the generated CSV; trains on complete pathways
/// against the `label` attribute.
pub fn schema_sidecar() -> SchemaSidecar {
    let numeric = |name: &str| FeatureDef::new(name, FeatureKind::Numeric);
    let binary = |name: &str| FeatureDef::new(name, FeatureKind::Binary);
    let measured = |name: &str| FeatureDef {
        value_column: Some(VALUE.into()),
        ..numeric(name)
    };
    SchemaSidecar {
        schema: FeatureSchema {
            activity_feature: "activity".into(),
            static_features: vec![numeric("Age"), numeric("BMI"), binary("Gender"), binary("Foreigner")],
            sequential_features: vec![
                measured(HEART_RATE),
                measured(BLOOD_PRESSURE),
                binary(MEDICATION_A),
                binary(MEDICATION_B),
            ],
            target_activity: None,
            label_attribute: Some(LABEL.into()),
            carry_forward: BTreeSet::new(),
            excluded: BTreeSet::new(),
            include_all_activities: false,
            prefixes: PrefixMode::Longest,
        },
        csv: CsvConfig {
            timestamp_format: Some(TIMESTAMP_FORMAT.into()),
            ..CsvConfig::default()
        },
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Draws `cfg.n_pathways` pathways from one seeded stream.
pub fn generate(cfg: &SimConfig) -> Result<Simulation, SimError> {
    let mut rng = seed::rng(cfg.seed, &[0x5160]);
    let base: NaiveDateTime = NaiveDate::from_ymd_opt(2020, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    let width = cfg.n_pathways.max(1).to_string().len();
    let mut pathways = Vec::with_capacity(cfg.n_pathways);
    let mut labels = Vec::with_capacity(cfg.n_pathways);
    let mut parts = Vec::with_capacity(cfg.n_pathways);
    for i in 0..cfg.n_pathways {
        let age: f64 = rng.gen();
        let bmi: f64 = rng.gen();
        let gender = rng.gen_bool(0.5);
        let foreigner = rng.gen_bool(0.5);
        let increasing = rng.gen_bool(0.5);
        let (start, factor) = if increasing {
            (rng.gen_range(0.2..=0.45), 1.0 + cfg.hr_change)
        } else {
            (rng.gen_range(0.55..=0.8), 1.0 - cfg.hr_change)
        };
        let hr = [start, start * factor, start * factor * factor];
        let mut bp = [rng.gen_range(0.35..0.55), 0.0, 0.0];
        for k in 1..3 {
            bp[k] = bp[k - 1] * (1.0 + rng.gen_range(-0.3..0.3));
        }
        let b_position = rng.gen_range(0..5);

        let p = parts_from_values(gender, age, b_position, hr);
        let label = p.total();

        let id = format!("sim-{i:0width$}");
        let mut statics = BTreeMap::new();
        statics.insert("Age".to_string(), fmt(age));
        statics.insert("BMI".to_string(), fmt(bmi));
        statics.insert("Gender".to_string(), u8::from(gender).to_string());
        statics.insert("Foreigner".to_string(), u8::from(foreigner).to_string());
        statics.insert(LABEL.to_string(), fmt(label));

        let start_time = base + Duration::minutes((i * EVENTS_PER_PATHWAY) as i64);
        let mut events = Vec::with_capacity(EVENTS_PER_PATHWAY);
        let mut push = |activity: &str, value: Option<f64>| {
            let mut attributes = BTreeMap::new();
            if let Some(v) = value {
                attributes.insert(VALUE.to_string(), fmt(v));
            }
            events.push(Event {
                activity: activity.into(),
                timestamp: start_time + Duration::minutes(events.len() as i64),
                attributes,
            });
        };
        push(ER_REGISTRATION, None);
        for v in hr {
            push(HEART_RATE, Some(v));
        }
        for v in bp {
            push(BLOOD_PRESSURE, Some(v));
        }
        for k in 0..5 {
            push(if k == b_position { MEDICATION_B } else { MEDICATION_A }, None);
        }
        pathways.push(PatientPathway {
            id,
            events,
            static_attrs: statics,
        });
        labels.push(label);
        parts.push(p);
    }
    let log = EventLog::new(pathways, schema_sidecar().schema)?;
    Ok(Simulation { log, labels, parts })
}

/// Recomputes the label parts from a pathway of the generated log.
pub fn label_parts(p: &PatientPathway) -> Result<LabelParts, SimError> {
    let bad = |reason: String| SimError::Malformed {
        id: p.id.clone(),
        reason,
    };
    if p.events.len() != EVENTS_PER_PATHWAY {
        return Err(bad(format!("{} events instead of {EVENTS_PER_PATHWAY}", p.events.len())));
    }
    let activity = |k: usize| p.events[k].activity.as_str();
    if activity(0) != ER_REGISTRATION {
        return Err(bad(format!("starts with '{}'", activity(0))));
    }
    let value = |k: usize| -> Result<f64, SimError> {
        p.events[k]
            .attributes
            .get(VALUE)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("event {} has no numeric value", k + 1)))
    };
    let mut hr = [0.0; 3];
    for k in 0..3 {
        if activity(1 + k) != HEART_RATE || activity(4 + k) != BLOOD_PRESSURE {
            return Err(bad("measurements are not three heart-rate then three blood-pressure events".into()));
        }
        hr[k] = value(1 + k)?;
    }
    let meds: Vec<&str> = (7..12).map(activity).collect();
    let b_positions: Vec<usize> = meds.iter().enumerate().filter(|(_, &m)| m == MEDICATION_B).map(|(k, _)| k).collect();
    if b_positions.len() != 1 || meds.iter().any(|&m| m != MEDICATION_A && m != MEDICATION_B) {
        return Err(bad("medications must be four A and one B".into()));
    }
    let stat = |name: &str| p.static_attrs.get(name).ok_or_else(|| bad(format!("missing '{name}'")));
    let age: f64 = stat("Age")?.parse().map_err(|_| bad("Age is not numeric".into()))?;
    let gender = crate::eventlog::parse_bool(stat("Gender")?).ok_or_else(|| bad("Gender is not binary".into()))?;
    Ok(parts_from_values(gender, age, b_positions[0], hr))
}

/// Writes the log as CSV: one row per event with the case attributes
/// repeated on every row.
pub fn write_csv<W: Write>(sim: &Simulation, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case_id", "activity", "timestamp", VALUE, "Age", "BMI", "Gender", "Foreigner", LABEL])?;
    for p in sim.log.pathways() {
        let s = |k: &str| p.static_attrs.get(k).map(String::as_str).unwrap_or("");
        for e in &p.events {
            let ts = e.timestamp.format(TIMESTAMP_FORMAT).to_string();
            let value = e.attributes.get(VALUE).map(String::as_str).unwrap_or("");
            w.write_record([
                p.id.as_str(),
                e.activity.as_str(),
                ts.as_str(),
                value,
                s("Age"),
                s("BMI"),
                s("Gender"),
                s("Foreigner"),
                s(LABEL),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_parts_at_maximum() {
        let p = parts_from_values(true, 0.5, 4, [0.5, 0.65, 0.845]);
        assert_eq!([p.gender, p.age, p.pattern, p.hr_nl, p.hr], [0.2; 5]);
        assert!((p.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_parts_at_minimum() {
        let p = parts_from_values(false, 0.0, 0, [0.0, -0.1, -0.2]);
        assert!(p.age.abs() < 1e-15 && p.hr_nl.abs() < 1e-15);
        assert_eq!((p.gender, p.pattern, p.hr), (0.0, 0.0, 0.0));
    }

    #[test]
    fn pattern_needs_b_last() {
        // A, A, A, B, A
        assert_eq!(parts_from_values(false, 0.5, 3, [0.5; 3]).pattern, 0.0);
    }

    #[test]
    fn generated_structure_and_labels() {
        let sim = generate(&SimConfig {
            n_pathways: 200,
            seed: 3,
            ..SimConfig::default()
        })
        .unwrap();
        for (p, (&y, parts)) in sim.log.pathways().iter().zip(sim.labels.iter().zip(&sim.parts)) {
            let recomputed = label_parts(p).unwrap();
            assert_eq!(&recomputed, parts);
            assert_eq!(recomputed.total(), y);
            assert!((0.0..=1.0).contains(&y));
            for v in [recomputed.gender, recomputed.age, recomputed.pattern, recomputed.hr_nl, recomputed.hr] {
                assert!((0.0..=0.2 + 1e-15).contains(&v));
            }
            let hr: Vec<f64> = p.events[1..4].iter().map(|e| e.attributes[VALUE].parse().unwrap()).collect();
            let increasing = hr[1] > hr[0] && hr[2] > hr[1];
            let decreasing = hr[1] < hr[0] && hr[2] < hr[1];
            assert!(increasing ^ decreasing);
            assert_eq!(recomputed.hr == 0.2, increasing);
            assert!(hr.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn malformed_pathway_is_rejected() {
        let sim = generate(&SimConfig {
            n_pathways: 1,
            ..SimConfig::default()
        })
        .unwrap();
        let mut p = sim.log.pathways()[0].clone();
        p.events.swap(1, 4);
        assert!(matches!(label_parts(&p), Err(SimError::Malformed { .. })));
        p.events.pop();
        assert!(label_parts(&p).is_err());
    }

    #[test]
    fn csv_round_trips_through_the_pipeline() {
        let sim = generate(&SimConfig {
            n_pathways: 30,
            seed: 1,
            ..SimConfig::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&sim, &mut buf).unwrap();
        let sidecar = schema_sidecar();
        let log = crate::eventlog::parse_event_log(buf.as_slice(), &sidecar.schema, &sidecar.csv).unwrap();
        for (a, b) in log.pathways().iter().zip(sim.log.pathways()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.static_attrs, b.static_attrs);
            for (ea, eb) in a.events.iter().zip(&b.events) {
                assert_eq!((&ea.activity, ea.timestamp), (&eb.activity, eb.timestamp));
                assert_eq!(ea.attributes.get(VALUE), eb.attributes.get(VALUE));
            }
        }
        let ds = crate::eventlog::ingest(buf.as_slice(), &sidecar, None).unwrap();
        assert_eq!(ds.n_rows(), 30);
        assert_eq!(ds.labels(), sim.labels);
        assert!(ds.rows.iter().all(|r| r.prefix_len == EVENTS_PER_PATHWAY));
    }
}
