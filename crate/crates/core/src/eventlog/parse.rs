use chrono::{DateTime, NaiveDateTime};
use indexmap::IndexMap;
use std::collections::BTreeMap;
use std::io::Read;

use super::{CsvConfig, Event, EventLog, EventLogError, FeatureKind, FeatureSchema, PatientPathway};

const FALLBACK_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y/%m/%d %H:%M:%S%.f",
    "%d.%m.%Y %H:%M:%S%.f",
];

/// Parses a timestamp with an explicit chrono format, or by trying RFC 3339,
/// a few common layouts and finally epoch seconds.
pub fn parse_timestamp(raw: &str, format: Option<&str>) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    if let Some(fmt) = format {
        return NaiveDateTime::parse_from_str(raw, fmt).ok();
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.naive_utc());
    }
    for fmt in FALLBACK_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt);
        }
    }
    let secs: f64 = raw.parse().ok()?;
    if !secs.is_finite() {
        return None;
    }
    let whole = secs.floor();
    let nanos = ((secs - whole) * 1e9).round() as u32;
    DateTime::from_timestamp(whole as i64, nanos.min(999_999_999)).map(|d| d.naive_utc())
}

pub fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "t" | "yes" | "y" => Some(true),
        "0" | "0.0" | "false" | "f" | "no" | "n" => Some(false),
        _ => None,
    }
}

fn same_value(kind: Option<FeatureKind>, a: &str, b: &str) -> bool {
    match kind {
        Some(FeatureKind::Numeric) => match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => x == y,
            _ => a == b,
        },
        Some(FeatureKind::Binary) => match (parse_bool(a), parse_bool(b)) {
            (Some(x), Some(y)) => x == y,
            _ => a == b,
        },
        _ => a == b,
    }
}

/// Reads an event-log CSV, groups rows into pathways and sorts each pathway by
/// timestamp (stable, so ties keep file order).
///
/// Static attributes (and the label attribute, when declared) are lifted from
/// the first event defining them; a differing non-empty value later in the
/// same pathway is an error.
pub fn parse_event_log<R: Read>(
    source: R,
    schema: &FeatureSchema,
    config: &CsvConfig,
) -> Result<EventLog, EventLogError> {
    let schema = schema.effective()?;
    let delimiter = u8::try_from(config.delimiter)
        .map_err(|_| EventLogError::Schema("delimiter must be a single-byte character".into()))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EventLogError::MissingColumn(name.to_string()))
    };
    let case_col = column(&config.case_id_column)?;
    let activity_col = column(&schema.activity_feature)?;
    let ts_col = column(&config.timestamp_column)?;
    for f in &schema.static_features {
        column(&f.name)?;
    }
    for f in &schema.sequential_features {
        if f.kind == FeatureKind::Numeric {
            column(f.value_column())?;
        }
    }
    if let Some(label) = &schema.label_attribute {
        column(label)?;
    }

    let mut lifted: Vec<(String, Option<FeatureKind>)> = schema
        .static_features
        .iter()
        .map(|f| (f.name.clone(), Some(f.kind)))
        .collect();
    if let Some(label) = &schema.label_attribute {
        lifted.push((label.clone(), Some(FeatureKind::Numeric)));
    }

    let mut groups: IndexMap<String, Vec<Event>> = IndexMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let case = record.get(case_col).unwrap_or("").trim().to_string();
        if case.is_empty() {
            return Err(EventLogError::Invalid(format!("line {line}: empty case id")));
        }
        let activity = record.get(activity_col).unwrap_or("").trim().to_string();
        let raw_ts = record.get(ts_col).unwrap_or("");
        let timestamp = parse_timestamp(raw_ts, config.timestamp_format.as_deref()).ok_or_else(|| {
            EventLogError::Timestamp {
                line,
                value: raw_ts.to_string(),
            }
        })?;
        let attributes = headers
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != case_col && *c != activity_col && *c != ts_col)
            .filter_map(|(c, h)| {
                let v = record.get(c)?.trim();
                (!v.is_empty()).then(|| (h.clone(), v.to_string()))
            })
            .collect();
        groups.entry(case).or_default().push(Event {
            activity,
            timestamp,
            attributes,
        });
    }

    let mut pathways = Vec::with_capacity(groups.len());
    for (id, mut events) in groups {
        events.sort_by_key(|e| e.timestamp);
        let mut static_attrs = BTreeMap::new();
        for (name, kind) in &lifted {
            let mut first: Option<&str> = None;
            for e in &events {
                if let Some(v) = e.attributes.get(name) {
                    match first {
                        None => first = Some(v),
                        Some(f) if !same_value(*kind, f, v) => {
                            return Err(EventLogError::ConflictingStatic {
                                pathway: id.clone(),
                                attribute: name.clone(),
                                first: f.to_string(),
                                second: v.clone(),
                            })
                        }
                        Some(_) => {}
                    }
                }
            }
            if let Some(v) = first {
                static_attrs.insert(name.clone(), v.to_string());
            }
        }
        pathways.push(PatientPathway {
            id,
            events,
            static_attrs,
        });
    }
    EventLog::new(pathways, schema)
}
