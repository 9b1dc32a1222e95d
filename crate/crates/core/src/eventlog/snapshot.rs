//! JSON-lines dataset dump.
//!
//! Line 1 is a header, followed by one `pathway` record per pathway (event
//! metadata) and one `row` record per prefix carrying the static vector, the
//! `t* × p` sequence slice, the label and the prefix length.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{EncodedDataset, EventLogError, FeatureInfo, PathwayData, Row, Task};

pub const SNAPSHOT_VERSION: u32 = 1;
const FORMAT: &str = "patway-dataset";

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header {
        format: String,
        version: u32,
        task: Task,
        schema_hash: String,
        static_features: Vec<FeatureInfo>,
        seq_features: Vec<FeatureInfo>,
    },
    Pathway {
        id: String,
        activities: Vec<String>,
        timestamps: Vec<String>,
    },
    Row {
        pathway_id: String,
        prefix_len: usize,
        label: f64,
        x_static: Vec<f64>,
        x_seq: Vec<Vec<f64>>,
    },
}

pub fn write_snapshot<W: Write>(ds: &EncodedDataset, mut out: W) -> Result<(), EventLogError> {
    let header = Record::Header {
        format: FORMAT.into(),
        version: SNAPSHOT_VERSION,
        task: ds.task,
        schema_hash: ds.schema_hash(),
        static_features: ds.static_features.clone(),
        seq_features: ds.seq_features.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for p in &ds.pathways {
        let rec = Record::Pathway {
            id: p.id.clone(),
            activities: p.activities.clone(),
            timestamps: p.timestamps.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    let p = ds.n_seq();
    for i in 0..ds.n_rows() {
        let seq = ds.x_seq(i);
        let rec = Record::Row {
            pathway_id: ds.pathway_of(i).to_string(),
            prefix_len: ds.prefix_len(i),
            label: ds.label(i),
            x_static: ds.x_static(i).to_vec(),
            x_seq: (0..seq.len).map(|t| seq.data[t * p..(t + 1) * p].to_vec()).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<EncodedDataset, EventLogError> {
    let bad = |m: String| EventLogError::Snapshot(m);
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| bad("empty snapshot".into()))??;
    let (task, hash, static_features, seq_features) = match serde_json::from_str(&first)? {
        Record::Header {
            format,
            version,
            task,
            schema_hash,
            static_features,
            seq_features,
        } => {
            if format != FORMAT || version != SNAPSHOT_VERSION {
                return Err(bad(format!("unsupported snapshot {format} v{version}")));
            }
            (task, schema_hash, static_features, seq_features)
        }
        _ => return Err(bad("first line must be the header".into())),
    };
    let (q, p) = (static_features.len(), seq_features.len());
    let mut pathways: Vec<PathwayData> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    let mut seen_row = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line)? {
            Record::Header { .. } => return Err(bad(format!("line {}: repeated header", n + 2))),
            Record::Pathway {
                id,
                activities,
                timestamps,
            } => {
                if index.insert(id.clone(), pathways.len()).is_some() {
                    return Err(bad(format!("duplicate pathway '{id}'")));
                }
                pathways.push(PathwayData {
                    id,
                    x_static: Vec::new(),
                    x_seq: Vec::new(),
                    len: activities.len(),
                    label: f64::NAN,
                    activities,
                    timestamps,
                });
                seen_row.push(false);
            }
            Record::Row {
                pathway_id,
                prefix_len,
                label,
                x_static,
                x_seq,
            } => {
                let &pi = index
                    .get(&pathway_id)
                    .ok_or_else(|| bad(format!("row references unknown pathway '{pathway_id}'")))?;
                if x_static.len() != q || x_seq.len() != prefix_len || x_seq.iter().any(|r| r.len() != p) {
                    return Err(bad(format!("row of '{pathway_id}' has inconsistent shape")));
                }
                let pw = &mut pathways[pi];
                let flat: Vec<f64> = x_seq.into_iter().flatten().collect();
                if !seen_row[pi] {
                    seen_row[pi] = true;
                    pw.x_static = x_static;
                    pw.label = label;
                } else if pw.x_static != x_static || pw.label.to_bits() != label.to_bits() {
                    return Err(bad(format!("rows of '{pathway_id}' disagree on static data or label")));
                }
                let common = flat.len().min(pw.x_seq.len());
                if flat[..common] != pw.x_seq[..common] {
                    return Err(bad(format!("rows of '{pathway_id}' are not prefixes of one sequence")));
                }
                if flat.len() > pw.x_seq.len() {
                    pw.x_seq = flat;
                }
                rows.push(Row {
                    pathway: pi,
                    prefix_len,
                });
            }
        }
    }
    for (pw, seen) in pathways.iter_mut().zip(&seen_row) {
        if !seen {
            return Err(bad(format!("pathway '{}' has no rows", pw.id)));
        }
        if pw.x_seq.len() != pw.len * p {
            return Err(bad(format!("pathway '{}': longest row does not cover its events", pw.id)));
        }
    }
    let ds = EncodedDataset {
        static_features,
        seq_features,
        task,
        pathways,
        rows,
    };
    if ds.schema_hash() != hash {
        return Err(bad("schema hash does not match feature list".into()));
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::FeatureKind;

    fn sample() -> EncodedDataset {
        EncodedDataset {
            static_features: vec![FeatureInfo {
                name: "Age".into(),
                kind: FeatureKind::Numeric,
                group: None,
            }],
            seq_features: vec![
                FeatureInfo {
                    name: "CRP".into(),
                    kind: FeatureKind::Numeric,
                    group: None,
                },
                FeatureInfo {
                    name: "IV".into(),
                    kind: FeatureKind::Binary,
                    group: None,
                },
            ],
            task: Task::Classification,
            pathways: vec![PathwayData {
                id: "a".into(),
                x_static: vec![0.1 + 0.2],
                x_seq: vec![0.0, 1.0, 1.0 / 3.0, 0.0],
                len: 2,
                label: 1.0,
                activities: vec!["ER Registration".into(), "CRP".into()],
                timestamps: vec!["2020-01-01T00:00:00".into(), "2020-01-01T00:01:00".into()],
            }],
            rows: vec![
                Row {
                    pathway: 0,
                    prefix_len: 1,
                },
                Row {
                    pathway: 0,
                    prefix_len: 2,
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = sample();
        let mut buf = Vec::new();
        write_snapshot(&ds, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn tampered_header_rejected() {
        let mut buf = Vec::new();
        write_snapshot(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\"Age\"", "\"Weight\"");
        assert!(read_snapshot(text.as_bytes()).is_err());
    }
}
