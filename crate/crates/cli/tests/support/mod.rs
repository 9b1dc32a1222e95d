#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use patway_core::eventlog::{ingest, EncodedDataset, SchemaSidecar};

pub const WARD_SCHEMA: &str = r#"activity_feature = "activity"
target_activity = "Admission IC"
carry_forward = ["CRP"]
prefixes = "all"

[[static_features]]
name = "Age"
kind = "numeric"

[[static_features]]
name = "Gender"
kind = "binary"

[[sequential_features]]
name = "CRP"
kind = "numeric"
value_column = "value"

[[sequential_features]]
name = "Antibiotics"
kind = "binary"

[csv]
case_id_column = "case_id"
timestamp_column = "timestamp"
timestamp_format = "%Y-%m-%d %H:%M:%S"
"#;

/// Small deterministic ward log: patients with high CRP readings are
/// admitted to intensive care more often.
pub fn ward_csv(n: usize) -> String {
    // Tiny linear congruential stream keeps the fixture independent of any RNG crate.
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut out = String::from("case_id,activity,timestamp,value,Age,Gender\n");
    for i in 0..n {
        let age = 20.0 + (next() * 70.0).round();
        let gender = u8::from(next() < 0.5);
        let severity = next();
        let steps = 2 + (next() * 5.0) as usize;
        let mut minute = 0;
        let event = |out: &mut String, activity: &str, value: &str, minute: &mut usize| {
            writeln!(
                out,
                "w{i:03},{activity},2021-03-{:02} {:02}:{:02}:00,{value},{age},{gender}",
                1 + i % 28,
                *minute / 60,
                *minute % 60
            )
            .unwrap();
            *minute += 7;
        };
        event(&mut out, "Registration", "", &mut minute);
        for _ in 0..steps {
            if next() < 0.6 {
                let crp = 10.0 + severity * 150.0 + next() * 40.0;
                event(&mut out, "CRP", &format!("{crp:.1}"), &mut minute);
            } else {
                event(&mut out, "Antibiotics", "", &mut minute);
            }
        }
        if severity + 0.3 * next() > 0.65 {
            event(&mut out, "Admission IC", "", &mut minute);
        }
    }
    out
}

/// Writes the ward log and its schema into `dir`.
pub fn write_ward(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let log = dir.join("ward.csv");
    let schema = dir.join("ward.schema.toml");
    fs::write(&log, ward_csv(n)).unwrap();
    fs::write(&schema, WARD_SCHEMA).unwrap();
    (log, schema)
}

pub fn ward_dataset(n: usize) -> EncodedDataset {
    let sidecar: SchemaSidecar = toml::from_str(WARD_SCHEMA).unwrap();
    ingest(ward_csv(n).as_bytes(), &sidecar, None).unwrap()
}

/// The ward log encoded without the `Gender` column, i.e. under another schema.
pub fn ward_dataset_other_schema(n: usize) -> EncodedDataset {
    let mut sidecar: SchemaSidecar = toml::from_str(WARD_SCHEMA).unwrap();
    sidecar.schema.static_features.retain(|f| f.name != "Gender");
    ingest(ward_csv(n).as_bytes(), &sidecar, None).unwrap()
}
