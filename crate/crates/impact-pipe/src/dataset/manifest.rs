//! Package manifest: one row per event with label, provenance, and
//! optional model prediction.

use crate::error::{PipeError, Result};
use crate::kinematics::{Label, LabelSource, LabelValue};
use std::path::Path;

pub const MANIFEST_HEADER: &str = "event_id,label,source,predicted,score,model_id,version";

/// One manifest line. Optional fields serialize as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub event_id: String,
    pub label: Option<LabelValue>,
    pub source: Option<LabelSource>,
    pub predicted: Option<LabelValue>,
    pub score: Option<f64>,
    pub model_id: String,
    pub version: String,
}

impl ManifestRow {
    pub fn from_label(event_id: &str, label: &Label) -> Self {
        ManifestRow {
            event_id: event_id.to_string(),
            label: Some(label.value),
            source: Some(label.source.clone()),
            predicted: None,
            score: None,
            model_id: String::new(),
            version: crate::VERSION.to_string(),
        }
    }
}

fn check_field(name: &str, value: &str) -> Result<()> {
    if value.contains(',') || value.contains('\n') {
        return Err(PipeError::InvalidParameter(format!(
            "manifest field {name}='{value}' must not contain commas or newlines"
        )));
    }
    Ok(())
}

/// Serializes rows sorted by event id. Duplicate ids are rejected.
pub fn write_manifest(rows: &[ManifestRow]) -> Result<String> {
    let mut sorted: Vec<&ManifestRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.event_id.cmp(&b.event_id));
    for pair in sorted.windows(2) {
        if pair[0].event_id == pair[1].event_id {
            return Err(PipeError::InvalidParameter(format!(
                "duplicate event id '{}' in manifest",
                pair[0].event_id
            )));
        }
    }
    let mut out = String::new();
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for row in sorted {
        check_field("event_id", &row.event_id)?;
        check_field("model_id", &row.model_id)?;
        check_field("version", &row.version)?;
        let source = row.source.as_ref().map(|s| s.as_str()).unwrap_or("");
        // Augmented rows carry their parent id as `augmented:<parent>`.
        let source_cell = match &row.source {
            Some(LabelSource::Augmented { parent_id }) => {
                check_field("parent_id", parent_id)?;
                format!("augmented:{parent_id}")
            }
            _ => source.to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.event_id,
            row.label.map(|l| l.as_str()).unwrap_or(""),
            source_cell,
            row.predicted.map(|l| l.as_str()).unwrap_or(""),
            row.score.map(super::fmt_sig9).unwrap_or_default(),
            row.model_id,
            row.version,
        ));
    }
    Ok(out)
}

/// Parses a manifest produced by [`write_manifest`].
pub fn parse_manifest(body: &str, path: &Path) -> Result<Vec<ManifestRow>> {
    let mut lines = body.lines();
    match lines.next() {
        Some(h) if h == MANIFEST_HEADER => {}
        other => {
            return Err(PipeError::Schema {
                path: path.into(),
                what: format!(
                    "manifest header '{MANIFEST_HEADER}' (found '{}')",
                    other.unwrap_or("")
                ),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(PipeError::Structure {
                path: path.into(),
                what: format!("manifest row {} has {} fields, expected 7", i + 1, fields.len()),
            });
        }
        let opt = |s: &str| -> Option<String> {
            if s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        let label = match opt(fields[1]) {
            Some(s) => Some(LabelValue::parse(&s).map_err(|e| PipeError::Data {
                path: path.into(),
                row: i + 1,
                what: e.to_string(),
            })?),
            None => None,
        };
        let source = match fields[2] {
            "" => None,
            "video_verified" => Some(LabelSource::VideoVerified),
            "synthetic" => Some(LabelSource::Synthetic),
            s if s.starts_with("augmented:") => Some(LabelSource::Augmented {
                parent_id: s["augmented:".len()..].to_string(),
            }),
            other => {
                return Err(PipeError::Data {
                    path: path.into(),
                    row: i + 1,
                    what: format!("unknown source '{other}'"),
                })
            }
        };
        let predicted = match opt(fields[3]) {
            Some(s) => Some(LabelValue::parse(&s).map_err(|e| PipeError::Data {
                path: path.into(),
                row: i + 1,
                what: e.to_string(),
            })?),
            None => None,
        };
        let score = match opt(fields[4]) {
            Some(s) => {
                let v: f64 = s.parse().map_err(|_| PipeError::Data {
                    path: path.into(),
                    row: i + 1,
                    what: format!("unparseable score '{s}'"),
                })?;
                Some(v)
            }
            None => None,
        };
        rows.push(ManifestRow {
            event_id: fields[0].to_string(),
            label,
            source,
            predicted,
            score,
            model_id: fields[5].to_string(),
            version: fields[6].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_and_sorts() {
        let rows = vec![
            ManifestRow {
                event_id: "b".into(),
                label: Some(LabelValue::NonContact),
                source: Some(LabelSource::Synthetic),
                predicted: Some(LabelValue::TrueImpact),
                score: Some(0.75),
                model_id: "m1".into(),
                version: "0.1.0".into(),
            },
            ManifestRow {
                event_id: "a".into(),
                label: Some(LabelValue::TrueImpact),
                source: Some(LabelSource::Augmented {
                    parent_id: "a0".into(),
                }),
                predicted: None,
                score: None,
                model_id: String::new(),
                version: "0.1.0".into(),
            },
        ];
        let text = write_manifest(&rows).unwrap();
        assert!(text.starts_with(MANIFEST_HEADER));
        let back = parse_manifest(&text, Path::new("mem")).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].event_id, "a"); // sorted
        assert_eq!(
            back[0].source,
            Some(LabelSource::Augmented {
                parent_id: "a0".into()
            })
        );
        assert_eq!(back[1].score, Some(0.75));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let row = ManifestRow {
            event_id: "x".into(),
            label: None,
            source: None,
            predicted: None,
            score: None,
            model_id: String::new(),
            version: "0".into(),
        };
        assert!(matches!(
            write_manifest(&[row.clone(), row]),
            Err(PipeError::InvalidParameter(_))
        ));
    }
}
