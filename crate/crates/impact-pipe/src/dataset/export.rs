//! Export packaging: one event file per event plus a manifest.

use super::manifest::{write_manifest, ManifestRow};
use super::write_event_file;
use crate::error::{PipeError, Result};
use crate::kinematics::{KinematicEvent, Label, LabelValue};
use std::collections::BTreeSet;
use std::path::Path;

/// One event in an export package.
#[derive(Debug, Clone)]
pub struct ExportItem {
    pub event: KinematicEvent,
    pub label: Option<Label>,
    pub predicted: Option<(LabelValue, f64)>,
}

/// Writes the package: `<event_id>.csv` per event plus `manifest.csv`,
/// sorted by event id. Output bytes depend only on the inputs, so
/// re-exporting identical inputs reproduces the package exactly. No
/// personal-identifier fields exist in the layout.
pub fn export_package(
    items: &[ExportItem],
    model_id: &str,
    out_dir: &Path,
) -> Result<Vec<ManifestRow>> {
    let mut seen = BTreeSet::new();
    for item in items {
        if !seen.insert(item.event.event_id.clone()) {
            return Err(PipeError::InvalidParameter(format!(
                "duplicate event id '{}' in export",
                item.event.event_id
            )));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| PipeError::io(out_dir, e))?;

    let mut rows = Vec::with_capacity(items.len());
    for item in items {
        let event_path = out_dir.join(format!("{}.csv", item.event.event_id));
        write_event_file(&item.event, &event_path)?;
        rows.push(ManifestRow {
            event_id: item.event.event_id.clone(),
            label: item.label.as_ref().map(|l| l.value),
            source: item.label.as_ref().map(|l| l.source.clone()),
            predicted: item.predicted.map(|(v, _)| v),
            score: item.predicted.map(|(_, s)| s),
            model_id: model_id.to_string(),
            version: crate::VERSION.to_string(),
        });
    }
    let manifest = write_manifest(&rows)?;
    let manifest_path = out_dir.join("manifest.csv");
    std::fs::write(&manifest_path, manifest).map_err(|e| PipeError::io(&manifest_path, e))?;
    rows.sort_by(|a, b| a.event_id.cmp(&b.event_id));
    Ok(rows)
}
