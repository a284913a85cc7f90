//! Labelled sample manifests.
//!
//! A manifest is CSV `path,label,end_bin` with an optional header. Relative
//! paths resolve against the manifest's directory; `end_bin` may be empty.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Location, Result};
use crate::event::{read_stream, EventStream, Format};
use crate::gnn::{infer_stream, ModelWeights};
use crate::metrics::{record_from_predictions, EvalRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: u32,
    pub end_bin: Option<u32>,
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 1;
        let err = |m: String| Error::Parse { location: Location::Line(line), message: m };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if i == 0 && rec.get(0) == Some("path") {
            continue;
        }
        if rec.len() < 2 || rec.len() > 3 {
            return Err(err(format!("expected path,label,end_bin but found {} fields", rec.len())));
        }
        let label = rec[1].parse().map_err(|e| err(format!("label {:?}: {e}", &rec[1])))?;
        let end_bin = match rec.get(2).filter(|v| !v.is_empty()) {
            Some(v) => Some(v.parse().map_err(|e| err(format!("end_bin {v:?}: {e}")))?),
            None => None,
        };
        let path = PathBuf::from(&rec[0]);
        let path = if path.is_absolute() { path } else { base.join(path) };
        out.push(ManifestEntry { path, label, end_bin });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path)?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Event format selected by the configuration, or guessed from the path.
pub fn stream_format(config: &RunConfig, path: &Path) -> Result<Format> {
    match config.io.format.as_str() {
        "auto" => Ok(Format::from_path(path)),
        other => other.parse(),
    }
}

/// Loads one sample with its ground truth attached.
pub fn load_entry(entry: &ManifestEntry, config: &RunConfig) -> Result<EventStream> {
    let mut s = read_stream(&entry.path, stream_format(config, &entry.path)?, config.sensor)?;
    s.label = Some(entry.label);
    s.end_of_word_bin = entry.end_bin;
    Ok(s)
}

/// Runs inference on one manifest sample and reduces it to an [`EvalRecord`].
pub fn evaluate_entry(entry: &ManifestEntry, config: &RunConfig, weights: &ModelWeights) -> Result<EvalRecord> {
    let stream = load_entry(entry, config)?;
    let filt = config.filtration_params()?;
    let preds = infer_stream(&stream, weights, config.graph, filt.as_ref())?;
    Ok(record_from_predictions(stream.sample_id, entry.label, entry.end_bin, &preds))
}
