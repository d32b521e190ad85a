use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, HistoryEntry, OptimizationState, Split};
use crate::error::{Error, Result};
use crate::ranking::PreferenceSample;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub label_multiset: Vec<String>,
    pub split: BTreeMap<u64, Split>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

impl Dataset {
    /// Writes `dataset.jsonl` and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut buf = Vec::new();
        for s in &self.samples {
            serde_json::to_writer(&mut buf, s)?;
            buf.push(b'\n');
        }
        write_atomic(&dir.join(DATASET_FILE), &buf)?;
        let m = Manifest {
            label_multiset: self.label_multiset.clone(),
            split: self.split.clone(),
        };
        write_atomic(&dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(&m)?)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        let f = std::fs::File::open(dir.join(DATASET_FILE))?;
        let mut samples = Vec::new();
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let s: PreferenceSample =
                serde_json::from_str(&line).map_err(|e| Error::Format(format!("{DATASET_FILE} line {}: {e}", n + 1)))?;
            if !m.split.contains_key(&s.scene_id) {
                return Err(Error::Format(format!("scene {} missing from the manifest", s.scene_id)));
            }
            samples.push(s);
        }
        samples.sort_by_key(|s| (s.scene_id, s.variant, s.sample_idx));
        Ok(Self {
            samples,
            split: m.split,
            label_multiset: m.label_multiset,
        })
    }
}

pub fn write_history_csv(path: &Path, history: &[HistoryEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for h in history {
        w.serialize(h).map_err(|e| Error::Format(e.to_string()))?;
    }
    if history.is_empty() {
        w.write_record(["iteration", "scenes", "tau_w_median", "accepted"])
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryEntry>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    r.deserialize()
        .map(|x| x.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

/// Snapshot, dataset and history after a step.
pub(crate) fn write_outputs(dir: &Path, state: &OptimizationState) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(m) = &state.current_model {
        write_atomic(&dir.join(MODEL_FILE), m.to_json()?.as_bytes())?;
    }
    state.dataset.save(dir)?;
    write_history_csv(&dir.join(HISTORY_FILE), &state.history)
}
