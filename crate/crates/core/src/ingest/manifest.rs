use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{write_atomic, Sidecar};
use crate::error::{Error, Result};
use crate::model::{Group, SubjectMeta};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::Schema(format!("unknown split {s:?}"))),
        }
    }
}

/// One manifest row as stored on disk; paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub trial: String,
    pub sidecar: String,
    pub split: Split,
}

/// A manifest entry with resolved paths and its subject metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRef {
    pub trial: PathBuf,
    pub sidecar: PathBuf,
    pub split: Split,
    pub subject: SubjectMeta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortManifest {
    pub trials: Vec<TrialRef>,
}

impl CohortManifest {
    /// Reads the manifest and every sidecar it references.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let trials = entries
            .into_iter()
            .map(|e| {
                let sidecar = base.join(&e.sidecar);
                let subject = Sidecar::read(&sidecar)?.subject();
                Ok(TrialRef {
                    trial: base.join(&e.trial),
                    sidecar,
                    split: e.split,
                    subject,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let m = Self { trials };
        m.validate()?;
        Ok(m)
    }

    /// Subject ids must map to one group and one split across all trials.
    pub fn validate(&self) -> Result<()> {
        if self.trials.is_empty() {
            return Err(Error::Schema("manifest lists no trials".into()));
        }
        let mut seen: BTreeMap<&str, (Group, Split)> = BTreeMap::new();
        for t in &self.trials {
            t.subject.validate()?;
            let key = (t.subject.group, t.split);
            if let Some(prev) = seen.insert(&t.subject.id, key) {
                if prev != key {
                    return Err(Error::Schema(format!(
                        "subject {} appears with conflicting group/split",
                        t.subject.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn subjects(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.trials.iter().map(|t| t.subject.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn save(entries: &[ManifestEntry], path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(entries)?;
        write_atomic(path, json.as_bytes())
    }
}
