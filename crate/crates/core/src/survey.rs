//! Published accelerator measurements (energy per inference vs. task error).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BUNDLED_SURVEY_IMAGENET: &str = include_str!("../../../data/survey_imagenet.json");
pub const BUNDLED_SURVEY_AUDIO: &str = include_str!("../../../data/survey_audio.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ANN")]
    Ann,
    #[serde(rename = "SNN")]
    Snn,
    Mixed,
    #[serde(rename = "Sparse-ANN")]
    SparseAnn,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Ann => "ANN",
            Family::Snn => "SNN",
            Family::Mixed => "Mixed",
            Family::SparseAnn => "Sparse-ANN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    ImageNet,
    #[serde(rename = "VAD")]
    Vad,
    #[serde(rename = "KWS")]
    Kws,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::ImageNet, Task::Vad, Task::Kws];
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::ImageNet => "ImageNet",
            Task::Vad => "VAD",
            Task::Kws => "KWS",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imagenet" => Ok(Task::ImageNet),
            "vad" => Ok(Task::Vad),
            "kws" => Ok(Task::Kws),
            _ => Err(Error::validation(format!("unknown task {s:?} (expected ImageNet, VAD or KWS)"))),
        }
    }
}

/// One accelerator as reported in the literature. Energy is always nJ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord")]
pub struct AcceleratorRecord {
    pub name: String,
    pub family: Family,
    /// `None` for platforms without a meaningful node (FPGA results).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process_nm: Option<f64>,
    pub energy_per_inference_nj: f64,
    pub task_error_pct: f64,
    pub task: Task,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, serde_json::Value>,
}

/// Records may give energy in mJ (as chip papers for vision tasks usually do);
/// it is normalized to nJ on load.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    name: String,
    family: Family,
    #[serde(default)]
    process_nm: Option<f64>,
    #[serde(default)]
    energy_per_inference_nj: Option<f64>,
    #[serde(default)]
    energy_per_inference_mj: Option<f64>,
    task_error_pct: f64,
    task: Task,
    #[serde(default)]
    extras: BTreeMap<String, serde_json::Value>,
}

impl TryFrom<RawRecord> for AcceleratorRecord {
    type Error = Error;

    fn try_from(raw: RawRecord) -> Result<Self> {
        let energy = match (raw.energy_per_inference_nj, raw.energy_per_inference_mj) {
            (Some(nj), None) => nj,
            (None, Some(mj)) => mj * 1e6,
            (Some(_), Some(_)) => {
                return Err(Error::validation(format!("{}: give energy in either nJ or mJ, not both", raw.name)))
            }
            (None, None) => {
                return Err(Error::validation(format!("{}: missing field energy_per_inference_nj", raw.name)))
            }
        };
        let rec = AcceleratorRecord {
            name: raw.name,
            family: raw.family,
            process_nm: raw.process_nm,
            energy_per_inference_nj: energy,
            task_error_pct: raw.task_error_pct,
            task: raw.task,
            extras: raw.extras,
        };
        rec.validate()?;
        Ok(rec)
    }
}

impl AcceleratorRecord {
    pub fn new(
        name: impl Into<String>,
        family: Family,
        task: Task,
        energy_per_inference_nj: f64,
        task_error_pct: f64,
    ) -> Result<Self> {
        let rec = AcceleratorRecord {
            name: name.into(),
            family,
            process_nm: None,
            energy_per_inference_nj,
            task_error_pct,
            task,
            extras: BTreeMap::new(),
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::validation("record name must not be empty"));
        }
        let e = self.energy_per_inference_nj;
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::validation(format!("{}: energy_per_inference_nj must be > 0", self.name)));
        }
        let err = self.task_error_pct;
        if !(0.0..=100.0).contains(&err) {
            return Err(Error::validation(format!("{}: task_error_pct must be within [0, 100]", self.name)));
        }
        if let Some(p) = self.process_nm {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::validation(format!("{}: process_nm must be > 0", self.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurveyFile {
    #[serde(default)]
    #[allow(dead_code)]
    source: Option<String>,
    records: Vec<AcceleratorRecord>,
}

pub fn parse_survey(text: &str) -> Result<Vec<AcceleratorRecord>> {
    let file: SurveyFile =
        serde_json::from_str(text).map_err(|source| Error::Parse { what: "survey".to_string(), source })?;
    let mut seen = HashSet::new();
    for r in &file.records {
        if !seen.insert(r.name.as_str()) {
            return Err(Error::DuplicateName(r.name.clone()));
        }
    }
    Ok(file.records)
}

pub fn load_survey(path: impl AsRef<Path>) -> Result<Vec<AcceleratorRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_survey(&text)
}

pub fn bundled_imagenet() -> Vec<AcceleratorRecord> {
    parse_survey(BUNDLED_SURVEY_IMAGENET).expect("bundled ImageNet survey is valid")
}

pub fn bundled_audio() -> Vec<AcceleratorRecord> {
    parse_survey(BUNDLED_SURVEY_AUDIO).expect("bundled audio survey is valid")
}
