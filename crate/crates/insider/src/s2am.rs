//! The reference file tying one system model and one safety model
//! together. It stores paths and content fingerprints, never the models
//! themselves, so both sides keep evolving in their own files; a
//! fingerprint mismatch at load time is reported as a warning, not an
//! error.

use std::path::{Component, Path, PathBuf};

use insider_core::safety::SafetyAnalysisModel;
use insider_core::system::SystemModel;
use insider_core::Fingerprint;
use serde::{Deserialize, Serialize};

use crate::format::{self, LoadError, SaveError, FORMAT};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct S2amFile {
    format: String,
    sm: ModelRef,
    sam: ModelRef,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRef {
    path: String,
    fingerprint: String,
}

/// A loaded reference file: both models plus any fingerprint warnings.
pub struct Project {
    pub sm: SystemModel,
    pub sam: SafetyAnalysisModel,
    pub sm_path: PathBuf,
    pub sam_path: PathBuf,
    pub warnings: Vec<String>,
}

/// Expresses `target` relative to `base_dir` where possible; falls back
/// to the absolute path.
fn relative_to(base_dir: &Path, target: &Path) -> PathBuf {
    let (Ok(base), Ok(target)) = (base_dir.canonicalize(), target.canonicalize()) else {
        return target.into();
    };
    let base_parts: Vec<Component> = base.components().collect();
    let target_parts: Vec<Component> = target.components().collect();
    let shared = base_parts
        .iter()
        .zip(&target_parts)
        .take_while(|(a, b)| a == b)
        .count();
    if shared == 0 {
        return target;
    }
    let mut out = PathBuf::new();
    for _ in shared..base_parts.len() {
        out.push("..");
    }
    for part in &target_parts[shared..] {
        out.push(part);
    }
    out
}

/// Loads both models, then writes a reference file pointing at them with
/// paths relative to the reference file itself.
pub fn write_reference(sm_path: &Path, sam_path: &Path, out: &Path) -> Result<(), ReferenceError> {
    let sm = format::load_system_model(sm_path)?;
    let sam = format::load_safety_model(sam_path)?;
    let base = out.parent().filter(|p| !p.as_os_str().is_empty());
    let (sm_stored, sam_stored) = match base {
        Some(dir) => (relative_to(dir, sm_path), relative_to(dir, sam_path)),
        None => (sm_path.into(), sam_path.into()),
    };
    let file = S2amFile {
        format: FORMAT.into(),
        sm: ModelRef {
            path: sm_stored.to_string_lossy().into_owned(),
            fingerprint: sm.fingerprint().to_string(),
        },
        sam: ModelRef {
            path: sam_stored.to_string_lossy().into_owned(),
            fingerprint: sam.fingerprint().to_string(),
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("reference serializes");
    text.push('\n');
    std::fs::write(out, text).map_err(|source| {
        ReferenceError::Save(SaveError::new(out.into(), source))
    })
}

pub fn load_project(path: &Path) -> Result<Project, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.into(),
        source,
    })?;
    let file: S2amFile = serde_json::from_str(&text).map_err(|e| LoadError::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    if file.format != FORMAT {
        return Err(LoadError::Schema {
            path: path.into(),
            detail: format!("unsupported format {:?}, expected {FORMAT:?}", file.format),
        });
    }
    let base = path.parent().filter(|p| !p.as_os_str().is_empty());
    let resolve = |stored: &str| -> PathBuf {
        let stored = PathBuf::from(stored);
        match (stored.is_absolute(), base) {
            (false, Some(dir)) => dir.join(stored),
            _ => stored,
        }
    };
    let sm_path = resolve(&file.sm.path);
    let sam_path = resolve(&file.sam.path);
    let sm = format::load_system_model(&sm_path)?;
    let sam = format::load_safety_model(&sam_path)?;

    let mut warnings = Vec::new();
    let mut check = |what: &str, path: &Path, stored: &str, found: Fingerprint| {
        match Fingerprint::parse(stored) {
            Some(expected) if expected == found => {}
            _ => warnings.push(format!(
                "{what} {} changed since the reference was written (recorded {stored}, found {found})",
                path.display()
            )),
        }
    };
    check("system model", &sm_path, &file.sm.fingerprint, sm.fingerprint());
    check("safety model", &sam_path, &file.sam.fingerprint, sam.fingerprint());

    Ok(Project {
        sm,
        sam,
        sm_path,
        sam_path,
        warnings,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Save(#[from] SaveError),
}
