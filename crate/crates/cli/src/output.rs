//! Output directory handling; every file is written to a temporary sibling
//! and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::args::Common;
use crate::error::{CliError, CliResult};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(common: &Common) -> CliResult<Self> {
        let root = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&root)
            .map_err(|e| CliError::usage(format!("cannot create output directory: {e}")).at(root.display().to_string()))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, content: &str) -> CliResult<PathBuf> {
        let target = self.path(name);
        write_atomic(&target, content.as_bytes())?;
        Ok(target)
    }
}

pub fn write_atomic(target: &Path, bytes: &[u8]) -> CliResult<()> {
    let loc = || target.display().to_string();
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::internal(e.to_string()).at(loc()))?;
    tmp.write_all(bytes).map_err(|e| CliError::internal(e.to_string()).at(loc()))?;
    tmp.as_file().sync_all().map_err(|e| CliError::internal(e.to_string()).at(loc()))?;
    tmp.persist(target).map_err(|e| CliError::internal(e.error.to_string()).at(loc()))?;
    Ok(())
}

/// Shortest round-trip form; exponent notation at extreme magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable") + "\n"
}
