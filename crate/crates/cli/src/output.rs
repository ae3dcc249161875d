//! Atomic artifact writing: content lands under the target name only as a
//! whole file (temp file in the same directory, then rename).

use std::io::Write as _;
use std::path::Path;

use crate::CliError;

/// Writes `contents` to `path` atomically. A crash or failure mid-write
/// never leaves a truncated file under the target name.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".chimag-")
        .tempfile_in(parent)
        .map_err(|e| {
            CliError::runtime(format!(
                "cannot create temporary file in `{}`: {e}",
                parent.display()
            ))
        })?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::runtime(format!("cannot write `{}`: {e}", path.display())))?;
    tmp.persist(path).map_err(|e| {
        CliError::runtime(format!("cannot write `{}`: {}", path.display(), e.error))
    })?;
    Ok(())
}

/// Reads a whole input file, classifying failures as runtime errors.
pub fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read `{}`: {e}", path.display())))
}
