use std::io::Write;
use std::path::Path;

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Write to `path` when given, else to stdout.
pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => std::io::stdout().write_all(contents.as_bytes()),
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}
