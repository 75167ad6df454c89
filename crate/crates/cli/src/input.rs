//! Reading input documents from files, directories or line files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use crate::failure::{Failure, ResultExt};

/// A document before term extraction.
pub struct RawDocument {
    pub doc_id: String,
    pub bytes: Vec<u8>,
}

/// Input files: each path as given, or the `.txt` files of a directory in
/// name order.
pub fn expand(paths: &[PathBuf], extension: &str) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for path in paths {
        let meta = std::fs::metadata(path)
            .with_context(|| format!("cannot read {}", path.display()))
            .input()?;
        if meta.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(path)
                .with_context(|| format!("cannot list {}", path.display()))
                .input()?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.to_string_lossy().ends_with(extension))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn read_documents(paths: &[PathBuf], lines: bool) -> Result<Vec<RawDocument>, Failure> {
    let mut docs = Vec::new();
    for file in expand(paths, ".txt")? {
        let bytes = std::fs::read(&file)
            .with_context(|| format!("cannot read {}", file.display()))
            .input()?;
        if lines {
            for (n, line) in bytes.split(|&b| b == b'\n').enumerate() {
                let line = line.strip_suffix(b"\r").unwrap_or(line);
                if line.iter().all(u8::is_ascii_whitespace) {
                    continue;
                }
                docs.push(RawDocument {
                    doc_id: format!("{}-{}", stem(&file), n + 1),
                    bytes: line.to_vec(),
                });
            }
        } else {
            docs.push(RawDocument {
                doc_id: stem(&file),
                bytes,
            });
        }
    }
    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Failure::new(crate::failure::INPUT, anyhow!("duplicate document id `{}`", doc.doc_id)));
        }
    }
    Ok(docs)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}
