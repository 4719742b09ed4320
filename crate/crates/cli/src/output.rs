use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use vpq_core::mask::{ProjectionOptions, BANK_FORMAT_VERSION};
use vpq_core::{FieldOfView, MaskBank, Resolution};

/// Writes `path` through a temporary file in the same directory, then renames it.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> vpq_core::Result<()>,
{
    let dir = parent(path);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()
            .with_context(|| format!("writing {}", path.display()))?;
    }
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

fn parent(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Cache directory of one bank under `root`.
pub fn bank_dir(
    root: &Path,
    rows: usize,
    cols: usize,
    fov: FieldOfView,
    res: Resolution,
    options: &ProjectionOptions,
) -> PathBuf {
    let mut name = format!(
        "bank-v{BANK_FORMAT_VERSION}-{rows}x{cols}-fov{fov}-{res}-s{}",
        options.samples_per_side
    );
    if let vpq_core::mask::CenterWeighting::Gaussian { sigma_deg } = options.center {
        name.push_str(&format!("-g{sigma_deg}"));
    }
    root.join(name)
}

/// The bank for these parameters, cached under `cache` when given.
pub fn bank(
    cache: Option<&Path>,
    rows: usize,
    cols: usize,
    fov: FieldOfView,
    res: Resolution,
    options: ProjectionOptions,
) -> vpq_core::Result<MaskBank> {
    match cache {
        Some(root) => {
            let dir = bank_dir(root, rows, cols, fov, res, &options);
            MaskBank::load_or_build(&dir, rows, cols, fov, res, options)
        }
        None => MaskBank::build(rows, cols, fov, res, options),
    }
}
