use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use recad_core::model::{from_any_json, CADModel};
use recad_core::reward::extract_script;
use recad_core::script::{execute_script, ExecLimits};
use recad_core::{Categorized, FailureCategory};

use crate::Failure;

pub fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(FailureCategory::Io, format!("{}: {e}", path.display())))
}

pub fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    use std::io::Write;
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::data(FailureCategory::Io, format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::data(FailureCategory::Io, format!("stdout: {e}"))),
    }
}

pub fn require_exists(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::data(FailureCategory::Io, format!("{}: no such file or directory", path.display())))
    }
}

fn ext(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Scripts are recognized by a `.py` extension, answer texts by `.txt` or
/// `.md`; anything else is read as model JSON.
pub fn load_model(path: &Path, limits: &ExecLimits) -> Result<CADModel, Failure> {
    let text = read_text(path)?;
    let ctx = |cat: FailureCategory, msg: String| Failure::data(cat, format!("{}: {msg}", path.display()));
    match ext(path).as_str() {
        "py" => execute_script(&text, limits).map_err(|e| ctx(e.category, e.to_string())),
        "txt" | "md" => {
            let code = extract_script(&text).map_err(|e| ctx(e.category(), e.to_string()))?;
            execute_script(&code, limits).map_err(|e| ctx(e.category, e.to_string()))
        }
        _ => from_any_json(&text).map_err(|e| ctx(e.category(), e.to_string())),
    }
}

/// Regular files of a directory keyed by stem, in sorted order. A stem seen
/// twice keeps the first file name in sort order.
pub fn files_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>, Failure> {
    let io = |e: std::io::Error| Failure::data(FailureCategory::Io, format!("{}: {e}", dir.display()));
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let mut out: BTreeMap<String, PathBuf> = BTreeMap::new();
    for p in paths {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        if let Some(prev) = out.get(&stem) {
            log::warn!("{}: stem already taken by {}", p.display(), prev.display());
            continue;
        }
        out.insert(stem, p);
    }
    Ok(out)
}

/// `--limits` as inline JSON (starting with `{`) or a JSON file path.
pub fn parse_limits(arg: Option<&str>) -> Result<ExecLimits, Failure> {
    let Some(arg) = arg else { return Ok(ExecLimits::default()) };
    let text = if arg.trim_start().starts_with('{') { arg.to_string() } else { read_text(Path::new(arg))? };
    let limits: ExecLimits =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--limits: {e}")))?;
    if !limits.is_valid() {
        return Err(Failure::Usage("--limits: every limit must be positive".into()));
    }
    Ok(limits)
}
