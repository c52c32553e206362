//! Text checkpoints: `DTACTIVE-MODEL v1 <role>`, the layer sizes, then one
//! line per weight-matrix row and one per bias vector, layer by layer.
//! Values use shortest round-trip decimal, so loading is bit-exact. Lines
//! starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::model::{ModelParams, Role};

const MAGIC: &str = "DTACTIVE-MODEL v1";

pub fn to_text(model: &ModelParams, comments: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {}", model.role().as_str());
    let dims: Vec<String> = model.dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "{}", dims.join(" "));
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let mut off = 0;
    let p = model.params();
    let line = |out: &mut String, vals: &[f64]| {
        let s: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", s.join(" "));
    };
    for w in model.dims().windows(2) {
        for o in 0..w[1] {
            line(&mut out, &p[off + o * w[0]..off + (o + 1) * w[0]]);
        }
        off += w[0] * w[1];
        line(&mut out, &p[off..off + w[1]]);
        off += w[1];
    }
    out
}

pub fn from_text(text: &str) -> Result<ModelParams> {
    let bad = |msg: String| Error::Model(format!("bad checkpoint: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let role = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| bad(format!("header {header:?}")))?;
    let role = Role::parse(role)?;
    let dims: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("missing layer sizes".into()))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| bad(format!("layer size {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    let mut params = Vec::new();
    for l in lines {
        for t in l.split_whitespace() {
            params.push(t.parse::<f64>().map_err(|e| bad(format!("weight {t:?}: {e}")))?);
        }
    }
    ModelParams::from_parts(role, &dims, params)
}

pub fn save(model: &ModelParams, path: &Path, comments: &[String]) -> Result<()> {
    std::fs::write(path, to_text(model, comments))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Model(format!("model not found: {}", path.display())),
        _ => Error::Io(e),
    })?;
    from_text(&text)
}
