//! Per-tick log records and trajectory files.
//!
//! A trajectory is stored as a CSV (header comments, one header row, one row
//! per frame, 9 significant digits) and a sibling little-endian f64 binary
//! with one row per frame: the 384 pooled depth features followed by every
//! frame field at full precision. Loading reads the binary, so replays are
//! bit-exact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::POOLED_LEN;

macro_rules! frame_fields {
    ($($(#[$doc:meta])* $name:ident),* $(,)?) => {
        /// One logged control tick.
        #[derive(Debug, Clone, Copy, PartialEq, Default)]
        pub struct Frame {
            $($(#[$doc])* pub $name: f64,)*
        }

        impl Frame {
            pub const FIELDS: &'static [&'static str] = &[$(stringify!($name)),*];

            pub fn values(&self) -> Vec<f64> {
                vec![$(self.$name),*]
            }

            pub fn from_values(v: &[f64]) -> Frame {
                let mut it = v.iter().copied();
                Frame { $($name: it.next().unwrap_or(f64::NAN),)* }
            }
        }
    };
}

frame_fields! {
    /// Time, s.
    t,
    theta_g, theta_l, theta_r,
    /// Encoder-derived belt speeds, mm/s.
    v_left, v_right, v_left_filtered, v_right_filtered,
    /// Gap from the gripper encoder, mm.
    gap,
    depth_sum, centroid_x, d_obj,
    /// 1 when both maps touched, else 0.
    tactile_valid,
    /// Commanded object rate over the last period, rad/s.
    omega_c,
    theta_gt, omega_gt, x_gt,
    theta_hat, k_hat,
    theta_d, omega_d, u,
    v_comp, v_gap,
    v_left_cmd, v_right_cmd,
}

impl Frame {
    /// Rate ratio `omega_gt / omega_c` over the last period.
    pub fn label(&self) -> f64 {
        self.omega_gt / self.omega_c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RolloutStatus {
    Complete,
    /// The object was lost or the rollout timed out; frames up to the failure
    /// are kept.
    Failed,
}

impl RolloutStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RolloutStatus::Complete => "complete",
            RolloutStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub object: String,
    pub profile: String,
    pub seed: u64,
    pub status: RolloutStatus,
    /// Why a failed rollout failed.
    pub note: String,
    pub frames: Vec<Frame>,
    /// Pooled depth features per frame, each of length 384.
    pub pooled: Vec<Vec<f64>>,
}

/// Nine significant digits.
fn sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.8e}")
        .parse::<f64>()
        .map(|r| r.to_string())
        .unwrap_or_else(|_| format!("{v}"))
}

impl Trajectory {
    /// File stem used for this trajectory.
    pub fn stem(&self) -> String {
        format!("{}_{}", self.object, self.profile)
    }

    /// Writes `<stem>.csv` and `<stem>.bin` into `dir`; returns the CSV path.
    pub fn save(&self, dir: &Path, provenance: &[String]) -> Result<PathBuf> {
        if self.frames.len() != self.pooled.len() {
            return Err(Error::Dataset("frame and feature counts differ".into()));
        }
        let stem = self.stem();
        let bin_name = format!("{stem}.bin");
        let mut csv = String::new();
        for p in provenance {
            let _ = writeln!(csv, "# {p}");
        }
        let _ = writeln!(csv, "# object: {}", self.object);
        let _ = writeln!(csv, "# profile: {}", self.profile);
        let _ = writeln!(csv, "# seed: {}", self.seed);
        let _ = writeln!(csv, "# status: {}", self.status.as_str());
        let _ = writeln!(csv, "# note: {}", self.note);
        let _ = writeln!(csv, "# features: {bin_name}");
        let _ = writeln!(csv, "{}", Frame::FIELDS.join(","));
        let mut bin = Vec::with_capacity(self.frames.len() * (POOLED_LEN + Frame::FIELDS.len()) * 8);
        for (f, p) in self.frames.iter().zip(&self.pooled) {
            let vals = f.values();
            let row: Vec<String> = vals.iter().map(|&v| sig9(v)).collect();
            let _ = writeln!(csv, "{}", row.join(","));
            for v in p.iter().chain(&vals) {
                bin.extend_from_slice(&v.to_le_bytes());
            }
        }
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, csv)?;
        std::fs::write(dir.join(bin_name), bin)?;
        Ok(csv_path)
    }

    pub fn load(csv_path: &Path) -> Result<Trajectory> {
        let text = std::fs::read_to_string(csv_path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::DatasetNotFound(csv_path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let bad = |m: String| Error::Dataset(format!("{}: {m}", csv_path.display()));
        let mut meta = std::collections::BTreeMap::new();
        let mut rows = 0usize;
        let mut header_seen = false;
        for line in text.lines() {
            if let Some(c) = line.strip_prefix("# ") {
                if let Some((k, v)) = c.split_once(": ") {
                    meta.insert(k.to_string(), v.to_string());
                }
            } else if !header_seen {
                if line != Frame::FIELDS.join(",") {
                    return Err(bad("unexpected column header".into()));
                }
                header_seen = true;
            } else if !line.is_empty() {
                rows += 1;
            }
        }
        let get = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing header {k:?}")));
        let status = match get("status")?.as_str() {
            "complete" => RolloutStatus::Complete,
            "failed" => RolloutStatus::Failed,
            s => return Err(bad(format!("bad status {s:?}"))),
        };
        let seed = get("seed")?.parse().map_err(|e| bad(format!("seed: {e}")))?;
        let bin_path = csv_path.with_file_name(get("features")?);
        let bytes = std::fs::read(&bin_path).map_err(|e| bad(format!("{}: {e}", bin_path.display())))?;
        let width = POOLED_LEN + Frame::FIELDS.len();
        if bytes.len() != rows * width * 8 {
            return Err(bad(format!("binary has {} bytes, expected {}", bytes.len(), rows * width * 8)));
        }
        let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let mut frames = Vec::with_capacity(rows);
        let mut pooled = Vec::with_capacity(rows);
        for row in values.chunks_exact(width) {
            pooled.push(row[..POOLED_LEN].to_vec());
            frames.push(Frame::from_values(&row[POOLED_LEN..]));
        }
        Ok(Trajectory {
            object: get("object")?,
            profile: get("profile")?,
            seed,
            status,
            note: meta.get("note").cloned().unwrap_or_default(),
            frames,
            pooled,
        })
    }
}
