//! Synthetic tactile depth maps.
//!
//! Columns follow the belt direction in the sensor (world) frame; rows span
//! the object's extrusion thickness. A pixel inside the contact support holds
//! the column's penetration depth clamped to `d_max`, plus optional seeded
//! Gaussian noise; pixels outside the support are exactly zero.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

use super::contact::Side;
use super::{WorldConfig, WorldState};

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// mm per pixel.
    pub pitch: f64,
    /// Row-major, `height` rows of `width` depths in mm.
    pub values: Vec<f64>,
}

impl DepthMap {
    pub fn zeros(width: usize, height: usize, pitch: f64) -> Self {
        DepthMap { width, height, pitch, values: vec![0.0; width * height] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.width + col] = v;
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Rows covered by the extruded object, centred on the map.
pub fn support_rows(cfg: &WorldConfig) -> std::ops::Range<usize> {
    let half = 0.5 * cfg.object_thickness;
    let rows: Vec<usize> = (0..cfg.map_height)
        .filter(|&i| ((i as f64 + 0.5 - cfg.map_height as f64 / 2.0) * cfg.pixel_pitch).abs() <= half)
        .collect();
    match (rows.first(), rows.last()) {
        (Some(&a), Some(&b)) => a..b + 1,
        _ => 0..0,
    }
}

fn noise_seed(seed: u64, step: u64, side: Side) -> u64 {
    let mut z = seed
        ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ match side {
            Side::Left => 0x243F_6A88_85A3_08D3,
            Side::Right => 0x1319_8A2E_0370_7344,
        };
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Renders one belt's depth map. Noise is seeded by `(cfg.seed, step, side)`.
pub fn render_depth(state: &WorldState, side: Side, cfg: &WorldConfig) -> DepthMap {
    let env = state.envelope(cfg);
    let mut map = DepthMap::zeros(cfg.map_width, cfg.map_height, cfg.pixel_pitch);
    let rows = support_rows(cfg);
    let mut noise = (cfg.noise_sigma > 0.0).then(|| {
        let rng = ChaCha8Rng::seed_from_u64(noise_seed(cfg.seed, state.step_count, side));
        (rng, Normal::new(0.0, cfg.noise_sigma).expect("validated sigma"))
    });
    for j in 0..cfg.map_width {
        let d = env.depth(side, j, state.pose.y, state.gap);
        if d <= 0.0 {
            continue;
        }
        let base = d.min(cfg.d_max);
        for i in rows.clone() {
            let v = match &mut noise {
                Some((rng, normal)) => (base + normal.sample(rng)).clamp(0.0, cfg.d_max),
                None => base,
            };
            map.set(i, j, v);
        }
    }
    map
}

/// Writes a binary 16-bit PGM with depths in micrometres. `comment` lines are
/// embedded as `#` header comments.
pub fn write_pgm(map: &DepthMap, path: &Path, comment: &[String]) -> Result<()> {
    let mut out = Vec::with_capacity(64 + 2 * map.values.len());
    writeln!(out, "P5")?;
    for c in comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{} {}", map.width, map.height)?;
    writeln!(out, "65535")?;
    for &v in &map.values {
        let um = (v * 1000.0).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&um.to_be_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}
