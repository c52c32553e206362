//! Fixed-grid average pooling of the two depth maps plus one scalar channel.

use crate::error::{Error, Result};
use crate::world::DepthMap;

pub const POOL_COLS: usize = 16;
pub const POOL_ROWS: usize = 12;
pub const POOLED_PER_MAP: usize = POOL_COLS * POOL_ROWS;
pub const POOLED_LEN: usize = 2 * POOLED_PER_MAP;
pub const FEATURE_LEN: usize = POOLED_LEN + 1;

/// Cell `k` of `cells` covers `[floor(k n / cells), floor((k+1) n / cells))`.
fn bounds(k: usize, n: usize, cells: usize) -> (usize, usize) {
    (k * n / cells, (k + 1) * n / cells)
}

/// Averages `map` onto the 16x12 grid, divided by `d_max`; row-major cells.
pub fn pool(map: &DepthMap, d_max: f64) -> Result<Vec<f64>> {
    if map.width < POOL_COLS || map.height < POOL_ROWS {
        return Err(Error::Dimension(format!(
            "map {}x{} is smaller than the {POOL_COLS}x{POOL_ROWS} pooling grid",
            map.width, map.height
        )));
    }
    let mut out = Vec::with_capacity(POOLED_PER_MAP);
    for r in 0..POOL_ROWS {
        let (r0, r1) = bounds(r, map.height, POOL_ROWS);
        for c in 0..POOL_COLS {
            let (c0, c1) = bounds(c, map.width, POOL_COLS);
            let mut sum = 0.0;
            for i in r0..r1 {
                sum += map.values[i * map.width + c0..i * map.width + c1].iter().sum::<f64>();
            }
            out.push(sum / ((r1 - r0) * (c1 - c0)) as f64 / d_max);
        }
    }
    Ok(out)
}

/// Pooled features of both maps, `[pool(left), pool(right)]`.
pub fn pool_pair(left: &DepthMap, right: &DepthMap, d_max: f64) -> Result<Vec<f64>> {
    if (left.width, left.height) != (right.width, right.height) {
        return Err(Error::Dimension(format!(
            "left map {}x{} vs right map {}x{}",
            left.width, left.height, right.width, right.height
        )));
    }
    let mut out = pool(left, d_max)?;
    out.extend(pool(right, d_max)?);
    Ok(out)
}

/// Full network input from pooled features and the scalar channel.
pub fn with_scalar(pooled: &[f64], omega: f64, omega_max: f64) -> Vec<f64> {
    let mut f = Vec::with_capacity(pooled.len() + 1);
    f.extend_from_slice(pooled);
    f.push(omega / omega_max);
    f
}

/// Pooled features of the x-mirrored maps: each grid row reversed.
pub fn mirror_pooled(pooled: &[f64]) -> Vec<f64> {
    let mut out = pooled.to_vec();
    for row in out.chunks_mut(POOL_COLS) {
        row.reverse();
    }
    out
}

/// Pooled features of the scene turned by half a revolution: the sensors
/// swap sides and each map is mirrored.
pub fn half_turn_pooled(pooled: &[f64]) -> Vec<f64> {
    let m = mirror_pooled(pooled);
    let mut out = Vec::with_capacity(m.len());
    out.extend_from_slice(&m[POOLED_PER_MAP..]);
    out.extend_from_slice(&m[..POOLED_PER_MAP]);
    out
}

/// Network input in the positive-rotation frame. Mirroring the scene in x
/// negates the rotation and leaves the rate ratio unchanged, so a negative
/// rate is presented as the mirrored maps with `|omega|`.
pub fn canonical_input(pooled: &[f64], omega: f64, omega_max: f64) -> Vec<f64> {
    if omega < 0.0 {
        with_scalar(&mirror_pooled(pooled), -omega, omega_max)
    } else {
        with_scalar(pooled, omega, omega_max)
    }
}

/// `[pool(D_L), pool(D_R), omega / omega_max]`, length 385.
pub fn featurize(left: &DepthMap, right: &DepthMap, omega: f64, d_max: f64, omega_max: f64) -> Result<Vec<f64>> {
    Ok(with_scalar(&pool_pair(left, right, d_max)?, omega, omega_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_bounds_cover_the_map() {
        for n in [16usize, 17, 115, 460] {
            let mut next = 0;
            for k in 0..16 {
                let (a, b) = bounds(k, n, 16);
                assert_eq!(a, next);
                assert!(b > a);
                next = b;
            }
            assert_eq!(next, n);
        }
    }

    #[test]
    fn canonical_input_mirrors_negative_rates() {
        let pooled: Vec<f64> = (0..POOLED_LEN).map(|i| i as f64).collect();
        assert_eq!(canonical_input(&pooled, 0.5, 1.0), with_scalar(&pooled, 0.5, 1.0));
        let neg = canonical_input(&pooled, -0.5, 1.0);
        assert_eq!(neg[FEATURE_LEN - 1], 0.5);
        assert_eq!(neg[0], (POOL_COLS - 1) as f64);
        assert_eq!(neg[POOLED_PER_MAP + POOL_COLS], (POOLED_PER_MAP + 2 * POOL_COLS - 1) as f64);
        assert_eq!(mirror_pooled(&mirror_pooled(&pooled)), pooled);
    }
}
