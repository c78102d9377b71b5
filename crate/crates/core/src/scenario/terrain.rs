//! Land/water grids from fractal 2-D Perlin gradient noise.
//!
//! The permutation table is shuffled from the terrain stream; gradients are
//! the eight unit-ish directions of improved Perlin noise. Octaves are
//! summed with amplitude `persistence^o` and frequency `lacunarity^o`,
//! divided by the total amplitude, and mapped from `[-1, 1]` to `[0, 1]`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainParams {
    pub octaves: u32,
    /// Base-octave lattice cells across the longer map side.
    pub frequency: f64,
    pub persistence: f64,
    pub lacunarity: f64,
    /// Cells with noise value at or above this are land.
    pub land_threshold: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        TerrainParams { octaves: 4, frequency: 3.0, persistence: 0.5, lacunarity: 2.0, land_threshold: 0.45 }
    }
}

struct Perlin {
    perm: [u8; 512],
}

impl Perlin {
    fn new(rng: &mut StreamRng) -> Self {
        let mut base: Vec<u8> = (0..=255).collect();
        base.shuffle(rng);
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = base[i & 255];
        }
        Perlin { perm }
    }

    fn fade(t: f64) -> f64 {
        t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
    }

    fn grad(hash: u8, x: f64, y: f64) -> f64 {
        match hash & 7 {
            0 => x + y,
            1 => -x + y,
            2 => x - y,
            3 => -x - y,
            4 => x,
            5 => -x,
            6 => y,
            _ => -y,
        }
    }

    /// Single-octave noise, roughly in `[-1, 1]`.
    fn noise(&self, x: f64, y: f64) -> f64 {
        let xf = x.floor();
        let yf = y.floor();
        let xi = (xf as i64 & 255) as usize;
        let yi = (yf as i64 & 255) as usize;
        let (dx, dy) = (x - xf, y - yf);
        let (u, v) = (Self::fade(dx), Self::fade(dy));
        let p = &self.perm;
        let aa = p[p[xi] as usize + yi];
        let ab = p[p[xi] as usize + yi + 1];
        let ba = p[p[xi + 1] as usize + yi];
        let bb = p[p[xi + 1] as usize + yi + 1];
        let x1 = lerp(u, Self::grad(aa, dx, dy), Self::grad(ba, dx - 1.0, dy));
        let x2 = lerp(u, Self::grad(ab, dx, dy - 1.0), Self::grad(bb, dx - 1.0, dy - 1.0));
        lerp(v, x1, x2)
    }
}

fn lerp(t: f64, a: f64, b: f64) -> f64 {
    a + t * (b - a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub width: u32,
    pub height: u32,
    /// Row-major noise values in `[0, 1]`.
    pub values: Vec<f64>,
    pub land: Vec<bool>,
}

impl Terrain {
    pub fn is_land(&self, x: u32, y: u32) -> bool {
        self.land[(y * self.width + x) as usize]
    }

    pub fn land_count(&self) -> usize {
        self.land.iter().filter(|l| **l).count()
    }

    /// Land cells with `x` in `[x_lo, x_hi)`.
    pub fn land_cells_in(&self, x_lo: u32, x_hi: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in x_lo..x_hi.min(self.width) {
                if self.is_land(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Re-thresholds the same noise field.
    pub fn with_threshold(&self, threshold: f64) -> Terrain {
        Terrain {
            width: self.width,
            height: self.height,
            land: self.values.iter().map(|v| *v >= threshold).collect(),
            values: self.values.clone(),
        }
    }
}

/// Samples the noise field on a `width` x `height` grid (cell centers) and
/// thresholds it. Deterministic in the state of `rng`.
pub fn generate_terrain(width: u32, height: u32, params: &TerrainParams, rng: &mut StreamRng) -> Terrain {
    assert!(width > 0 && height > 0, "map dimensions must be positive");
    let perlin = Perlin::new(rng);
    let scale = f64::from(width.max(height));
    let mut values = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            let nx = (f64::from(x) + 0.5) / scale * params.frequency;
            let ny = (f64::from(y) + 0.5) / scale * params.frequency;
            let (mut sum, mut norm, mut amp, mut freq) = (0.0, 0.0, 1.0, 1.0);
            for _ in 0..params.octaves.max(1) {
                sum += amp * perlin.noise(nx * freq, ny * freq);
                norm += amp;
                amp *= params.persistence;
                freq *= params.lacunarity;
            }
            values.push((0.5 + 0.5 * sum / norm).clamp(0.0, 1.0));
        }
    }
    let land = values.iter().map(|v| *v >= params.land_threshold).collect();
    Terrain { width, height, values, land }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn terrain(threshold: f64, seed: u64) -> Terrain {
        let params = TerrainParams { land_threshold: threshold, ..TerrainParams::default() };
        generate_terrain(64, 40, &params, &mut rng::stream(seed, rng::TERRAIN))
    }

    #[test]
    fn zero_threshold_is_all_land() {
        let t = terrain(0.0, 1);
        assert_eq!(t.land_count(), 64 * 40);
    }

    #[test]
    fn threshold_above_one_is_all_water() {
        let t = terrain(1.0 + 1e-9, 1);
        assert_eq!(t.land_count(), 0);
    }

    #[test]
    fn land_fraction_is_monotone_in_threshold() {
        for seed in 0..5 {
            let high = terrain(0.6, seed).land_count();
            let low = terrain(0.4, seed).land_count();
            assert!(high <= low, "seed {seed}: {high} > {low}");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(terrain(0.5, 9), terrain(0.5, 9));
        assert_ne!(terrain(0.5, 9).values, terrain(0.5, 10).values);
    }

    #[test]
    fn mid_threshold_mixes_land_and_water() {
        let t = terrain(0.5, 3);
        let n = t.land_count();
        assert!(n > 0 && n < 64 * 40, "{n}");
    }
}
