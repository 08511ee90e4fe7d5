use serde::{Deserialize, Serialize};

use super::field::{query_batched, OccupancyField};
use super::grid::{lattice_point, OccupancyGrid};
use crate::error::{Error, Result};

/// Multiresolution refinement settings.
///
/// `r0` counts cells per axis of the coarse lattice (so `r0 + 1` points);
/// each of the `steps` refinements halves the cell size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiseConfig {
    pub r0: usize,
    pub steps: u32,
    pub tau: f64,
}

impl Default for MiseConfig {
    fn default() -> Self {
        Self {
            r0: 32,
            steps: 2,
            tau: 0.5,
        }
    }
}

impl MiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r0 < 4 || !self.r0.is_power_of_two() {
            return Err(Error::invalid(format!("r0 must be a power of two >= 4, got {}", self.r0)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid("tau must be in (0,1)"));
        }
        if self.final_cells() > 4096 {
            return Err(Error::invalid("final resolution above 4096 cells per axis"));
        }
        Ok(())
    }

    /// Cells per axis after all refinements.
    pub fn final_cells(&self) -> usize {
        self.r0 << self.steps
    }
}

const UNKNOWN: u8 = 0;
const EXACT: u8 = 1;
const FILLED: u8 = 2;

struct Lattice<'a, F: ?Sized> {
    field: &'a F,
    threads: usize,
    n: usize,
    values: Vec<f64>,
    state: Vec<u8>,
}

impl<F: OccupancyField + ?Sized> Lattice<'_, F> {
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    fn evaluate(&mut self, mut indices: Vec<usize>) {
        indices.sort_unstable();
        indices.dedup();
        indices.retain(|&ix| self.state[ix] != EXACT);
        if indices.is_empty() {
            return;
        }
        let bounds = self.field.bounds();
        let cells = self.n - 1;
        let points: Vec<_> = indices
            .iter()
            .map(|&ix| {
                let (i, rest) = (ix / (self.n * self.n), ix % (self.n * self.n));
                lattice_point(&bounds, cells, i, rest / self.n, rest % self.n)
            })
            .collect();
        let vals = query_batched(self.field, &points, self.threads);
        for (ix, v) in indices.into_iter().zip(vals) {
            self.values[ix] = v;
            self.state[ix] = EXACT;
        }
    }

    /// Indices of the 8 corners of the cell with origin `(i, j, k)` and size `s`.
    fn corners(&self, i: usize, j: usize, k: usize, s: usize) -> [usize; 8] {
        let mut out = [0; 8];
        for (c, slot) in out.iter_mut().enumerate() {
            let (di, dj, dk) = (c >> 2 & 1, c >> 1 & 1, c & 1);
            *slot = self.idx(i + di * s, j + dj * s, k + dk * s);
        }
        out
    }

    fn all_exact(&self, corners: &[usize; 8]) -> bool {
        corners.iter().all(|&c| self.state[c] == EXACT)
    }

    fn mixed(&self, corners: &[usize; 8], tau: f64) -> bool {
        let first = self.values[corners[0]] > tau;
        corners.iter().any(|&c| (self.values[c] > tau) != first)
    }
}

/// Extracts a final-resolution grid, evaluating the field only near the
/// `tau` level set. Points never evaluated receive trilinear values from the
/// smallest fully evaluated enclosing cell, which keeps them on the same side
/// of `tau` as that cell's corners.
pub fn mise_extract<F: OccupancyField + ?Sized>(field: &F, cfg: &MiseConfig) -> Result<OccupancyGrid> {
    mise_extract_threaded(field, cfg, 1)
}

pub fn mise_extract_threaded<F: OccupancyField + ?Sized>(
    field: &F,
    cfg: &MiseConfig,
    threads: usize,
) -> Result<OccupancyGrid> {
    cfg.validate()?;
    let cells = cfg.final_cells();
    let n = cells + 1;
    let mut lat = Lattice {
        field,
        threads,
        n,
        values: vec![0.0; n * n * n],
        state: vec![UNKNOWN; n * n * n],
    };

    let coarse_step = 1usize << cfg.steps;
    let mut seed = Vec::with_capacity((cfg.r0 + 1).pow(3));
    for i in (0..n).step_by(coarse_step) {
        for j in (0..n).step_by(coarse_step) {
            for k in (0..n).step_by(coarse_step) {
                seed.push(lat.idx(i, j, k));
            }
        }
    }
    lat.evaluate(seed);

    for level in 0..cfg.steps {
        let s = coarse_step >> level;
        let level_cells = cells / s;
        let cell_index = |a: usize, b: usize, c: usize| (a * level_cells + b) * level_cells + c;
        let mut mixed = vec![false; level_cells.pow(3)];
        for a in 0..level_cells {
            for b in 0..level_cells {
                for c in 0..level_cells {
                    let corners = lat.corners(a * s, b * s, c * s, s);
                    if lat.all_exact(&corners) && lat.mixed(&corners, cfg.tau) {
                        mixed[cell_index(a, b, c)] = true;
                    }
                }
            }
        }
        let mut active = mixed.clone();
        for a in 0..level_cells {
            for b in 0..level_cells {
                for c in 0..level_cells {
                    if !mixed[cell_index(a, b, c)] {
                        continue;
                    }
                    for na in a.saturating_sub(1)..=(a + 1).min(level_cells - 1) {
                        for nb in b.saturating_sub(1)..=(b + 1).min(level_cells - 1) {
                            for nc in c.saturating_sub(1)..=(c + 1).min(level_cells - 1) {
                                active[cell_index(na, nb, nc)] = true;
                            }
                        }
                    }
                }
            }
        }
        let half = s / 2;
        let mut wave = Vec::new();
        for a in 0..level_cells {
            for b in 0..level_cells {
                for c in 0..level_cells {
                    if !active[cell_index(a, b, c)] {
                        continue;
                    }
                    for di in 0..=2 {
                        for dj in 0..=2 {
                            for dk in 0..=2 {
                                wave.push(lat.idx(a * s + di * half, b * s + dj * half, c * s + dk * half));
                            }
                        }
                    }
                }
            }
        }
        lat.evaluate(wave);
    }

    fill_unknown(&mut lat, coarse_step);

    // Any final cell straddling tau must carry exact values at all corners.
    loop {
        let mut wave = Vec::new();
        for i in 0..cells {
            for j in 0..cells {
                for k in 0..cells {
                    let corners = lat.corners(i, j, k, 1);
                    if !lat.all_exact(&corners) && lat.mixed(&corners, cfg.tau) {
                        wave.extend(corners.iter().copied().filter(|&c| lat.state[c] != EXACT));
                    }
                }
            }
        }
        if wave.is_empty() {
            break;
        }
        lat.evaluate(wave);
    }

    OccupancyGrid::new(n, field.bounds(), lat.values)
}

/// Trilinear fill of non-exact points, coarse cells first so finer fully
/// evaluated cells overwrite their interiors.
fn fill_unknown<F: OccupancyField + ?Sized>(lat: &mut Lattice<'_, F>, coarse_step: usize) {
    let cells = lat.n - 1;
    let mut s = coarse_step;
    while s >= 2 {
        let level_cells = cells / s;
        for a in 0..level_cells {
            for b in 0..level_cells {
                for c in 0..level_cells {
                    let (i0, j0, k0) = (a * s, b * s, c * s);
                    let corners = lat.corners(i0, j0, k0, s);
                    if !lat.all_exact(&corners) {
                        continue;
                    }
                    let cv = corners.map(|ix| lat.values[ix]);
                    for di in 0..=s {
                        for dj in 0..=s {
                            for dk in 0..=s {
                                let ix = lat.idx(i0 + di, j0 + dj, k0 + dk);
                                if lat.state[ix] == EXACT {
                                    continue;
                                }
                                let (u, v, w) = (di as f64 / s as f64, dj as f64 / s as f64, dk as f64 / s as f64);
                                let x00 = cv[0] * (1.0 - w) + cv[1] * w;
                                let x01 = cv[2] * (1.0 - w) + cv[3] * w;
                                let x10 = cv[4] * (1.0 - w) + cv[5] * w;
                                let x11 = cv[6] * (1.0 - w) + cv[7] * w;
                                let y0 = x00 * (1.0 - v) + x01 * v;
                                let y1 = x10 * (1.0 - v) + x11 * v;
                                lat.values[ix] = (y0 * (1.0 - u) + y1 * u).clamp(0.0, 1.0);
                                lat.state[ix] = FILLED;
                            }
                        }
                    }
                }
            }
        }
        s /= 2;
    }
}
