//! Oriented Gabor filter bank and GALF keypoint descriptors.

use serde::{Deserialize, Serialize};

use crate::render::LineImage;

/// Orientations of the bank in degrees; 0° responds to horizontal lines.
pub const ORIENTATIONS: [f64; 4] = [0.0, 45.0, 90.0, 135.0];
/// Descriptor length: 4 orientations × 4×4 cells.
pub const FEATURE_LEN: usize = 64;
/// Cells per window side.
const WINDOW_CELLS: isize = 4;

/// Parameters of the filter bank, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborParams {
    pub wavelength: f64,
    /// Spatial frequency bandwidth in octaves.
    pub bandwidth_octaves: f64,
    pub radius: usize,
}

impl GaborParams {
    /// Wavelength equal to the cell size, one-octave bandwidth, radius of
    /// two cells.
    pub fn for_cell(cell: usize) -> GaborParams {
        GaborParams {
            wavelength: cell as f64,
            bandwidth_octaves: 1.0,
            radius: 2 * cell,
        }
    }

    pub fn sigma(&self) -> f64 {
        let b = 2f64.powf(self.bandwidth_octaves);
        self.wavelength / std::f64::consts::PI * (2f64.ln() / 2.0).sqrt() * (b + 1.0) / (b - 1.0)
    }
}

/// Four real, zero-mean, unit-norm Gabor kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborBank {
    pub params: GaborParams,
    /// Row-major kernels of side `2·radius + 1`.
    pub kernels: Vec<Vec<f64>>,
}

impl GaborBank {
    pub fn new(params: GaborParams) -> GaborBank {
        let r = params.radius as isize;
        let sigma = params.sigma();
        let kernels = ORIENTATIONS
            .iter()
            .map(|deg| {
                // The carrier varies across the line, i.e. along θ + 90°.
                let phi = (deg + 90.0).to_radians();
                let (c, s) = (phi.cos(), -phi.sin());
                let mut env = Vec::new();
                let mut wave = Vec::new();
                for y in -r..=r {
                    for x in -r..=r {
                        let (fx, fy) = (x as f64, y as f64);
                        env.push((-(fx * fx + fy * fy) / (2.0 * sigma * sigma)).exp());
                        wave.push(
                            (2.0 * std::f64::consts::PI * (fx * c + fy * s) / params.wavelength)
                                .cos(),
                        );
                    }
                }
                let offset: f64 = env.iter().zip(&wave).map(|(e, w)| e * w).sum::<f64>()
                    / env.iter().sum::<f64>();
                let mut k: Vec<f64> = env
                    .iter()
                    .zip(&wave)
                    .map(|(e, w)| e * (w - offset))
                    .collect();
                let mean = k.iter().sum::<f64>() / k.len() as f64;
                let norm = k
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    .sqrt();
                for v in &mut k {
                    *v = (*v - mean) / norm;
                }
                k
            })
            .collect();
        GaborBank { params, kernels }
    }

    pub fn side(&self) -> usize {
        2 * self.params.radius + 1
    }
}

/// One keypoint's descriptor: cells in row-major order, four orientations
/// per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointFeature {
    pub values: [f32; FEATURE_LEN],
    pub grid: (u16, u16),
}

impl KeypointFeature {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// GALF layout for a canonical image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalfLayout {
    pub image_size: usize,
    pub grid: usize,
}

impl GalfLayout {
    pub fn cell(&self) -> usize {
        (self.image_size / self.grid).max(1)
    }

    /// Pixel coordinate of keypoint `i` along either axis.
    pub fn keypoint(&self, i: usize) -> usize {
        i * self.cell() + self.cell() / 2
    }
}

/// GALF descriptors at `grid`² keypoints: per cell of a 4×4-cell window
/// around each keypoint, the mean absolute response of each filter.
/// Keypoints whose window holds no ink get the zero vector.
pub fn extract_galf(
    img: &LineImage,
    bank: &GaborBank,
    layout: &GalfLayout,
) -> Vec<KeypointFeature> {
    let c = layout.cell() as isize;
    let g = layout.grid as isize;
    let half = c / 2;
    // Cell m spans [half + m·c, half + (m+1)·c); windows use m in -2..=g+1.
    let m_lo = -WINDOW_CELLS / 2;
    let m_hi = g - 1 + WINDOW_CELLS / 2;
    let cells = (m_hi - m_lo + 1) as usize;
    let origin = half + m_lo * c;
    let span = cells as isize * c;

    // Dense response over the padded cell area, built by scattering kernels
    // from ink pixels. Orientations are interleaved per pixel.
    let r = bank.params.radius as isize;
    let side = bank.side() as isize;
    let kern: Vec<f32> = (0..(side * side) as usize)
        .flat_map(|i| bank.kernels.iter().map(move |k| k[i] as f32))
        .collect();
    let mut resp = vec![0.0f32; 4 * (span * span) as usize];
    let mut ink_cells = vec![0u32; cells * cells];
    for (x, y) in img.ink_pixels() {
        let (x, y) = (x as isize, y as isize);
        let (cx, cy) = ((x - origin).div_euclid(c), (y - origin).div_euclid(c));
        if cx >= 0 && cy >= 0 && (cx as usize) < cells && (cy as usize) < cells {
            ink_cells[cy as usize * cells + cx as usize] += 1;
        }
        let kx0 = (-r).max(origin - x);
        let kx1 = r.min(origin + span - 1 - x);
        if kx0 > kx1 {
            continue;
        }
        let len = ((kx1 - kx0 + 1) * 4) as usize;
        for ky in -r..=r {
            let ty = y + ky - origin;
            if ty < 0 || ty >= span {
                continue;
            }
            let src = (((ky + r) * side + (kx0 + r)) * 4) as usize;
            let dst = ((ty * span + x + kx0 - origin) * 4) as usize;
            for (d, k) in resp[dst..dst + len].iter_mut().zip(&kern[src..src + len]) {
                *d += k;
            }
        }
    }

    // Mean |response| per cell and orientation.
    let area = (c * c) as f64;
    let mut cell_mean = vec![[0.0f64; 4]; cells * cells];
    for ty in 0..span {
        let cy = (ty / c) as usize;
        for tx in 0..span {
            let cx = (tx / c) as usize;
            let ti = ((ty * span + tx) * 4) as usize;
            let slot = &mut cell_mean[cy * cells + cx];
            for (o, s) in slot.iter_mut().enumerate() {
                *s += resp[ti + o].abs() as f64;
            }
        }
    }
    for s in &mut cell_mean {
        for v in s.iter_mut() {
            *v /= area;
        }
    }

    let mut out = Vec::with_capacity((g * g) as usize);
    for ky in 0..g {
        for kx in 0..g {
            let mut f = KeypointFeature {
                values: [0.0; FEATURE_LEN],
                grid: (kx as u16, ky as u16),
            };
            // Window cells m = k-2..=k+1, offset by -m_lo in storage.
            let has_ink = (0..WINDOW_CELLS).any(|j| {
                (0..WINDOW_CELLS)
                    .any(|i| ink_cells[((ky + j) * cells as isize + kx + i) as usize] > 0)
            });
            if has_ink {
                for j in 0..WINDOW_CELLS {
                    for i in 0..WINDOW_CELLS {
                        let s = cell_mean[((ky + j) * cells as isize + kx + i) as usize];
                        let base = ((j * WINDOW_CELLS + i) * 4) as usize;
                        for o in 0..4 {
                            f.values[base + o] = s[o] as f32;
                        }
                    }
                }
            }
            out.push(f);
        }
    }
    out
}
