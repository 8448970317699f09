//! Backward bilinear warping, forward energy splatting and the occlusion map
//! derived from the splatted energy.
//!
//! Pixel centers sit at integer coordinates. A backward flow `f` on the target
//! grid produces `out(i, j) = src(i + v, j + u)`; a forward flow on the source
//! grid moves each source pixel to `(i + v, j + u)` in the target, where its
//! unit of energy is split among the four surrounding pixels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::flow::{FlowDirection, FlowField};
use crate::frame::Frame;

/// How out-of-bounds reads are resolved by the bilinear sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderMode {
    /// Replicate the nearest edge sample.
    #[default]
    Clamp,
    /// Out-of-bounds taps read zero.
    Zero,
}

#[inline]
fn tap(frame: &Frame, i: isize, j: isize, c: usize, border: BorderMode) -> f64 {
    let (h, w) = (frame.height() as isize, frame.width() as isize);
    match border {
        BorderMode::Clamp => frame.get(i.clamp(0, h - 1) as usize, j.clamp(0, w - 1) as usize, c),
        BorderMode::Zero => {
            if i < 0 || j < 0 || i >= h || j >= w {
                0.0
            } else {
                frame.get(i as usize, j as usize, c)
            }
        }
    }
}

/// Bilinear sample of channel `c` at row `y`, column `x`.
#[inline]
pub fn sample_bilinear(frame: &Frame, y: f64, x: f64, c: usize, border: BorderMode) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (j, i) = (x0 as isize, y0 as isize);
    let mut acc = tap(frame, i, j, c, border) * (1.0 - fx) * (1.0 - fy);
    if fx != 0.0 {
        acc += tap(frame, i, j + 1, c, border) * fx * (1.0 - fy);
    }
    if fy != 0.0 {
        acc += tap(frame, i + 1, j, c, border) * (1.0 - fx) * fy;
        if fx != 0.0 {
            acc += tap(frame, i + 1, j + 1, c, border) * fx * fy;
        }
    }
    acc
}

/// Bilinear sample together with its partial derivatives `(∂/∂x, ∂/∂y)`
/// under clamped borders. The derivative is that of the piecewise-bilinear
/// interpolant, so it is exact away from integer coordinates.
#[inline]
pub fn sample_bilinear_grad(frame: &Frame, y: f64, x: f64, c: usize) -> (f64, f64, f64) {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (j, i) = (x0 as isize, y0 as isize);
    let b = BorderMode::Clamp;
    let v00 = tap(frame, i, j, c, b);
    let v01 = tap(frame, i, j + 1, c, b);
    let v10 = tap(frame, i + 1, j, c, b);
    let v11 = tap(frame, i + 1, j + 1, c, b);
    let (h, w) = (frame.height() as f64, frame.width() as f64);
    let value = v00 * (1.0 - fx) * (1.0 - fy)
        + v01 * fx * (1.0 - fy)
        + v10 * (1.0 - fx) * fy
        + v11 * fx * fy;
    // Outside the sample range the clamped interpolant is flat along that axis.
    let dx = if x < 0.0 || x > w - 1.0 {
        0.0
    } else {
        (v01 - v00) * (1.0 - fy) + (v11 - v10) * fy
    };
    let dy = if y < 0.0 || y > h - 1.0 {
        0.0
    } else {
        (v10 - v00) * (1.0 - fx) + (v11 - v01) * fx
    };
    (value, dx, dy)
}

/// Resamples `src` along a backward flow: `out(i,j) = src(i + v(i,j), j + u(i,j))`.
pub fn backward_warp(src: &Frame, flow: &FlowField, border: BorderMode) -> Result<Frame> {
    flow.expect_direction(FlowDirection::Backward)?;
    flow.check_dims(src.height(), src.width(), "backward_warp")?;
    let (h, w, ch) = (src.height(), src.width(), src.channels());
    let mut data = Vec::with_capacity(h * w * ch);
    for i in 0..h {
        for j in 0..w {
            let [u, v] = flow.get(i, j);
            let (y, x) = (i as f64 + v, j as f64 + u);
            for c in 0..ch {
                data.push(sample_bilinear(src, y, x, c, border));
            }
        }
    }
    Frame::unbounded(h, w, ch, data)
}

/// Accumulated splat density on the target grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyMap {
    height: usize,
    width: usize,
    density: Vec<f64>,
}

impl EnergyMap {
    pub fn new(height: usize, width: usize, density: Vec<f64>) -> Result<Self> {
        if density.len() != height * width {
            return Err(shape(format!(
                "energy has {} values, expected {height}*{width}",
                density.len()
            )));
        }
        if density.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("energy must be finite and non-negative"));
        }
        Ok(Self {
            height,
            width,
            density,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.density[i * self.width + j]
    }

    pub fn total(&self) -> f64 {
        self.density.iter().sum()
    }

    /// Single-channel frame view (values not clamped).
    pub fn to_frame(&self) -> Frame {
        Frame::unbounded(self.height, self.width, 1, self.density.clone()).expect("finite")
    }
}

/// Binary confidence gate: 1 where motion propagation is trusted, 0 where the
/// target is occluded or disoccluded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OcclusionMap {
    height: usize,
    width: usize,
    mask: Vec<u8>,
}

impl OcclusionMap {
    pub fn new(height: usize, width: usize, mask: Vec<u8>) -> Result<Self> {
        if mask.len() != height * width {
            return Err(shape(format!(
                "mask has {} values, expected {height}*{width}",
                mask.len()
            )));
        }
        if mask.iter().any(|&m| m > 1) {
            return Err(invalid("mask values must be 0 or 1"));
        }
        Ok(Self {
            height,
            width,
            mask,
        })
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            mask: vec![1; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            mask: vec![0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                mask.push(f(i, j) as u8);
            }
        }
        Self {
            height,
            width,
            mask,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[u8] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.mask[i * self.width + j]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.get(i, j) == 1
    }

    pub fn count_valid(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }

    pub fn count_occluded(&self) -> usize {
        self.mask.len() - self.count_valid()
    }

    pub fn occluded_fraction(&self) -> f64 {
        self.count_occluded() as f64 / self.mask.len() as f64
    }

    /// Swaps the 0 and 1 classes.
    pub fn inverted(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            mask: self.mask.iter().map(|m| 1 - m).collect(),
        }
    }

    pub fn to_frame(&self) -> Frame {
        Frame::unbounded(
            self.height,
            self.width,
            1,
            self.mask.iter().map(|&m| m as f64).collect(),
        )
        .expect("finite")
    }

    pub(crate) fn check_dims(&self, h: usize, w: usize, what: &str) -> Result<()> {
        if self.dims() == (h, w) {
            Ok(())
        } else {
            Err(shape(format!(
                "{what}: mask is {}x{}, expected {h}x{w}",
                self.height, self.width
            )))
        }
    }
}

/// Splats one unit of energy per source pixel along a forward flow.
///
/// Each source pixel `(i, j)` lands at `(i + v, j + u)` and its unit is split
/// bilinearly among the four integer neighbours. Corners outside the grid are
/// dropped, not renormalized. Sources are visited in row-major order.
pub fn splat_energy(flow: &FlowField) -> Result<EnergyMap> {
    flow.expect_direction(FlowDirection::Forward)?;
    let (h, w) = flow.dims();
    let mut density = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let [u, v] = flow.get(i, j);
            let (y, x) = (i as f64 + v, j as f64 + u);
            let (y0, x0) = (y.floor(), x.floor());
            let (fy, fx) = (y - y0, x - x0);
            let (ti, tj) = (y0 as isize, x0 as isize);
            let corners = [
                (ti, tj, (1.0 - fy) * (1.0 - fx)),
                (ti, tj + 1, (1.0 - fy) * fx),
                (ti + 1, tj, fy * (1.0 - fx)),
                (ti + 1, tj + 1, fy * fx),
            ];
            for (ci, cj, wgt) in corners {
                if wgt == 0.0 || ci < 0 || cj < 0 || ci >= h as isize || cj >= w as isize {
                    continue;
                }
                density[ci as usize * w + cj as usize] += wgt;
            }
        }
    }
    EnergyMap::new(h, w, density)
}

/// Default band edges and guard for [`occlusion_from_energy`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyThresholds {
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
}

impl Default for EnergyThresholds {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 2.0,
            eps: 1e-6,
        }
    }
}

/// `mask = 1` iff `lo + eps < E < hi − eps`: zero energy means nothing moved
/// there (disoccluded), energy of two or more means competing sources
/// (occluded).
pub fn occlusion_from_energy(energy: &EnergyMap, t: EnergyThresholds) -> Result<OcclusionMap> {
    if !(t.lo < t.hi) {
        return Err(invalid(format!("occlusion band lo={} must be < hi={}", t.lo, t.hi)));
    }
    let (lo, hi) = (t.lo + t.eps, t.hi - t.eps);
    let mask = energy
        .density
        .iter()
        .map(|&e| (lo < e && e < hi) as u8)
        .collect();
    OcclusionMap::new(energy.height, energy.width, mask)
}

/// Splat then threshold with the default band; returns both intermediates.
pub fn occlusion_pipeline(flow_fwd: &FlowField) -> Result<(EnergyMap, OcclusionMap)> {
    let energy = splat_energy(flow_fwd)?;
    let mask = occlusion_from_energy(&energy, EnergyThresholds::default())?;
    Ok((energy, mask))
}
