//! Windowed structural similarity with a truncated Gaussian window.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frame::Frame;

/// Dynamic range of the samples.
const DYNAMIC_RANGE: f64 = 1.0;
pub const SSIM_C1: f64 = (0.01 * DYNAMIC_RANGE) * (0.01 * DYNAMIC_RANGE);
pub const SSIM_C2: f64 = (0.03 * DYNAMIC_RANGE) * (0.03 * DYNAMIC_RANGE);

/// Square Gaussian window. Images smaller than the window use the largest
/// centered sub-window that fits, renormalized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimWindow {
    pub size: usize,
    pub sigma: f64,
}

impl Default for SsimWindow {
    fn default() -> Self {
        Self {
            size: 11,
            sigma: 1.5,
        }
    }
}

impl SsimWindow {
    /// Radius actually used for an `h×w` image.
    pub fn effective_radius(&self, h: usize, w: usize) -> usize {
        let r = self.size.saturating_sub(1) / 2;
        r.min((h.min(w) - 1) / 2)
    }

    /// Normalized 1-D taps of the given radius.
    pub fn kernel(&self, radius: usize) -> Vec<f64> {
        let r = radius as isize;
        let taps: Vec<f64> = (-r..=r)
            .map(|k| (-((k * k) as f64) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SsimResult {
    /// Mean of the SSIM map.
    pub mean: f64,
    /// Per-channel SSIM at every valid window center,
    /// `(h − 2r) × (w − 2r) × channels`.
    pub map: Frame,
}

/// Separable weighted sum over valid window centers for one channel.
fn filter_valid(plane: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = kernel.len() / 2;
    let (oh, ow) = (h - 2 * r, w - 2 * r);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            let mut acc = 0.0;
            for (k, &t) in kernel.iter().enumerate() {
                acc += t * plane[i * w + j + k];
            }
            rows[i * ow + j] = acc;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            let mut acc = 0.0;
            for (k, &t) in kernel.iter().enumerate() {
                acc += t * rows[(i + k) * ow + j];
            }
            out[i * ow + j] = acc;
        }
    }
    out
}

/// Structural similarity with `C1 = (0.01 L)²`, `C2 = (0.03 L)²`, `L = 1`.
/// Channels are scored independently and averaged.
pub fn ssim(x: &Frame, y: &Frame, window: SsimWindow) -> Result<SsimResult> {
    x.check_same_shape(y, "ssim")?;
    let (h, w, ch) = (x.height(), x.width(), x.channels());
    let r = window.effective_radius(h, w);
    let kernel = window.kernel(r);
    let (oh, ow) = (h - 2 * r, w - 2 * r);
    let mut map = vec![0.0; oh * ow * ch];
    for c in 0..ch {
        let px: Vec<f64> = x.data().iter().skip(c).step_by(ch).copied().collect();
        let py: Vec<f64> = y.data().iter().skip(c).step_by(ch).copied().collect();
        let xx: Vec<f64> = px.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = py.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a * b).collect();
        let mx = filter_valid(&px, h, w, &kernel);
        let my = filter_valid(&py, h, w, &kernel);
        let mxx = filter_valid(&xx, h, w, &kernel);
        let myy = filter_valid(&yy, h, w, &kernel);
        let mxy = filter_valid(&xy, h, w, &kernel);
        for k in 0..oh * ow {
            let (ux, uy) = (mx[k], my[k]);
            let vx = mxx[k] - ux * ux;
            let vy = myy[k] - uy * uy;
            let cov = mxy[k] - ux * uy;
            let num = (2.0 * (ux * uy) + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2);
            map[k * ch + c] = num / den;
        }
    }
    let mean = map.iter().sum::<f64>() / map.len() as f64;
    Ok(SsimResult {
        mean,
        map: Frame::unbounded(oh, ow, ch, map)?,
    })
}
