//! Occlusion-gated completion.
//!
//! [`partial_conv`] is the masked, renormalized convolution used by learned
//! inpainters; it is exposed as a standalone primitive. [`pullpush_inpaint`]
//! is the deterministic generator used at runtime, and [`compose`] is the gate
//! that merges warped and generated pixels.

use crate::error::{invalid, shape, Result};
use crate::frame::{resize_bilinear, FeatureMap, Frame};
use crate::warp::OcclusionMap;

/// Weights of a `k×k` convolution from `c_in` to `c_out` channels.
///
/// `weights[((ky·k + kx)·c_in + ci)·c_out + co]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialConvLayer {
    k: usize,
    c_in: usize,
    c_out: usize,
    stride: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl PartialConvLayer {
    pub fn new(
        k: usize,
        c_in: usize,
        c_out: usize,
        stride: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if k % 2 == 0 {
            return Err(invalid(format!("partial convolution needs an odd kernel, got {k}")));
        }
        if c_in == 0 || c_out == 0 || stride == 0 {
            return Err(invalid("channel counts and stride must be non-zero"));
        }
        if weights.len() != k * k * c_in * c_out || bias.len() != c_out {
            return Err(shape(format!(
                "expected {} weights and {c_out} biases, got {} and {}",
                k * k * c_in * c_out,
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite convolution weights"));
        }
        Ok(Self {
            k,
            c_in,
            c_out,
            stride,
            weights,
            bias,
        })
    }

    pub fn kernel_size(&self) -> usize {
        self.k
    }

    pub fn in_channels(&self) -> usize {
        self.c_in
    }

    pub fn out_channels(&self) -> usize {
        self.c_out
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// `K = k·k·c_in`, the number of inputs in one window.
    pub fn window_size(&self) -> usize {
        self.k * self.k * self.c_in
    }

    #[inline]
    pub fn weight(&self, ky: usize, kx: usize, ci: usize, co: usize) -> f64 {
        self.weights[((ky * self.k + kx) * self.c_in + ci) * self.c_out + co]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (h.div_ceil(self.stride), w.div_ceil(self.stride))
    }
}

/// Masked convolution with window renormalization.
///
/// For the window centered at `(i·s, j·s)`: with `Σm` the number of valid
/// inputs in the window (out-of-bounds taps count as invalid),
/// `out = (Σ W·x·m)·(K/Σm) + b` when `Σm > 0`, else `out = 0`. The updated
/// mask is 1 exactly where `Σm > 0`.
pub fn partial_conv(
    x: &FeatureMap,
    mask: &OcclusionMap,
    layer: &PartialConvLayer,
) -> Result<(FeatureMap, OcclusionMap)> {
    if x.channels() != layer.c_in {
        return Err(shape(format!(
            "input has {} channels, layer expects {}",
            x.channels(),
            layer.c_in
        )));
    }
    mask.check_dims(x.height(), x.width(), "partial_conv")?;
    let (h, w) = x.dims();
    let (oh, ow) = layer.out_dims(h, w);
    let r = (layer.k / 2) as isize;
    let mut out = vec![0.0; oh * ow * layer.c_out];
    let mut out_mask = vec![0u8; oh * ow];
    let mut acc = vec![0.0; layer.c_out];
    for oi in 0..oh {
        for oj in 0..ow {
            let (ci0, cj0) = ((oi * layer.stride) as isize, (oj * layer.stride) as isize);
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut valid = 0usize;
            for ky in 0..layer.k {
                let ii = ci0 + ky as isize - r;
                if ii < 0 || ii >= h as isize {
                    continue;
                }
                for kx in 0..layer.k {
                    let jj = cj0 + kx as isize - r;
                    if jj < 0 || jj >= w as isize || !mask.is_valid(ii as usize, jj as usize) {
                        continue;
                    }
                    valid += 1;
                    let px = x.pixel(ii as usize, jj as usize);
                    for (ci, &v) in px.iter().enumerate() {
                        for (co, a) in acc.iter_mut().enumerate() {
                            *a += layer.weight(ky, kx, ci, co) * v;
                        }
                    }
                }
            }
            if valid == 0 {
                continue;
            }
            let ratio = (layer.k * layer.k) as f64 / valid as f64;
            let base = (oi * ow + oj) * layer.c_out;
            for co in 0..layer.c_out {
                out[base + co] = acc[co] * ratio + layer.bias[co];
            }
            out_mask[oi * ow + oj] = 1;
        }
    }
    Ok((
        Frame::unbounded(oh, ow, layer.c_out, out)?,
        OcclusionMap::new(oh, ow, out_mask)?,
    ))
}

/// One pull level: premultiplied color sums and coverage, both box-averaged.
struct PullLevel {
    h: usize,
    w: usize,
    color: Vec<f64>,
    weight: Vec<f64>,
}

impl PullLevel {
    fn has_holes(&self) -> bool {
        self.weight.iter().any(|&w| w == 0.0)
    }

    fn reduce(&self, ch: usize) -> PullLevel {
        let (nh, nw) = (self.h.div_ceil(2), self.w.div_ceil(2));
        let mut color = vec![0.0; nh * nw * ch];
        let mut weight = vec![0.0; nh * nw];
        for i in 0..nh {
            for j in 0..nw {
                let mut n = 0.0;
                let k = i * nw + j;
                for ii in (2 * i)..(2 * i + 2).min(self.h) {
                    for jj in (2 * j)..(2 * j + 2).min(self.w) {
                        let s = ii * self.w + jj;
                        n += 1.0;
                        weight[k] += self.weight[s];
                        for c in 0..ch {
                            color[k * ch + c] += self.color[s * ch + c];
                        }
                    }
                }
                weight[k] /= n;
                for c in 0..ch {
                    color[k * ch + c] /= n;
                }
            }
        }
        PullLevel {
            h: nh,
            w: nw,
            color,
            weight,
        }
    }
}

/// Pull–push hole filling.
///
/// Pull: `(frame·mask, mask)` is repeatedly box-downsampled by 2 until no
/// level pixel has zero coverage. Push: from the coarsest level down, each
/// pixel with coverage keeps its normalized average and each pixel without
/// takes the bilinearly upsampled value of the level below. Valid input
/// pixels are returned untouched; the output is clamped to `[0, 1]`.
pub fn pullpush_inpaint(frame: &Frame, mask: &OcclusionMap) -> Result<Frame> {
    mask.check_dims(frame.height(), frame.width(), "pullpush_inpaint")?;
    if mask.count_occluded() == 0 {
        return Ok(frame.clone());
    }
    let valid = mask.count_valid();
    if valid == 0 {
        return Err(invalid("pull-push needs at least one valid pixel"));
    }
    let ch = frame.channels();
    let (h, w) = frame.dims();
    let weight: Vec<f64> = mask.values().iter().map(|&m| m as f64).collect();
    let color: Vec<f64> = frame
        .data()
        .iter()
        .enumerate()
        .map(|(k, &v)| v * weight[k / ch])
        .collect();
    let mut levels = vec![PullLevel {
        h,
        w,
        color,
        weight,
    }];
    while levels.last().unwrap().has_holes() && (levels.last().unwrap().h, levels.last().unwrap().w) != (1, 1) {
        let next = levels.last().unwrap().reduce(ch);
        levels.push(next);
    }

    let global_mean: Vec<f64> = (0..ch)
        .map(|c| {
            mask.values()
                .iter()
                .enumerate()
                .filter(|(_, &m)| m == 1)
                .map(|(k, _)| frame.data()[k * ch + c])
                .sum::<f64>()
                / valid as f64
        })
        .collect();

    let normalize = |lvl: &PullLevel, below: Option<&Frame>| -> Frame {
        let mut data = Vec::with_capacity(lvl.h * lvl.w * ch);
        for k in 0..lvl.h * lvl.w {
            for c in 0..ch {
                data.push(if lvl.weight[k] > 0.0 {
                    lvl.color[k * ch + c] / lvl.weight[k]
                } else if let Some(b) = below {
                    b.data()[k * ch + c]
                } else {
                    global_mean[c]
                });
            }
        }
        Frame::unbounded(lvl.h, lvl.w, ch, data).expect("finite")
    };

    let mut filled = normalize(levels.last().unwrap(), None);
    for lvl in levels.iter().rev().skip(1) {
        let up = resize_bilinear(&filled, lvl.h, lvl.w)?;
        filled = normalize(lvl, Some(&up));
    }
    let mut data = filled.into_data();
    for (k, &m) in mask.values().iter().enumerate() {
        for c in 0..ch {
            let idx = k * ch + c;
            data[idx] = if m == 1 {
                frame.data()[idx]
            } else {
                data[idx].clamp(0.0, 1.0)
            };
        }
    }
    Frame::unbounded(h, w, ch, data)
}

/// `x̂ = warped⊙m + inpainted⊙(1 − m)`.
pub fn compose(warped: &Frame, inpainted: &Frame, mask: &OcclusionMap) -> Result<Frame> {
    warped.check_same_shape(inpainted, "compose")?;
    mask.check_dims(warped.height(), warped.width(), "compose")?;
    let ch = warped.channels();
    let data = warped
        .data()
        .iter()
        .zip(inpainted.data())
        .enumerate()
        .map(|(k, (&a, &b))| if mask.values()[k / ch] == 1 { a } else { b })
        .collect();
    Frame::unbounded(warped.height(), warped.width(), ch, data)
}
