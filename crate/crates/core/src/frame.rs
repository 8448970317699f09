//! Row-major `H×W×C` image container and the basic image operators shared by
//! every stage: forward-difference gradients, bilinear resize and luma.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};

/// A `height × width × channels` image stored row-major with interleaved
/// channels.
///
/// Frames built with [`Frame::new`] hold samples in `[0, 1]`. Derived
/// quantities that live on the same grid (gradients, differences, SSIM maps,
/// feature maps) are built with [`Frame::unbounded`], which only requires
/// finite samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Feature maps share the frame layout but carry arbitrary channel counts and
/// signed values.
pub type FeatureMap = Frame;

impl Frame {
    /// Builds an intensity frame; every sample must be finite and in `[0, 1]`.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let frame = Self::unbounded(height, width, channels, data)?;
        if let Some(v) = frame.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("frame sample {v} outside [0, 1]")));
        }
        Ok(frame)
    }

    /// Builds a frame-shaped field whose samples only need to be finite.
    pub fn unbounded(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(invalid(format!(
                "frame dimensions must be non-zero, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(shape(format!(
                "data length {} != {height}*{width}*{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("frame contains non-finite samples"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::unbounded(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds a frame by evaluating `f(row, col, channel)` at every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for i in 0..height {
            for j in 0..width {
                for c in 0..channels {
                    data.push(f(i, j, c));
                }
            }
        }
        Self::unbounded(height, width, channels, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.width + j) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        self.data[(i * self.width + j) * self.channels + c] = v;
    }

    /// All channels of pixel `(i, j)`.
    #[inline]
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.width + j) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &Frame, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(shape(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    /// Returns a copy with every sample clamped to `[0, 1]`.
    pub fn clamped(&self) -> Frame {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Frame> {
        Frame::unbounded(
            self.height,
            self.width,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Luma conversion with Rec. 601 weights; single-channel frames are
    /// returned unchanged.
    pub fn to_gray(&self) -> Frame {
        match self.channels {
            1 => self.clone(),
            3 => {
                let data = self
                    .data
                    .chunks_exact(3)
                    .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
                    .collect();
                Frame {
                    height: self.height,
                    width: self.width,
                    channels: 1,
                    data,
                }
            }
            c => {
                let data = self
                    .data
                    .chunks_exact(c)
                    .map(|p| p.iter().sum::<f64>() / c as f64)
                    .collect();
                Frame {
                    height: self.height,
                    width: self.width,
                    channels: 1,
                    data,
                }
            }
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Forward differences `gx(i,j) = x(i,j+1) − x(i,j)` and
/// `gy(i,j) = x(i+1,j) − x(i,j)`, zero on the trailing column/row.
pub fn image_gradient(frame: &Frame) -> (Frame, Frame) {
    let (h, w, c) = (frame.height, frame.width, frame.channels);
    let mut gx = vec![0.0; frame.data.len()];
    let mut gy = vec![0.0; frame.data.len()];
    for i in 0..h {
        for j in 0..w {
            for k in 0..c {
                let idx = (i * w + j) * c + k;
                if j + 1 < w {
                    gx[idx] = frame.data[idx + c] - frame.data[idx];
                }
                if i + 1 < h {
                    gy[idx] = frame.data[idx + w * c] - frame.data[idx];
                }
            }
        }
    }
    let wrap = |data| Frame {
        height: h,
        width: w,
        channels: c,
        data,
    };
    (wrap(gx), wrap(gy))
}

/// Source coordinate for output index `dst` under the align-corners-false
/// mapping, clamped to the valid sample range.
#[inline]
pub(crate) fn resize_source_coord(dst: usize, src_len: usize, dst_len: usize) -> f64 {
    let scale = src_len as f64 / dst_len as f64;
    let s = (dst as f64 + 0.5) * scale - 0.5;
    s.clamp(0.0, (src_len - 1) as f64)
}

/// Bilinear resize with pixel centers at integer coordinates
/// (`src = (dst + 0.5)·scale − 0.5`) and edge clamping.
pub fn resize_bilinear(frame: &Frame, new_h: usize, new_w: usize) -> Result<Frame> {
    if new_h == 0 || new_w == 0 {
        return Err(invalid(format!("resize target {new_h}x{new_w} has a zero side")));
    }
    if (new_h, new_w) == frame.dims() {
        return Ok(frame.clone());
    }
    let (h, w, c) = (frame.height, frame.width, frame.channels);
    let cols: Vec<(usize, usize, f64)> = (0..new_w)
        .map(|j| {
            let x = resize_source_coord(j, w, new_w);
            let x0 = x.floor() as usize;
            (x0, (x0 + 1).min(w - 1), x - x0 as f64)
        })
        .collect();
    let mut data = Vec::with_capacity(new_h * new_w * c);
    for i in 0..new_h {
        let y = resize_source_coord(i, h, new_h);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = y - y0 as f64;
        for &(x0, x1, fx) in &cols {
            for k in 0..c {
                let top = frame.get(y0, x0, k) * (1.0 - fx) + frame.get(y0, x1, k) * fx;
                let bottom = frame.get(y1, x0, k) * (1.0 - fx) + frame.get(y1, x1, k) * fx;
                data.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Ok(Frame {
        height: new_h,
        width: new_w,
        channels: c,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_closed_forms() {
        let f = Frame::new(1, 3, 1, vec![0.0, 0.5, 1.0]).unwrap();
        let (gx, gy) = image_gradient(&f);
        assert_eq!(gx.data(), &[0.5, 0.5, 0.0]);
        assert_eq!(gy.data(), &[0.0, 0.0, 0.0]);

        let f = Frame::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        let (_, gy) = image_gradient(&f);
        assert_eq!(gy.data(), &[1.0, 0.0]);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = Frame::filled(5, 7, 3, 0.3).unwrap();
        let (gx, gy) = image_gradient(&f);
        assert!(gx.data().iter().chain(gy.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_out_of_range_samples() {
        assert!(Frame::new(1, 2, 1, vec![0.0, 1.5]).is_err());
        assert!(Frame::unbounded(1, 2, 1, vec![0.0, 1.5]).is_ok());
        assert!(Frame::unbounded(1, 2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(Frame::new(1, 2, 1, vec![0.0]).is_err());
    }

    /// Scalar reference: explicit per-pixel align-corners-false interpolation.
    fn resize_oracle(src: &[f64], w: usize, new_w: usize) -> Vec<f64> {
        (0..new_w)
            .map(|j| {
                let x = ((j as f64 + 0.5) * (w as f64 / new_w as f64) - 0.5)
                    .max(0.0)
                    .min((w - 1) as f64);
                let lo = x.floor() as usize;
                let hi = if lo + 1 < w { lo + 1 } else { lo };
                let t = x - lo as f64;
                src[lo] + (src[hi] - src[lo]) * t
            })
            .collect()
    }

    #[test]
    fn resize_matches_scalar_oracle() {
        let f = Frame::new(1, 2, 1, vec![0.0, 1.0]).unwrap();
        let out = resize_bilinear(&f, 1, 4).unwrap();
        let expected = resize_oracle(&[0.0, 1.0], 2, 4);
        assert_eq!(expected, vec![0.0, 0.25, 0.75, 1.0]);
        for (a, b) in out.data().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn resize_identity_and_constants() {
        let f = Frame::from_fn(4, 5, 2, |i, j, c| ((i * 7 + j * 3 + c) % 11) as f64 / 10.0).unwrap();
        assert_eq!(resize_bilinear(&f, 4, 5).unwrap(), f);
        let k = Frame::filled(3, 3, 1, 0.42).unwrap();
        let up = resize_bilinear(&k, 7, 2).unwrap();
        assert!(up.data().iter().all(|&v| (v - 0.42).abs() < 1e-15));
        assert!(resize_bilinear(&k, 0, 2).is_err());
    }

    #[test]
    fn luma_weights() {
        let f = Frame::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((f.to_gray().get(0, 0, 0) - 0.299).abs() < 1e-15);
    }
}
