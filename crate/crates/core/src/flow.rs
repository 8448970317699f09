//! Dense per-pixel displacement fields.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::frame::{resize_bilinear, Frame};

/// Which grid a flow field lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowDirection {
    /// Defined on the source grid; `p + f(p)` is the destination in the target.
    Forward,
    /// Defined on the target grid; `q + f(q)` is the sample location in the source.
    Backward,
}

impl fmt::Display for FlowDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowDirection::Forward => f.write_str("forward"),
            FlowDirection::Backward => f.write_str("backward"),
        }
    }
}

/// `H×W` field of `(u, v)` displacements in pixels, `u` to the right and `v`
/// downwards. Row/column offsets `(Δi, Δj)` correspond to `(v, u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    height: usize,
    width: usize,
    direction: FlowDirection,
    vectors: Vec<[f64; 2]>,
}

impl FlowField {
    pub fn new(
        height: usize,
        width: usize,
        direction: FlowDirection,
        vectors: Vec<[f64; 2]>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(invalid(format!("flow dimensions must be non-zero, got {height}x{width}")));
        }
        if vectors.len() != height * width {
            return Err(shape(format!(
                "flow has {} vectors, expected {height}*{width}",
                vectors.len()
            )));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("flow contains non-finite components"));
        }
        Ok(Self {
            height,
            width,
            direction,
            vectors,
        })
    }

    pub fn zeros(height: usize, width: usize, direction: FlowDirection) -> Self {
        Self::uniform(height, width, direction, [0.0, 0.0])
    }

    pub fn uniform(height: usize, width: usize, direction: FlowDirection, uv: [f64; 2]) -> Self {
        assert!(height > 0 && width > 0, "flow dimensions must be non-zero");
        assert!(uv[0].is_finite() && uv[1].is_finite());
        Self {
            height,
            width,
            direction,
            vectors: vec![uv; height * width],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        direction: FlowDirection,
        mut f: impl FnMut(usize, usize) -> [f64; 2],
    ) -> Result<Self> {
        let mut vectors = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                vectors.push(f(i, j));
            }
        }
        Self::new(height, width, direction, vectors)
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
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn direction(&self) -> FlowDirection {
        self.direction
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        self.vectors[i * self.width + j]
    }

    /// Fails with a contract error unless the field carries `expected`.
    pub fn expect_direction(&self, expected: FlowDirection) -> Result<()> {
        if self.direction == expected {
            Ok(())
        } else {
            Err(Error::Direction {
                expected,
                actual: self.direction,
            })
        }
    }

    /// Re-tags the field. Used where a solver output is known to be the
    /// other direction (e.g. estimating with swapped frames).
    pub fn retagged(mut self, direction: FlowDirection) -> Self {
        self.direction = direction;
        self
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.vectors.iter_mut().for_each(|v| *v = [-v[0], -v[1]]);
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.vectors
            .iter_mut()
            .for_each(|v| *v = [v[0] * factor, v[1] * factor]);
        out
    }

    pub(crate) fn check_dims(&self, h: usize, w: usize, what: &str) -> Result<()> {
        if self.dims() == (h, w) {
            Ok(())
        } else {
            Err(shape(format!(
                "{what}: flow is {}x{}, expected {h}x{w}",
                self.height, self.width
            )))
        }
    }

    /// Two-channel frame view `(u, v)`.
    pub fn to_frame(&self) -> Frame {
        let data = self.vectors.iter().flat_map(|v| [v[0], v[1]]).collect();
        Frame::unbounded(self.height, self.width, 2, data).expect("flow is finite")
    }

    pub fn from_frame(frame: &Frame, direction: FlowDirection) -> Result<Self> {
        if frame.channels() != 2 {
            return Err(shape(format!("flow frame needs 2 channels, got {}", frame.channels())));
        }
        let vectors = frame.data().chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        Self::new(frame.height(), frame.width(), direction, vectors)
    }

    /// Bilinear resize of the field; vectors are multiplied by `vector_scale`.
    pub fn resized(&self, new_h: usize, new_w: usize, vector_scale: f64) -> Result<Self> {
        let resized = resize_bilinear(&self.to_frame(), new_h, new_w)?;
        Ok(Self::from_frame(&resized, self.direction)?.scaled(vector_scale))
    }

    /// Largest vector norm in the field.
    pub fn max_norm(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_contract() {
        let f = FlowField::zeros(2, 2, FlowDirection::Forward);
        assert!(f.expect_direction(FlowDirection::Forward).is_ok());
        assert!(matches!(
            f.expect_direction(FlowDirection::Backward),
            Err(Error::Direction { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(FlowField::new(1, 1, FlowDirection::Forward, vec![[f64::INFINITY, 0.0]]).is_err());
        assert!(FlowField::new(1, 2, FlowDirection::Forward, vec![[0.0, 0.0]]).is_err());
    }

    #[test]
    fn frame_view_round_trip() {
        let f = FlowField::from_fn(3, 2, FlowDirection::Backward, |i, j| [i as f64, -(j as f64)])
            .unwrap();
        assert_eq!(FlowField::from_frame(&f.to_frame(), FlowDirection::Backward).unwrap(), f);
    }
}
