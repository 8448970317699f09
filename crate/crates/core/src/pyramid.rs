//! Coarse-to-fine pyramids of frames and flow fields.

use crate::error::{invalid, Result};
use crate::flow::FlowField;
use crate::frame::{resize_bilinear, Frame};

/// Anything that can be halved in resolution.
pub trait Downsample: Sized {
    fn dims(&self) -> (usize, usize);
    /// Resamples to `(h, w)`; flow vectors are rescaled by `vector_scale`.
    fn downsample(&self, h: usize, w: usize, vector_scale: f64) -> Result<Self>;
}

impl Downsample for Frame {
    fn dims(&self) -> (usize, usize) {
        Frame::dims(self)
    }

    fn downsample(&self, h: usize, w: usize, _vector_scale: f64) -> Result<Self> {
        resize_bilinear(self, h, w)
    }
}

impl Downsample for FlowField {
    fn dims(&self) -> (usize, usize) {
        FlowField::dims(self)
    }

    fn downsample(&self, h: usize, w: usize, vector_scale: f64) -> Result<Self> {
        self.resized(h, w, vector_scale)
    }
}

/// Level 0 is full resolution; each further level has `ceil(prev / 2)` sides.
#[derive(Clone, Debug)]
pub struct Pyramid<T> {
    levels: Vec<T>,
}

impl<T> Pyramid<T> {
    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn coarsest(&self) -> &T {
        self.levels.last().expect("pyramid has at least one level")
    }

    pub fn into_levels(self) -> Vec<T> {
        self.levels
    }
}

/// Dimensions of every level for a `h×w` base, stopping before a level would
/// have a side shorter than `min_side`.
pub fn pyramid_dims(h: usize, w: usize, min_side: usize) -> Vec<(usize, usize)> {
    let mut dims = vec![(h, w)];
    loop {
        let (ph, pw) = *dims.last().unwrap();
        let (nh, nw) = (ph.div_ceil(2), pw.div_ceil(2));
        if nh < min_side || nw < min_side || (nh, nw) == (ph, pw) {
            break;
        }
        dims.push((nh, nw));
    }
    dims
}

/// Repeated 0.5× bilinear downsampling; flow vectors are halved per level.
pub fn build_pyramid<T: Downsample + Clone>(item: &T, min_side: usize) -> Result<Pyramid<T>> {
    if min_side < 4 {
        return Err(invalid(format!("pyramid min_side must be >= 4, got {min_side}")));
    }
    let (h, w) = item.dims();
    let dims = pyramid_dims(h, w, min_side);
    let mut levels = vec![item.clone()];
    for &(nh, nw) in &dims[1..] {
        let next = levels.last().unwrap().downsample(nh, nw, 0.5)?;
        levels.push(next);
    }
    Ok(Pyramid { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowDirection;

    #[test]
    fn halving_sequence() {
        let f = Frame::filled(64, 64, 1, 0.5).unwrap();
        let p = build_pyramid(&f, 16).unwrap();
        let sides: Vec<_> = p.levels().iter().map(|l| l.height()).collect();
        assert_eq!(sides, vec![64, 32, 16]);
    }

    #[test]
    fn stopping_rule() {
        let f = Frame::filled(5, 5, 1, 0.5).unwrap();
        let p = build_pyramid(&f, 4).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coarsest().dims(), (5, 5));
        assert!(build_pyramid(&f, 3).is_err());
    }

    #[test]
    fn uniform_flow_scales_per_level() {
        let f = FlowField::uniform(40, 24, FlowDirection::Forward, [4.0, -1.0]);
        let p = build_pyramid(&f, 4).unwrap();
        assert!(p.len() >= 3);
        for (level, field) in p.levels().iter().enumerate() {
            let s = 0.5f64.powi(level as i32);
            for v in field.vectors() {
                assert!((v[0] - 4.0 * s).abs() < 1e-12 && (v[1] + s).abs() < 1e-12);
            }
        }
        assert_eq!(p.levels()[1].get(0, 0), [2.0, -0.5]);
    }
}
