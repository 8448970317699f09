use crate::error::{invalid, shape, Result};
use crate::flow::{FlowDirection, FlowField};
use crate::frame::Frame;
use crate::losses::LabelMap;
use crate::warp::OcclusionMap;

/// Per-step ground truth. Entry `k` of each list describes the transition
/// from frame `k` to frame `k + 1`: forward flow on grid `k`, backward flow
/// and occlusion mask on grid `k + 1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    pub forward: Vec<FlowField>,
    pub backward: Vec<FlowField>,
    pub occlusion: Vec<OcclusionMap>,
    /// Optional per-frame label maps (one per frame, not per step).
    pub labels: Vec<LabelMap>,
}

/// An ordered, uniformly shaped frame sequence with unit frame interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    frames: Vec<Frame>,
    ground_truth: Option<GroundTruth>,
}

impl Clip {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        Self::with_ground_truth(frames, None)
    }

    pub fn with_ground_truth(frames: Vec<Frame>, ground_truth: Option<GroundTruth>) -> Result<Self> {
        let first = frames.first().ok_or_else(|| invalid("clip has no frames"))?;
        if let Some(bad) = frames.iter().find(|f| !f.same_shape(first)) {
            return Err(shape(format!(
                "clip frames differ in shape: {:?} vs {:?}",
                first.dims(),
                bad.dims()
            )));
        }
        let (h, w) = first.dims();
        if let Some(gt) = &ground_truth {
            for f in &gt.forward {
                f.expect_direction(FlowDirection::Forward)?;
                f.check_dims(h, w, "ground-truth forward flow")?;
            }
            for f in &gt.backward {
                f.expect_direction(FlowDirection::Backward)?;
                f.check_dims(h, w, "ground-truth backward flow")?;
            }
            if gt.occlusion.iter().any(|m| m.dims() != (h, w)) {
                return Err(shape("ground-truth occlusion mask shape differs from frames"));
            }
        }
        Ok(Self {
            frames,
            ground_truth,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn channels(&self) -> usize {
        self.frames[0].channels()
    }

    pub fn last(&self) -> &Frame {
        self.frames.last().unwrap()
    }

    pub fn ground_truth(&self) -> Option<&GroundTruth> {
        self.ground_truth.as_ref()
    }

    /// The first `n` frames, keeping all ground truth.
    pub fn history(&self, n: usize) -> Result<Clip> {
        if n == 0 || n > self.frames.len() {
            return Err(invalid(format!("history length {n} outside 1..={}", self.frames.len())));
        }
        Ok(Clip {
            frames: self.frames[..n].to_vec(),
            ground_truth: self.ground_truth.clone(),
        })
    }

    /// Appends a frame (used by recursive multi-step prediction).
    pub fn push(&mut self, frame: Frame) -> Result<()> {
        self.frames[0].check_same_shape(&frame, "appended frame")?;
        self.frames.push(frame);
        Ok(())
    }

    pub(crate) fn require_history(&self, min: usize) -> Result<()> {
        if self.frames.len() < min {
            Err(invalid(format!(
                "clip has {} frames, need at least {min}",
                self.frames.len()
            )))
        } else {
            Ok(())
        }
    }
}
