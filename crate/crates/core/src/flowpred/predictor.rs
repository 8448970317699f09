use serde::{Deserialize, Serialize};

use super::{estimate_flow, extrapolate_flow, ExtrapolationMode, FlowSolverConfig};
use crate::clip::Clip;
use crate::error::{invalid, Result};
use crate::flow::{FlowDirection, FlowField};

/// Produces the `(forward t−1→t, backward t→t−1)` flow pair for the frame
/// following the clip's last frame.
pub trait FlowPredictor: Send + Sync {
    fn name(&self) -> &'static str;
    fn predict(&self, clip: &Clip) -> Result<(FlowField, FlowField)>;
}

/// Estimates motion between the last two frames and extrapolates it one
/// step under constant velocity.
#[derive(Clone, Debug, Default)]
pub struct VariationalExtrapolator {
    pub solver: FlowSolverConfig,
    pub mode: ExtrapolationMode,
}

impl FlowPredictor for VariationalExtrapolator {
    fn name(&self) -> &'static str {
        "variational"
    }

    fn predict(&self, clip: &Clip) -> Result<(FlowField, FlowField)> {
        clip.require_history(2)?;
        let n = clip.len();
        let (prev, last) = (&clip.frames()[n - 2], &clip.frames()[n - 1]);
        // Solving with the frames swapped yields a flow on the earlier grid
        // that points into the later frame, i.e. the forward flow t−2 → t−1.
        let prev_fwd = estimate_flow(last, prev, &self.solver)?.retagged(FlowDirection::Forward);
        extrapolate_flow(&prev_fwd, self.mode)
    }
}

/// Returns the clip's ground-truth flows for the next step verbatim.
#[derive(Clone, Copy, Debug, Default)]
pub struct GroundTruthOracle;

impl FlowPredictor for GroundTruthOracle {
    fn name(&self) -> &'static str {
        "ground_truth"
    }

    fn predict(&self, clip: &Clip) -> Result<(FlowField, FlowField)> {
        let step = clip.len() - 1;
        let gt = clip
            .ground_truth()
            .ok_or_else(|| invalid("ground-truth predictor needs a labeled clip"))?;
        match (gt.forward.get(step), gt.backward.get(step)) {
            (Some(f), Some(b)) => Ok((f.clone(), b.clone())),
            _ => Err(invalid(format!("clip has no ground-truth flow for step {step}"))),
        }
    }
}

/// Predicts no motion.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFlow;

impl FlowPredictor for ZeroFlow {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn predict(&self, clip: &Clip) -> Result<(FlowField, FlowField)> {
        let (h, w) = clip.dims();
        Ok((
            FlowField::zeros(h, w, FlowDirection::Forward),
            FlowField::zeros(h, w, FlowDirection::Backward),
        ))
    }
}

/// Serializable predictor choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    #[default]
    Variational,
    GroundTruth,
    Zero,
}

impl PredictorKind {
    pub fn build(
        self,
        solver: &FlowSolverConfig,
        mode: ExtrapolationMode,
    ) -> Box<dyn FlowPredictor> {
        match self {
            PredictorKind::Variational => Box::new(VariationalExtrapolator {
                solver: solver.clone(),
                mode,
            }),
            PredictorKind::GroundTruth => Box::new(GroundTruthOracle),
            PredictorKind::Zero => Box::new(ZeroFlow),
        }
    }
}

/// Flow pair for the frame after `clip`, checked against the predictor
/// contract (direction tags and clip dimensions).
pub fn predict_flows(clip: &Clip, predictor: &dyn FlowPredictor) -> Result<(FlowField, FlowField)> {
    clip.require_history(2)?;
    let (fwd, bwd) = predictor.predict(clip)?;
    let (h, w) = clip.dims();
    fwd.expect_direction(FlowDirection::Forward)?;
    bwd.expect_direction(FlowDirection::Backward)?;
    fwd.check_dims(h, w, predictor.name())?;
    bwd.check_dims(h, w, predictor.name())?;
    Ok((fwd, bwd))
}
