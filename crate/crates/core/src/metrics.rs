//! Evaluation: PSNR, SSIM, flow endpoint error and serializable reports.
//!
//! LPIPS is not computed (it needs a pretrained network); reports keep an
//! optional `lpips` slot for values produced by external tools.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::flow::FlowField;
use crate::frame::Frame;
use crate::synth::{iou, MaskClass};
use crate::warp::OcclusionMap;

pub use crate::losses::{ssim, SsimResult, SsimWindow};

/// Reported PSNR for identical frames.
pub const PSNR_CAP: f64 = 100.0;

pub fn mse(x: &Frame, y: &Frame) -> Result<f64> {
    x.check_same_shape(y, "mse")?;
    let n = x.data().len() as f64;
    Ok(x.data().iter().zip(y.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n)
}

/// `10·log10(1/MSE)` for samples in `[0, 1]`, capped at [`PSNR_CAP`].
pub fn psnr(x: &Frame, y: &Frame) -> Result<f64> {
    for f in [x, y] {
        let (lo, hi) = f.min_max();
        if lo < 0.0 || hi > 1.0 {
            return Err(invalid(format!("psnr expects samples in [0, 1], got [{lo}, {hi}]")));
        }
    }
    let e = mse(x, y)?;
    if e == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / e).log10()).min(PSNR_CAP))
}

/// Mean SSIM with the default window.
pub fn ssim_mean(x: &Frame, y: &Frame) -> Result<f64> {
    Ok(ssim(x, y, SsimWindow::default())?.mean)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EndpointError {
    pub mean: f64,
    /// Per-pixel `|f − g|`, one channel.
    pub map: Frame,
    /// Number of pixels the mean covers.
    pub count: usize,
}

/// Per-pixel Euclidean distance between two flows of the same direction,
/// averaged over every pixel or over the mask-1 pixels of `mask` (0 when the
/// mask is empty).
pub fn endpoint_error(f: &FlowField, g: &FlowField, mask: Option<&OcclusionMap>) -> Result<EndpointError> {
    g.expect_direction(f.direction())?;
    let (h, w) = f.dims();
    g.check_dims(h, w, "endpoint_error")?;
    if let Some(m) = mask {
        m.check_dims(h, w, "endpoint_error")?;
    }
    let dist: Vec<f64> = f
        .vectors()
        .iter()
        .zip(g.vectors())
        .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
        .collect();
    let (sum, count) = dist
        .iter()
        .enumerate()
        .filter(|(k, _)| mask.is_none_or(|m| m.values()[*k] == 1))
        .fold((0.0, 0usize), |(s, n), (_, d)| (s + d, n + 1));
    Ok(EndpointError {
        mean: if count == 0 { 0.0 } else { sum / count as f64 },
        map: Frame::unbounded(h, w, 1, dist)?,
        count,
    })
}

/// Metrics of one predicted frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub psnr: f64,
    pub ssim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epe: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou_occluded: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpips: Option<f64>,
}

/// Optional inputs for flow and mask scores: `(predicted, ground truth)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Aux<'a> {
    pub flow: Option<(&'a FlowField, &'a FlowField)>,
    pub mask: Option<(&'a OcclusionMap, &'a OcclusionMap)>,
}

/// Scores a predicted frame against ground truth.
pub fn evaluate_prediction(pred: &Frame, gt: &Frame, aux: &Aux<'_>) -> Result<StepMetrics> {
    let epe = match aux.flow {
        Some((p, g)) => Some(endpoint_error(p, g, None)?.mean),
        None => None,
    };
    let iou_occluded = match aux.mask {
        Some((p, g)) => Some(iou(p, g, MaskClass::Occluded)?),
        None => None,
    };
    Ok(StepMetrics {
        psnr: psnr(pred, gt)?,
        ssim: ssim_mean(pred, gt)?,
        epe,
        iou_occluded,
        lpips: None,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub psnr: f64,
    pub ssim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epe: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou_occluded: Option<f64>,
}

/// Per-clip report: one entry per predicted step plus their means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub clip_id: String,
    pub steps: Vec<StepMetrics>,
    pub means: MeanMetrics,
    #[serde(default)]
    pub config_echo: serde_json::Value,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl Report {
    /// Optional means cover the steps that carry the value.
    pub fn new(clip_id: impl Into<String>, steps: Vec<StepMetrics>, config_echo: serde_json::Value) -> Self {
        let means = MeanMetrics {
            psnr: mean_of(steps.iter().map(|s| s.psnr)).unwrap_or(0.0),
            ssim: mean_of(steps.iter().map(|s| s.ssim)).unwrap_or(0.0),
            epe: mean_of(steps.iter().filter_map(|s| s.epe)),
            iou_occluded: mean_of(steps.iter().filter_map(|s| s.iou_occluded)),
        };
        Self {
            clip_id: clip_id.into(),
            steps,
            means,
            config_echo,
        }
    }
}
