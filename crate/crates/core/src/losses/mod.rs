//! Training objectives of the flow predictor and the inpainter, evaluated as
//! plain functionals, with the differentiable pieces used by the flow solver
//! in [`grad`].
//!
//! All terms default to `MeanOverValid` normalization: a masked sum is divided
//! by the number of entries it covers, and an empty mask contributes zero.

mod grad;
mod ssim;

pub use grad::{
    charbonnier, loss_gradient, photometric_value_and_grad, smoothness_value_and_grad,
    tv_value_and_grad, EdgeWeights, Gradient, GradientInputs, LossTerm,
};
pub use ssim::{ssim, SsimResult, SsimWindow, SSIM_C1, SSIM_C2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::flow::FlowField;
use crate::frame::{image_gradient, FeatureMap, Frame};
use crate::warp::OcclusionMap;

/// How masked sums are reduced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Sum over covered entries divided by their count (0 when empty).
    #[default]
    MeanOverValid,
    /// Plain sum.
    Sum,
}

impl Normalization {
    #[inline]
    fn reduce(self, sum: f64, count: usize) -> f64 {
        match self {
            Normalization::Sum => sum,
            Normalization::MeanOverValid if count == 0 => 0.0,
            Normalization::MeanOverValid => sum / count as f64,
        }
    }
}

/// Loss weights. Defaults are the published hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// SSIM / L1 mix in the masked pixel loss.
    pub alpha: f64,
    /// Extra weight on the occluded (mask-0) region.
    pub beta: f64,
    pub lambda_smt: f64,
    pub lambda_prc: f64,
    pub lambda_sty: f64,
    pub lambda_var: f64,
    pub lambda_seg: f64,
    pub ssim_window: SsimWindow,
    pub normalization: Normalization,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 10.0,
            lambda_smt: 0.1,
            lambda_prc: 0.05,
            lambda_sty: 120.0,
            lambda_var: 0.1,
            lambda_seg: 5.0,
            ssim_window: SsimWindow::default(),
            normalization: Normalization::MeanOverValid,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.alpha,
            self.beta,
            self.lambda_smt,
            self.lambda_prc,
            self.lambda_sty,
            self.lambda_var,
            self.lambda_seg,
        ];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("loss weights must be finite and non-negative"));
        }
        if self.alpha > 1.0 {
            return Err(invalid("alpha must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Per-level feature maps supplied by an external extractor.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    levels: Vec<FeatureMap>,
}

impl FeatureStack {
    pub fn new(levels: Vec<FeatureMap>) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("feature stack needs at least one level"));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[FeatureMap] {
        &self.levels
    }
}

/// Integer class labels with optional per-class probability planes
/// (interleaved `H×W×K`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    height: usize,
    width: usize,
    num_classes: usize,
    labels: Vec<u32>,
    probabilities: Option<Vec<f64>>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, num_classes: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(shape(format!(
                "label map has {} labels, expected {height}*{width}",
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(invalid(format!("label {l} outside {num_classes} classes")));
        }
        Ok(Self {
            height,
            width,
            num_classes,
            labels,
            probabilities: None,
        })
    }

    /// Builds a map from class probabilities; labels are the per-pixel argmax.
    pub fn from_probabilities(
        height: usize,
        width: usize,
        num_classes: usize,
        probabilities: Vec<f64>,
    ) -> Result<Self> {
        if num_classes == 0 || probabilities.len() != height * width * num_classes {
            return Err(shape("probability planes do not match H*W*K"));
        }
        let labels = probabilities
            .chunks_exact(num_classes)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &v)| {
                        if v > best.1 {
                            (k, v)
                        } else {
                            best
                        }
                    })
                    .0 as u32
            })
            .collect();
        let mut map = Self::new(height, width, num_classes, labels)?;
        map.probabilities = Some(probabilities);
        Ok(map)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn probabilities(&self) -> Option<&[f64]> {
        self.probabilities.as_deref()
    }
}

fn check_mask(mask: &OcclusionMap, frame: &Frame, what: &str) -> Result<()> {
    mask.check_dims(frame.height(), frame.width(), what)
}

/// `Σ |pred − target|` over mask-selected pixels (all channels), reduced by
/// `norm` over `count(selected) · C`.
pub fn masked_l1(
    pred: &Frame,
    target: &Frame,
    mask: &OcclusionMap,
    norm: Normalization,
) -> Result<f64> {
    pred.check_same_shape(target, "masked_l1")?;
    check_mask(mask, pred, "masked_l1")?;
    let ch = pred.channels();
    let mut sum = 0.0;
    let mut count = 0;
    for (k, &m) in mask.values().iter().enumerate() {
        if m == 1 {
            let (a, b) = (&pred.data()[k * ch..(k + 1) * ch], &target.data()[k * ch..(k + 1) * ch]);
            sum += a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
            count += ch;
        }
    }
    Ok(norm.reduce(sum, count))
}

fn apply_mask(frame: &Frame, mask: &OcclusionMap) -> Frame {
    let ch = frame.channels();
    let data = frame
        .data()
        .iter()
        .enumerate()
        .map(|(k, &v)| v * mask.values()[k / ch] as f64)
        .collect();
    Frame::unbounded(frame.height(), frame.width(), ch, data).expect("finite")
}

/// `α·(1 − SSIM(pred⊙m, target⊙m))/2 + (1 − α)·‖(pred − target)⊙m‖₁`.
///
/// Inputs are multiplied by the mask before SSIM windowing. The SSIM part is
/// skipped when `α = 0`.
pub fn masked_pixel_loss(
    pred: &Frame,
    target: &Frame,
    mask: &OcclusionMap,
    alpha: f64,
    window: SsimWindow,
    norm: Normalization,
) -> Result<f64> {
    pred.check_same_shape(target, "masked_pixel_loss")?;
    check_mask(mask, pred, "masked_pixel_loss")?;
    let l1 = masked_l1(pred, target, mask, norm)?;
    let structural = if alpha > 0.0 {
        let s = ssim(&apply_mask(pred, mask), &apply_mask(target, mask), window)?;
        alpha * (1.0 - s.mean) / 2.0
    } else {
        0.0
    };
    Ok(structural + (1.0 - alpha) * l1)
}

/// Edge-aware first-order smoothness: per pixel and direction,
/// `(|∂u| + |∂v|) · exp(−|∂x|)`, where `|∂x|` is the channel-mean absolute
/// image gradient in that direction.
pub fn smoothness_loss(flow: &FlowField, image: &Frame, norm: Normalization) -> Result<f64> {
    flow.check_dims(image.height(), image.width(), "smoothness_loss")?;
    let weights = EdgeWeights::from_image(image);
    let (h, w) = flow.dims();
    let mut sum = 0.0;
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let f = flow.get(i, j);
            if j + 1 < w {
                let g = flow.get(i, j + 1);
                sum += ((g[0] - f[0]).abs() + (g[1] - f[1]).abs()) * weights.wx[k];
            }
            if i + 1 < h {
                let g = flow.get(i + 1, j);
                sum += ((g[0] - f[0]).abs() + (g[1] - f[1]).abs()) * weights.wy[k];
            }
        }
    }
    Ok(norm.reduce(sum, h * w))
}

/// Isotropic total variation with forward differences (zero on the trailing
/// column/row), channels inside the squared norms, over all `H·W` positions.
pub fn total_variation(x: &Frame, norm: Normalization) -> f64 {
    let (gx, gy) = image_gradient(x);
    let ch = x.channels();
    let sum: f64 = gx
        .data()
        .chunks_exact(ch)
        .zip(gy.data().chunks_exact(ch))
        .map(|(a, b)| {
            (a.iter().map(|v| v * v).sum::<f64>() + b.iter().map(|v| v * v).sum::<f64>()).sqrt()
        })
        .sum();
    norm.reduce(sum, x.height() * x.width())
}

/// Nearest-neighbour resample of a mask (align-corners-false centers).
pub fn resize_mask_nearest(mask: &OcclusionMap, h: usize, w: usize) -> OcclusionMap {
    let (mh, mw) = mask.dims();
    let pick = |dst: usize, src_len: usize, dst_len: usize| {
        (((dst as f64 + 0.5) * src_len as f64 / dst_len as f64).floor() as usize).min(src_len - 1)
    };
    OcclusionMap::from_fn(h, w, |i, j| mask.is_valid(pick(i, mh, h), pick(j, mw, w)))
}

fn check_stacks(fp: &FeatureStack, ft: &FeatureStack) -> Result<()> {
    if fp.levels.len() != ft.levels.len() {
        return Err(shape(format!(
            "feature stacks have {} vs {} levels",
            fp.levels.len(),
            ft.levels.len()
        )));
    }
    for (a, b) in fp.levels.iter().zip(&ft.levels) {
        a.check_same_shape(b, "feature level")?;
    }
    Ok(())
}

/// `(1/n) Σₙ [ ‖Δψ⊙m‖₁ + β‖Δψ⊙(1−m)‖₁ ]` with each term averaged over the
/// entries it covers. The mask is resampled to each level by nearest
/// neighbour.
pub fn perceptual_loss(
    fp: &FeatureStack,
    ft: &FeatureStack,
    mask: &OcclusionMap,
    beta: f64,
) -> Result<f64> {
    check_stacks(fp, ft)?;
    let norm = Normalization::MeanOverValid;
    let mut total = 0.0;
    for (a, b) in fp.levels.iter().zip(&ft.levels) {
        let m = resize_mask_nearest(mask, a.height(), a.width());
        total += masked_l1(a, b, &m, norm)? + beta * masked_l1(a, b, &m.inverted(), norm)?;
    }
    Ok(total / fp.levels.len() as f64)
}

/// `Σ|G| / (D²·|P|)` where `G = ΔᵀΔ` is the Gram matrix of the feature
/// difference restricted to the selected positions `P`.
fn gram_term(a: &FeatureMap, b: &FeatureMap, select: &OcclusionMap) -> f64 {
    let d = a.channels();
    let mut gram = vec![0.0; d * d];
    let mut count = 0usize;
    let mut delta = vec![0.0; d];
    for (k, &m) in select.values().iter().enumerate() {
        if m == 0 {
            continue;
        }
        count += 1;
        for c in 0..d {
            delta[c] = a.data()[k * d + c] - b.data()[k * d + c];
        }
        for r in 0..d {
            for c in 0..d {
                gram[r * d + c] += delta[r] * delta[c];
            }
        }
    }
    if count == 0 {
        return 0.0;
    }
    gram.iter().map(|g| g.abs()).sum::<f64>() / ((d * d) as f64 * count as f64)
}

/// Gram-matrix style loss of the feature difference, masked and complement
/// positions scored separately, `β`-weighted and averaged over levels.
pub fn style_loss(
    fp: &FeatureStack,
    ft: &FeatureStack,
    mask: &OcclusionMap,
    beta: f64,
) -> Result<f64> {
    check_stacks(fp, ft)?;
    let mut total = 0.0;
    for (a, b) in fp.levels.iter().zip(&ft.levels) {
        let m = resize_mask_nearest(mask, a.height(), a.width());
        total += gram_term(a, b, &m) + beta * gram_term(a, b, &m.inverted());
    }
    Ok(total / fp.levels.len() as f64)
}

const CE_LOG_FLOOR: f64 = 1e-12;

/// Cross-entropy of predicted class probabilities against target labels,
/// masked term plus `β` times the complement term.
pub fn masked_cross_entropy(
    pred: &LabelMap,
    target: &LabelMap,
    mask: &OcclusionMap,
    beta: f64,
) -> Result<f64> {
    if pred.dims() != target.dims() || mask.dims() != pred.dims() {
        return Err(shape("cross-entropy inputs differ in shape"));
    }
    if pred.num_classes != target.num_classes {
        return Err(shape(format!(
            "class count {} vs {}",
            pred.num_classes, target.num_classes
        )));
    }
    let probs = pred
        .probabilities()
        .ok_or_else(|| invalid("prediction carries no probability planes"))?;
    let k = pred.num_classes;
    for (p, plane) in probs.chunks_exact(k).enumerate() {
        let s: f64 = plane.iter().sum();
        if (s - 1.0).abs() > 1e-5 || plane.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid(format!("probabilities at pixel {p} sum to {s}")));
        }
    }
    let (mut in_sum, mut in_n, mut out_sum, mut out_n) = (0.0, 0usize, 0.0, 0usize);
    for (p, &label) in target.labels.iter().enumerate() {
        let ce = -probs[p * k + label as usize].max(CE_LOG_FLOOR).ln();
        if mask.values()[p] == 1 {
            in_sum += ce;
            in_n += 1;
        } else {
            out_sum += ce;
            out_n += 1;
        }
    }
    let norm = Normalization::MeanOverValid;
    Ok(norm.reduce(in_sum, in_n) + beta * norm.reduce(out_sum, out_n))
}

/// Component values of the flow objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowObjectiveTerms {
    pub pixel: f64,
    pub smoothness: f64,
}

impl FlowObjectiveTerms {
    /// `pixel + λ_smt · smoothness`.
    pub fn total(&self, cfg: &LossConfig) -> f64 {
        self.pixel + cfg.lambda_smt * self.smoothness
    }
}

/// Flow objective: masked pixel loss of the warped frame plus `λ_smt` times
/// the edge-aware smoothness of the flow against `target_img`.
pub fn flow_objective(
    pred_frame: &Frame,
    target_frame: &Frame,
    mask: &OcclusionMap,
    flow: &FlowField,
    target_img: &Frame,
    cfg: &LossConfig,
) -> Result<f64> {
    let terms = FlowObjectiveTerms {
        pixel: masked_pixel_loss(
            pred_frame,
            target_frame,
            mask,
            cfg.alpha,
            cfg.ssim_window,
            cfg.normalization,
        )?,
        smoothness: smoothness_loss(flow, target_img, cfg.normalization)?,
    };
    Ok(terms.total(cfg))
}

/// Component values of the inpainter objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InpaintTerms {
    pub pix: f64,
    pub prc: f64,
    pub sty: f64,
    pub var: f64,
    pub seg: f64,
}

/// `pix + λ_prc·prc + λ_sty·sty + λ_var·var + λ_seg·seg`.
pub fn inpaint_objective(terms: &InpaintTerms, cfg: &LossConfig) -> f64 {
    terms.pix
        + cfg.lambda_prc * terms.prc
        + cfg.lambda_sty * terms.sty
        + cfg.lambda_var * terms.var
        + cfg.lambda_seg * terms.seg
}

/// Pixel reconstruction term of the inpainter: the masked pixel loss on the
/// trusted region plus `β` times the same loss on the occluded region.
pub fn pixel_reconstruction_loss(
    pred: &Frame,
    target: &Frame,
    mask: &OcclusionMap,
    cfg: &LossConfig,
) -> Result<f64> {
    let on = masked_pixel_loss(pred, target, mask, cfg.alpha, cfg.ssim_window, cfg.normalization)?;
    let off = masked_pixel_loss(
        pred,
        target,
        &mask.inverted(),
        cfg.alpha,
        cfg.ssim_window,
        cfg.normalization,
    )?;
    Ok(on + cfg.beta * off)
}
