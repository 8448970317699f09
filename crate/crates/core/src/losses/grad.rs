//! Charbonnier-smoothed versions of the photometric, smoothness and total
//! variation terms together with their analytic gradients.
//!
//! `ρ(x) = sqrt(x² + ε²) − ε`, so every term is zero on identical inputs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::flow::{FlowDirection, FlowField};
use crate::frame::{image_gradient, Frame};
use crate::warp::sample_bilinear_grad;

#[inline]
pub fn charbonnier(x: f64, eps: f64) -> f64 {
    (x * x + eps * eps).sqrt() - eps
}

#[inline]
fn charbonnier_deriv(x: f64, eps: f64) -> f64 {
    x / (x * x + eps * eps).sqrt()
}

/// Every loss term known to the crate; only three are differentiable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTerm {
    CharbonnierPhoto,
    Smoothness,
    TotalVariation,
    Ssim,
    MaskedPixel,
    Perceptual,
    Style,
    CrossEntropy,
}

/// Per-pixel edge weights `exp(−mean_c |∂x|)` for the x and y directions.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeights {
    pub height: usize,
    pub width: usize,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
}

impl EdgeWeights {
    pub fn from_image(image: &Frame) -> Self {
        let (gx, gy) = image_gradient(image);
        let ch = image.channels();
        let weigh = |g: &Frame| -> Vec<f64> {
            g.data()
                .chunks_exact(ch)
                .map(|p| (-p.iter().map(|v| v.abs()).sum::<f64>() / ch as f64).exp())
                .collect()
        };
        Self {
            height: image.height(),
            width: image.width(),
            wx: weigh(&gx),
            wy: weigh(&gy),
        }
    }
}

/// `mean_{q,c} ρ(src(q + f(q))_c − dst(q)_c)` and its gradient with respect
/// to the backward flow `f` (on the `dst` grid, clamped sampling).
pub fn photometric_value_and_grad(
    src: &Frame,
    dst: &Frame,
    flow: &FlowField,
    eps: f64,
) -> Result<(f64, Vec<[f64; 2]>)> {
    src.check_same_shape(dst, "photometric term")?;
    flow.check_dims(dst.height(), dst.width(), "photometric term")?;
    let (h, w, ch) = (dst.height(), dst.width(), dst.channels());
    let scale = 1.0 / (h * w * ch) as f64;
    let mut value = 0.0;
    let mut grad = vec![[0.0; 2]; h * w];
    for i in 0..h {
        for j in 0..w {
            let [u, v] = flow.get(i, j);
            let (y, x) = (i as f64 + v, j as f64 + u);
            let g = &mut grad[i * w + j];
            for c in 0..ch {
                let (s, sx, sy) = sample_bilinear_grad(src, y, x, c);
                let d = s - dst.get(i, j, c);
                value += charbonnier(d, eps);
                let r = charbonnier_deriv(d, eps) * scale;
                g[0] += r * sx;
                g[1] += r * sy;
            }
        }
    }
    Ok((value * scale, grad))
}

/// `mean_q Σ_dir w_dir(q)·(ρ(∂u) + ρ(∂v))` with forward differences and its
/// gradient with respect to the flow.
pub fn smoothness_value_and_grad(
    flow: &FlowField,
    weights: &EdgeWeights,
    eps: f64,
) -> Result<(f64, Vec<[f64; 2]>)> {
    flow.check_dims(weights.height, weights.width, "smoothness term")?;
    let (h, w) = flow.dims();
    let scale = 1.0 / (h * w) as f64;
    let mut value = 0.0;
    let mut grad = vec![[0.0; 2]; h * w];
    let vecs = flow.vectors();
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let neighbours = [
                (j + 1 < w, k + 1, weights.wx[k]),
                (i + 1 < h, k + w, weights.wy[k]),
            ];
            for (inside, n, wt) in neighbours {
                if !inside {
                    continue;
                }
                for c in 0..2 {
                    let d = vecs[n][c] - vecs[k][c];
                    value += wt * charbonnier(d, eps);
                    let g = wt * charbonnier_deriv(d, eps) * scale;
                    grad[n][c] += g;
                    grad[k][c] -= g;
                }
            }
        }
    }
    Ok((value * scale, grad))
}

/// `mean_q ρ_iso(∇x(q))`, where `ρ_iso(g) = sqrt(|g|² + ε²) − ε` and `|g|²`
/// sums squared forward differences over channels and both directions.
/// Returns the value and its gradient with respect to the frame samples.
pub fn tv_value_and_grad(frame: &Frame, eps: f64) -> (f64, Frame) {
    let (h, w, ch) = (frame.height(), frame.width(), frame.channels());
    let (gx, gy) = image_gradient(frame);
    let scale = 1.0 / (h * w) as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; h * w * ch];
    for i in 0..h {
        for j in 0..w {
            let base = (i * w + j) * ch;
            let mag2: f64 = (0..ch)
                .map(|c| gx.data()[base + c].powi(2) + gy.data()[base + c].powi(2))
                .sum();
            let s = (mag2 + eps * eps).sqrt();
            value += s - eps;
            for c in 0..ch {
                let (dx, dy) = (gx.data()[base + c] / s * scale, gy.data()[base + c] / s * scale);
                if j + 1 < w {
                    grad[base + ch + c] += dx;
                    grad[base + c] -= dx;
                }
                if i + 1 < h {
                    grad[base + w * ch + c] += dy;
                    grad[base + c] -= dy;
                }
            }
        }
    }
    let grad = Frame::unbounded(h, w, ch, grad).expect("finite gradient");
    (value * scale, grad)
}

/// Inputs for [`loss_gradient`].
#[derive(Clone, Copy, Debug)]
pub enum GradientInputs<'a> {
    /// Warp `src` by the backward `flow` and compare with `dst`.
    Photometric {
        src: &'a Frame,
        dst: &'a Frame,
        flow: &'a FlowField,
    },
    /// Flow smoothness weighted by the edges of `image`.
    Smoothness {
        flow: &'a FlowField,
        image: &'a Frame,
    },
    TotalVariation {
        frame: &'a Frame,
    },
}

/// Gradient of a differentiable term.
#[derive(Clone, Debug, PartialEq)]
pub enum Gradient {
    /// Per-pixel `(∂/∂u, ∂/∂v)`.
    Flow(Vec<[f64; 2]>),
    /// Per-sample derivative.
    Frame(Frame),
}

/// Value and analytic gradient of one of the differentiable terms, with
/// Charbonnier smoothing `eps`.
pub fn loss_gradient(term: LossTerm, inputs: GradientInputs<'_>, eps: f64) -> Result<(f64, Gradient)> {
    match (term, inputs) {
        (LossTerm::CharbonnierPhoto, GradientInputs::Photometric { src, dst, flow }) => {
            flow.expect_direction(FlowDirection::Backward)?;
            let (v, g) = photometric_value_and_grad(src, dst, flow, eps)?;
            Ok((v, Gradient::Flow(g)))
        }
        (LossTerm::Smoothness, GradientInputs::Smoothness { flow, image }) => {
            let (v, g) = smoothness_value_and_grad(flow, &EdgeWeights::from_image(image), eps)?;
            Ok((v, Gradient::Flow(g)))
        }
        (LossTerm::TotalVariation, GradientInputs::TotalVariation { frame }) => {
            let (v, g) = tv_value_and_grad(frame, eps);
            Ok((v, Gradient::Frame(g)))
        }
        (LossTerm::CharbonnierPhoto | LossTerm::Smoothness | LossTerm::TotalVariation, _) => {
            Err(invalid(format!("inputs do not match term {term:?}")))
        }
        (other, _) => Err(invalid(format!("term {other:?} has no analytic gradient"))),
    }
}
