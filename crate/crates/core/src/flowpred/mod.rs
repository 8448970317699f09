//! Flow prediction: a coarse-to-fine variational estimator that minimizes the
//! photometric + smoothness objective directly, constant-velocity
//! extrapolation of the estimate, and the [`FlowPredictor`] seam that lets
//! the pipeline swap in ground truth or zero motion.

mod extrapolate;
mod predictor;

pub use extrapolate::{extrapolate_flow, synthesize_backward, ExtrapolationMode};
pub use predictor::{
    predict_flows, FlowPredictor, GroundTruthOracle, PredictorKind, VariationalExtrapolator,
    ZeroFlow,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{FlowDirection, FlowField};
use crate::frame::Frame;
use crate::losses::{photometric_value_and_grad, smoothness_value_and_grad, EdgeWeights};
use crate::pyramid::build_pyramid;

/// Solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSolverConfig {
    /// SSIM weight of the photometric term. The solver only supports 0.
    pub alpha: f64,
    pub lambda_smt: f64,
    pub min_side: usize,
    pub iterations: usize,
    /// Initial (and maximum) step; halved on every rejected trial.
    pub step: f64,
    /// Level stops once backtracking drives the step below this.
    pub min_step: f64,
    pub charbonnier_eps: f64,
    /// Passes of the `[1, 2, 1]/4` smoother (reflecting borders, applied
    /// along both axes) used to precondition the gradient. The smoother is
    /// symmetric positive semi-definite, so the result stays a descent
    /// direction.
    pub gradient_smoothing: usize,
    /// Ceiling for the step, which doubles after every accepted step.
    pub max_step: f64,
}

impl Default for FlowSolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            lambda_smt: 0.1,
            min_side: 16,
            iterations: 200,
            step: 0.5,
            min_step: 1e-6,
            charbonnier_eps: 1e-3,
            gradient_smoothing: 8,
            max_step: 64.0,
        }
    }
}

impl FlowSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha != 0.0 {
            return Err(invalid("the flow solver has no SSIM gradient; alpha must be 0"));
        }
        let positive = [self.step, self.min_step, self.max_step, self.charbonnier_eps];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("step sizes and charbonnier_eps must be positive"));
        }
        if self.max_step < self.step {
            return Err(invalid("max_step must be >= step"));
        }
        if !(self.lambda_smt.is_finite() && self.lambda_smt >= 0.0) {
            return Err(invalid("lambda_smt must be non-negative"));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations must be >= 1"));
        }
        if self.min_side < 4 {
            return Err(invalid("min_side must be >= 4"));
        }
        Ok(())
    }
}

/// Objective history of one pyramid level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub height: usize,
    pub width: usize,
    /// Objective at the initial flow followed by every accepted step.
    pub objective: Vec<f64>,
    pub evaluations: usize,
}

impl LevelTrace {
    pub fn is_monotone(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Clone, Debug)]
pub struct FlowEstimate {
    /// Backward flow on the `dst` grid.
    pub flow: FlowField,
    /// Coarsest level first.
    pub levels: Vec<LevelTrace>,
}

struct LevelProblem<'a> {
    src: &'a Frame,
    dst: &'a Frame,
    weights: EdgeWeights,
    lambda: f64,
    eps: f64,
}

impl LevelProblem<'_> {
    fn evaluate(&self, flow: &FlowField) -> Result<(f64, Vec<[f64; 2]>)> {
        let (photo, mut grad) = photometric_value_and_grad(self.src, self.dst, flow, self.eps)?;
        let (smooth, sgrad) = smoothness_value_and_grad(flow, &self.weights, self.eps)?;
        for (g, s) in grad.iter_mut().zip(&sgrad) {
            g[0] += self.lambda * s[0];
            g[1] += self.lambda * s[1];
        }
        Ok((photo + self.lambda * smooth, grad))
    }
}

/// Estimates the backward flow on the `dst` grid such that warping `src`
/// along it reproduces `dst`.
pub fn estimate_flow(src: &Frame, dst: &Frame, cfg: &FlowSolverConfig) -> Result<FlowField> {
    Ok(estimate_flow_traced(src, dst, cfg)?.flow)
}

/// [`estimate_flow`] with the per-level objective history.
///
/// Frames are converted to luma. The coarsest level starts from zero flow and
/// every finer level from the 2× upsampled coarser result. On each level the
/// flow takes gradient steps `f ← f − τ·N·∇E` (with `N` the pixel count, so
/// `τ` is in pixels per unit residual) and a step is accepted only if it
/// lowers the objective; otherwise `τ` is halved and retried.
pub fn estimate_flow_traced(src: &Frame, dst: &Frame, cfg: &FlowSolverConfig) -> Result<FlowEstimate> {
    src.check_same_shape(dst, "estimate_flow")?;
    cfg.validate()?;
    let src_pyr = build_pyramid(&src.to_gray(), cfg.min_side)?;
    let dst_pyr = build_pyramid(&dst.to_gray(), cfg.min_side)?;
    let n_levels = src_pyr.len();
    let mut flow: Option<FlowField> = None;
    let mut traces = Vec::with_capacity(n_levels);

    for level in (0..n_levels).rev() {
        let (s, d) = (&src_pyr.levels()[level], &dst_pyr.levels()[level]);
        let (h, w) = d.dims();
        let mut current = match flow.take() {
            None => FlowField::zeros(h, w, FlowDirection::Backward),
            Some(coarse) => coarse.resized(h, w, 2.0)?,
        };
        let problem = LevelProblem {
            src: s,
            dst: d,
            weights: EdgeWeights::from_image(d),
            lambda: cfg.lambda_smt,
            eps: cfg.charbonnier_eps,
        };
        let (mut value, grad) = problem.evaluate(&current)?;
        let mut grad = smooth_gradient(grad, h, w, cfg.gradient_smoothing);
        let non_finite = |iteration: usize, v: f64| Error::Solver {
            level,
            iteration,
            reason: format!("objective evaluated to {v} on a {h}x{w} level"),
        };
        if !value.is_finite() {
            return Err(non_finite(0, value));
        }
        let pixels = (h * w) as f64;
        let mut trace = LevelTrace {
            height: h,
            width: w,
            objective: vec![value],
            evaluations: 1,
        };
        let mut step = cfg.step;
        'descent: for iteration in 0..cfg.iterations {
            loop {
                let candidate = FlowField::new(
                    h,
                    w,
                    FlowDirection::Backward,
                    current
                        .vectors()
                        .iter()
                        .zip(&grad)
                        .map(|(f, g)| [f[0] - step * pixels * g[0], f[1] - step * pixels * g[1]])
                        .collect(),
                )
                .map_err(|_| non_finite(iteration, f64::NAN))?;
                let (cand_value, cand_grad) = problem.evaluate(&candidate)?;
                trace.evaluations += 1;
                if !cand_value.is_finite() {
                    return Err(non_finite(iteration, cand_value));
                }
                if cand_value < value {
                    current = candidate;
                    value = cand_value;
                    grad = smooth_gradient(cand_grad, h, w, cfg.gradient_smoothing);
                    trace.objective.push(value);
                    step = (step * 2.0).min(cfg.max_step);
                    break;
                }
                step *= 0.5;
                if step < cfg.min_step {
                    break 'descent;
                }
            }
        }
        debug_assert!(trace.is_monotone());
        traces.push(trace);
        flow = Some(current);
    }
    Ok(FlowEstimate {
        flow: flow.expect("at least one level"),
        levels: traces,
    })
}

/// Applies `passes` rounds of the separable `[1, 2, 1]/4` filter with
/// mirrored borders to each gradient component.
fn smooth_gradient(mut g: Vec<[f64; 2]>, h: usize, w: usize, passes: usize) -> Vec<[f64; 2]> {
    let mut tmp = g.clone();
    for _ in 0..passes {
        for i in 0..h {
            for j in 0..w {
                let l = g[i * w + j.saturating_sub(1)];
                let r = g[i * w + (j + 1).min(w - 1)];
                let c = g[i * w + j];
                tmp[i * w + j] = [0.25 * (l[0] + r[0]) + 0.5 * c[0], 0.25 * (l[1] + r[1]) + 0.5 * c[1]];
            }
        }
        for i in 0..h {
            for j in 0..w {
                let u = tmp[i.saturating_sub(1) * w + j];
                let d = tmp[(i + 1).min(h - 1) * w + j];
                let c = tmp[i * w + j];
                g[i * w + j] = [0.25 * (u[0] + d[0]) + 0.5 * c[0], 0.25 * (u[1] + d[1]) + 0.5 * c[1]];
            }
        }
    }
    g
}
