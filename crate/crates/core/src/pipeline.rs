//! End-to-end prediction: flow → warp → energy/occlusion → inpaint → gate,
//! recursive multi-step rollout and the occlusion-map ablation harness.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clip::Clip;
use crate::error::{invalid, Result};
use crate::flow::FlowField;
use crate::flowpred::{extrapolate_flow, predict_flows, ExtrapolationMode, FlowSolverConfig, PredictorKind};
use crate::frame::{resize_bilinear, Frame};
use crate::inpaint::{compose, pullpush_inpaint};
use crate::io;
use crate::losses::LossConfig;
use crate::metrics::{psnr, ssim_mean};
use crate::synth::{iou, LabeledClip, MaskClass};
use crate::warp::{
    backward_warp, occlusion_from_energy, splat_energy, BorderMode, EnergyMap, EnergyThresholds,
    OcclusionMap,
};

/// Generator for mask-0 pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inpainter {
    #[default]
    PullPush,
    /// The inpainted frame is the warped frame.
    None,
    /// Stub refinement: `0.5·warped + 0.5·up(down(warped))`. Stands in for a
    /// learned whole-frame refiner in the "no occlusion map" ablation.
    RefineStub,
}

/// Where the gate comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    /// Thresholded splat energy of the predicted forward flow.
    #[default]
    Computed,
    /// Trust every warped pixel (warp-only baseline).
    AllOnes,
    /// Regenerate every pixel.
    AllZeros,
    /// The clip's ground-truth mask for the predicted step.
    Oracle,
}

/// How recursive prediction obtains flow after the first step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// Re-run the predictor on the history extended by the predicted frames.
    #[default]
    Reestimate,
    /// Extrapolate the previous step's predicted forward flow again.
    ExtendFlow,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub predictor: PredictorKind,
    pub solver: FlowSolverConfig,
    pub losses: LossConfig,
    pub extrapolation: ExtrapolationMode,
    pub inpainter: Inpainter,
    pub mask: MaskSource,
    pub thresholds: EnergyThresholds,
    pub border: BorderMode,
    pub feedback: Feedback,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.predictor == PredictorKind::Variational {
            self.solver.validate()?;
        }
        self.losses.validate()?;
        if !(self.thresholds.lo < self.thresholds.hi) {
            return Err(invalid("energy band needs lo < hi"));
        }
        Ok(())
    }

    /// Reads a JSON config; absent keys keep their defaults.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(&fs::read(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything produced for one predicted frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub final_frame: Frame,
    pub warped: Frame,
    pub flow_fwd: FlowField,
    pub flow_bwd: FlowField,
    pub energy: EnergyMap,
    pub mask: OcclusionMap,
    pub inpainted: Frame,
}

impl Prediction {
    /// Writes `final.png`, `warped.png`, `inpainted.png`, `mask.png`,
    /// `energy.png`, `flow.flo` (forward) and `flow_bwd.flo`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        io::write_frame(dir.join("final.png"), &self.final_frame.clamped())?;
        io::write_frame(dir.join("warped.png"), &self.warped.clamped())?;
        io::write_frame(dir.join("inpainted.png"), &self.inpainted.clamped())?;
        io::write_mask(dir.join("mask.png"), &self.mask)?;
        io::write_energy_png(dir.join("energy.png"), &self.energy)?;
        io::write_flo(dir.join("flow.flo"), &self.flow_fwd)?;
        io::write_flo(dir.join("flow_bwd.flo"), &self.flow_bwd)?;
        Ok(())
    }
}

/// `0.5·x + 0.5·up(down(x))`.
pub fn refine_stub(x: &Frame) -> Result<Frame> {
    let (h, w) = x.dims();
    let coarse = resize_bilinear(x, h.div_ceil(2), w.div_ceil(2))?;
    let back = resize_bilinear(&coarse, h, w)?;
    let data = x.data().iter().zip(back.data()).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
    Frame::unbounded(h, w, x.channels(), data)
}

fn oracle_mask(clip: &Clip) -> Result<OcclusionMap> {
    let step = clip.len() - 1;
    clip.ground_truth()
        .and_then(|gt| gt.occlusion.get(step))
        .cloned()
        .ok_or_else(|| invalid(format!("oracle mask requested but clip has no mask for step {step}")))
}

/// Runs every stage after flow prediction.
pub fn predict_with_flows(
    clip: &Clip,
    flow_fwd: FlowField,
    flow_bwd: FlowField,
    cfg: &PipelineConfig,
) -> Result<Prediction> {
    let warped = backward_warp(clip.last(), &flow_bwd, cfg.border)?;
    let energy = splat_energy(&flow_fwd)?;
    let (h, w) = clip.dims();
    let mask = match cfg.mask {
        MaskSource::Computed => occlusion_from_energy(&energy, cfg.thresholds)?,
        MaskSource::AllOnes => OcclusionMap::ones(h, w),
        MaskSource::AllZeros => OcclusionMap::zeros(h, w),
        MaskSource::Oracle => oracle_mask(clip)?,
    };
    let inpainted = match cfg.inpainter {
        Inpainter::PullPush => pullpush_inpaint(&warped, &mask)?,
        Inpainter::None => warped.clone(),
        Inpainter::RefineStub => refine_stub(&warped)?,
    };
    let final_frame = compose(&warped, &inpainted, &mask)?;
    Ok(Prediction {
        final_frame,
        warped,
        flow_fwd,
        flow_bwd,
        energy,
        mask,
        inpainted,
    })
}

/// Predicts the frame after the clip's last frame.
pub fn predict_next(clip: &Clip, cfg: &PipelineConfig) -> Result<Prediction> {
    cfg.validate()?;
    let predictor = cfg.predictor.build(&cfg.solver, cfg.extrapolation);
    let (fwd, bwd) = predict_flows(clip, predictor.as_ref())?;
    predict_with_flows(clip, fwd, bwd, cfg)
}

/// Recursive rollout: every predicted frame is appended to the working
/// history before the next step.
pub fn predict_multi(clip: &Clip, horizon: usize, cfg: &PipelineConfig) -> Result<Vec<Prediction>> {
    if horizon == 0 {
        return Err(invalid("horizon must be >= 1"));
    }
    let mut working = clip.clone();
    let mut out: Vec<Prediction> = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let p = match (cfg.feedback, out.last()) {
            (Feedback::ExtendFlow, Some(prev)) => {
                let (fwd, bwd) = extrapolate_flow(&prev.flow_fwd, cfg.extrapolation)?;
                predict_with_flows(&working, fwd, bwd, cfg)?
            }
            _ => predict_next(&working, cfg)?,
        };
        working.push(p.final_frame.clamped())?;
        out.push(p);
    }
    Ok(out)
}

/// One ablation arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub mask: MaskSource,
    pub inpainter: Inpainter,
    /// Marks arms that use placeholder components.
    pub stub: bool,
}

impl Variant {
    /// Warp only, no-mask stub, computed mask.
    pub fn standard() -> Vec<Variant> {
        vec![
            Variant {
                name: "warp_only".into(),
                mask: MaskSource::AllOnes,
                inpainter: Inpainter::None,
                stub: false,
            },
            Variant {
                name: "no_mask_stub".into(),
                mask: MaskSource::AllZeros,
                inpainter: Inpainter::RefineStub,
                stub: true,
            },
            Variant {
                name: "computed_mask".into(),
                mask: MaskSource::Computed,
                inpainter: Inpainter::PullPush,
                stub: false,
            },
        ]
    }

    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        PipelineConfig {
            mask: self.mask,
            inpainter: self.inpainter,
            ..base.clone()
        }
    }
}

/// Scores of one variant on one scene: the last frame is predicted from the
/// others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneScore {
    pub psnr: f64,
    pub ssim: f64,
    pub iou_occluded: f64,
}

pub fn score_scene(scene: &LabeledClip, cfg: &PipelineConfig) -> Result<SceneScore> {
    let n = scene.clip.len();
    let history = scene.clip.history(n - 1)?;
    let p = predict_next(&history, cfg)?;
    let target = &scene.clip.frames()[n - 1];
    let gt_mask = &scene.ground_truth().occlusion[n - 2];
    Ok(SceneScore {
        psnr: psnr(&p.final_frame.clamped(), target)?,
        ssim: ssim_mean(&p.final_frame, target)?,
        iou_occluded: iou(&p.mask, gt_mask, MaskClass::Occluded)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub suite: String,
    pub variant: String,
    pub stub: bool,
    pub scenes: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub iou_occluded: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn row(&self, suite: &str, variant: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.suite == suite && r.variant == variant)
    }
}

/// Runs every variant on every scene of every suite; one row per
/// `(suite, variant)`, each the mean over the suite. `jobs > 1` scores scenes
/// on a thread pool; results do not depend on it.
pub fn run_ablation(
    suites: &[(String, Vec<LabeledClip>)],
    variants: &[Variant],
    base: &PipelineConfig,
    jobs: usize,
) -> Result<AblationTable> {
    let score_all = |scenes: &[LabeledClip], cfg: &PipelineConfig| -> Result<Vec<SceneScore>> {
        if jobs <= 1 {
            scenes.iter().map(|s| score_scene(s, cfg)).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            pool.install(|| scenes.par_iter().map(|s| score_scene(s, cfg)).collect())
        }
    };
    let mut rows = Vec::with_capacity(suites.len() * variants.len());
    for (suite, scenes) in suites {
        for v in variants {
            let scores = score_all(scenes, &v.apply(base))?;
            let n = scores.len().max(1) as f64;
            rows.push(AblationRow {
                suite: suite.clone(),
                variant: v.name.clone(),
                stub: v.stub,
                scenes: scores.len(),
                psnr: scores.iter().map(|s| s.psnr).sum::<f64>() / n,
                ssim: scores.iter().map(|s| s.ssim).sum::<f64>() / n,
                iou_occluded: scores.iter().map(|s| s.iou_occluded).sum::<f64>() / n,
            });
        }
    }
    Ok(AblationTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_clip, generate_suite, SuiteParams};

    fn gated_exactly(p: &Prediction) -> bool {
        let ch = p.warped.channels();
        p.final_frame
            .data()
            .iter()
            .zip(p.warped.data())
            .enumerate()
            .all(|(k, (f, w))| p.mask.values()[k / ch] == 0 || f == w)
    }

    fn textured(seed: u64) -> Frame {
        crate::synth::NoiseSpec {
            seed,
            cell: 8.0,
            low: [0.1, 0.2, 0.1],
            high: [0.9, 0.8, 0.9],
        }
        .render(32, 32)
        .unwrap()
    }

    #[test]
    fn static_clip_is_a_fixed_point() {
        let f = textured(1);
        let clip = Clip::new(vec![f.clone(), f.clone(), f.clone()]).unwrap();
        let p = predict_next(&clip, &PipelineConfig::default()).unwrap();
        let err = p.final_frame.data().iter().zip(f.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 0.02, "{err}");
        assert!(gated_exactly(&p));
        assert_eq!(p.final_frame, compose(&p.warped, &p.inpainted, &p.mask).unwrap());
    }

    #[test]
    fn mask_and_inpainter_switches() {
        let scenes = generate_suite(1, 5, &SuiteParams::default()).unwrap();
        let lc = generate_clip(&scenes[0]).unwrap();
        let history = lc.clip.history(3).unwrap();
        let base = PipelineConfig {
            predictor: PredictorKind::GroundTruth,
            ..PipelineConfig::default()
        };
        let ones = predict_next(&history, &PipelineConfig { mask: MaskSource::AllOnes, ..base.clone() }).unwrap();
        assert_eq!(ones.final_frame, ones.warped);
        let none = predict_next(&history, &PipelineConfig { inpainter: Inpainter::None, ..base.clone() }).unwrap();
        assert_eq!(none.final_frame, none.warped);
        let oracle = predict_next(&history, &PipelineConfig { mask: MaskSource::Oracle, ..base.clone() }).unwrap();
        assert_eq!(oracle.mask, lc.ground_truth().occlusion[2]);
        let computed = predict_next(&history, &base).unwrap();
        assert!(gated_exactly(&computed));
        let stub = predict_next(
            &history,
            &PipelineConfig {
                mask: MaskSource::AllZeros,
                inpainter: Inpainter::RefineStub,
                ..base.clone()
            },
        )
        .unwrap();
        assert_eq!(stub.final_frame, stub.inpainted);
        // Pull-push has nothing to pull from under an all-zero mask.
        assert!(predict_next(&history, &PipelineConfig { mask: MaskSource::AllZeros, ..base }).is_err());
    }

    #[test]
    fn multi_step_shapes_and_horizon_one() {
        let f = textured(2);
        let clip = Clip::new(vec![f.clone(), f.clone()]).unwrap();
        let cfg = PipelineConfig::default();
        assert!(predict_multi(&clip, 0, &cfg).is_err());
        let one = predict_multi(&clip, 1, &cfg).unwrap();
        assert_eq!(one, vec![predict_next(&clip, &cfg).unwrap()]);
        let extend = PipelineConfig {
            feedback: Feedback::ExtendFlow,
            ..cfg
        };
        let three = predict_multi(&clip, 3, &extend).unwrap();
        assert_eq!(three.len(), 3);
        assert!(three.iter().all(gated_exactly));
    }

    #[test]
    fn ablation_table_shape() {
        let scenes: Vec<LabeledClip> = generate_suite(2, 8, &SuiteParams::default())
            .unwrap()
            .iter()
            .map(|s| generate_clip(s).unwrap())
            .collect();
        let suites = vec![("a".to_string(), scenes.clone()), ("b".to_string(), scenes)];
        let base = PipelineConfig {
            predictor: PredictorKind::GroundTruth,
            ..PipelineConfig::default()
        };
        let variants = Variant::standard();
        let t1 = run_ablation(&suites, &variants, &base, 1).unwrap();
        assert_eq!(t1.rows.len(), 6);
        assert_eq!(t1, run_ablation(&suites, &variants, &base, 3).unwrap());
        assert!(t1.row("a", "no_mask_stub").unwrap().stub);
        let mut csv = Vec::new();
        t1.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 7);
    }
}
