//! Next-frame prediction on a synthetic clip, with per-stage outputs.
//!
//! Usage: `cargo run --example predict_next [out_dir]`

use flowgate::flowpred::PredictorKind;
use flowgate::metrics::{evaluate_prediction, Aux};
use flowgate::pipeline::{predict_next, PipelineConfig};
use flowgate::synth::{generate_clip, generate_suite, SuiteParams};

fn main() -> flowgate::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/examples/predict_next".into());
    let params = SuiteParams { min_speed: 2.0, ..SuiteParams::default() };
    let scene = generate_clip(&generate_suite(1, 21, &params)?[0])?;
    let n = scene.clip.len();
    let history = scene.clip.history(n - 1)?;
    let target = &scene.clip.frames()[n - 1];
    let gt = scene.ground_truth();

    for predictor in [PredictorKind::Zero, PredictorKind::Variational, PredictorKind::GroundTruth] {
        let cfg = PipelineConfig { predictor, ..PipelineConfig::default() };
        let p = predict_next(&history, &cfg)?;
        let aux = Aux {
            flow: Some((&p.flow_fwd, &gt.forward[n - 2])),
            mask: Some((&p.mask, &gt.occlusion[n - 2])),
        };
        let m = evaluate_prediction(&p.final_frame.clamped(), target, &aux)?;
        println!(
            "{predictor:?}: PSNR {:.2} dB, SSIM {:.4}, EPE {:.3}, occluded IoU {:.3}",
            m.psnr,
            m.ssim,
            m.epe.unwrap_or(f64::NAN),
            m.iou_occluded.unwrap_or(f64::NAN)
        );
        p.write(format!("{out}/{predictor:?}").to_lowercase())?;
    }
    println!("stage outputs under {out}");
    Ok(())
}
