//! Recursive multi-step prediction: each predicted frame joins the history.

use flowgate::metrics::psnr;
use flowgate::pipeline::{predict_multi, Feedback, PipelineConfig};
use flowgate::synth::{generate_clip, generate_suite, SuiteParams};

fn main() -> flowgate::Result<()> {
    let params = SuiteParams {
        height: 64,
        width: 64,
        num_frames: 8,
        min_speed: 1.0,
        max_speed: 3.0,
        min_sprite: 12,
        max_sprite: 24,
        ..SuiteParams::default()
    };
    let scene = generate_clip(&generate_suite(1, 4, &params)?[0])?;
    let history = scene.clip.history(3)?;
    for feedback in [Feedback::Reestimate, Feedback::ExtendFlow] {
        let cfg = PipelineConfig { feedback, ..PipelineConfig::default() };
        let preds = predict_multi(&history, 5, &cfg)?;
        let scores = preds
            .iter()
            .enumerate()
            .map(|(k, p)| psnr(&p.final_frame.clamped(), &scene.clip.frames()[3 + k]))
            .collect::<flowgate::Result<Vec<_>>>()?;
        let line: Vec<String> = scores.iter().map(|s| format!("{s:.2}")).collect();
        println!("{feedback:?}: per-step PSNR [{}]", line.join(", "));
    }
    Ok(())
}
