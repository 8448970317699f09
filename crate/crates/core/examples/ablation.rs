//! Occlusion-map ablation: warp only vs. whole-frame refinement stub vs.
//! computed mask, on a seeded suite with ground-truth flow.
//!
//! Usage: `cargo run --example ablation [n_scenes]`

use flowgate::flowpred::PredictorKind;
use flowgate::pipeline::{run_ablation, PipelineConfig, Variant};
use flowgate::synth::{generate_clip, generate_suite, SuiteParams};

fn main() -> flowgate::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let params = SuiteParams { min_speed: 2.0, ..SuiteParams::default() };
    let scenes = generate_suite(n, 11, &params)?
        .iter()
        .map(generate_clip)
        .collect::<flowgate::Result<Vec<_>>>()?;
    let mut table = None;
    for predictor in [PredictorKind::GroundTruth, PredictorKind::Variational] {
        let base = PipelineConfig { predictor, ..PipelineConfig::default() };
        let name = format!("{predictor:?}").to_lowercase();
        let t = run_ablation(&[(name, scenes.clone())], &Variant::standard(), &base, 4)?;
        table.get_or_insert_with(Vec::new).extend(t.rows);
    }
    let table = flowgate::pipeline::AblationTable { rows: table.unwrap_or_default() };
    table.write_csv(std::io::stdout())?;
    Ok(())
}
