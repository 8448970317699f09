//! Coarse-to-fine variational flow between a texture and a shifted copy.

use flowgate::flowpred::{estimate_flow_traced, FlowSolverConfig};
use flowgate::metrics::endpoint_error;
use flowgate::synth::NoiseSpec;
use flowgate::warp::backward_warp;
use flowgate::{BorderMode, FlowDirection, FlowField};

fn main() -> flowgate::Result<()> {
    let src = NoiseSpec {
        seed: 3,
        cell: 8.0,
        low: [0.1, 0.1, 0.1],
        high: [0.9, 0.85, 0.8],
    }
    .render(64, 64)?;
    let (u, v) = (2.6, -1.3);
    let truth = FlowField::uniform(64, 64, FlowDirection::Backward, [-u, -v]);
    let dst = backward_warp(&src, &truth, BorderMode::Clamp)?;

    let est = estimate_flow_traced(&src, &dst, &FlowSolverConfig::default())?;
    for level in &est.levels {
        let first = level.objective.first().copied().unwrap_or(0.0);
        let last = level.objective.last().copied().unwrap_or(0.0);
        println!(
            "level {:>2}x{:<2}: objective {first:.5} -> {last:.5} in {} accepted steps (monotone: {})",
            level.height,
            level.width,
            level.objective.len() - 1,
            level.is_monotone()
        );
    }
    let epe = endpoint_error(&est.flow, &truth, None)?;
    println!("true backward flow ({:.2}, {:.2}), mean EPE {:.2e}", -u, -v, epe.mean);
    Ok(())
}
