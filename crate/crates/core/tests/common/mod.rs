#![allow(dead_code)]

use flowgate::synth::{generate_clip, generate_suite, LabeledClip, NoiseSpec, SuiteParams};
use flowgate::warp::backward_warp;
use flowgate::{BorderMode, FlowDirection, FlowField, Frame};

pub fn texture(seed: u64, h: usize, w: usize) -> Frame {
    NoiseSpec {
        seed,
        cell: 8.0,
        low: [0.1, 0.15, 0.05],
        high: [0.9, 0.8, 0.95],
    }
    .render(h, w)
    .unwrap()
}

/// `dst(i, j) = src(i − v, j − u)` with clamped reads.
pub fn translated(src: &Frame, u: f64, v: f64) -> Frame {
    let flow = FlowField::uniform(src.height(), src.width(), FlowDirection::Backward, [-u, -v]);
    backward_warp(src, &flow, BorderMode::Clamp).unwrap()
}

pub fn mean_epe(flow: &FlowField, truth: [f64; 2]) -> f64 {
    let n = flow.vectors().len() as f64;
    flow.vectors()
        .iter()
        .map(|[a, b]| (a - truth[0]).hypot(b - truth[1]))
        .sum::<f64>()
        / n
}

pub fn suite(n: usize, seed: u64, integer_velocity: bool) -> Vec<LabeledClip> {
    let params = SuiteParams {
        integer_velocity,
        ..SuiteParams::default()
    };
    generate_suite(n, seed, &params)
        .unwrap()
        .iter()
        .map(|s| generate_clip(s).unwrap())
        .collect()
}

/// Scenes with speed ≥ 2 whose last step has at least 2% occluded pixels.
pub fn disocclusion_suite(n: usize, seed: u64) -> Vec<LabeledClip> {
    let params = SuiteParams {
        min_speed: 2.0,
        ..SuiteParams::default()
    };
    let mut out = Vec::with_capacity(n);
    for spec in generate_suite(4 * n, seed, &params).unwrap() {
        let scene = generate_clip(&spec).unwrap();
        let last = scene.clip.len() - 2;
        if scene.ground_truth().occlusion[last].occluded_fraction() >= 0.02 {
            out.push(scene);
            if out.len() == n {
                break;
            }
        }
    }
    assert_eq!(out.len(), n, "not enough qualifying scenes");
    out
}

/// A small suite for pipeline-level checks (64×64, small sprites).
pub fn small_suite(n: usize, seed: u64, frames: usize) -> Vec<LabeledClip> {
    let params = SuiteParams {
        height: 64,
        width: 64,
        num_frames: frames,
        min_speed: 2.0,
        min_sprite: 12,
        max_sprite: 32,
        ..SuiteParams::default()
    };
    generate_suite(n, seed, &params)
        .unwrap()
        .iter()
        .map(|s| generate_clip(s).unwrap())
        .collect()
}

pub fn max_abs_diff(a: &Frame, b: &Frame) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
