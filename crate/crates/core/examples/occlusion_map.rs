//! Occlusion map of a translating sprite from its ground-truth forward flow.
//!
//! Usage: `cargo run --example occlusion_map [out_dir]`

use flowgate::io::{write_energy_png, write_frame, write_mask};
use flowgate::synth::{generate_clip, iou, MaskClass, NoiseSpec, SceneSpec, SpriteSpec, Texture};
use flowgate::viz::mask_overlay;
use flowgate::warp::{occlusion_from_energy, splat_energy, EnergyThresholds};

fn main() -> flowgate::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/examples/occlusion_map".into());
    std::fs::create_dir_all(&out)?;
    let noise = |seed, cell, low, high| Texture::Noise(NoiseSpec { seed, cell, low, high });
    let spec = SceneSpec {
        seed: 1,
        height: 96,
        width: 96,
        num_frames: 3,
        background: noise(10, 14.0, [0.05, 0.1, 0.1], [0.5, 0.5, 0.55]),
        sprite: SpriteSpec {
            height: 30,
            width: 24,
            texture: noise(11, 7.0, [0.55, 0.5, 0.45], [0.95, 0.9, 0.85]),
            alpha: None,
        },
        start: [30.0, 20.0],
        velocity: [4.0, 1.0],
        allow_clipping: false,
    };
    let scene = generate_clip(&spec)?;
    let gt = scene.ground_truth();

    let energy = splat_energy(&gt.forward[0])?;
    let mask = occlusion_from_energy(&energy, EnergyThresholds::default())?;
    println!(
        "occluded pixels: {} ({:.2}%), IoU vs oracle {:.4}",
        mask.count_occluded(),
        100.0 * mask.occluded_fraction(),
        iou(&mask, &gt.occlusion[0], MaskClass::Occluded)?
    );

    let next = &scene.clip.frames()[1];
    write_frame(format!("{out}/frame.png"), next)?;
    write_mask(format!("{out}/mask.png"), &mask)?;
    write_energy_png(format!("{out}/energy.png"), &energy)?;
    write_frame(format!("{out}/overlay.png"), &mask_overlay(next, &mask, [1.0, 0.0, 0.0], 0.6)?)?;
    println!("wrote {out}/{{frame,mask,energy,overlay}}.png");
    Ok(())
}
