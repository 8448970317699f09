//! Generate a seeded synthetic suite and write it in the on-disk clip layout.
//!
//! Usage: `cargo run --example synth_clip [out_dir]`

use flowgate::synth::{generate_clip, generate_suite, write_clip, SuiteParams};

fn main() -> flowgate::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/examples/synth_clip".into());
    let specs = generate_suite(3, 7, &SuiteParams::default())?;
    for (k, spec) in specs.iter().enumerate() {
        let scene = generate_clip(spec)?;
        let gt = scene.ground_truth();
        let occluded: Vec<usize> = gt.occlusion.iter().map(|m| m.count_occluded()).collect();
        println!(
            "clip {k}: sprite {}x{} at {:?}, velocity {:?}, occluded per step {occluded:?}",
            spec.sprite.height, spec.sprite.width, spec.start, spec.velocity
        );
        write_clip(format!("{out}/clip_{k:03}"), &scene)?;
    }
    println!("wrote {} clips under {out}", specs.len());
    Ok(())
}
