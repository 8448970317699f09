//! Middlebury `.flo` round trip and color-wheel rendering.
//!
//! Usage: `cargo run --example flo_io [out_dir]`

use flowgate::io::{read_flo, write_flo, write_frame};
use flowgate::viz::flow_to_color;
use flowgate::{FlowDirection, FlowField};

fn main() -> flowgate::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/examples/flo_io".into());
    std::fs::create_dir_all(&out)?;
    // A vortex: every direction appears once around the center.
    let flow = FlowField::from_fn(65, 65, FlowDirection::Forward, |i, j| {
        let (y, x) = (i as f64 - 32.0, j as f64 - 32.0);
        [-y / 8.0, x / 8.0]
    })?;
    let path = format!("{out}/vortex.flo");
    write_flo(&path, &flow)?;
    let back = read_flo(&path, FlowDirection::Forward)?;
    println!(
        "{path}: {} bytes, round trip exact: {}",
        std::fs::metadata(&path)?.len(),
        back == flow
    );
    write_frame(format!("{out}/vortex.png"), &flow_to_color(&back, None)?)?;
    println!("wrote {out}/vortex.png");
    Ok(())
}
