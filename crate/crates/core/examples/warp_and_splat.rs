//! Backward warping and forward energy splatting on tiny hand-checkable
//! inputs.

use flowgate::warp::{backward_warp, splat_energy};
use flowgate::{BorderMode, FlowDirection, FlowField, Frame};

fn main() -> flowgate::Result<()> {
    let src = Frame::new(1, 3, 1, vec![0.1, 0.2, 0.3])?;
    let shift = FlowField::uniform(1, 3, FlowDirection::Backward, [1.0, 0.0]);
    for border in [BorderMode::Clamp, BorderMode::Zero] {
        let out = backward_warp(&src, &shift, border)?;
        println!("warp by u=+1 ({border:?}): {:?}", out.data());
    }

    let half = FlowField::new(1, 2, FlowDirection::Backward, vec![[0.5, 0.0], [0.0, 0.0]])?;
    let out = backward_warp(&Frame::new(1, 2, 1, vec![0.0, 1.0])?, &half, BorderMode::Clamp)?;
    println!("half-pixel sample: {:?}", out.data());

    // Each source pixel deposits unit mass bilinearly around its target.
    let fwd = FlowField::new(1, 3, FlowDirection::Forward, vec![[2.0, 0.0], [0.0, 0.0], [0.0, 0.0]])?;
    let e = splat_energy(&fwd)?;
    println!("energy of [(+2,0),0,0]: {:?} (total {})", e.density(), e.total());
    let fwd = FlowField::new(1, 2, FlowDirection::Forward, vec![[0.5, 0.0], [0.0, 0.0]])?;
    println!("energy of [(+0.5,0),0]: {:?}", splat_energy(&fwd)?.density());
    Ok(())
}
