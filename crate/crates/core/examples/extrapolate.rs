//! Constant-velocity extrapolation of a flow field, both modes.

use flowgate::flowpred::{extrapolate_flow, ExtrapolationMode};
use flowgate::{FlowDirection, FlowField};

fn main() -> flowgate::Result<()> {
    // A 3-px-wide block moving right by 2 px over a static background.
    let prev = FlowField::from_fn(1, 10, FlowDirection::Forward, |_, j| {
        if (2..5).contains(&j) {
            [2.0, 0.0]
        } else {
            [0.0, 0.0]
        }
    })?;
    let u = |f: &FlowField| f.vectors().iter().map(|p| p[0]).collect::<Vec<_>>();
    println!("previous forward u: {:?}", u(&prev));
    for mode in [ExtrapolationMode::ZeroOrder, ExtrapolationMode::WarpCompose] {
        let (fwd, bwd) = extrapolate_flow(&prev, mode)?;
        println!("{mode:?}\n  forward u:  {:?}\n  backward u: {:?}", u(&fwd), u(&bwd));
    }
    Ok(())
}
