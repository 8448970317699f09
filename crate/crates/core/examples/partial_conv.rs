//! Partial convolution: renormalization over valid taps and mask update.

use flowgate::inpaint::{partial_conv, PartialConvLayer};
use flowgate::{Frame, OcclusionMap};

fn main() -> flowgate::Result<()> {
    let box3 = PartialConvLayer::new(3, 1, 1, 1, vec![1.0; 9], vec![0.0])?;
    let x = Frame::filled(5, 5, 1, 2.0)?;

    let single = OcclusionMap::from_fn(5, 5, |i, j| (i, j) == (2, 2));
    let (out, mask) = partial_conv(&x, &single, &box3)?;
    println!("one valid pixel, center output {} (full window gives 18)", out.get(2, 2, 0));
    println!("updated mask has {} valid pixels:", mask.count_valid());
    for i in 0..5 {
        let row: String = (0..5).map(|j| if mask.is_valid(i, j) { '#' } else { '.' }).collect();
        println!("  {row}");
    }

    // Two rounds shrink a hole from the outside in.
    let hole = OcclusionMap::from_fn(7, 7, |i, j| !((1..6).contains(&i) && (1..6).contains(&j)));
    let ramp = Frame::from_fn(7, 7, 1, |_, j, _| j as f64)?;
    let (x1, m1) = partial_conv(&ramp, &hole, &box3)?;
    let (_, m2) = partial_conv(&x1, &m1, &box3)?;
    println!(
        "hole valid counts: {} -> {} -> {}",
        hole.count_valid(),
        m1.count_valid(),
        m2.count_valid()
    );
    Ok(())
}
