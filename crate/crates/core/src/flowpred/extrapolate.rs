use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::{FlowDirection, FlowField};
use crate::warp::{backward_warp, BorderMode};

/// How the previous step's motion is carried forward one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationMode {
    /// Reuse the previous forward flow unchanged.
    ZeroOrder,
    /// Transport the previous flow along itself: each pixel takes the flow
    /// of the source pixel that lands on it.
    #[default]
    WarpCompose,
}

/// Constant-velocity extrapolation of a `t−2 → t−1` forward flow.
///
/// Returns the forward flow `t−1 → t` and the matching backward flow on the
/// `t` grid.
pub fn extrapolate_flow(
    prev_fwd: &FlowField,
    mode: ExtrapolationMode,
) -> Result<(FlowField, FlowField)> {
    prev_fwd.expect_direction(FlowDirection::Forward)?;
    let fwd = match mode {
        ExtrapolationMode::ZeroOrder => prev_fwd.clone(),
        ExtrapolationMode::WarpCompose => {
            let inv = synthesize_backward(prev_fwd)?;
            let moved = backward_warp(&prev_fwd.to_frame(), &inv, BorderMode::Clamp)?;
            FlowField::from_frame(&moved, FlowDirection::Forward)?
        }
    };
    let bwd = synthesize_backward(&fwd)?;
    Ok((fwd, bwd))
}

/// Inverts a forward flow onto the target grid.
///
/// Each source pixel deposits `−f(p)` into the pixel nearest to `p + f(p)`.
/// When several deposits compete, the one landing closest to the pixel center
/// wins (earlier row-major source on ties). Targets that receive nothing take
/// the value of the nearest filled target (Euclidean, earlier row-major on
/// ties).
pub fn synthesize_backward(fwd: &FlowField) -> Result<FlowField> {
    fwd.expect_direction(FlowDirection::Forward)?;
    let (h, w) = fwd.dims();
    let mut slots: Vec<Option<(f64, [f64; 2])>> = vec![None; h * w];
    for i in 0..h {
        for j in 0..w {
            let [u, v] = fwd.get(i, j);
            let (y, x) = (i as f64 + v, j as f64 + u);
            let (ty, tx) = (y.round(), x.round());
            if ty < 0.0 || tx < 0.0 || ty >= h as f64 || tx >= w as f64 {
                continue;
            }
            let dist = (y - ty).powi(2) + (x - tx).powi(2);
            let slot = &mut slots[ty as usize * w + tx as usize];
            if slot.is_none_or(|(best, _)| dist < best) {
                *slot = Some((dist, [-u, -v]));
            }
        }
    }
    let filled: Vec<Option<[f64; 2]>> = slots.iter().map(|s| s.map(|(_, f)| f)).collect();
    if filled.iter().all(Option::is_none) {
        // Everything left the frame; nothing to propagate.
        return Ok(FlowField::zeros(h, w, FlowDirection::Backward));
    }
    let mut vectors = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            vectors.push(match filled[i * w + j] {
                Some(f) => f,
                None => filled[nearest_filled(&filled, h, w, i, j)].unwrap(),
            });
        }
    }
    FlowField::new(h, w, FlowDirection::Backward, vectors)
}

/// Index of the nearest `Some` entry by Euclidean distance, smallest
/// row-major index among equals. Searches square rings of growing radius.
fn nearest_filled<T>(cells: &[Option<T>], h: usize, w: usize, i: usize, j: usize) -> usize {
    let mut best: Option<(usize, usize)> = None;
    let max_r = h.max(w);
    for r in 1..=max_r {
        if let Some((d2, _)) = best {
            if r * r > d2 {
                break;
            }
        }
        let r = r as isize;
        let (ci, cj) = (i as isize, j as isize);
        for di in -r..=r {
            let ii = ci + di;
            if ii < 0 || ii >= h as isize {
                continue;
            }
            let step = if di.abs() == r { 1 } else { 2 * r as usize };
            let mut dj = -r;
            while dj <= r {
                let jj = cj + dj;
                if jj >= 0 && jj < w as isize {
                    let idx = ii as usize * w + jj as usize;
                    if cells[idx].is_some() {
                        let d2 = (di * di + dj * dj) as usize;
                        if best.is_none_or(|b| (d2, idx) < b) {
                            best = Some((d2, idx));
                        }
                    }
                }
                dj += step as isize;
            }
        }
    }
    best.expect("at least one filled cell").1
}
