//! Flow and mask visualisation.

use crate::error::Result;
use crate::flow::FlowField;
use crate::frame::Frame;
use crate::warp::OcclusionMap;

/// The 55-entry Middlebury color wheel (RGB in 0..=255).
pub fn color_wheel() -> Vec<[f64; 3]> {
    const SEGMENTS: [(usize, [usize; 2]); 6] = [
        (15, [0, 1]), // red → yellow
        (6, [1, 0]),  // yellow → green
        (4, [1, 2]),  // green → cyan
        (11, [2, 1]), // cyan → blue
        (13, [2, 0]), // blue → magenta
        (6, [0, 2]),  // magenta → red
    ];
    let mut wheel = Vec::with_capacity(55);
    let mut base = [255.0, 0.0, 0.0];
    for (k, (n, [fixed, moving])) in SEGMENTS.iter().enumerate() {
        for i in 0..*n {
            let mut c = base;
            let t = (255.0 * i as f64 / *n as f64).floor();
            // Even segments ramp a channel up, odd segments ramp one down.
            c[*moving] = if k % 2 == 0 { t } else { 255.0 - t };
            c[*fixed] = 255.0;
            wheel.push(c);
        }
        base[*moving] = if k % 2 == 0 { 255.0 } else { 0.0 };
    }
    wheel
}

/// Middlebury coloring: hue encodes direction, saturation encodes magnitude
/// relative to `max_norm` (the field's largest vector when `None`).
/// Vectors longer than `max_norm` are darkened.
pub fn flow_to_color(flow: &FlowField, max_norm: Option<f64>) -> Result<Frame> {
    let wheel = color_wheel();
    let ncols = wheel.len();
    let scale = max_norm.unwrap_or_else(|| flow.max_norm());
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let (h, w) = flow.dims();
    let mut data = Vec::with_capacity(h * w * 3);
    for &[u, v] in flow.vectors() {
        let (u, v) = (u / scale, v / scale);
        let rad = u.hypot(v);
        let a = (-v).atan2(-u) / std::f64::consts::PI;
        let fk = (a + 1.0) / 2.0 * (ncols - 1) as f64;
        let k0 = fk.floor() as usize % ncols;
        let k1 = (k0 + 1) % ncols;
        let f = fk - fk.floor();
        for c in 0..3 {
            let col = ((1.0 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
            data.push(if rad <= 1.0 { 1.0 - rad * (1.0 - col) } else { col * 0.75 });
        }
    }
    Frame::new(h, w, 3, data)
}

/// Blends `tint` into mask-0 pixels with weight `strength`.
pub fn mask_overlay(frame: &Frame, mask: &OcclusionMap, tint: [f64; 3], strength: f64) -> Result<Frame> {
    mask.check_dims(frame.height(), frame.width(), "mask_overlay")?;
    let rgb = if frame.channels() == 3 {
        frame.clone()
    } else {
        let g = frame.to_gray();
        Frame::from_fn(g.height(), g.width(), 3, |i, j, _| g.get(i, j, 0))?
    };
    let s = strength.clamp(0.0, 1.0);
    Frame::from_fn(rgb.height(), rgb.width(), 3, |i, j, c| {
        let v = rgb.get(i, j, c);
        if mask.is_valid(i, j) {
            v
        } else {
            (1.0 - s) * v + s * tint[c]
        }
    })
    .map(|f| f.clamped())
}
