//! Synthetic clips: a textured sprite translating over a static textured
//! background, with exact per-step flow, surface labels and occlusion masks.
//!
//! Ground-truth occlusion comes from [`visibility_oracle`], a gather-style
//! re-implementation of the energy criterion that shares no code with
//! [`crate::warp`].

use std::fs;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xorshift::XorShiftRng;
use serde::{Deserialize, Serialize};

use crate::clip::{Clip, GroundTruth};
use crate::error::{invalid, Result};
use crate::flow::{FlowDirection, FlowField};
use crate::frame::Frame;
use crate::io;
use crate::losses::LabelMap;
use crate::warp::{sample_bilinear, BorderMode, EnergyMap, EnergyThresholds, OcclusionMap};

/// Seeded xorshift128 generator.
///
/// Seeding expands the 64-bit seed into the 128-bit state with the PCG32
/// stream of `rand_core::SeedableRng::seed_from_u64`; the unit test pins the
/// first outputs so other implementations can match them.
#[derive(Clone, Debug)]
pub struct SceneRng(XorShiftRng);

impl SceneRng {
    pub fn new(seed: u64) -> Self {
        Self(XorShiftRng::seed_from_u64(seed))
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    /// Low word first.
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `lo..=hi` (modulo reduction).
    pub fn int_inclusive(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as i64
    }
}

/// Two-octave value noise mapped onto a color ramp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub seed: u64,
    /// Lattice spacing of the coarse octave, in pixels.
    pub cell: f64,
    pub low: [f64; 3],
    pub high: [f64; 3],
}

struct Lattice {
    rows: usize,
    cols: usize,
    cell: f64,
    values: Vec<f64>,
}

impl Lattice {
    fn new(rng: &mut SceneRng, h: usize, w: usize, cell: f64) -> Self {
        let rows = (h as f64 / cell).ceil() as usize + 2;
        let cols = (w as f64 / cell).ceil() as usize + 2;
        let values = (0..rows * cols).map(|_| rng.next_f64()).collect();
        Self {
            rows,
            cols,
            cell,
            values,
        }
    }

    fn at(&self, y: f64, x: f64) -> f64 {
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (gy, gx) = (y / self.cell, x / self.cell);
        let (i, j) = (gy.floor() as usize, gx.floor() as usize);
        let (ty, tx) = (smooth(gy - i as f64), smooth(gx - j as f64));
        let (i1, j1) = ((i + 1).min(self.rows - 1), (j + 1).min(self.cols - 1));
        let v = |a: usize, b: usize| self.values[a * self.cols + b];
        let top = v(i, j) * (1.0 - tx) + v(i, j1) * tx;
        let bottom = v(i1, j) * (1.0 - tx) + v(i1, j1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

impl NoiseSpec {
    pub fn render(&self, h: usize, w: usize) -> Result<Frame> {
        if !(self.cell.is_finite() && self.cell >= 2.0) {
            return Err(invalid(format!("noise cell {} must be >= 2", self.cell)));
        }
        let in_range = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
        if !in_range(&self.low) || !in_range(&self.high) {
            return Err(invalid("noise palette outside [0, 1]"));
        }
        let mut rng = SceneRng::new(self.seed);
        let coarse = Lattice::new(&mut rng, h, w, self.cell);
        let fine = Lattice::new(&mut rng, h, w, self.cell / 2.0);
        Frame::from_fn(h, w, 3, |i, j, c| {
            let (y, x) = (i as f64, j as f64);
            let t = 0.7 * coarse.at(y, x) + 0.3 * fine.at(y, x);
            self.low[c] + t * (self.high[c] - self.low[c])
        })
    }
}

/// Procedural or explicit RGB texture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Texture {
    Noise(NoiseSpec),
    /// Must match the requested size exactly.
    Image { frame: Frame },
}

impl Texture {
    pub fn render(&self, h: usize, w: usize) -> Result<Frame> {
        match self {
            Texture::Noise(n) => n.render(h, w),
            Texture::Image { frame } => {
                if frame.dims() != (h, w) || frame.channels() != 3 {
                    return Err(invalid(format!(
                        "texture image is {:?}x{}, expected {h}x{w}x3",
                        frame.dims(),
                        frame.channels()
                    )));
                }
                Ok(frame.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpriteSpec {
    pub height: usize,
    pub width: usize,
    pub texture: Texture,
    /// Binary alpha; `None` is an opaque rectangle.
    #[serde(default)]
    pub alpha: Option<OcclusionMap>,
}

/// One synthetic scene. Positions are `(row, col)` of the sprite's top-left
/// pixel center; velocity is `(u, v)` in pixels per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub num_frames: usize,
    pub background: Texture,
    pub sprite: SpriteSpec,
    pub start: [f64; 2],
    pub velocity: [f64; 2],
    #[serde(default)]
    pub allow_clipping: bool,
}

impl SceneSpec {
    /// Top-left sprite position in frame `k`.
    pub fn position(&self, k: usize) -> [f64; 2] {
        let k = k as f64;
        [self.start[0] + k * self.velocity[1], self.start[1] + k * self.velocity[0]]
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frames < 3 {
            return Err(invalid("a scene needs at least 3 frames"));
        }
        if self.height == 0 || self.width == 0 || self.sprite.height == 0 || self.sprite.width == 0 {
            return Err(invalid("canvas and sprite must be non-empty"));
        }
        if !self.velocity.iter().chain(&self.start).all(|v| v.is_finite()) {
            return Err(invalid("sprite start and velocity must be finite"));
        }
        if let Some(a) = &self.sprite.alpha {
            if a.dims() != (self.sprite.height, self.sprite.width) {
                return Err(invalid("sprite alpha does not match sprite size"));
            }
        }
        if !self.allow_clipping {
            let (sh, sw) = (self.sprite.height as f64, self.sprite.width as f64);
            for k in 0..self.num_frames {
                let [py, px] = self.position(k);
                if py < 0.0
                    || px < 0.0
                    || py + sh - 1.0 > (self.height - 1) as f64
                    || px + sw - 1.0 > (self.width - 1) as f64
                {
                    return Err(invalid(format!(
                        "sprite leaves the canvas at frame {k} (top-left {py:.2}, {px:.2})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A clip whose ground truth is filled in, plus the scene that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledClip {
    pub spec: SceneSpec,
    pub clip: Clip,
    /// Per-frame sprite coverage in `[0, 1]`.
    pub coverage: Vec<Frame>,
}

impl LabeledClip {
    pub fn ground_truth(&self) -> &GroundTruth {
        self.clip.ground_truth().expect("generated clips carry ground truth")
    }
}

/// Pixels with at least this much sprite coverage belong to the sprite.
pub const FOREGROUND_COVERAGE: f64 = 0.5;

/// Renders the scene and derives its ground truth.
///
/// Frames are composited back to front with bilinear sub-pixel placement of
/// the sprite color and alpha. Forward flow on grid `k` is the velocity where
/// the sprite covers at least half the pixel and zero elsewhere; backward flow
/// on grid `k + 1` is the negated velocity on the sprite of frame `k + 1`.
pub fn generate_clip(spec: &SceneSpec) -> Result<LabeledClip> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let (sh, sw) = (spec.sprite.height, spec.sprite.width);
    let bg = spec.background.render(h, w)?;
    let sprite = spec.sprite.texture.render(sh, sw)?;
    let alpha = match &spec.sprite.alpha {
        Some(a) => a.to_frame(),
        None => Frame::filled(sh, sw, 1, 1.0)?,
    };

    let mut frames = Vec::with_capacity(spec.num_frames);
    let mut coverage = Vec::with_capacity(spec.num_frames);
    let mut labels = Vec::with_capacity(spec.num_frames);
    for k in 0..spec.num_frames {
        let [py, px] = spec.position(k);
        let cov = Frame::from_fn(h, w, 1, |i, j, _| {
            sample_bilinear(&alpha, i as f64 - py, j as f64 - px, 0, BorderMode::Zero)
        })?;
        let frame = Frame::from_fn(h, w, 3, |i, j, c| {
            let a = cov.get(i, j, 0);
            if a == 0.0 {
                return bg.get(i, j, c);
            }
            let s = sample_bilinear(&sprite, i as f64 - py, j as f64 - px, c, BorderMode::Clamp);
            a * s + (1.0 - a) * bg.get(i, j, c)
        })?;
        let ids = cov
            .data()
            .iter()
            .map(|&a| (a >= FOREGROUND_COVERAGE) as u32)
            .collect();
        labels.push(LabelMap::new(h, w, 2, ids)?);
        frames.push(frame);
        coverage.push(cov);
    }

    let [u, v] = spec.velocity;
    let moving = |lbl: &LabelMap, dir: FlowDirection, vel: [f64; 2]| {
        FlowField::from_fn(h, w, dir, |i, j| {
            if lbl.labels()[i * w + j] == 1 {
                vel
            } else {
                [0.0, 0.0]
            }
        })
    };
    let mut gt = GroundTruth::default();
    for k in 0..spec.num_frames - 1 {
        let fwd = moving(&labels[k], FlowDirection::Forward, [u, v])?;
        let bwd = moving(&labels[k + 1], FlowDirection::Backward, [-u, -v])?;
        let (_, occ) = visibility_oracle(&fwd, EnergyThresholds::default())?;
        gt.forward.push(fwd);
        gt.backward.push(bwd);
        gt.occlusion.push(occ);
    }
    gt.labels = labels;
    Ok(LabeledClip {
        spec: spec.clone(),
        clip: Clip::with_ground_truth(frames, Some(gt))?,
        coverage,
    })
}

/// Energy and occlusion mask of a forward flow, computed target by target.
///
/// For every target pixel `q` the oracle sums the tent weights
/// `max(0, 1 − |q_y − y|)·max(0, 1 − |q_x − x|)` of every source landing
/// at `(y, x)` within reach, then applies the band thresholds.
pub fn visibility_oracle(
    fwd: &FlowField,
    t: EnergyThresholds,
) -> Result<(EnergyMap, OcclusionMap)> {
    fwd.expect_direction(FlowDirection::Forward)?;
    if !(t.lo < t.hi) {
        return Err(invalid("occlusion band must satisfy lo < hi"));
    }
    let (h, w) = fwd.dims();
    let reach = fwd
        .vectors()
        .iter()
        .flat_map(|v| [v[0].abs(), v[1].abs()])
        .fold(0.0, f64::max)
        .ceil() as isize
        + 1;
    let tent = |d: f64| (1.0 - d.abs()).max(0.0);
    let mut density = vec![0.0; h * w];
    let mut mask = vec![0u8; h * w];
    for qi in 0..h as isize {
        for qj in 0..w as isize {
            let mut e = 0.0;
            for pi in (qi - reach).max(0)..(qi + reach + 1).min(h as isize) {
                for pj in (qj - reach).max(0)..(qj + reach + 1).min(w as isize) {
                    let [u, v] = fwd.get(pi as usize, pj as usize);
                    let wy = tent(qi as f64 - (pi as f64 + v));
                    let wx = tent(qj as f64 - (pj as f64 + u));
                    e += wy * wx;
                }
            }
            let k = qi as usize * w + qj as usize;
            density[k] = e;
            mask[k] = (e > t.lo + t.eps && e < t.hi - t.eps) as u8;
        }
    }
    Ok((EnergyMap::new(h, w, density)?, OcclusionMap::new(h, w, mask)?))
}

/// Which mask value IoU treats as the positive set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskClass {
    Occluded,
    Valid,
}

/// Intersection over union of the chosen class; 1 when both sets are empty.
pub fn iou(a: &OcclusionMap, b: &OcclusionMap, positive: MaskClass) -> Result<f64> {
    b.check_dims(a.height(), a.width(), "iou")?;
    let target = match positive {
        MaskClass::Occluded => 0,
        MaskClass::Valid => 1,
    };
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let (x, y) = (x == target, y == target);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Parameter ranges for [`generate_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteParams {
    pub height: usize,
    pub width: usize,
    pub num_frames: usize,
    /// Bound on `|u|` and `|v|`.
    pub max_speed: f64,
    /// Lower bound on the speed `sqrt(u² + v²)`.
    pub min_speed: f64,
    pub integer_velocity: bool,
    pub min_sprite: usize,
    pub max_sprite: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            num_frames: 4,
            max_speed: 5.0,
            min_speed: 0.0,
            integer_velocity: true,
            min_sprite: 16,
            max_sprite: 64,
        }
    }
}

impl SuiteParams {
    fn validate(&self) -> Result<()> {
        if self.num_frames < 3 {
            return Err(invalid("suite scenes need at least 3 frames"));
        }
        if !(self.max_speed.is_finite() && self.max_speed >= 0.0) {
            return Err(invalid("max_speed must be finite and non-negative"));
        }
        if self.min_speed > self.max_speed * std::f64::consts::SQRT_2 {
            return Err(invalid("min_speed unreachable under max_speed"));
        }
        if self.min_sprite == 0 || self.min_sprite > self.max_sprite {
            return Err(invalid("sprite size range is empty"));
        }
        let travel = (self.max_speed.ceil() as usize) * (self.num_frames - 1);
        if self.max_sprite + travel > self.height.min(self.width) {
            return Err(invalid("canvas too small for the largest sprite at top speed"));
        }
        Ok(())
    }
}

fn palette(rng: &mut SceneRng, lo: f64, hi: f64) -> ([f64; 3], [f64; 3]) {
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    for c in 0..3 {
        a[c] = rng.uniform(lo, lo + 0.15);
        b[c] = rng.uniform(hi - 0.15, hi);
    }
    (a, b)
}

/// Deterministic scene list. Sprites are opaque rectangles that stay inside
/// the canvas for the whole clip. Backgrounds are drawn from a darker
/// palette band than sprites.
pub fn generate_suite(n: usize, seed: u64, params: &SuiteParams) -> Result<Vec<SceneSpec>> {
    params.validate()?;
    let mut rng = SceneRng::new(seed);
    let steps = (params.num_frames - 1) as f64;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let scene_seed = rng.next_u64();
        let sh = rng.int_inclusive(params.min_sprite as i64, params.max_sprite as i64) as usize;
        let sw = rng.int_inclusive(params.min_sprite as i64, params.max_sprite as i64) as usize;
        let velocity = loop {
            let vel = if params.integer_velocity {
                let m = params.max_speed.floor() as i64;
                [rng.int_inclusive(-m, m) as f64, rng.int_inclusive(-m, m) as f64]
            } else {
                let m = params.max_speed;
                [rng.uniform(-m, m), rng.uniform(-m, m)]
            };
            if vel[0].hypot(vel[1]) >= params.min_speed {
                break vel;
            }
        };
        // Feasible top-left range so that every frame keeps the sprite inside.
        let axis = |rng: &mut SceneRng, extent: usize, size: usize, speed: f64| {
            let lo = (-speed * steps).max(0.0);
            let hi = (extent - size) as f64 - (speed * steps).max(0.0);
            if params.integer_velocity {
                rng.int_inclusive(lo.ceil() as i64, hi.floor() as i64) as f64
            } else {
                rng.uniform(lo, hi)
            }
        };
        let y0 = axis(&mut rng, params.height, sh, velocity[1]);
        let x0 = axis(&mut rng, params.width, sw, velocity[0]);
        let (bg_lo, bg_hi) = palette(&mut rng, 0.05, 0.55);
        let (sp_lo, sp_hi) = palette(&mut rng, 0.45, 0.95);
        let background = Texture::Noise(NoiseSpec {
            seed: rng.next_u64(),
            cell: rng.uniform(12.0, 20.0),
            low: bg_lo,
            high: bg_hi,
        });
        let texture = Texture::Noise(NoiseSpec {
            seed: rng.next_u64(),
            cell: rng.uniform(6.0, 10.0),
            low: sp_lo,
            high: sp_hi,
        });
        out.push(SceneSpec {
            seed: scene_seed,
            height: params.height,
            width: params.width,
            num_frames: params.num_frames,
            background,
            sprite: SpriteSpec {
                height: sh,
                width: sw,
                texture,
                alpha: None,
            },
            start: [y0, x0],
            velocity,
            allow_clipping: false,
        });
    }
    Ok(out)
}

/// Writes `frame_%03d.png`, `fwd_%03d.flo`, `bwd_%03d.flo`, `occ_%03d.png`
/// and `meta.json` into `dir`.
pub fn write_clip(dir: impl AsRef<Path>, labeled: &LabeledClip) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (k, f) in labeled.clip.frames().iter().enumerate() {
        io::write_frame(dir.join(format!("frame_{k:03}.png")), f)?;
    }
    let gt = labeled.ground_truth();
    for k in 0..gt.forward.len() {
        io::write_flo(dir.join(format!("fwd_{k:03}.flo")), &gt.forward[k])?;
        io::write_flo(dir.join(format!("bwd_{k:03}.flo")), &gt.backward[k])?;
        io::write_mask(dir.join(format!("occ_{k:03}.png")), &gt.occlusion[k])?;
    }
    fs::write(dir.join("meta.json"), serde_json::to_vec_pretty(&labeled.spec)?)?;
    Ok(())
}

/// Reads a directory written by [`write_clip`] (or any directory of
/// `frame_%03d.png` files). Ground truth is attached when flow files exist.
pub fn read_clip(dir: impl AsRef<Path>) -> Result<Clip> {
    let dir = dir.as_ref();
    let mut frames = Vec::new();
    while dir.join(format!("frame_{:03}.png", frames.len())).exists() {
        frames.push(io::read_frame(dir.join(format!("frame_{:03}.png", frames.len())))?);
    }
    if frames.is_empty() {
        return Err(invalid(format!("no frame_000.png in {}", dir.display())));
    }
    let mut gt = GroundTruth::default();
    for k in 0..frames.len() - 1 {
        let (fwd, bwd, occ) = (
            dir.join(format!("fwd_{k:03}.flo")),
            dir.join(format!("bwd_{k:03}.flo")),
            dir.join(format!("occ_{k:03}.png")),
        );
        if !(fwd.exists() && bwd.exists() && occ.exists()) {
            break;
        }
        gt.forward.push(io::read_flo(fwd, FlowDirection::Forward)?);
        gt.backward.push(io::read_flo(bwd, FlowDirection::Backward)?);
        gt.occlusion.push(io::read_mask(occ)?);
    }
    let gt = (!gt.forward.is_empty()).then_some(gt);
    Clip::with_ground_truth(frames, gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::{backward_warp, occlusion_pipeline};
    use proptest::prelude::*;

    fn scene(velocity: [f64; 2], start: [f64; 2], sprite: (usize, usize)) -> SceneSpec {
        SceneSpec {
            seed: 1,
            height: 48,
            width: 48,
            num_frames: 3,
            background: Texture::Noise(NoiseSpec {
                seed: 11,
                cell: 12.0,
                low: [0.05, 0.1, 0.1],
                high: [0.4, 0.5, 0.45],
            }),
            sprite: SpriteSpec {
                height: sprite.0,
                width: sprite.1,
                texture: Texture::Noise(NoiseSpec {
                    seed: 12,
                    cell: 6.0,
                    low: [0.5, 0.55, 0.6],
                    high: [0.9, 0.95, 0.85],
                }),
                alpha: None,
            },
            start,
            velocity,
            allow_clipping: false,
        }
    }

    /// Pinned outputs; generated independently from the xorshift128 and
    /// PCG32 seed-expansion definitions.
    #[test]
    fn rng_test_vectors() {
        let mut r = SceneRng::new(0);
        let got: Vec<u32> = (0..4).map(|_| r.next_u32()).collect();
        assert_eq!(got, RNG_SEED0_U32);
        let mut r = SceneRng::new(7);
        let got: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        assert_eq!(got, RNG_SEED7_U64);
    }

    const RNG_SEED0_U32: [u32; 4] = [3421425365, 3819375508, 2803965359, 1877840080];
    const RNG_SEED7_U64: [u64; 3] = [5565015810683446962, 14694241966208775659, 13107288054060928335];

    #[test]
    fn static_scene() {
        let lc = generate_clip(&scene([0.0, 0.0], [10.0, 10.0], (12, 16))).unwrap();
        let gt = lc.ground_truth();
        assert!(lc.clip.frames().windows(2).all(|f| f[0] == f[1]));
        assert!(gt.forward.iter().chain(&gt.backward).all(|f| f.max_norm() == 0.0));
        assert!(gt.occlusion.iter().all(|m| m.count_occluded() == 0));
    }

    #[test]
    fn unit_translation_geometry() {
        let (h, w) = (12, 16);
        let lc = generate_clip(&scene([1.0, 0.0], [10.0, 10.0], (h, w))).unwrap();
        let occ = &lc.ground_truth().occlusion[0];
        assert_eq!(occ.count_occluded(), 2 * h);
        for i in 10..10 + h {
            assert_eq!(occ.get(i, 10), 0, "trailing column");
            assert_eq!(occ.get(i, 10 + w), 0, "leading column");
        }
    }

    #[test]
    fn out_of_canvas_rejected() {
        let s = scene([5.0, 0.0], [10.0, 30.0], (12, 16));
        assert!(generate_clip(&s).is_err());
        let clipped = SceneSpec {
            allow_clipping: true,
            ..s
        };
        assert!(generate_clip(&clipped).is_ok());
    }

    #[test]
    fn iou_closed_forms() {
        let a = OcclusionMap::from_fn(4, 4, |i, _| i == 0);
        assert_eq!(iou(&a, &a, MaskClass::Occluded).unwrap(), 1.0);
        let ones = OcclusionMap::ones(4, 4);
        assert_eq!(iou(&ones, &ones, MaskClass::Occluded).unwrap(), 1.0);
        let left = OcclusionMap::from_fn(2, 4, |_, j| j >= 2);
        assert_eq!(iou(&left, &left.inverted(), MaskClass::Occluded).unwrap(), 0.0);
        // Occluded cells {0..4} and {2..6} in row-major order: overlap 2, union 6.
        let p = OcclusionMap::from_fn(2, 4, |i, j| i * 4 + j >= 4);
        let q = OcclusionMap::from_fn(2, 4, |i, j| !(2..6).contains(&(i * 4 + j)));
        assert_eq!((p.count_occluded(), q.count_occluded()), (4, 4));
        assert!((iou(&p, &q, MaskClass::Occluded).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(iou(&a, &OcclusionMap::ones(3, 4), MaskClass::Valid).is_err());
    }

    #[test]
    fn suite_is_deterministic() {
        let p = SuiteParams::default();
        assert!(generate_suite(0, 3, &p).unwrap().is_empty());
        let a = generate_suite(5, 3, &p).unwrap();
        assert_eq!(a, generate_suite(5, 3, &p).unwrap());
        assert_ne!(a, generate_suite(5, 4, &p).unwrap());
        for s in &a {
            s.validate().unwrap();
            assert!(s.velocity.iter().all(|v| v.fract() == 0.0 && v.abs() <= 5.0));
        }
        let c1 = generate_clip(&a[0]).unwrap();
        let c2 = generate_clip(&a[0]).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn oracle_matches_splat_on_ground_truth() {
        let specs = generate_suite(4, 9, &SuiteParams {
            integer_velocity: false,
            ..SuiteParams::default()
        })
        .unwrap();
        for s in &specs {
            let lc = generate_clip(s).unwrap();
            let gt = lc.ground_truth();
            let (_, computed) = occlusion_pipeline(&gt.forward[0]).unwrap();
            assert_eq!(computed, gt.occlusion[0]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn interior_mass_is_conserved(u in -3.0f64..3.0, v in -3.0f64..3.0, y in 8.0f64..20.0, x in 8.0f64..20.0) {
            let lc = generate_clip(&scene([u, v], [y, x], (8, 10))).unwrap();
            let (e, _) = visibility_oracle(&lc.ground_truth().forward[0], EnergyThresholds::default()).unwrap();
            prop_assert!((e.total() - 48.0 * 48.0).abs() < 1e-4);
        }

        #[test]
        fn integer_motion_is_flow_consistent(u in -3i32..=3, v in -3i32..=3) {
            let lc = generate_clip(&scene([u as f64, v as f64], [16.0, 16.0], (10, 12))).unwrap();
            let gt = lc.ground_truth();
            let frames = lc.clip.frames();
            for k in 0..2 {
                let warped = backward_warp(&frames[k], &gt.backward[k], BorderMode::Clamp).unwrap();
                for i in 0..48 {
                    for j in 0..48 {
                        if gt.occlusion[k].is_valid(i, j) {
                            for c in 0..3 {
                                prop_assert!((warped.get(i, j, c) - frames[k + 1].get(i, j, c)).abs() < 0.02);
                            }
                        }
                    }
                }
            }
        }
    }
}
