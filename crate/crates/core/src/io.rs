//! File formats: 8-bit PNG frames and masks, 16-bit PNG energy maps and
//! Middlebury `.flo` flow fields.
//!
//! `.flo` layout (little-endian): `f32` magic `202021.25` (the bytes `PIEH`),
//! `i32` width, `i32` height, then `width·height` interleaved `(u, v)` `f32`
//! pairs in row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, RgbImage};

use crate::error::{Error, Result};
use crate::flow::{FlowDirection, FlowField};
use crate::frame::Frame;
use crate::warp::{EnergyMap, OcclusionMap};

pub const FLO_MAGIC: f32 = 202021.25;

/// Energy PNGs store `round(E · ENERGY_PNG_SCALE)` in 16 bits, so densities
/// up to `65535 / 8192 ≈ 8` are representable.
pub const ENERGY_PNG_SCALE: f64 = 8192.0;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

#[inline]
fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Converts a decoded image to a frame: grayscale images become 1-channel,
/// everything else 3-channel RGB (alpha dropped). Samples map as `v / 255`.
pub fn frame_from_image(img: &DynamicImage) -> Result<Frame> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            let g = img.to_luma8();
            Frame::new(h, w, 1, g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect())
        }
        _ => {
            let rgb = img.to_rgb8();
            Frame::new(h, w, 3, rgb.into_raw().into_iter().map(|v| v as f64 / 255.0).collect())
        }
    }
}

pub fn read_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let img = image::open(path)?;
    frame_from_image(&img).map_err(|e| format_err(path, e.to_string()))
}

/// Writes 1-channel frames as 8-bit gray and 3-channel frames as 8-bit RGB,
/// with `round(v·255)` clamped to `[0, 255]`.
pub fn write_frame(path: impl AsRef<Path>, frame: &Frame) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let bytes: Vec<u8> = frame.data().iter().map(|&v| to_u8(v)).collect();
    match frame.channels() {
        1 => GrayImage::from_raw(w, h, bytes).unwrap().save(path)?,
        3 => RgbImage::from_raw(w, h, bytes).unwrap().save(path)?,
        c => return Err(format_err(path, format!("cannot write {c}-channel frame as PNG"))),
    }
    Ok(())
}

/// Occlusion masks are stored as 8-bit gray `{0, 255}`.
pub fn write_mask(path: impl AsRef<Path>, mask: &OcclusionMap) -> Result<()> {
    let bytes = mask.values().iter().map(|&m| m * 255).collect();
    GrayImage::from_raw(mask.width() as u32, mask.height() as u32, bytes)
        .unwrap()
        .save(path)?;
    Ok(())
}

/// Reads a mask PNG; any gray level ≥ 128 counts as 1.
pub fn read_mask(path: impl AsRef<Path>) -> Result<OcclusionMap> {
    let g = image::open(path.as_ref())?.to_luma8();
    let (w, h) = (g.width() as usize, g.height() as usize);
    OcclusionMap::new(h, w, g.into_raw().into_iter().map(|v| (v >= 128) as u8).collect())
}

pub fn write_energy_png(path: impl AsRef<Path>, energy: &EnergyMap) -> Result<()> {
    let (h, w) = energy.dims();
    let px: Vec<u16> = energy
        .density()
        .iter()
        .map(|&e| (e * ENERGY_PNG_SCALE).round().clamp(0.0, 65535.0) as u16)
        .collect();
    ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(w as u32, h as u32, px)
        .unwrap()
        .save(path)?;
    Ok(())
}

pub fn read_energy_png(path: impl AsRef<Path>) -> Result<EnergyMap> {
    let g = image::open(path.as_ref())?.to_luma16();
    let (w, h) = (g.width() as usize, g.height() as usize);
    EnergyMap::new(
        h,
        w,
        g.into_raw().into_iter().map(|v| v as f64 / ENERGY_PNG_SCALE).collect(),
    )
}

/// Serializes a flow field to `.flo` bytes. Components are narrowed to `f32`.
pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let (h, w) = flow.dims();
    let mut out = Vec::with_capacity(12 + h * w * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for v in flow.vectors() {
        out.extend_from_slice(&(v[0] as f32).to_le_bytes());
        out.extend_from_slice(&(v[1] as f32).to_le_bytes());
    }
    out
}

/// Parses `.flo` bytes. The file carries no direction tag, so the caller
/// supplies it.
pub fn decode_flo(bytes: &[u8], direction: FlowDirection, path: &Path) -> Result<FlowField> {
    let word = |k: usize| -> [u8; 4] { bytes[k..k + 4].try_into().unwrap() };
    if bytes.len() < 12 {
        return Err(format_err(path, "truncated header"));
    }
    if f32::from_le_bytes(word(0)) != FLO_MAGIC {
        return Err(format_err(path, "bad magic (expected PIEH)"));
    }
    let w = i32::from_le_bytes(word(4));
    let h = i32::from_le_bytes(word(8));
    if w <= 0 || h <= 0 || w > 1 << 15 || h > 1 << 15 {
        return Err(format_err(path, format!("implausible dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = 12 + w * h * 8;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let vectors = (0..w * h)
        .map(|k| {
            let base = 12 + k * 8;
            [
                f32::from_le_bytes(word(base)) as f64,
                f32::from_le_bytes(word(base + 4)) as f64,
            ]
        })
        .collect();
    FlowField::new(h, w, direction, vectors).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_flo(flow))?;
    Ok(())
}

pub fn read_flo(path: impl AsRef<Path>, direction: FlowDirection) -> Result<FlowField> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_flo(&bytes, direction, path)
}
