//! Disentangled next-frame prediction.
//!
//! A frame is predicted in two independent stages. Motion propagation
//! extrapolates optical flow from the history and backward-warps the last
//! frame. Generation fills in only the pixels the warp cannot be trusted
//! for. Those pixels are found by splatting one unit of energy per source
//! pixel along the forward flow: targets that receive nothing were
//! disoccluded, and targets that receive two or more units are contested.
//!
//! The crate is organised by stage:
//!
//! - [`frame`], [`flow`], [`pyramid`], [`clip`], [`io`]: containers and file formats
//! - [`warp`]: backward warping, energy splatting, occlusion maps
//! - [`flowpred`]: variational flow estimation and constant-velocity extrapolation
//! - [`losses`]: the flow and inpainting objectives
//! - [`inpaint`]: partial convolution, pull–push filling, gated composition
//! - [`synth`]: synthetic clips with exact flow and occlusion ground truth
//! - [`metrics`]: PSNR, SSIM, endpoint error, reports
//! - [`pipeline`]: next-frame and recursive prediction, ablations
//!
//! Runnable walkthroughs live in `examples/`; the `flowgate` binary wraps
//! them for batch use.

pub mod cli;
pub mod clip;
pub mod error;
pub mod flow;
pub mod flowpred;
pub mod frame;
pub mod inpaint;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod pipeline;
pub mod pyramid;
pub mod synth;
pub mod viz;
pub mod warp;

pub use clip::{Clip, GroundTruth};
pub use error::{Error, Result};
pub use flow::{FlowDirection, FlowField};
pub use frame::Frame;
pub use warp::{BorderMode, EnergyMap, OcclusionMap};
