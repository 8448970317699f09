//! Evaluating each training objective on small hand-built inputs.

use flowgate::frame::FeatureMap;
use flowgate::losses::{
    inpaint_objective, masked_cross_entropy, masked_pixel_loss, perceptual_loss, smoothness_loss, ssim,
    style_loss, total_variation, FeatureStack, InpaintTerms, LabelMap, LossConfig, Normalization,
};
use flowgate::synth::SceneRng;
use flowgate::{FlowDirection, FlowField, Frame, OcclusionMap};

fn main() -> flowgate::Result<()> {
    let cfg = LossConfig::default();
    let mut rng = SceneRng::new(1);
    let x = Frame::from_fn(24, 24, 3, |_, _, _| rng.next_f64())?;
    let y = x.map(|v| (v + 0.1).min(1.0))?;
    let mask = OcclusionMap::from_fn(24, 24, |i, _| i < 16);

    println!("ssim(x, x) = {}", ssim(&x, &x, cfg.ssim_window)?.mean);
    println!("ssim(x, y) = {:.4}", ssim(&x, &y, cfg.ssim_window)?.mean);
    let pix = masked_pixel_loss(&x, &y, &mask, cfg.alpha, cfg.ssim_window, cfg.normalization)?;
    println!("masked pixel loss (alpha {}) = {pix:.4}", cfg.alpha);

    let flow = FlowField::from_fn(1, 3, FlowDirection::Backward, |_, j| [j as f64, 0.0])?;
    let flat = Frame::filled(1, 3, 1, 0.5)?;
    println!("smoothness of u=[0,1,2] = {:.4}", smoothness_loss(&flow, &flat, Normalization::MeanOverValid)?);
    let tv = Frame::new(2, 2, 1, vec![0.0, 1.0, 0.0, 1.0])?;
    println!("TV of [[0,1],[0,1]] = {}", total_variation(&tv, Normalization::MeanOverValid));

    let fa = FeatureStack::new(vec![FeatureMap::unbounded(2, 2, 1, vec![0.0, 0.0, 0.0, 1.0])?])?;
    let fb = FeatureStack::new(vec![FeatureMap::unbounded(2, 2, 1, vec![0.0; 4])?])?;
    let m = OcclusionMap::from_fn(2, 2, |i, j| (i, j) != (1, 1));
    println!(
        "perceptual: difference in mask-0 pixel {}, in mask-1 pixel {}",
        perceptual_loss(&fa, &fb, &m, cfg.beta)?,
        perceptual_loss(&fa, &fb, &m.inverted(), cfg.beta)?
    );
    let sa = FeatureStack::new(vec![FeatureMap::unbounded(1, 1, 2, vec![1.0, 0.0])?])?;
    let sb = FeatureStack::new(vec![FeatureMap::unbounded(1, 1, 2, vec![0.0, 0.0])?])?;
    println!("style of a unit difference, D=2: {}", style_loss(&sa, &sb, &OcclusionMap::ones(1, 1), cfg.beta)?);

    let uniform = LabelMap::from_probabilities(1, 2, 4, vec![0.25; 8])?;
    let target = LabelMap::new(1, 2, 4, vec![0, 3])?;
    let ce = masked_cross_entropy(&uniform, &target, &OcclusionMap::ones(1, 2), cfg.beta)?;
    println!("cross-entropy of a uniform guess over 4 classes: {ce:.4} (ln 4 = {:.4})", 4f64.ln());

    let ones = InpaintTerms { pix: 1.0, prc: 1.0, sty: 1.0, var: 1.0, seg: 1.0 };
    println!("inpainter objective with unit terms: {}", inpaint_objective(&ones, &cfg));
    Ok(())
}
