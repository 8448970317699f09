//! Command-line front end behind the `flowgate` binary.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::flow::FlowDirection;
use crate::flowpred::{estimate_flow, PredictorKind};
use crate::inpaint::pullpush_inpaint;
use crate::io;
use crate::losses::{
    masked_l1, masked_pixel_loss, pixel_reconstruction_loss, total_variation, LossConfig,
};
use crate::metrics::{endpoint_error, evaluate_prediction, Aux, Report};
use crate::pipeline::{predict_multi, run_ablation, PipelineConfig, Variant};
use crate::synth::{generate_clip, generate_suite, read_clip, write_clip, LabeledClip, SuiteParams};
use crate::viz::{flow_to_color, mask_overlay};
use crate::warp::{backward_warp, occlusion_from_energy, splat_energy, BorderMode, EnergyThresholds, OcclusionMap};

/// Environment variable that overrides every `--seed`.
pub const SEED_ENV: &str = "FLOWGATE_SEED";

#[derive(Debug, Parser)]
#[command(name = "flowgate", version, about = "Disentangled next-frame prediction toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded suite of synthetic clips with ground truth.
    Synth(SynthArgs),
    /// Estimate backward flow between two frames.
    Flow(FlowArgs),
    /// Backward-warp a frame along a flow.
    Warp(WarpArgs),
    /// Occlusion mask (and energy) from a forward flow.
    Occlude(OccludeArgs),
    /// Fill mask-0 pixels of a frame by pull-push.
    Inpaint(InpaintArgs),
    /// Predict the next frame(s) of a clip directory.
    Predict(PredictArgs),
    /// Occlusion-map ablation over a synthetic suite.
    Ablate(AblateArgs),
    /// Score a predicted frame against ground truth.
    Eval(EvalArgs),
    /// Render a flow field or a mask overlay.
    Viz(VizArgs),
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Number of scenes.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Draw real-valued velocities instead of integers.
    #[arg(long)]
    pub fractional: bool,
    #[arg(long, default_value_t = 4)]
    pub frames: usize,
    /// Canvas side length.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 5.0)]
    pub max_speed: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min_speed: f64,
    /// Smallest sprite side; default 16, scaled down on small canvases.
    #[arg(long)]
    pub min_sprite: Option<usize>,
    /// Largest sprite side; default 64, scaled down on small canvases.
    #[arg(long)]
    pub max_sprite: Option<usize>,
    /// Worker threads; only clips are distributed.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl SuiteArgs {
    fn params(&self) -> SuiteParams {
        let d = SuiteParams::default();
        let max_sprite = self.max_sprite.unwrap_or(d.max_sprite * self.size / d.width);
        let min_sprite = self.min_sprite.unwrap_or((d.min_sprite * self.size / d.width).min(max_sprite));
        SuiteParams {
            height: self.size,
            width: self.size,
            num_frames: self.frames,
            max_speed: self.max_speed,
            min_speed: self.min_speed,
            integer_velocity: !self.fractional,
            min_sprite,
            max_sprite,
        }
    }

    fn seed(&self) -> Result<u64> {
        match std::env::var(SEED_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
            Err(_) => Ok(self.seed),
        }
    }

    fn generate(&self) -> Result<Vec<LabeledClip>> {
        let specs = generate_suite(self.n, self.seed()?, &self.params())?;
        in_pool(self.jobs, || specs.par_iter().map(generate_clip).collect())
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub suite: SuiteArgs,
    /// Output directory; one `clip_%03d` subdirectory per scene.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub dst: PathBuf,
    #[arg(long, default_value = "flow.flo")]
    pub out: PathBuf,
    /// Ground-truth backward flow; prints the mean endpoint error.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Pipeline JSON config; only its `solver` section is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Border {
    Clamp,
    Zero,
}

impl From<Border> for BorderMode {
    fn from(b: Border) -> Self {
        match b {
            Border::Clamp => BorderMode::Clamp,
            Border::Zero => BorderMode::Zero,
        }
    }
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    #[arg(long)]
    pub frame: PathBuf,
    /// Backward flow on the output grid.
    #[arg(long)]
    pub flow: PathBuf,
    #[arg(long, default_value = "warped.png")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Border::Clamp)]
    pub border: Border,
}

#[derive(Debug, Args)]
pub struct OccludeArgs {
    /// Forward flow.
    #[arg(long)]
    pub flow: PathBuf,
    #[arg(long, default_value = "mask.png")]
    pub out: PathBuf,
    /// Also write the energy map as a 16-bit PNG.
    #[arg(long)]
    pub energy: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 2.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct InpaintArgs {
    #[arg(long)]
    pub frame: PathBuf,
    /// Binary mask PNG, white = keep.
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, default_value = "inpainted.png")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory of `frame_%03d.png` (plus optional ground truth).
    #[arg(long)]
    pub clip: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "prediction")]
    pub out: PathBuf,
    /// Frames used as history; defaults to all but the last when the clip
    /// has at least three frames, otherwise all.
    #[arg(long)]
    pub history: Option<usize>,
    /// Number of recursive steps.
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    /// Print the effective config as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub suite: SuiteArgs,
    /// Read clips from this directory (as written by `synth`) instead of
    /// generating them.
    #[arg(long)]
    pub clips: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's flow predictor.
    #[arg(long, value_enum)]
    pub predictor: Option<Predictor>,
    /// CSV table destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Predictor {
    Variational,
    GroundTruth,
    Zero,
}

impl From<Predictor> for PredictorKind {
    fn from(p: Predictor) -> Self {
        match p {
            Predictor::Variational => PredictorKind::Variational,
            Predictor::GroundTruth => PredictorKind::GroundTruth,
            Predictor::Zero => PredictorKind::Zero,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Predicted and ground-truth flows (both read as forward).
    #[arg(long, requires = "gt_flow")]
    pub pred_flow: Option<PathBuf>,
    #[arg(long, requires = "pred_flow")]
    pub gt_flow: Option<PathBuf>,
    #[arg(long, requires = "gt_mask")]
    pub pred_mask: Option<PathBuf>,
    #[arg(long, requires = "pred_mask")]
    pub gt_mask: Option<PathBuf>,
    /// Also print loss terms as `key=value` lines.
    #[arg(long)]
    pub losses: bool,
    /// Mask for the loss terms (default: all ones).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value = "eval")]
    pub clip_id: String,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    /// Flow to render with the Middlebury color wheel.
    #[arg(long, conflicts_with = "frame")]
    pub flow: Option<PathBuf>,
    /// Saturation reference for flow rendering.
    #[arg(long)]
    pub max_norm: Option<f64>,
    /// Frame to overlay the mask onto.
    #[arg(long, requires = "mask")]
    pub frame: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, default_value = "viz.png")]
    pub out: PathBuf,
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(f)
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::from_json_file(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let clips = args.suite.generate()?;
    fs::create_dir_all(&args.out)?;
    in_pool(args.suite.jobs, || {
        clips
            .par_iter()
            .enumerate()
            .map(|(k, c)| write_clip(args.out.join(format!("clip_{k:03}")), c))
            .collect::<Result<Vec<()>>>()
    })?;
    writeln!(out, "wrote {} clips to {}", clips.len(), args.out.display())?;
    Ok(())
}

fn flow(args: &FlowArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let src = io::read_frame(&args.src)?;
    let dst = io::read_frame(&args.dst)?;
    let f = estimate_flow(&src, &dst, &cfg.solver)?;
    io::write_flo(&args.out, &f)?;
    if let Some(gt) = &args.gt {
        let gt = io::read_flo(gt, FlowDirection::Backward)?;
        writeln!(out, "epe={}", endpoint_error(&f, &gt, None)?.mean)?;
    }
    Ok(())
}

fn warp(args: &WarpArgs) -> Result<()> {
    let frame = io::read_frame(&args.frame)?;
    let flow = io::read_flo(&args.flow, FlowDirection::Backward)?;
    io::write_frame(&args.out, &backward_warp(&frame, &flow, args.border.into())?.clamped())
}

fn occlude(args: &OccludeArgs, out: &mut dyn Write) -> Result<()> {
    let flow = io::read_flo(&args.flow, FlowDirection::Forward)?;
    let energy = splat_energy(&flow)?;
    let t = EnergyThresholds {
        lo: args.lo,
        hi: args.hi,
        eps: args.eps,
    };
    let mask = occlusion_from_energy(&energy, t)?;
    io::write_mask(&args.out, &mask)?;
    if let Some(p) = &args.energy {
        io::write_energy_png(p, &energy)?;
    }
    writeln!(out, "occluded={} total_energy={}", mask.count_occluded(), energy.total())?;
    Ok(())
}

fn inpaint(args: &InpaintArgs) -> Result<()> {
    let frame = io::read_frame(&args.frame)?;
    let mask = io::read_mask(&args.mask)?;
    io::write_frame(&args.out, &pullpush_inpaint(&frame, &mask)?)
}

fn predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    if args.print_config {
        writeln!(out, "{}", serde_json::to_string_pretty(&cfg)?)?;
        return Ok(());
    }
    let clip = read_clip(&args.clip)?;
    let n = args
        .history
        .unwrap_or(if clip.len() >= 3 { clip.len() - 1 } else { clip.len() });
    let history = clip.history(n)?;
    let preds = predict_multi(&history, args.horizon, &cfg)?;
    let mut steps = Vec::with_capacity(preds.len());
    for (k, p) in preds.iter().enumerate() {
        let dir = if preds.len() == 1 {
            args.out.clone()
        } else {
            args.out.join(format!("step_{k:03}"))
        };
        p.write(&dir)?;
        // Score against the clip's own frames when they exist.
        if let Some(target) = clip.frames().get(n + k) {
            let gt = clip.ground_truth();
            let gt_fwd = gt.and_then(|g| g.forward.get(n - 1 + k));
            let gt_mask = gt.and_then(|g| g.occlusion.get(n - 1 + k));
            let aux = Aux {
                flow: gt_fwd.map(|g| (&p.flow_fwd, g)),
                mask: gt_mask.map(|g| (&p.mask, g)),
            };
            steps.push(evaluate_prediction(&p.final_frame.clamped(), target, &aux)?);
        }
    }
    let id = args.clip.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let report = Report::new(id, steps, serde_json::to_value(&cfg)?);
    let text = serde_json::to_string_pretty(&report)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("report.json"), &text)?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn ablate(args: &AblateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.predictor {
        cfg.predictor = p.into();
    }
    let (name, clips) = match &args.clips {
        Some(dir) => {
            let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.join("meta.json").exists())
                .collect();
            entries.sort();
            let clips = entries
                .iter()
                .map(|p| {
                    let spec = serde_json::from_slice(&fs::read(p.join("meta.json"))?)?;
                    Ok(LabeledClip {
                        spec,
                        clip: read_clip(p)?,
                        coverage: Vec::new(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (dir.display().to_string(), clips)
        }
        None => (
            format!("seed{}_n{}", args.suite.seed()?, args.suite.n),
            args.suite.generate()?,
        ),
    };
    let table = run_ablation(&[(name, clips)], &Variant::standard(), &cfg, args.suite.jobs)?;
    match &args.out {
        Some(p) => table.write_csv(fs::File::create(p)?)?,
        None => table.write_csv(&mut *out)?,
    }
    if let Some(p) = &args.json {
        fs::write(p, serde_json::to_string_pretty(&table)?)?;
    }
    Ok(())
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let pred = io::read_frame(&args.pred)?;
    let gt = io::read_frame(&args.gt)?;
    let flows = match (&args.pred_flow, &args.gt_flow) {
        (Some(p), Some(g)) => Some((
            io::read_flo(p, FlowDirection::Forward)?,
            io::read_flo(g, FlowDirection::Forward)?,
        )),
        _ => None,
    };
    let masks = match (&args.pred_mask, &args.gt_mask) {
        (Some(p), Some(g)) => Some((io::read_mask(p)?, io::read_mask(g)?)),
        _ => None,
    };
    let aux = Aux {
        flow: flows.as_ref().map(|(a, b)| (a, b)),
        mask: masks.as_ref().map(|(a, b)| (a, b)),
    };
    let step = evaluate_prediction(&pred, &gt, &aux)?;
    let cfg = load_config(args.config.as_deref())?;
    let report = Report::new(args.clip_id.clone(), vec![step], serde_json::to_value(&cfg)?);
    let text = serde_json::to_string_pretty(&report)?;
    writeln!(out, "{text}")?;
    if let Some(p) = &args.json {
        fs::write(p, &text)?;
    }
    if args.losses {
        let (h, w) = pred.dims();
        let mask = match &args.mask {
            Some(p) => io::read_mask(p)?,
            None => OcclusionMap::ones(h, w),
        };
        for (k, v) in loss_report(&pred, &gt, &mask, &cfg.losses)? {
            writeln!(out, "{k}={v}")?;
        }
    }
    Ok(())
}

/// Flat `(name, value)` list of the frame-level loss terms.
pub fn loss_report(
    pred: &crate::frame::Frame,
    gt: &crate::frame::Frame,
    mask: &OcclusionMap,
    cfg: &LossConfig,
) -> Result<Vec<(&'static str, f64)>> {
    let (win, norm) = (cfg.ssim_window, cfg.normalization);
    Ok(vec![
        ("l1_valid", masked_l1(pred, gt, mask, norm)?),
        ("l1_occluded", masked_l1(pred, gt, &mask.inverted(), norm)?),
        ("pixel_valid", masked_pixel_loss(pred, gt, mask, cfg.alpha, win, norm)?),
        ("pixel_occluded", masked_pixel_loss(pred, gt, &mask.inverted(), cfg.alpha, win, norm)?),
        ("pixel_reconstruction", pixel_reconstruction_loss(pred, gt, mask, cfg)?),
        ("total_variation", total_variation(pred, norm)),
    ])
}

fn viz(args: &VizArgs) -> Result<()> {
    if let Some(f) = &args.flow {
        // The color mapping does not depend on the direction tag.
        let flow = io::read_flo(f, FlowDirection::Forward)?;
        return io::write_frame(&args.out, &flow_to_color(&flow, args.max_norm)?);
    }
    match (&args.frame, &args.mask) {
        (Some(frame), Some(mask)) => {
            let f = io::read_frame(frame)?;
            let m = io::read_mask(mask)?;
            io::write_frame(&args.out, &mask_overlay(&f, &m, [1.0, 0.0, 0.0], 0.5)?)
        }
        _ => Err(invalid("viz needs --flow, or --frame with --mask")),
    }
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Flow(a) => flow(a, out),
        Command::Warp(a) => warp(a),
        Command::Occlude(a) => occlude(a, out),
        Command::Inpaint(a) => inpaint(a),
        Command::Predict(a) => predict(a, out),
        Command::Ablate(a) => ablate(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Viz(a) => viz(a),
    }
}

/// Parses `argv` and runs it, mapping failures onto the documented exit
/// codes.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
