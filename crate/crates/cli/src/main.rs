//! `vpq`: viewport-aware quality assessment for 360-degree video sessions.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use vpq_core::mask::{CenterWeighting, ProjectionOptions, DEFAULT_SAMPLES_PER_SIDE};
use vpq_core::session::{parse_footprint, AxisConvention, Method, TraceFormat};
use vpq_core::{FieldOfView, Normalization, Resolution, SessionConfig, SphericalPoint};

const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

#[derive(Parser, Debug)]
#[command(
    name = "vpq",
    version,
    about = "Viewport-aware quality assessment for equirectangular 360-degree video",
    after_help = "Angles are in degrees: theta is longitude in [0, 360), phi is colatitude \
                  in [0, 180] with 90 on the equator. Durations are in milliseconds unless \
                  the flag says otherwise.\n\nExit status: 0 success, 2 usage error, \
                  65 invalid input data, 74 file system error."
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Project one viewport onto the frame and export the mask.
    Mask(MaskArgs),
    /// Build (or refresh) a cached bank of precomputed masks.
    Bank(BankArgs),
    /// Evaluate one head-movement trace.
    Evaluate(EvaluateArgs),
    /// Run a batch manifest and write the aggregate tables.
    Study(StudyArgs),
    /// Generate a seeded random-walk trace.
    SynthTrace(SynthArgs),
}

#[derive(Args, Debug, Clone)]
struct ViewportArgs {
    /// Frame size, WIDTHxHEIGHT in pixels.
    #[arg(long, default_value = "3840x1920")]
    resolution: Resolution,
    /// Field of view, HORIZONTALxVERTICAL in degrees.
    #[arg(long, default_value = "100x85", value_parser = parse_fov)]
    fov: FieldOfView,
    /// Boundary steps per viewport side used by the rasterizer.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_SIDE)]
    samples: usize,
    /// Gaussian center weighting with this standard deviation in degrees.
    #[arg(long, value_name = "DEG")]
    center_sigma: Option<f64>,
}

impl ViewportArgs {
    fn projection(&self) -> ProjectionOptions {
        ProjectionOptions {
            samples_per_side: self.samples,
            center: match self.center_sigma {
                Some(sigma_deg) => CenterWeighting::Gaussian { sigma_deg },
                None => CenterWeighting::None,
            },
        }
    }
}

#[derive(Args, Debug)]
struct MaskArgs {
    /// Point of gaze, THETA,PHI in degrees.
    #[arg(long, value_parser = parse_pog, allow_hyphen_values = true)]
    pog: SphericalPoint,
    #[command(flatten)]
    viewport: ViewportArgs,
    /// Use the exact per-pixel pyramid test instead of the rasterizer.
    #[arg(long)]
    exact: bool,
    /// Output file; the extension picks the format (.pgm, .png or .vpm).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BankArgs {
    /// Bank grid, ROWSxCOLS.
    #[arg(long, value_parser = parse_grid)]
    grid: (usize, usize),
    #[command(flatten)]
    viewport: ViewportArgs,
    /// Cache directory; the bank goes into a subdirectory named after its parameters.
    #[arg(long)]
    cache: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Project the viewport of every frame.
    Vaqm,
    /// Look up the nearest mask of a precomputed bank (needs --grid).
    Avaqm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// frame,theta_deg,phi_deg
    Canonical,
    /// frame,qw,qx,qy,qz
    Quaternion,
}

#[derive(Args, Debug)]
struct SessionArgs {
    #[command(flatten)]
    viewport: ViewportArgs,
    /// Segment duration in milliseconds; repeat for several runs.
    #[arg(long = "segment-ms", default_value = "2000", num_args = 1..)]
    segment_ms: Vec<f64>,
    /// High-quality tiles per variant: area-only, area+neighbors, or a JSON file.
    #[arg(long, default_value = "area+neighbors")]
    footprint: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Vaqm)]
    method: MethodArg,
    /// Bank grid for --method avaqm, ROWSxCOLS.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Quality threshold for the fraction of frames above it, in [0, 1].
    #[arg(long = "t-q", default_value_t = 0.8)]
    t_q: f64,
    /// mask-area or analytic.
    #[arg(long, default_value = "mask-area")]
    normalization: Normalization,
    /// Directory for cached mask banks.
    #[arg(long)]
    bank_cache: Option<PathBuf>,
}

impl SessionArgs {
    fn method(&self) -> Method {
        match (self.method, self.grid) {
            (MethodArg::Avaqm, Some((rows, cols))) => Method::Avaqm { rows, cols },
            (MethodArg::Avaqm, None) => usage("--method avaqm needs --grid ROWSxCOLS"),
            (MethodArg::Vaqm, Some(_)) => usage("--grid only applies to --method avaqm"),
            (MethodArg::Vaqm, None) => Method::Vaqm,
        }
    }

    fn config(&self) -> anyhow::Result<SessionConfig> {
        let mut c = SessionConfig::new(self.viewport.resolution)?;
        c.fov = self.viewport.fov;
        c.projection = self.viewport.projection();
        c.footprint = parse_footprint(&self.footprint, std::path::Path::new("."))?;
        c.method = self.method();
        c.t_q = self.t_q;
        c.normalization = self.normalization;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Trace CSV.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Canonical)]
    format: FormatArg,
    /// Axis convention of quaternion traces: native or y-up.
    #[arg(long, default_value = "native")]
    axes: AxisConvention,
    /// Frames per second of the trace.
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[command(flatten)]
    session: SessionArgs,
    /// Per-tile grades in [0, 1] (frame,tile_row,tile_col,value) instead of binary variant grades.
    #[arg(long, conflicts_with_all = ["qp_map", "reference"])]
    tile_values: Option<PathBuf>,
    /// Tile grid of --tile-values or of --reference/--distorted PSNR, ROWSxCOLS.
    #[arg(long, default_value = "5x8", value_parser = parse_grid)]
    tiles: (usize, usize),
    /// Per-block QP map (frame,unit_row,unit_col,qp); lower QP grades higher.
    #[arg(long, conflicts_with = "reference")]
    qp_map: Option<PathBuf>,
    /// Block size of --qp-map, WIDTHxHEIGHT in pixels.
    #[arg(long, default_value = "64x64", value_parser = parse_grid)]
    qp_block: (usize, usize),
    /// QP mapped to grade 1 and QP mapped to grade 0, MIN,MAX.
    #[arg(long, default_value = "22,51", value_parser = parse_pair)]
    qp_range: (f64, f64),
    /// Reference 8-bit Y4M video; grades come from per-tile luma PSNR against --distorted.
    #[arg(long, requires = "distorted")]
    reference: Option<PathBuf>,
    /// Distorted 8-bit Y4M video.
    #[arg(long, requires = "reference")]
    distorted: Option<PathBuf>,
    /// PSNR in dB mapped to grades 0 and 1, FLOOR,CEILING.
    #[arg(long, default_value = "20,50", value_parser = parse_pair)]
    psnr_range: (f64, f64),
    /// Output directory for the per-frame CSV and JSON report.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Batch manifest (JSON); trace paths are relative to it.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for segments.csv and errors.csv.
    #[arg(short, long)]
    out: PathBuf,
    /// Directory for cached mask banks.
    #[arg(long)]
    bank_cache: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Length in seconds.
    #[arg(long, default_value_t = 60.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Angular speed while moving, degrees per second.
    #[arg(long, default_value_t = 30.0)]
    speed: f64,
    /// Chance of holding still on each frame, in [0, 1].
    #[arg(long, default_value_t = 0.2)]
    dwell: f64,
    /// Standard deviation of the per-frame heading change, degrees.
    #[arg(long, default_value_t = 10.0)]
    jitter: f64,
    /// Output CSV (frame,theta_deg,phi_deg); stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn usage(msg: &str) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::ArgumentConflict, msg)
        .exit()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once([',', 'x'])
        .ok_or_else(|| format!("'{s}' is not a pair A,B"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("'{v}' is not a number"))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_pog(s: &str) -> Result<SphericalPoint, String> {
    let (theta, phi) = parse_pair(s)?;
    if !(0.0..=180.0).contains(&phi) {
        return Err(format!("phi {phi} outside [0, 180]"));
    }
    SphericalPoint::try_new(theta, phi).map_err(|e| e.to_string())
}

fn parse_fov(s: &str) -> Result<FieldOfView, String> {
    let (h, v) = parse_pair(s)?;
    FieldOfView::new(h, v).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("'{s}' is not AxB"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("'{v}' is not a positive integer"))
    };
    Ok((num(a)?, num(b)?))
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Canonical => TraceFormat::Canonical,
            FormatArg::Quaternion => TraceFormat::Quaternion,
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<vpq_core::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_DATA };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_DATA
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Mask(a) => commands::mask(a),
        Command::Bank(a) => commands::bank(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Study(a) => commands::study(a),
        Command::SynthTrace(a) => commands::synth_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
