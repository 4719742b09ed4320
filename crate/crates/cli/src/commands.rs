use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use vpq_core::geometry::equivalent_pixels_viewport;
use vpq_core::grade::{
    grade_from_qp, grade_from_tile_values, per_tile_psnr, read_qp_map, read_tile_values,
    FrameValues, PsnrScale, Y4mLumaReader,
};
use vpq_core::mask::{exact_mask_with, project_viewport_with, write_mask, write_pgm, write_png};
use vpq_core::session::{
    evaluate_session, evaluate_session_with_grades, load_trace, segment_table, write_error_table,
    write_segment_table, BatchManifest, MaskSource, Method, RandomWalk, SessionReport,
};
use vpq_core::{GradeMap, MaskBank, QualityTimeline, SessionConfig, SessionTrace, TileGrid};

use crate::output::{bank_dir, write_atomic};
use crate::{BankArgs, EvaluateArgs, MaskArgs, StudyArgs, SynthArgs};

pub fn mask(a: MaskArgs) -> Result<()> {
    let v = &a.viewport;
    let options = v.projection();
    let mask = if a.exact {
        exact_mask_with(a.pog, v.fov, v.resolution, options.center)
    } else {
        project_viewport_with(a.pog, v.fov, v.resolution, &options)?
    };
    let closed = equivalent_pixels_viewport(v.resolution, v.fov);
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "pog {} fov {} at {} ({})",
        a.pog,
        v.fov,
        v.resolution,
        if a.exact {
            "exact".to_string()
        } else {
            format!("{} samples per side", v.samples)
        }
    )?;
    writeln!(
        out,
        "area {:.1} equivalent pixels, closed form {closed:.1} ({:+.3}%)",
        mask.area(),
        100.0 * (mask.area() - closed) / closed
    )?;
    writeln!(
        out,
        "{} pixels in {} raster component(s), {} across the seam",
        mask.pixel_count(),
        mask.components(false),
        mask.components(true)
    )?;
    if let Some(path) = &a.out {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext.to_ascii_lowercase().as_str() {
            "pgm" => write_atomic(path, |w| write_pgm(&mask, w))?,
            "png" => write_atomic(path, |w| write_png(&mask, w))?,
            "vpm" => write_atomic(path, |w| write_mask(&mask, w))?,
            _ => crate::usage("--out must end in .pgm, .png or .vpm"),
        }
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

pub fn bank(a: BankArgs) -> Result<()> {
    let v = &a.viewport;
    let (rows, cols) = a.grid;
    let options = v.projection();
    let bank = crate::output::bank(Some(&a.cache), rows, cols, v.fov, v.resolution, options)?;
    println!(
        "{} masks ({rows}x{cols}) in {}",
        bank.len(),
        bank_dir(&a.cache, rows, cols, v.fov, v.resolution, &options).display()
    );
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn frame_grade(values: &FrameValues, frame: usize) -> vpq_core::Result<&[f64]> {
    values
        .get(&frame)
        .map(Vec::as_slice)
        .ok_or_else(|| vpq_core::Error::InvalidArgument(format!("no grades for frame {frame}")))
}

/// Per-frame grade maps read from files, in place of binary variant grades.
enum FrameGrades {
    Tiles(TileGrid, FrameValues),
    Qp(TileGrid, FrameValues, (f64, f64)),
}

impl FrameGrades {
    fn from_args(a: &EvaluateArgs, config: &SessionConfig) -> Result<Option<Self>> {
        let res = config.resolution;
        if let Some(path) = &a.tile_values {
            let grid = TileGrid::new(res, a.tiles.0, a.tiles.1)?;
            let values = read_tile_values(open(path)?, &grid)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(Some(FrameGrades::Tiles(grid, values)));
        }
        if let Some(path) = &a.qp_map {
            let units = TileGrid::blocks(res, a.qp_block.0, a.qp_block.1)?;
            let values = read_qp_map(open(path)?, &units)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(Some(FrameGrades::Qp(units, values, a.qp_range)));
        }
        if let (Some(r), Some(d)) = (&a.reference, &a.distorted) {
            let grid = TileGrid::new(res, a.tiles.0, a.tiles.1)?;
            let scale = PsnrScale::new(a.psnr_range.0, a.psnr_range.1)?;
            let mut refs =
                Y4mLumaReader::new(open(r)?).with_context(|| format!("reading {}", r.display()))?;
            let mut dist =
                Y4mLumaReader::new(open(d)?).with_context(|| format!("reading {}", d.display()))?;
            let mut values = FrameValues::new();
            for frame in 0.. {
                match (refs.next_frame()?, dist.next_frame()?) {
                    (Some(x), Some(y)) => {
                        let tiles = per_tile_psnr(&x, &y, &grid, 255.0)?;
                        values.insert(frame, tiles.iter().map(|t| scale.grade(t.psnr)).collect());
                    }
                    (None, None) => break,
                    _ => bail!("{} and {} differ in length", r.display(), d.display()),
                }
            }
            return Ok(Some(FrameGrades::Tiles(grid, values)));
        }
        Ok(None)
    }

    fn grade(&self, frame: usize) -> vpq_core::Result<GradeMap> {
        match self {
            FrameGrades::Tiles(grid, values) => {
                grade_from_tile_values(grid, frame_grade(values, frame)?)
            }
            FrameGrades::Qp(units, values, (lo, hi)) => {
                grade_from_qp(units, frame_grade(values, frame)?, *lo, *hi)
            }
        }
    }
}

fn ms_label(ms: f64) -> String {
    if ms.fract() == 0.0 {
        format!("{ms:.0}")
    } else {
        ms.to_string()
    }
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let base = a.session.config()?;
    let trace: SessionTrace = load_trace(&a.trace, a.format.into(), a.axes, a.fps)
        .with_context(|| format!("reading {}", a.trace.display()))?;
    let grades = FrameGrades::from_args(&a, &base)?;
    let bank: Option<MaskBank> = match base.method {
        Method::Vaqm => None,
        Method::Avaqm { rows, cols } => Some(crate::output::bank(
            a.session.bank_cache.as_deref(),
            rows,
            cols,
            base.fov,
            base.resolution,
            base.projection,
        )?),
    };
    let source = bank
        .as_ref()
        .map_or(MaskSource::Projection, MaskSource::Bank);
    let stem = a
        .trace
        .file_stem()
        .map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());

    for &ms in &a.session.segment_ms {
        let config = base.clone().with_segment_ms(ms);
        let timeline: QualityTimeline = match &grades {
            None => evaluate_session(&trace, &config, source)?,
            Some(g) => evaluate_session_with_grades(&trace, &config, source, |i| g.grade(i))?,
        };
        let name = format!("{stem}-{}ms", ms_label(ms));
        let frames_csv = format!("{name}.csv");
        write_atomic(&a.out.join(&frames_csv), |w| timeline.write_csv(w))?;
        let report = SessionReport {
            trace: a.trace.display().to_string(),
            fps: trace.fps(),
            frames: trace.len(),
            config: config.echo(),
            summary: timeline.summary(),
            frames_csv,
        };
        write_atomic(&a.out.join(format!("{name}.json")), |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
            Ok(())
        })?;
        println!(
            "{} ms: q_window {:.4}, f_window {:.2}% above t_q {} ({} frames, {})",
            ms_label(ms),
            timeline.q_window(),
            timeline.f_window(),
            config.t_q,
            trace.len(),
            config.method
        );
    }
    Ok(())
}

pub fn study(a: StudyArgs) -> Result<()> {
    let manifest = BatchManifest::from_path(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    if manifest.is_empty() {
        bail!(vpq_core::Error::InvalidArgument(format!(
            "{} lists no sessions",
            a.manifest.display()
        )));
    }
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let cache = a.bank_cache.as_deref();
    let outcome = manifest.run(base, |rows, cols, c| {
        crate::output::bank(cache, rows, cols, c.fov, c.resolution, c.projection)
    })?;
    let rows = segment_table(&outcome.sessions);
    write_atomic(&a.out.join("segments.csv"), |w| {
        write_segment_table(&rows, w)
    })?;
    println!(
        "{} sessions, {} table rows",
        outcome.sessions.len(),
        rows.len()
    );
    for r in &rows {
        println!(
            "  {:<16} {:>6} ms  q_window {:.4}  f_window {:.2}%",
            r.content,
            ms_label(r.segment_ms),
            r.q_window,
            r.f_window
        );
    }
    if !outcome.approximation.is_empty() {
        write_atomic(&a.out.join("errors.csv"), |w| {
            write_error_table(&outcome.approximation, w)
        })?;
        for r in &outcome.approximation {
            println!(
                "  {}x{} masks: mean relative error {:.3}%",
                r.grid_rows, r.grid_cols, r.mean_relative_error
            );
        }
    }
    Ok(())
}

pub fn synth_trace(a: SynthArgs) -> Result<()> {
    let walk = RandomWalk {
        duration_s: a.duration_s,
        fps: a.fps,
        speed_deg_s: a.speed,
        dwell_probability: a.dwell,
        heading_jitter_deg: a.jitter,
        seed: a.seed,
    };
    let trace = walk.generate()?;
    match &a.out {
        Some(path) => write_atomic(path, |w| trace.write_csv(w))?,
        None => trace.write_csv(io::stdout().lock())?,
    }
    Ok(())
}
