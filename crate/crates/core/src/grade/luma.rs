//! 8-bit luma frames and per-tile MSE / PSNR.

use std::io::Read;

use super::TileGrid;
use crate::error::{Error, Result};
use crate::geometry::Resolution;

/// One planar 8-bit luma frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaFrame {
    resolution: Resolution,
    data: Vec<u8>,
}

impl LumaFrame {
    pub fn new(resolution: Resolution, data: Vec<u8>) -> Result<Self> {
        if data.len() != resolution.pixel_count() {
            return Err(Error::Format(format!(
                "{} luma samples for a {resolution} frame",
                data.len()
            )));
        }
        Ok(Self { resolution, data })
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

/// Reads one frame of `n_h · n_v` bytes.
pub fn read_raw_luma<R: Read>(mut reader: R, res: Resolution) -> Result<LumaFrame> {
    let mut data = vec![0u8; res.pixel_count()];
    reader.read_exact(&mut data)?;
    LumaFrame::new(res, data)
}

fn y4m_error(e: y4m::Error) -> Error {
    match e {
        y4m::Error::IoError(io) => Error::Io(io),
        other => Error::Format(format!("y4m: {other}")),
    }
}

/// Luma planes of an 8-bit YUV4MPEG2 stream, one frame at a time.
pub struct Y4mLumaReader<R: Read> {
    decoder: y4m::Decoder<R>,
    resolution: Resolution,
}

impl<R: Read> Y4mLumaReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let decoder = y4m::Decoder::new(reader).map_err(y4m_error)?;
        if decoder.get_bit_depth() != 8 {
            return Err(Error::Format(format!(
                "y4m bit depth {} (only 8-bit luma is supported)",
                decoder.get_bit_depth()
            )));
        }
        let resolution = Resolution::new(decoder.get_width(), decoder.get_height())?;
        Ok(Self {
            decoder,
            resolution,
        })
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    /// `None` at the end of the stream.
    pub fn next_frame(&mut self) -> Result<Option<LumaFrame>> {
        match self.decoder.read_frame() {
            Ok(frame) => LumaFrame::new(self.resolution, frame.get_y_plane().to_vec()).map(Some),
            Err(y4m::Error::EOF) => Ok(None),
            Err(e) => Err(y4m_error(e)),
        }
    }
}

/// Distortion of one tile. `psnr` is `+∞` for identical tiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileError {
    pub mse: f64,
    pub psnr: f64,
}

/// Linear map of PSNR onto `[0, 1]` between `floor` and `ceiling` dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrScale {
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for PsnrScale {
    fn default() -> Self {
        Self {
            floor: 20.0,
            ceiling: 50.0,
        }
    }
}

impl PsnrScale {
    pub fn new(floor: f64, ceiling: f64) -> Result<Self> {
        if !floor.is_finite() || !ceiling.is_finite() || floor >= ceiling {
            return Err(Error::invalid(format!(
                "PSNR floor {floor} must be below ceiling {ceiling}"
            )));
        }
        Ok(Self { floor, ceiling })
    }

    pub fn grade(&self, psnr: f64) -> f64 {
        if psnr == f64::INFINITY {
            return 1.0;
        }
        ((psnr - self.floor) / (self.ceiling - self.floor)).clamp(0.0, 1.0)
    }
}

/// MSE and `10·log10(peak² / MSE)` of every tile of `grid`, row-major.
pub fn per_tile_psnr(
    reference: &LumaFrame,
    test: &LumaFrame,
    grid: &TileGrid,
    peak: f64,
) -> Result<Vec<TileError>> {
    for f in [reference, test] {
        if f.resolution != grid.resolution() {
            return Err(Error::ResolutionMismatch {
                expected: grid.resolution(),
                found: f.resolution,
            });
        }
    }
    let n_h = grid.resolution().n_h();
    let mut out = Vec::with_capacity(grid.len());
    for r in 0..grid.rows() {
        let (r0, r1) = grid.row_range(r);
        for c in 0..grid.cols() {
            let (c0, c1) = grid.col_range(c);
            let mut sse = 0u64;
            for row in r0..r1 {
                let a = &reference.data[row * n_h + c0..row * n_h + c1];
                let b = &test.data[row * n_h + c0..row * n_h + c1];
                for (&x, &y) in a.iter().zip(b) {
                    let d = x as i64 - y as i64;
                    sse += (d * d) as u64;
                }
            }
            let mse = sse as f64 / grid.tile_pixels(r, c) as f64;
            let psnr = if sse == 0 {
                f64::INFINITY
            } else {
                10.0 * (peak * peak / mse).log10()
            };
            out.push(TileError { mse, psnr });
        }
    }
    Ok(out)
}
