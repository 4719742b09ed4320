//! Mask images and the lossless mask file format.
//!
//! The `.vpm` format is little-endian:
//!
//! ```text
//! magic "VPM1"
//! u32 n_h, u32 n_v
//! f64 pog theta, f64 pog phi
//! u8 has_fov, f64 theta_vp, f64 phi_vp
//! u8 weight kind (0 = sin(phi) per row, 1 = explicit)
//! f64 area
//! u32 span count, then per span u32 col, u32 start, u32 end
//! explicit only: one f32 per covered pixel, in span order
//! ```

use std::io::{Read, Write};

use super::{ColumnSpan, ViewportMask, Weights};
use crate::error::{Error, Result};
use crate::geometry::{FieldOfView, Resolution, SphericalPoint};

const MAGIC: &[u8; 4] = b"VPM1";

fn to_u8(w: f32) -> u8 {
    (w * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Binary PGM with weights scaled by 255.
pub fn write_pgm<W: Write>(mask: &ViewportMask, mut out: W) -> Result<()> {
    let res = mask.resolution();
    write!(out, "P5\n{} {}\n255\n", res.n_h(), res.n_v())?;
    let bytes: Vec<u8> = mask.to_dense().into_iter().map(to_u8).collect();
    out.write_all(&bytes)?;
    Ok(())
}

/// 8-bit grayscale PNG with weights scaled by 255.
pub fn write_png<W: Write>(mask: &ViewportMask, out: W) -> Result<()> {
    let res = mask.resolution();
    let mut enc = png::Encoder::new(out, res.n_h() as u32, res.n_v() as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::Format(format!("png: {e}")))?;
    let bytes: Vec<u8> = mask.to_dense().into_iter().map(to_u8).collect();
    writer
        .write_image_data(&bytes)
        .map_err(|e| Error::Format(format!("png: {e}")))?;
    writer
        .finish()
        .map_err(|e| Error::Format(format!("png: {e}")))?;
    Ok(())
}

pub fn write_mask<W: Write>(mask: &ViewportMask, mut out: W) -> Result<()> {
    let res = mask.resolution();
    let mut buf = Vec::with_capacity(64 + 12 * mask.spans().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(res.n_h() as u32).to_le_bytes());
    buf.extend_from_slice(&(res.n_v() as u32).to_le_bytes());
    buf.extend_from_slice(&mask.pog().theta().to_le_bytes());
    buf.extend_from_slice(&mask.pog().phi().to_le_bytes());
    let (has_fov, fov) = match mask.fov() {
        Some(f) => (1u8, (f.theta_vp(), f.phi_vp())),
        None => (0u8, (0.0, 0.0)),
    };
    buf.push(has_fov);
    buf.extend_from_slice(&fov.0.to_le_bytes());
    buf.extend_from_slice(&fov.1.to_le_bytes());
    buf.push(match mask.weights_repr() {
        Weights::Latitude => 0,
        Weights::Explicit(_) => 1,
    });
    buf.extend_from_slice(&mask.area().to_le_bytes());
    buf.extend_from_slice(&(mask.spans().len() as u32).to_le_bytes());
    for s in mask.spans() {
        buf.extend_from_slice(&s.col.to_le_bytes());
        buf.extend_from_slice(&s.start.to_le_bytes());
        buf.extend_from_slice(&s.end.to_le_bytes());
    }
    if let Weights::Explicit(w) = mask.weights_repr() {
        for v in w {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .data
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("truncated mask file".into()))?;
        self.pos = end;
        Ok(bytes.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take()?))
    }
}

pub fn read_mask<R: Read>(mut input: R) -> Result<ViewportMask> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut c = Cursor {
        data: &data,
        pos: 0,
    };
    if &c.take::<4>()? != MAGIC {
        return Err(Error::Format("not a mask file".into()));
    }
    let res = Resolution::new(c.u32()? as usize, c.u32()? as usize)?;
    let pog = SphericalPoint::try_new(c.f64()?, c.f64()?)?;
    let has_fov = c.u8()?;
    let (tv, pv) = (c.f64()?, c.f64()?);
    let fov = match has_fov {
        0 => None,
        1 => Some(FieldOfView::new(tv, pv)?),
        other => return Err(Error::Format(format!("bad fov flag {other}"))),
    };
    let kind = c.u8()?;
    let area = c.f64()?;
    let count = c.u32()? as usize;
    let mut spans = Vec::with_capacity(count.min(1 << 24));
    let mut covered = 0usize;
    for _ in 0..count {
        let s = ColumnSpan {
            col: c.u32()?,
            start: c.u32()?,
            end: c.u32()?,
        };
        if s.col as usize >= res.n_h() || s.end as usize > res.n_v() || s.start >= s.end {
            return Err(Error::Format(format!("span {s:?} outside {res}")));
        }
        if let Some(prev) = spans.last() {
            let prev: &ColumnSpan = prev;
            if (prev.col, prev.end) > (s.col, s.start) {
                return Err(Error::Format("spans out of order".into()));
            }
        }
        covered += s.len();
        spans.push(s);
    }
    let weights = match kind {
        0 => Weights::Latitude,
        1 => {
            let mut w = Vec::with_capacity(covered);
            for _ in 0..covered {
                w.push(c.f32()?);
            }
            Weights::Explicit(w)
        }
        other => return Err(Error::Format(format!("bad weight kind {other}"))),
    };
    if c.pos != data.len() {
        return Err(Error::Format("trailing bytes in mask file".into()));
    }
    Ok(ViewportMask::from_parts(
        res, pog, fov, spans, weights, area,
    ))
}
