//! Per-frame tile tables: `frame,tile_row,tile_col,value` and
//! `frame,unit_row,unit_col,qp`.

use std::collections::BTreeMap;
use std::io::Read;

use super::TileGrid;
use crate::error::{Error, Result};

/// Row-major unit values keyed by frame index.
pub type FrameValues = BTreeMap<usize, Vec<f64>>;

fn read_table<R: Read>(
    reader: R,
    grid: &TileGrid,
    header: [&str; 4],
    check: impl Fn(f64) -> bool,
) -> Result<FrameValues> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::parse(
            1,
            format!("expected header {}", header.join(",")),
        ));
    }
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut seen: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected 4 fields, found {}", rec.len()),
            ));
        }
        let int = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| Error::parse(line, format!("bad {} '{}'", header[i], &rec[i])))
        };
        let (frame, r, c) = (int(0)?, int(1)?, int(2)?);
        let value: f64 = rec[3]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad {} '{}'", header[3], &rec[3])))?;
        if r >= rows || c >= cols {
            return Err(Error::parse(
                line,
                format!("unit ({r}, {c}) outside {rows}x{cols}"),
            ));
        }
        if !check(value) {
            return Err(Error::parse(
                line,
                format!("{} {value} out of range", header[3]),
            ));
        }
        let slot = &mut seen.entry(frame).or_insert_with(|| vec![None; rows * cols])[r * cols + c];
        if slot.is_some() {
            return Err(Error::parse(
                line,
                format!("duplicate unit ({r}, {c}) in frame {frame}"),
            ));
        }
        *slot = Some(value);
    }
    seen.into_iter()
        .map(|(frame, vals)| {
            let vals: Option<Vec<f64>> = vals.into_iter().collect();
            vals.map(|v| (frame, v))
                .ok_or_else(|| Error::Format(format!("frame {frame} does not list every unit")))
        })
        .collect()
}

/// Grades in `[0, 1]` per tile and frame.
pub fn read_tile_values<R: Read>(reader: R, grid: &TileGrid) -> Result<FrameValues> {
    read_table(
        reader,
        grid,
        ["frame", "tile_row", "tile_col", "value"],
        |v| (0.0..=1.0).contains(&v),
    )
}

/// Quantization parameters per coding unit and frame.
pub fn read_qp_map<R: Read>(reader: R, units: &TileGrid) -> Result<FrameValues> {
    read_table(
        reader,
        units,
        ["frame", "unit_row", "unit_col", "qp"],
        f64::is_finite,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Resolution;

    fn grid() -> TileGrid {
        TileGrid::new(Resolution::new(8, 4).unwrap(), 1, 2).unwrap()
    }

    #[test]
    fn reads_complete_frames() {
        let csv = "frame,tile_row,tile_col,value\n0,0,0,0.5\n0,0,1,1\n1,0,1,0\n1,0,0,0.25\n";
        let t = read_tile_values(csv.as_bytes(), &grid()).unwrap();
        assert_eq!(t[&0], vec![0.5, 1.0]);
        assert_eq!(t[&1], vec![0.25, 0.0]);
    }

    #[test]
    fn rejects_bad_tables() {
        let cases = [
            "frame,row,col,value\n0,0,0,1\n",
            "frame,tile_row,tile_col,value\n0,0,0,1\n",
            "frame,tile_row,tile_col,value\n0,0,0,1\n0,0,0,1\n0,0,1,1\n",
            "frame,tile_row,tile_col,value\n0,0,2,1\n",
            "frame,tile_row,tile_col,value\n0,0,0,1.5\n0,0,1,1\n",
            "frame,tile_row,tile_col,value\n0,0,x,1\n",
        ];
        for c in cases {
            assert!(read_tile_values(c.as_bytes(), &grid()).is_err(), "{c}");
        }
        let err = read_tile_values(cases[3].as_bytes(), &grid()).unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }

    #[test]
    fn qp_table() {
        let csv = "frame,unit_row,unit_col,qp\n3,0,0,22\n3,0,1,51\n";
        let t = read_qp_map(csv.as_bytes(), &grid()).unwrap();
        assert_eq!(t[&3], vec![22.0, 51.0]);
    }
}
