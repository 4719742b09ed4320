//! Grade rasters: per-pixel quality values in `[0, 1]` for the frame on screen.
//!
//! Grades are nearly always constant per tile or per coding unit, so a
//! [`GradeMap`] keeps a tile grid plus one value per tile when it can, and a
//! dense raster only when built from one.

mod layout;
mod luma;
mod table;

pub use layout::{binary_grade_map, variant_layout_26, HqFootprint, VariantLayout};
pub use luma::{per_tile_psnr, read_raw_luma, LumaFrame, PsnrScale, TileError, Y4mLumaReader};
pub use table::{read_qp_map, read_tile_values, FrameValues};

use crate::error::{Error, Result};
use crate::geometry::{Resolution, SphericalPoint};

/// A partition of the frame into `rows × cols` rectangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGrid {
    resolution: Resolution,
    row_edges: Vec<usize>,
    col_edges: Vec<usize>,
}

fn uniform_edges(n: usize, parts: usize) -> Vec<usize> {
    let step = n / parts;
    let mut edges: Vec<usize> = (0..parts).map(|i| i * step).collect();
    edges.push(n);
    edges
}

fn block_edges(n: usize, block: usize) -> Vec<usize> {
    let mut edges: Vec<usize> = (0..n).step_by(block).collect();
    edges.push(n);
    edges
}

impl TileGrid {
    /// Equal tiles of `n_h / cols × n_v / rows` pixels; the remainder goes to
    /// the last tile row and column.
    pub fn new(resolution: Resolution, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > resolution.n_v() || cols > resolution.n_h() {
            return Err(Error::invalid(format!(
                "cannot split {resolution} into {rows}x{cols} tiles"
            )));
        }
        Ok(Self {
            resolution,
            row_edges: uniform_edges(resolution.n_v(), rows),
            col_edges: uniform_edges(resolution.n_h(), cols),
        })
    }

    /// Fixed `width × height` blocks (coding units); the last row and column
    /// may be partial.
    pub fn blocks(resolution: Resolution, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        Ok(Self {
            resolution,
            row_edges: block_edges(resolution.n_v(), height),
            col_edges: block_edges(resolution.n_h(), width),
        })
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn rows(&self) -> usize {
        self.row_edges.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.col_edges.len() - 1
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel rows `[start, end)` of tile row `r`.
    pub fn row_range(&self, r: usize) -> (usize, usize) {
        (self.row_edges[r], self.row_edges[r + 1])
    }

    /// Pixel columns `[start, end)` of tile column `c`.
    pub fn col_range(&self, c: usize) -> (usize, usize) {
        (self.col_edges[c], self.col_edges[c + 1])
    }

    pub fn tile_pixels(&self, r: usize, c: usize) -> usize {
        let (r0, r1) = self.row_range(r);
        let (c0, c1) = self.col_range(c);
        (r1 - r0) * (c1 - c0)
    }

    /// `(tile_row, tile_col)` containing pixel `(col, row)`.
    pub fn tile_of(&self, col: usize, row: usize) -> (usize, usize) {
        (
            self.row_edges.partition_point(|&e| e <= row) - 1,
            self.col_edges.partition_point(|&e| e <= col) - 1,
        )
    }

    pub fn tile_of_point(&self, p: SphericalPoint) -> (usize, usize) {
        let (col, row) = crate::geometry::spherical_to_pixel(p, self.resolution);
        self.tile_of(col, row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum GradeRepr {
    Tiled { grid: TileGrid, values: Vec<f64> },
    Dense(Vec<f32>),
}

/// Grade matrix of one frame. Every entry lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradeMap {
    resolution: Resolution,
    repr: GradeRepr,
}

fn check_unit(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} {v} outside [0, 1]")))
    }
}

impl GradeMap {
    pub fn uniform(resolution: Resolution, value: f64) -> Result<Self> {
        grade_from_tile_values(&TileGrid::new(resolution, 1, 1)?, &[value])
    }

    /// Row-major raster of `n_h × n_v` grades.
    pub fn from_dense(resolution: Resolution, grades: Vec<f32>) -> Result<Self> {
        if grades.len() != resolution.pixel_count() {
            return Err(Error::invalid(format!(
                "{} grades for a {resolution} frame",
                grades.len()
            )));
        }
        for &g in &grades {
            check_unit(g as f64, "grade")?;
        }
        Ok(Self {
            resolution,
            repr: GradeRepr::Dense(grades),
        })
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub(crate) fn repr(&self) -> &GradeRepr {
        &self.repr
    }

    pub fn value_at(&self, col: usize, row: usize) -> f64 {
        match &self.repr {
            GradeRepr::Tiled { grid, values } => {
                let (r, c) = grid.tile_of(col, row);
                values[r * grid.cols() + c]
            }
            GradeRepr::Dense(g) => g[row * self.resolution.n_h() + col] as f64,
        }
    }

    pub fn to_dense(&self) -> Vec<f32> {
        match &self.repr {
            GradeRepr::Dense(g) => g.clone(),
            GradeRepr::Tiled { .. } => self.to_dense_f64().into_iter().map(|v| v as f32).collect(),
        }
    }

    pub fn to_dense_f64(&self) -> Vec<f64> {
        match &self.repr {
            GradeRepr::Dense(g) => g.iter().map(|&v| v as f64).collect(),
            GradeRepr::Tiled { grid, values } => {
                let n_h = self.resolution.n_h();
                let mut out = vec![0.0; self.resolution.pixel_count()];
                for r in 0..grid.rows() {
                    let (r0, r1) = grid.row_range(r);
                    for c in 0..grid.cols() {
                        let (c0, c1) = grid.col_range(c);
                        let v = values[r * grid.cols() + c];
                        for row in r0..r1 {
                            out[row * n_h + c0..row * n_h + c1].fill(v);
                        }
                    }
                }
                out
            }
        }
    }

    /// Sum of all entries.
    pub fn sum(&self) -> f64 {
        match &self.repr {
            GradeRepr::Dense(g) => g.iter().map(|&v| v as f64).sum(),
            GradeRepr::Tiled { grid, values } => (0..grid.rows())
                .flat_map(|r| (0..grid.cols()).map(move |c| (r, c)))
                .map(|(r, c)| values[r * grid.cols() + c] * grid.tile_pixels(r, c) as f64)
                .sum(),
        }
    }

    /// Mean grade of every tile of `grid`, row-major.
    pub fn tile_means(&self, grid: &TileGrid) -> Result<Vec<f64>> {
        if grid.resolution() != self.resolution {
            return Err(Error::ResolutionMismatch {
                expected: self.resolution,
                found: grid.resolution(),
            });
        }
        if let GradeRepr::Tiled { grid: own, values } = &self.repr {
            if own == grid {
                return Ok(values.clone());
            }
        }
        let n_h = self.resolution.n_h();
        let dense = self.to_dense_f64();
        let mut out = Vec::with_capacity(grid.len());
        for r in 0..grid.rows() {
            let (r0, r1) = grid.row_range(r);
            for c in 0..grid.cols() {
                let (c0, c1) = grid.col_range(c);
                let s: f64 = (r0..r1)
                    .flat_map(|row| dense[row * n_h + c0..row * n_h + c1].iter())
                    .sum();
                out.push(s / grid.tile_pixels(r, c) as f64);
            }
        }
        Ok(out)
    }
}

/// Piecewise-constant grades, one value per tile in row-major order.
pub fn grade_from_tile_values(grid: &TileGrid, values: &[f64]) -> Result<GradeMap> {
    if values.len() != grid.len() {
        return Err(Error::invalid(format!(
            "{} tile values for a {}x{} grid",
            values.len(),
            grid.rows(),
            grid.cols()
        )));
    }
    for &v in values {
        check_unit(v, "tile value")?;
    }
    Ok(GradeMap {
        resolution: grid.resolution(),
        repr: GradeRepr::Tiled {
            grid: grid.clone(),
            values: values.to_vec(),
        },
    })
}

/// `clamp((qp_max - qp) / (qp_max - qp_min), 0, 1)` per unit of `units`.
pub fn grade_from_qp(units: &TileGrid, qp: &[f64], qp_min: f64, qp_max: f64) -> Result<GradeMap> {
    if qp.is_empty() {
        return Err(Error::invalid("empty QP map"));
    }
    if qp_min.is_nan() || qp_max.is_nan() || qp_min >= qp_max {
        return Err(Error::invalid(format!(
            "qp_min {qp_min} must be below qp_max {qp_max}"
        )));
    }
    if let Some(bad) = qp.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("QP value {bad}")));
    }
    let grades: Vec<f64> = qp
        .iter()
        .map(|&q| ((qp_max - q) / (qp_max - qp_min)).clamp(0.0, 1.0))
        .collect();
    grade_from_tile_values(units, &grades)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid58() -> TileGrid {
        TileGrid::new(Resolution::uhd(), 5, 8).unwrap()
    }

    #[test]
    fn grid_edges_and_remainder() {
        let g = grid58();
        assert_eq!(g.row_range(0), (0, 384));
        assert_eq!(g.col_range(7), (3360, 3840));
        let odd = TileGrid::new(Resolution::new(100, 50).unwrap(), 3, 3).unwrap();
        assert_eq!(odd.row_range(2), (32, 50));
        assert_eq!(odd.col_range(2), (66, 100));
        assert_eq!(odd.tile_of(65, 31), (1, 1));
        assert_eq!(odd.tile_of(99, 49), (2, 2));
        assert!(TileGrid::new(Resolution::new(4, 2).unwrap(), 3, 1).is_err());
    }

    #[test]
    fn block_grid_has_partial_units() {
        let g = TileGrid::blocks(Resolution::new(200, 100).unwrap(), 64, 64).unwrap();
        assert_eq!((g.rows(), g.cols()), (2, 4));
        assert_eq!(g.col_range(3), (192, 200));
        assert_eq!(g.tile_pixels(1, 3), 8 * 36);
    }

    #[test]
    fn tile_value_examples() {
        let g = grid58();
        let ones = grade_from_tile_values(&g, &[1.0; 40]).unwrap();
        assert!(ones.to_dense().iter().all(|&v| v == 1.0));

        let mut one = vec![0.0; 40];
        one[13] = 0.5;
        let m = grade_from_tile_values(&g, &one).unwrap();
        assert_eq!(m.sum(), 0.5 * (480 * 384) as f64);

        let checker: Vec<f64> = (0..40).map(|i| ((i / 8 + i % 8) % 2) as f64).collect();
        let m = grade_from_tile_values(&g, &checker).unwrap();
        assert_eq!(checker.iter().filter(|&&v| v == 1.0).count(), 20);
        assert_eq!(m.sum(), 20.0 * (480 * 384) as f64);

        assert!(grade_from_tile_values(&g, &[1.0; 39]).is_err());
        assert!(grade_from_tile_values(&g, &[1.5; 40]).is_err());
    }

    #[test]
    fn qp_examples() {
        let g = TileGrid::new(Resolution::new(64, 32).unwrap(), 2, 4).unwrap();
        let at = |qp: f64| {
            grade_from_qp(&g, &[qp; 8], 22.0, 42.0)
                .unwrap()
                .value_at(0, 0)
        };
        assert_eq!(at(22.0), 1.0);
        assert_eq!(at(42.0), 0.0);
        assert_eq!(at(32.0), 0.5);
        assert_eq!(at(10.0), 1.0);
        assert!(grade_from_qp(&g, &[], 22.0, 42.0).is_err());
        assert!(grade_from_qp(&g, &[30.0; 8], 42.0, 22.0).is_err());
    }

    #[test]
    fn dense_and_tiled_agree() {
        let g = TileGrid::new(Resolution::new(24, 12).unwrap(), 3, 4).unwrap();
        let vals: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
        let tiled = grade_from_tile_values(&g, &vals).unwrap();
        let dense = GradeMap::from_dense(g.resolution(), tiled.to_dense()).unwrap();
        for row in 0..12 {
            for col in 0..24 {
                assert_eq!(
                    tiled.value_at(col, row) as f32,
                    dense.value_at(col, row) as f32
                );
            }
        }
        assert!(GradeMap::from_dense(g.resolution(), vec![0.0; 5]).is_err());
        assert!(GradeMap::from_dense(g.resolution(), vec![-0.1; 288]).is_err());
    }

    proptest! {
        #[test]
        fn qp_grades_are_antitone(
            a in proptest::collection::vec(0.0f64..60.0, 8),
            bump in proptest::collection::vec(0.0f64..10.0, 8),
        ) {
            let g = TileGrid::new(Resolution::new(64, 32).unwrap(), 2, 4).unwrap();
            let b: Vec<f64> = a.iter().zip(&bump).map(|(x, d)| x + d).collect();
            let ga = grade_from_qp(&g, &a, 22.0, 42.0).unwrap();
            let gb = grade_from_qp(&g, &b, 22.0, 42.0).unwrap();
            for (x, y) in ga.to_dense().iter().zip(gb.to_dense()) {
                prop_assert!((0.0..=1.0).contains(x));
                prop_assert!(*x >= y);
            }
        }

        #[test]
        fn retiling_is_idempotent(vals in proptest::collection::vec(0.0f64..=1.0, 15)) {
            let g = TileGrid::new(Resolution::new(50, 25).unwrap(), 3, 5).unwrap();
            let m = grade_from_tile_values(&g, &vals).unwrap();
            let dense = GradeMap::from_dense(g.resolution(), m.to_dense()).unwrap();
            let back = grade_from_tile_values(&g, &dense.tile_means(&g).unwrap()).unwrap();
            for (x, y) in back.to_dense().iter().zip(m.to_dense()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
