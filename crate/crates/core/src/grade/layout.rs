//! Viewport-oriented variant layouts and their binary grade maps.

use std::collections::BTreeMap;
use std::io::Read;

use super::{grade_from_tile_values, GradeMap, TileGrid};
use crate::error::{Error, Result};
use crate::geometry::{spherical_to_pixel, Resolution, SphericalPoint};

/// Tile areas, one per encoded variant. The top and bottom tile rows are each
/// merged into a single area; every other tile is its own area.
///
/// Area `0` is the top stripe, then the middle tiles row-major, then the
/// bottom stripe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantLayout {
    grid: TileGrid,
    tile_area: Vec<usize>,
    area_count: usize,
}

/// The 5×8 layout with 26 areas.
pub fn variant_layout_26(res: Resolution) -> Result<VariantLayout> {
    VariantLayout::merged_stripes(TileGrid::new(res, 5, 8)?)
}

impl VariantLayout {
    pub fn merged_stripes(grid: TileGrid) -> Result<Self> {
        let (rows, cols) = (grid.rows(), grid.cols());
        if rows < 3 {
            return Err(Error::invalid(format!(
                "merged-stripe layout needs at least 3 tile rows, got {rows}"
            )));
        }
        let last = (rows - 2) * cols + 1;
        let tile_area = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| match r {
                    0 => 0,
                    r if r == rows - 1 => last,
                    r => 1 + (r - 1) * cols + c,
                })
            })
            .collect();
        Ok(Self {
            grid,
            tile_area,
            area_count: last + 1,
        })
    }

    pub fn grid(&self) -> &TileGrid {
        &self.grid
    }

    pub fn variant_count(&self) -> usize {
        self.area_count
    }

    pub fn area_of_tile(&self, r: usize, c: usize) -> usize {
        self.tile_area[r * self.grid.cols() + c]
    }

    pub fn area_tiles(&self, area: usize) -> Vec<(usize, usize)> {
        let cols = self.grid.cols();
        self.tile_area
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == area)
            .map(|(i, _)| (i / cols, i % cols))
            .collect()
    }

    pub fn area_pixels(&self, area: usize) -> usize {
        self.area_tiles(area)
            .into_iter()
            .map(|(r, c)| self.grid.tile_pixels(r, c))
            .sum()
    }

    pub fn area_of_pixel(&self, col: usize, row: usize) -> usize {
        let (r, c) = self.grid.tile_of(col, row);
        self.area_of_tile(r, c)
    }

    pub fn area_of_point(&self, p: SphericalPoint) -> usize {
        let (col, row) = spherical_to_pixel(p, self.grid.resolution());
        self.area_of_pixel(col, row)
    }

    /// Center of the area's bounding box; stripes are centered at `θ = 180°`.
    pub fn area_center(&self, area: usize) -> Result<SphericalPoint> {
        let tiles = self.area_tiles(area);
        let (Some(first), Some(last)) = (tiles.first(), tiles.last()) else {
            return Err(Error::invalid(format!(
                "area {area} outside a layout of {} areas",
                self.area_count
            )));
        };
        let res = self.grid.resolution();
        let (r0, _) = self.grid.row_range(first.0);
        let (_, r1) = self.grid.row_range(last.0);
        let (c0, _) = self.grid.col_range(first.1);
        let (_, c1) = self.grid.col_range(last.1);
        let theta = (c0 + c1) as f64 / 2.0 * 360.0 / res.n_h() as f64;
        let phi = (r0 + r1) as f64 / 2.0 * 180.0 / res.n_v() as f64;
        Ok(SphericalPoint::new(theta, phi))
    }
}

/// Which tiles are encoded in high quality for each variant.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum HqFootprint {
    /// Only the tiles of the variant's own area.
    AreaOnly,
    /// The area plus every tile touching it, wrapping around in `θ`.
    #[default]
    AreaPlusNeighbors,
    /// Tiles `(tile_row, tile_col)` listed per variant index.
    Explicit(BTreeMap<usize, Vec<(usize, usize)>>),
}

impl HqFootprint {
    /// Reads `{"<variant>": [[tile_row, tile_col], ...], ...}`.
    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let map: BTreeMap<usize, Vec<(usize, usize)>> = serde_json::from_reader(reader)?;
        Ok(HqFootprint::Explicit(map))
    }

    pub fn name(&self) -> &'static str {
        match self {
            HqFootprint::AreaOnly => "area-only",
            HqFootprint::AreaPlusNeighbors => "area+neighbors",
            HqFootprint::Explicit(_) => "explicit",
        }
    }

    /// One flag per tile, row-major.
    pub fn hq_tiles(&self, layout: &VariantLayout, variant: usize) -> Result<Vec<bool>> {
        if variant >= layout.variant_count() {
            return Err(Error::invalid(format!(
                "variant {variant} outside a layout of {} variants",
                layout.variant_count()
            )));
        }
        let grid = layout.grid();
        let (rows, cols) = (grid.rows(), grid.cols());
        let mut hq = vec![false; rows * cols];
        match self {
            HqFootprint::AreaOnly => {
                for (r, c) in layout.area_tiles(variant) {
                    hq[r * cols + c] = true;
                }
            }
            HqFootprint::AreaPlusNeighbors => {
                for (r, c) in layout.area_tiles(variant) {
                    for rr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
                        for dc in [cols - 1, 0, 1] {
                            hq[rr * cols + (c + dc) % cols] = true;
                        }
                    }
                }
            }
            HqFootprint::Explicit(map) => {
                let tiles = map.get(&variant).ok_or_else(|| {
                    Error::invalid(format!("footprint has no entry for variant {variant}"))
                })?;
                for &(r, c) in tiles {
                    if r >= rows || c >= cols {
                        return Err(Error::invalid(format!(
                            "footprint tile ({r}, {c}) outside the {rows}x{cols} grid"
                        )));
                    }
                    hq[r * cols + c] = true;
                }
            }
        }
        Ok(hq)
    }
}

/// 1 on the high-quality tiles of `variant`, 0 elsewhere.
pub fn binary_grade_map(
    layout: &VariantLayout,
    variant: usize,
    footprint: &HqFootprint,
) -> Result<GradeMap> {
    let values: Vec<f64> = footprint
        .hq_tiles(layout, variant)?
        .into_iter()
        .map(|h| if h { 1.0 } else { 0.0 })
        .collect();
    grade_from_tile_values(layout.grid(), &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> VariantLayout {
        variant_layout_26(Resolution::uhd()).unwrap()
    }

    #[test]
    fn twenty_six_areas_partition_the_frame() {
        let l = layout();
        assert_eq!(l.variant_count(), 26);
        assert_eq!(l.area_pixels(0), 3840 * 384);
        assert_eq!(l.area_pixels(25), 3840 * 384);
        assert_eq!(l.area_pixels(1), 480 * 384);
        let total: usize = (0..26).map(|a| l.area_pixels(a)).sum();
        assert_eq!(total, 7_372_800);
        assert_eq!(l.area_tiles(9), vec![(2, 0)]);
        assert!(variant_layout_26(Resolution::new(6, 3).unwrap()).is_err());
    }

    #[test]
    fn points_map_to_areas() {
        let l = layout();
        assert_eq!(l.area_of_point(SphericalPoint::new(10.0, 5.0)), 0);
        assert_eq!(l.area_of_point(SphericalPoint::new(200.0, 179.0)), 25);
        assert_eq!(l.area_of_point(SphericalPoint::new(180.0, 90.0)), 13);
        for a in 0..26 {
            assert_eq!(l.area_of_point(l.area_center(a).unwrap()), a);
        }
        assert_eq!(l.area_center(13).unwrap(), SphericalPoint::new(202.5, 90.0));
        assert!(l.area_center(26).is_err());
    }

    #[test]
    fn area_only_top_stripe() {
        let l = layout();
        let g = binary_grade_map(&l, 0, &HqFootprint::AreaOnly).unwrap();
        assert_eq!(g.sum(), (3840 * 384) as f64);
        assert_eq!(g.value_at(3839, 383), 1.0);
        assert_eq!(g.value_at(0, 384), 0.0);
    }

    #[test]
    fn neighbors_wrap_in_theta() {
        let l = layout();
        // tile (2, 0): middle row, first column
        let hq = HqFootprint::AreaPlusNeighbors.hq_tiles(&l, 9).unwrap();
        let on: Vec<(usize, usize)> = (0..40).filter(|&i| hq[i]).map(|i| (i / 8, i % 8)).collect();
        assert_eq!(
            on,
            vec![
                (1, 0),
                (1, 1),
                (1, 7),
                (2, 0),
                (2, 1),
                (2, 7),
                (3, 0),
                (3, 1),
                (3, 7)
            ]
        );
        let g = binary_grade_map(&l, 9, &HqFootprint::AreaPlusNeighbors).unwrap();
        assert_eq!(g.sum(), 9.0 * (480 * 384) as f64);

        // the top stripe plus the whole row under it
        let hq = HqFootprint::AreaPlusNeighbors.hq_tiles(&l, 0).unwrap();
        assert_eq!(hq.iter().filter(|&&h| h).count(), 16);
    }

    #[test]
    fn explicit_footprint_from_json() {
        let l = layout();
        let fp = HqFootprint::from_json(r#"{"3": [[1, 2], [4, 7]]}"#.as_bytes()).unwrap();
        let g = binary_grade_map(&l, 3, &fp).unwrap();
        assert_eq!(g.sum(), 2.0 * (480 * 384) as f64);
        assert!(binary_grade_map(&l, 4, &fp).is_err());
        let bad = HqFootprint::from_json(r#"{"3": [[5, 0]]}"#.as_bytes()).unwrap();
        assert!(binary_grade_map(&l, 3, &bad).is_err());
        assert!(binary_grade_map(&l, 26, &HqFootprint::AreaOnly).is_err());
    }
}
