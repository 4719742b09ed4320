//! Precomputed masks on a uniform grid of gaze centers.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::export::{read_mask, write_mask};
use super::raster::{project_viewport_with, ProjectionOptions};
use super::ViewportMask;
use crate::error::{Error, Result};
use crate::geometry::{angle_between, CartesianVector, FieldOfView, Resolution, SphericalPoint};

/// Bumped whenever the on-disk layout or the rasterizer output changes.
pub const BANK_FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    grid_rows: usize,
    grid_cols: usize,
    fov: FieldOfView,
    resolution: Resolution,
    options: ProjectionOptions,
    files: Vec<String>,
}

/// `grid_rows × grid_cols` masks centered at `θ = (c + ½)·360/cols`, `φ = (r + ½)·180/rows`,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskBank {
    grid_rows: usize,
    grid_cols: usize,
    fov: FieldOfView,
    resolution: Resolution,
    options: ProjectionOptions,
    centers: Vec<SphericalPoint>,
    center_dirs: Vec<CartesianVector>,
    masks: Vec<ViewportMask>,
}

fn grid_centers(rows: usize, cols: usize) -> Vec<SphericalPoint> {
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(SphericalPoint::new(
                (c as f64 + 0.5) * 360.0 / cols as f64,
                (r as f64 + 0.5) * 180.0 / rows as f64,
            ));
        }
    }
    out
}

/// Bank with the default `sin(phi)` weighting.
pub fn build_mask_bank(
    grid_rows: usize,
    grid_cols: usize,
    fov: FieldOfView,
    res: Resolution,
    samples_per_side: usize,
) -> Result<MaskBank> {
    MaskBank::build(
        grid_rows,
        grid_cols,
        fov,
        res,
        ProjectionOptions::with_samples(samples_per_side),
    )
}

/// The bank mask whose center is nearest (great-circle distance) to `pog`.
pub fn nearest_mask(bank: &MaskBank, pog: SphericalPoint) -> &ViewportMask {
    &bank.masks[bank.nearest_index(pog)]
}

impl MaskBank {
    pub fn build(
        grid_rows: usize,
        grid_cols: usize,
        fov: FieldOfView,
        resolution: Resolution,
        options: ProjectionOptions,
    ) -> Result<Self> {
        if grid_rows == 0 || grid_cols == 0 {
            return Err(Error::invalid(format!(
                "mask grid {grid_rows}x{grid_cols} must be at least 1x1"
            )));
        }
        let centers = grid_centers(grid_rows, grid_cols);
        let masks = centers
            .par_iter()
            .map(|&c| project_viewport_with(c, fov, resolution, &options))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(
            grid_rows, grid_cols, fov, resolution, options, centers, masks,
        ))
    }

    fn assemble(
        grid_rows: usize,
        grid_cols: usize,
        fov: FieldOfView,
        resolution: Resolution,
        options: ProjectionOptions,
        centers: Vec<SphericalPoint>,
        masks: Vec<ViewportMask>,
    ) -> Self {
        let center_dirs = centers.iter().map(|c| c.to_cartesian()).collect();
        Self {
            grid_rows,
            grid_cols,
            fov,
            resolution,
            options,
            centers,
            center_dirs,
            masks,
        }
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn fov(&self) -> FieldOfView {
        self.fov
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn options(&self) -> ProjectionOptions {
        self.options
    }

    pub fn centers(&self) -> &[SphericalPoint] {
        &self.centers
    }

    pub fn masks(&self) -> &[ViewportMask] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Index of the nearest center; ties go to the lowest `(row, col)`.
    pub fn nearest_index(&self, pog: SphericalPoint) -> usize {
        let v = pog.to_cartesian();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.center_dirs.iter().enumerate() {
            let d = angle_between(c, &v);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Writes a manifest plus one `.vpm` file per center into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.masks.len());
        for (i, m) in self.masks.iter().enumerate() {
            let name = format!(
                "mask_{:03}_{:03}.vpm",
                i / self.grid_cols,
                i % self.grid_cols
            );
            let tmp = tempfile::NamedTempFile::new_in(dir)?;
            write_mask(m, BufWriter::new(tmp.as_file()))?;
            tmp.persist(dir.join(&name)).map_err(|e| e.error)?;
            files.push(name);
        }
        let manifest = Manifest {
            format_version: BANK_FORMAT_VERSION,
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            fov: self.fov,
            resolution: self.resolution,
            options: self.options,
            files,
        };
        let tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(BufWriter::new(tmp.as_file()), &manifest)?;
        tmp.persist(dir.join(MANIFEST)).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest =
            serde_json::from_reader(BufReader::new(fs::File::open(dir.join(MANIFEST))?))?;
        if manifest.format_version != BANK_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "bank format version {} (expected {BANK_FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let centers = grid_centers(manifest.grid_rows, manifest.grid_cols);
        if manifest.files.len() != centers.len() {
            return Err(Error::Format(format!(
                "bank lists {} masks for a {}x{} grid",
                manifest.files.len(),
                manifest.grid_rows,
                manifest.grid_cols
            )));
        }
        let mut masks = Vec::with_capacity(centers.len());
        for (name, center) in manifest.files.iter().zip(&centers) {
            let m = read_mask(BufReader::new(fs::File::open(dir.join(name))?))?;
            if m.pog() != *center || m.resolution() != manifest.resolution {
                return Err(Error::Format(format!(
                    "{name} does not match the bank grid"
                )));
            }
            masks.push(m);
        }
        Ok(Self::assemble(
            manifest.grid_rows,
            manifest.grid_cols,
            manifest.fov,
            manifest.resolution,
            manifest.options,
            centers,
            masks,
        ))
    }

    /// Loads the bank cached in `dir` if it was built with exactly these
    /// parameters, otherwise builds it and replaces the cache.
    pub fn load_or_build(
        dir: &Path,
        grid_rows: usize,
        grid_cols: usize,
        fov: FieldOfView,
        resolution: Resolution,
        options: ProjectionOptions,
    ) -> Result<Self> {
        match Self::load(dir) {
            Ok(b)
                if b.grid() == (grid_rows, grid_cols)
                    && b.fov == fov
                    && b.resolution == resolution
                    && b.options == options =>
            {
                return Ok(b);
            }
            Ok(_) => log::info!("cached bank in {} is stale, rebuilding", dir.display()),
            Err(e) => log::debug!("no usable bank cache in {}: {e}", dir.display()),
        }
        let bank = Self::build(grid_rows, grid_cols, fov, resolution, options)?;
        // build next to the target so readers never see a half-written bank
        let root = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        fs::create_dir_all(root)?;
        let tmp = tempfile::Builder::new().prefix(".bank-").tempdir_in(root)?;
        bank.save(tmp.path())?;
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        fs::rename(tmp.keep(), dir)?;
        Ok(bank)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angular_distance;
    use crate::mask::project_viewport;

    fn res() -> Resolution {
        Resolution::new(120, 60).unwrap()
    }

    fn bank(rows: usize, cols: usize) -> MaskBank {
        build_mask_bank(rows, cols, FieldOfView::default(), res(), 16).unwrap()
    }

    #[test]
    fn sizes_and_centers() {
        assert_eq!(bank(10, 20).len(), 200);
        let b = bank(3, 6);
        let thetas: Vec<f64> = b.centers()[..6].iter().map(|c| c.theta()).collect();
        assert_eq!(thetas, vec![30.0, 90.0, 150.0, 210.0, 270.0, 330.0]);
        let phis: Vec<f64> = b.centers().iter().step_by(6).map(|c| c.phi()).collect();
        assert_eq!(phis, vec![30.0, 90.0, 150.0]);
        for (m, c) in b.masks().iter().zip(b.centers()) {
            assert_eq!(m.pog(), *c);
            assert_eq!(
                *m,
                project_viewport(*c, FieldOfView::default(), res(), 16).unwrap()
            );
        }
        assert!(build_mask_bank(0, 6, FieldOfView::default(), res(), 16).is_err());
    }

    #[test]
    fn nearest_selection() {
        let b = bank(3, 6);
        for (i, c) in b.centers().iter().enumerate() {
            assert_eq!(b.nearest_index(*c), i);
        }
        let m = nearest_mask(&b, SphericalPoint::new(181.0, 91.0));
        assert_eq!((m.pog().theta(), m.pog().phi()), (210.0, 90.0));
    }

    #[test]
    fn nearest_is_spherical_near_poles() {
        let b = bank(5, 10);
        for &(t, p) in &[(3.0, 2.0), (190.0, 177.0), (91.0, 15.0), (359.0, 160.0)] {
            let pog = SphericalPoint::new(t, p);
            let brute = b
                .centers()
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    angular_distance(*a.1, pog)
                        .partial_cmp(&angular_distance(*b.1, pog))
                        .unwrap()
                })
                .unwrap()
                .0;
            assert_eq!(b.nearest_index(pog), brute);
        }
    }

    #[test]
    fn ties_pick_lowest_index() {
        // equidistant from (90, 90) and (150, 90) on a 3x6 grid
        let b = bank(3, 6);
        assert_eq!(b.nearest_index(SphericalPoint::new(120.0, 90.0)), 7);
    }

    #[test]
    fn save_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let b = bank(2, 4);
        b.save(dir.path()).unwrap();
        let back = MaskBank::load(dir.path()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn cache_rebuilds_on_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank");
        let opts = ProjectionOptions::with_samples(8);
        let a = MaskBank::load_or_build(&path, 2, 4, FieldOfView::default(), res(), opts).unwrap();
        let again =
            MaskBank::load_or_build(&path, 2, 4, FieldOfView::default(), res(), opts).unwrap();
        assert_eq!(a, again);
        let other =
            MaskBank::load_or_build(&path, 3, 6, FieldOfView::default(), res(), opts).unwrap();
        assert_eq!(other.len(), 18);
        assert_eq!(MaskBank::load(&path).unwrap().len(), 18);
    }
}
