//! Patch-lattice geometry.
//!
//! An image is partitioned into two proportional lattices: the low-resolution
//! lattice of `crop_px`-sized cells and the coarse lattice of
//! `ratio_k * crop_px`-sized cells. The grids are aligned so that every coarse
//! cell covers exactly `ratio_k²` low cells; images whose sides are not
//! multiples of `ratio_k * crop_px` are padded (by edge replication, applied
//! at decode time) up to the next multiple so the alignment is exact.
//!
//! All indices are zero-based and row-major. All pixel rectangles are
//! half-open: `[x0, x1) × [y0, y1)`.

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, EngineResult};

/// Width and height of an image in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageDims {
    pub width_px: u32,
    pub height_px: u32,
}

impl ImageDims {
    pub fn new(width_px: u32, height_px: u32) -> EngineResult<Self> {
        if width_px == 0 || height_px == 0 {
            return Err(EngineError::invalid(format!(
                "image dimensions must be positive, got {width_px}x{height_px}"
            )));
        }
        Ok(ImageDims {
            width_px,
            height_px,
        })
    }
}

/// Which of the two lattices an index or rectangle refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    /// Cells of side `crop_px`.
    Low,
    /// Cells of side `ratio_k * crop_px`.
    Coarse,
}

/// Zero-based (row, col) position of a cell in a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchIndex {
    pub row: usize,
    pub col: usize,
}

impl PatchIndex {
    pub fn new(row: usize, col: usize) -> Self {
        PatchIndex { row, col }
    }
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> EngineResult<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(EngineError::invalid(format!(
                "rectangle must be nonempty: ({x0},{y0},{x1},{y1})"
            )));
        }
        Ok(PixelRect { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    pub fn contains_point(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn contains_rect(&self, other: &PixelRect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    /// Intersection, or `None` when the rectangles are disjoint.
    pub fn intersect(&self, other: &PixelRect) -> Option<PixelRect> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        if x0 < x1 && y0 < y1 {
            Some(PixelRect { x0, y0, x1, y1 })
        } else {
            None
        }
    }

    /// Translates by `(-dx, -dy)`, e.g. global -> window-local coordinates.
    pub fn offset_neg(&self, dx: u32, dy: u32) -> PixelRect {
        PixelRect {
            x0: self.x0 - dx,
            y0: self.y0 - dy,
            x1: self.x1 - dx,
            y1: self.y1 - dy,
        }
    }
}

/// Geometry binding an image to its two aligned patch lattices.
///
/// Invariants established by [`build_grid`]:
/// - `grid_w == coarse_w * ratio_k`, `grid_h == coarse_h * ratio_k`
/// - `padded_dims` is the smallest multiple of `ratio_k * crop_px` covering
///   `dims` on each side (padding per side is `< ratio_k * crop_px`)
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub dims: ImageDims,
    pub crop_px: u32,
    pub ratio_k: u32,
    pub grid_w: usize,
    pub grid_h: usize,
    pub coarse_w: usize,
    pub coarse_h: usize,
    pub padded_dims: ImageDims,
}

/// Partitions `dims` into the aligned low/coarse lattices.
///
/// The coarse cell count per axis is `ceil(extent / (ratio_k * crop_px))`;
/// the low grid is `ratio_k` times finer, so the low cell count is always
/// `ratio_k²` times the coarse cell count. Pixels beyond `dims` up to
/// `padded_dims` are supplied by edge replication when the image is decoded;
/// this function records geometry only.
pub fn build_grid(dims: ImageDims, crop_px: u32, ratio_k: u32) -> EngineResult<PatchGrid> {
    if crop_px == 0 {
        return Err(EngineError::invalid("crop_px must be >= 1"));
    }
    if ratio_k < 2 {
        return Err(EngineError::invalid(format!(
            "ratio_k must be an integer >= 2, got {ratio_k}"
        )));
    }
    let coarse_px = u64::from(crop_px) * u64::from(ratio_k);
    let coarse_w = u64::from(dims.width_px).div_ceil(coarse_px);
    let coarse_h = u64::from(dims.height_px).div_ceil(coarse_px);
    let padded_w = coarse_w * coarse_px;
    let padded_h = coarse_h * coarse_px;
    if padded_w > u64::from(u32::MAX) || padded_h > u64::from(u32::MAX) {
        return Err(EngineError::invalid("padded dimensions overflow u32"));
    }
    Ok(PatchGrid {
        dims,
        crop_px,
        ratio_k,
        grid_w: (coarse_w * u64::from(ratio_k)) as usize,
        grid_h: (coarse_h * u64::from(ratio_k)) as usize,
        coarse_w: coarse_w as usize,
        coarse_h: coarse_h as usize,
        padded_dims: ImageDims {
            width_px: padded_w as u32,
            height_px: padded_h as u32,
        },
    })
}

impl PatchGrid {
    /// Cell counts `(rows, cols)` of the chosen lattice.
    pub fn lattice_dims(&self, lattice: Lattice) -> (usize, usize) {
        match lattice {
            Lattice::Low => (self.grid_h, self.grid_w),
            Lattice::Coarse => (self.coarse_h, self.coarse_w),
        }
    }

    /// Cell side in pixels of the chosen lattice.
    pub fn cell_px(&self, lattice: Lattice) -> u32 {
        match lattice {
            Lattice::Low => self.crop_px,
            Lattice::Coarse => self.crop_px * self.ratio_k,
        }
    }

    fn check_index(&self, idx: PatchIndex, lattice: Lattice) -> EngineResult<()> {
        let (rows, cols) = self.lattice_dims(lattice);
        if idx.row >= rows || idx.col >= cols {
            return Err(EngineError::invalid(format!(
                "patch index ({}, {}) outside {rows}x{cols} lattice",
                idx.row, idx.col
            )));
        }
        Ok(())
    }

    /// Pixel rectangle of a lattice cell, in padded coordinates.
    ///
    /// The rectangles of one lattice tile `padded_dims` exactly: no overlap,
    /// no gap.
    pub fn patch_rect(&self, idx: PatchIndex, lattice: Lattice) -> EngineResult<PixelRect> {
        self.check_index(idx, lattice)?;
        let side = self.cell_px(lattice);
        let x0 = idx.col as u32 * side;
        let y0 = idx.row as u32 * side;
        Ok(PixelRect {
            x0,
            y0,
            x1: x0 + side,
            y1: y0 + side,
        })
    }

    /// The `ratio_k²` low-lattice cells covered by a coarse cell, row-major.
    pub fn coarse_children(&self, coarse_idx: PatchIndex) -> EngineResult<Vec<PatchIndex>> {
        self.check_index(coarse_idx, Lattice::Coarse)?;
        let k = self.ratio_k as usize;
        let mut children = Vec::with_capacity(k * k);
        for dr in 0..k {
            for dc in 0..k {
                children.push(PatchIndex {
                    row: coarse_idx.row * k + dr,
                    col: coarse_idx.col * k + dc,
                });
            }
        }
        Ok(children)
    }

    /// Coarse-lattice parent of a low-lattice cell.
    pub fn coarse_parent(&self, low_idx: PatchIndex) -> EngineResult<PatchIndex> {
        self.check_index(low_idx, Lattice::Low)?;
        let k = self.ratio_k as usize;
        Ok(PatchIndex {
            row: low_idx.row / k,
            col: low_idx.col / k,
        })
    }

    /// The unique low-lattice cell containing a padded-coordinate pixel.
    pub fn pixel_to_patch(&self, x: u32, y: u32) -> EngineResult<PatchIndex> {
        if x >= self.padded_dims.width_px || y >= self.padded_dims.height_px {
            return Err(EngineError::invalid(format!(
                "pixel ({x}, {y}) outside padded dims {}x{}",
                self.padded_dims.width_px, self.padded_dims.height_px
            )));
        }
        Ok(PatchIndex {
            row: (y / self.crop_px) as usize,
            col: (x / self.crop_px) as usize,
        })
    }

    /// Row-major iterator over all indices of the chosen lattice.
    pub fn indices(&self, lattice: Lattice) -> impl Iterator<Item = PatchIndex> {
        let (rows, cols) = self.lattice_dims(lattice);
        (0..rows).flat_map(move |row| (0..cols).map(move |col| PatchIndex { row, col }))
    }
}
