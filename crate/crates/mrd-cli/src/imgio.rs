//! PNG decoding and edge-replication padding.

use std::path::Path;

use image::RgbImage;

use mrd_core::{ImageDims, PatchGrid};

use crate::CliError;

/// Decodes a PNG into RGB. Any read or decode failure is an image error
/// (exit code 2).
pub fn load_png(path: &Path) -> Result<RgbImage, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Image(format!("reading {}: {e}", path.display())))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| CliError::Image(format!("decoding {}: {e}", path.display())))?;
    Ok(img.to_rgb8())
}

pub fn dims_of(img: &RgbImage) -> Result<ImageDims, CliError> {
    ImageDims::new(img.width(), img.height())
        .map_err(|e| CliError::Image(format!("image dimensions: {e}")))
}

/// Extends an image to the grid's padded dimensions by replicating the last
/// row and column. Applied once after decode; every downstream consumer sees
/// padded geometry.
pub fn pad_replicate(img: &RgbImage, grid: &PatchGrid) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = (grid.padded_dims.width_px, grid.padded_dims.height_px);
    if (w, h) == (pw, ph) {
        return img.clone();
    }
    RgbImage::from_fn(pw, ph, |x, y| *img.get_pixel(x.min(w - 1), y.min(h - 1)))
}
