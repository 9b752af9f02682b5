//! `ScoreMap`: the single row-major carrier for similarity maps, detection
//! confidence maps, and fused maps.
//!
//! Values are kept in `f64` for all internal math; serialization rounds to
//! 7 significant digits (see [`round_sig7`]) so emitted JSON is byte-stable.

use crate::error::{EngineError, EngineResult};
use crate::grid::PatchIndex;

/// An `grid_h x grid_w` map of scores in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    grid_h: usize,
    grid_w: usize,
    values: Vec<f64>,
}

impl ScoreMap {
    /// Builds a map from row-major values, validating range and finiteness.
    pub fn new(grid_h: usize, grid_w: usize, values: Vec<f64>) -> EngineResult<Self> {
        if grid_h == 0 || grid_w == 0 {
            return Err(EngineError::invalid("map dimensions must be positive"));
        }
        if values.len() != grid_h * grid_w {
            return Err(EngineError::invalid(format!(
                "expected {} values for a {grid_h}x{grid_w} map, got {}",
                grid_h * grid_w,
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 || *v > 1.0 {
                return Err(EngineError::invalid(format!(
                    "map value at {i} is {v}, outside [0, 1]"
                )));
            }
        }
        Ok(ScoreMap {
            grid_h,
            grid_w,
            values,
        })
    }

    pub fn zeros(grid_h: usize, grid_w: usize) -> Self {
        ScoreMap {
            grid_h,
            grid_w,
            values: vec![0.0; grid_h * grid_w],
        }
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.grid_h, self.grid_w)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.grid_h && col < self.grid_w);
        self.values[row * self.grid_w + col]
    }

    /// Sets a cell, clamping into `[0, 1]` to absorb floating-point dust.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.grid_h && col < self.grid_w);
        self.values[row * self.grid_w + col] = value.clamp(0.0, 1.0);
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row-major iteration as `(PatchIndex, value)`.
    pub fn iter_cells(&self) -> impl Iterator<Item = (PatchIndex, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, v)| {
            (
                PatchIndex {
                    row: i / self.grid_w,
                    col: i % self.grid_w,
                },
                *v,
            )
        })
    }

    pub fn same_dims(&self, other: &ScoreMap) -> bool {
        self.grid_h == other.grid_h && self.grid_w == other.grid_w
    }
}

/// Rounds to 7 significant decimal digits.
///
/// Serialized map values and scores pass through this so goldens do not
/// depend on the full 17-digit f64 representation.
pub fn round_sig7(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    format!("{v:.6e}").parse().expect("formatted float reparses")
}
