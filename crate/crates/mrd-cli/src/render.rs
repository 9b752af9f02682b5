//! Text heatmap rendering for quick map inspection.

use crate::maps::MapDoc;

/// Character ramp from empty to full; `[0, 1]` is quantized into ten bins
/// with `floor(v * 10)`, clamping 1.0 into the last bin.
const RAMP: &[u8] = b" .:-=+*#%@";

pub fn ramp_char(value: f64) -> char {
    let bin = ((value.clamp(0.0, 1.0) * 10.0).floor() as usize).min(RAMP.len() - 1);
    RAMP[bin] as char
}

/// Renders a map document as one line of ramp characters per grid row.
pub fn render_heatmap(doc: &MapDoc) -> String {
    let mut out = String::with_capacity((doc.grid_w + 1) * doc.grid_h);
    for row in 0..doc.grid_h {
        for col in 0..doc.grid_w {
            out.push(ramp_char(doc.values[row * doc.grid_w + col]));
        }
        out.push('\n');
    }
    out
}
