//! Shared test support: battery generation for the evaluation suites.
//!
//! Battery construction notes. Both batteries plant one "true" target (the
//! label the scene query asks about) among distractor rectangles the
//! embedder also responds to:
//!
//! - Fragmentation battery: the true target straddles low-lattice boundaries
//!   inside a single coarse cell (full coherent coarse view), while each
//!   distractor straddles a coarse-cell boundary with high coherence. At low
//!   resolution the distractors outscore the fragmented target everywhere;
//!   consistency fusion flips the order, because the target's coarse view is
//!   perfect and the distractors' coarse views are fragments.
//! - Distractor battery: high background, and the distractors are single-cell
//!   rects which are unsuppressable by fusion (a cell containing a whole
//!   object is maximal at both resolutions). Only the detection branch,
//!   conditioned on the true label, separates the target from them.

// not every test target uses every helper
#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrd_cli::scene::EvalScene;
use mrd_core::{PatchRect, SceneTarget, SyntheticSceneSpec};

pub const GRID: u32 = 24; // low cells per side; coarse 12x12 at k = 2
pub const BATTERY_SIZE: usize = 50;

const TRUE_LABELS: &[&str] = &[
    "umbrella", "kite", "dog", "bicycle", "lighthouse", "mailbox", "tractor", "canoe", "parrot",
    "violin",
];
const DISTRACTOR_LABELS: &[&str] = &["barrel", "cone", "crate", "tarp", "bench", "ladder"];

fn round4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

/// True-target shapes in low cells, confined to one coarse cell.
fn target_rect(rng: &mut ChaCha8Rng, coarse_row: u32, coarse_col: u32) -> PatchRect {
    let row0 = coarse_row * 2;
    let col0 = coarse_col * 2;
    match rng.gen_range(0..3) {
        0 => {
            // 1 row x 2 cols
            let dy = rng.gen_range(0..2);
            PatchRect::new(col0, row0 + dy, col0 + 2, row0 + dy + 1).unwrap()
        }
        1 => {
            // 2 rows x 1 col
            let dx = rng.gen_range(0..2);
            PatchRect::new(col0 + dx, row0, col0 + dx + 1, row0 + 2).unwrap()
        }
        _ => PatchRect::new(col0, row0, col0 + 2, row0 + 2).unwrap(),
    }
}

/// Coarse cells a patch rect touches, for overlap bookkeeping.
fn touched_coarse(rect: &PatchRect) -> Vec<(u32, u32)> {
    let mut cells = Vec::new();
    for row in (rect.y0 / 2)..rect.y1.div_ceil(2) {
        for col in (rect.x0 / 2)..rect.x1.div_ceil(2) {
            cells.push((row, col));
        }
    }
    cells
}

fn reserve(reserved: &mut Vec<(u32, u32)>, rect: &PatchRect) -> bool {
    let cells = touched_coarse(rect);
    if cells.iter().any(|c| reserved.contains(c)) {
        return false;
    }
    reserved.extend(cells);
    true
}

/// A 2x2 distractor straddling a coarse boundary, so every coarse view of it
/// is a fragment.
fn straddling_rect(rng: &mut ChaCha8Rng) -> PatchRect {
    // interior coarse lattice point
    let gr = rng.gen_range(1..GRID / 2);
    let gc = rng.gen_range(1..GRID / 2);
    match rng.gen_range(0..3) {
        0 => PatchRect::new(gc * 2, gr * 2 - 1, gc * 2 + 2, gr * 2 + 1).unwrap(),
        1 => PatchRect::new(gc * 2 - 1, gr * 2, gc * 2 + 1, gr * 2 + 2).unwrap(),
        _ => PatchRect::new(gc * 2 - 1, gr * 2 - 1, gc * 2 + 1, gr * 2 + 1).unwrap(),
    }
}

pub fn fragmentation_battery() -> Vec<EvalScene> {
    (0..BATTERY_SIZE)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xF5A6_0000 + i as u64);
            let label = TRUE_LABELS[i % TRUE_LABELS.len()];
            let bg = round4(rng.gen_range(0.15..0.28));
            let mut reserved: Vec<(u32, u32)> = Vec::new();

            let coarse_row = rng.gen_range(0..GRID / 2);
            let coarse_col = rng.gen_range(0..GRID / 2);
            let rect = target_rect(&mut rng, coarse_row, coarse_col);
            assert!(reserve(&mut reserved, &rect));
            let mut targets = vec![SceneTarget {
                rect,
                label: label.to_string(),
                coherence: 0.5,
            }];

            let n_distractors = rng.gen_range(5..=8);
            let mut placed = 0;
            while placed < n_distractors {
                let rect = straddling_rect(&mut rng);
                if !reserve(&mut reserved, &rect) {
                    continue;
                }
                targets.push(SceneTarget {
                    rect,
                    label: DISTRACTOR_LABELS[placed % DISTRACTOR_LABELS.len()].to_string(),
                    coherence: round4(rng.gen_range(0.85..0.95)),
                });
                placed += 1;
            }

            EvalScene {
                scene_id: format!("frag-{i:03}"),
                query: format!("Where is the {label}?"),
                scene: SyntheticSceneSpec {
                    grid_h: GRID,
                    grid_w: GRID,
                    targets,
                    noise_seed: rng.gen(),
                    background_level: bg,
                },
            }
        })
        .collect()
}

pub fn distractor_battery() -> Vec<EvalScene> {
    (0..BATTERY_SIZE)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xD157_0000 + i as u64);
            let label = TRUE_LABELS[i % TRUE_LABELS.len()];
            let bg = round4(rng.gen_range(0.70..0.82));
            let mut reserved: Vec<(u32, u32)> = Vec::new();

            let coarse_row = rng.gen_range(0..GRID / 2);
            let coarse_col = rng.gen_range(0..GRID / 2);
            let rect = target_rect(&mut rng, coarse_row, coarse_col);
            assert!(reserve(&mut reserved, &rect));
            let mut targets = vec![SceneTarget {
                rect,
                label: label.to_string(),
                coherence: round4(rng.gen_range(0.40..0.60)),
            }];

            // 70% of scenes drown the top-K in whole-object distractor cells
            let crowded = i % 10 < 7;
            let n_solo = if crowded {
                rng.gen_range(16..=20)
            } else {
                rng.gen_range(2..=5)
            };
            let mut placed = 0;
            while placed < n_solo {
                let row = rng.gen_range(0..GRID);
                let col = rng.gen_range(0..GRID);
                let rect = PatchRect::new(col, row, col + 1, row + 1).unwrap();
                if !reserve(&mut reserved, &rect) {
                    continue;
                }
                targets.push(SceneTarget {
                    rect,
                    label: DISTRACTOR_LABELS[placed % DISTRACTOR_LABELS.len()].to_string(),
                    coherence: round4(rng.gen_range(0.85..0.95)),
                });
                placed += 1;
            }

            EvalScene {
                scene_id: format!("dist-{i:03}"),
                query: format!("Where is the {label}?"),
                scene: SyntheticSceneSpec {
                    grid_h: GRID,
                    grid_w: GRID,
                    targets,
                    noise_seed: rng.gen(),
                    background_level: bg,
                },
            }
        })
        .collect()
}

pub fn battery_dir(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("batteries").join(name)
}

pub fn scene_json(scene: &EvalScene) -> String {
    serde_json::to_string_pretty(scene).expect("scene serializes") + "\n"
}

pub fn write_battery(dir: &Path, scenes: &[EvalScene]) {
    std::fs::create_dir_all(dir).expect("create battery dir");
    for scene in scenes {
        let path = dir.join(format!("{}.json", scene.scene_id));
        std::fs::write(path, scene_json(scene)).expect("write scene");
    }
}
