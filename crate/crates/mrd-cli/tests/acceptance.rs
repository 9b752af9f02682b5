//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Tolerances are pinned in the assertions.
//!
//! Run: `cargo test -p mrd-cli --test acceptance -- --nocapture`

mod common;

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrd_cli::config::RunConfig;
use mrd_cli::evalrun::{evaluate_scenes, EvalMethod, ALL_METHODS};
use mrd_cli::scene::load_scene_dir;
use mrd_core::providers::synthetic::PseudorandomEmbedder;
use mrd_core::{
    build_grid, cosine_similarity01, detection_map, fuse_maps, multi_resolution_map, plan_windows,
    select_top_k, spatial_layout, Detection, DetectorProvider, Embedding, EmbeddingProvider,
    ImageDims, Lattice, ObjectSet, PatchGrid, PatchIndex, PixelRect, ProviderResult, Query,
    ScoreMap, ScoredPatch, WindowPlan,
};

fn pass(n: u32, name: &str) {
    eprintln!("[acceptance] criterion {n} ({name}): PASS");
}

// ---------------------------------------------------------------------------
// 1. Grid algebra on randomized inputs
// ---------------------------------------------------------------------------

/// Proves a set of rects exactly partitions `[0,w) x [0,h)`: row bands tile
/// the height, and within each band the rects tile the width.
fn assert_exact_partition(rects: &[PixelRect], w: u32, h: u32) {
    let area: u64 = rects.iter().map(|r| r.area()).sum();
    assert_eq!(area, u64::from(w) * u64::from(h), "area mismatch");
    let mut bands: std::collections::BTreeMap<(u32, u32), Vec<(u32, u32)>> =
        std::collections::BTreeMap::new();
    for r in rects {
        bands.entry((r.y0, r.y1)).or_default().push((r.x0, r.x1));
    }
    let mut y_cursor = 0;
    for ((y0, y1), mut xs) in bands {
        assert_eq!(y0, y_cursor, "gap or overlap between row bands");
        assert!(y1 > y0);
        xs.sort_unstable();
        let mut x_cursor = 0;
        for (x0, x1) in xs {
            assert_eq!(x0, x_cursor, "gap or overlap within a row band");
            x_cursor = x1;
        }
        assert_eq!(x_cursor, w, "row band does not reach the right edge");
        y_cursor = y1;
    }
    assert_eq!(y_cursor, h, "bands do not reach the bottom edge");
}

#[test]
fn criterion_1_grid_algebra() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let k = rng.gen_range(2..=4u32);
        let crop = rng.gen_range(32..=256u32);
        let dims = ImageDims::new(rng.gen_range(1..=3000), rng.gen_range(1..=3000)).unwrap();
        let grid = build_grid(dims, crop, k).unwrap();

        // n = k^2 * m, exactly
        assert_eq!(
            grid.grid_h * grid.grid_w,
            (k as usize).pow(2) * grid.coarse_h * grid.coarse_w
        );

        // low-lattice rects tile padded_dims exactly
        let rects: Vec<PixelRect> = grid
            .indices(Lattice::Low)
            .map(|i| grid.patch_rect(i, Lattice::Low).unwrap())
            .collect();
        assert_exact_partition(
            &rects,
            grid.padded_dims.width_px,
            grid.padded_dims.height_px,
        );

        // every coarse cell's children tile the parent rect
        for coarse in grid.indices(Lattice::Coarse) {
            let parent = grid.patch_rect(coarse, Lattice::Coarse).unwrap();
            let children: Vec<PixelRect> = grid
                .coarse_children(coarse)
                .unwrap()
                .into_iter()
                .map(|c| grid.patch_rect(c, Lattice::Low).unwrap())
                .collect();
            assert_eq!(children.len(), (k as usize).pow(2));
            let shifted: Vec<PixelRect> = children
                .iter()
                .map(|r| {
                    assert!(parent.contains_rect(r));
                    r.offset_neg(parent.x0, parent.y0)
                })
                .collect();
            assert_exact_partition(&shifted, parent.width(), parent.height());
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    pass(1, "grid algebra, 1000 randomized triples");
}

// ---------------------------------------------------------------------------
// 2. Shifted cosine reference cases
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_cosine_reference_cases() {
    let e = |v: &[f64]| Embedding::new(v.to_vec()).unwrap();
    let cases = [
        (vec![3.0, 0.0, 0.0], vec![7.5, 0.0, 0.0], 1.0),
        (vec![1.0, 0.0], vec![0.0, 1.0], 0.5),
        (vec![2.0, 0.0], vec![-0.5, 0.0], 0.0),
    ];
    for (a, b, want) in cases {
        let got = cosine_similarity01(&e(&a), &e(&b)).unwrap();
        assert!((got - want).abs() <= 1e-12, "{a:?} vs {b:?}: {got}");
    }
    pass(2, "cosine parallel/orthogonal/antiparallel");
}

// ---------------------------------------------------------------------------
// 3. Multi-resolution fusion vs per-patch brute force
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_multires_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let query = Query::new("object of interest").unwrap();
    let mut max_err = 0.0f64;
    for case in 0..200u64 {
        let k = [2u32, 3][rng.gen_range(0..2)];
        let crop = rng.gen_range(8..=32u32);
        let max_coarse = 64 / k;
        let coarse_w = rng.gen_range(1..=max_coarse);
        let coarse_h = rng.gen_range(1..=max_coarse);
        let dims = ImageDims::new(coarse_w * k * crop, coarse_h * k * crop).unwrap();
        let grid = build_grid(dims, crop, k).unwrap();
        let embedder = PseudorandomEmbedder { seed: 30_000 + case };

        let got = multi_resolution_map(&query, &grid, &embedder).unwrap();
        let q = embedder.embed_query(&query).unwrap();
        for row in 0..grid.grid_h {
            for col in 0..grid.grid_w {
                let low = grid
                    .patch_rect(PatchIndex::new(row, col), Lattice::Low)
                    .unwrap();
                let parent = PatchIndex::new(row / k as usize, col / k as usize);
                let coarse = grid.patch_rect(parent, Lattice::Coarse).unwrap();
                let s_low =
                    cosine_similarity01(&q, &embedder.embed_crops(&[low]).unwrap()[0]).unwrap();
                let s_hi =
                    cosine_similarity01(&q, &embedder.embed_crops(&[coarse]).unwrap()[0]).unwrap();
                let want = (s_low * s_hi).sqrt();
                max_err = max_err.max((got.get(row, col) - want).abs());
            }
        }
    }
    assert!(max_err <= 1e-12, "max abs error {max_err}");
    pass(3, "multi-resolution fusion oracle, 200 instances");
}

// ---------------------------------------------------------------------------
// 4. Detection aggregation vs per-patch window enumeration
// ---------------------------------------------------------------------------

struct ScriptedDetector {
    per_window: Vec<(PixelRect, Vec<Detection>)>,
}

impl DetectorProvider for ScriptedDetector {
    fn detect_in_window(
        &self,
        window: PixelRect,
        _labels: &ObjectSet,
    ) -> ProviderResult<Vec<Detection>> {
        Ok(self
            .per_window
            .iter()
            .find(|(w, _)| *w == window)
            .map(|(_, d)| d.clone())
            .unwrap_or_default())
    }
}

fn detection_bruteforce(
    grid: &PatchGrid,
    plan: &WindowPlan,
    detector: &ScriptedDetector,
    tau: f64,
) -> ScoreMap {
    let mut out = ScoreMap::zeros(grid.grid_h, grid.grid_w);
    for row in 0..grid.grid_h {
        for col in 0..grid.grid_w {
            let patch = grid
                .patch_rect(PatchIndex::new(row, col), Lattice::Low)
                .unwrap();
            let (mut sum, mut count) = (0.0f64, 0u32);
            for (window, dets) in &detector.per_window {
                if !window.contains_rect(&patch) {
                    continue;
                }
                let local = patch.offset_neg(window.x0, window.y0);
                let mut cell = 0.0f64;
                for det in dets {
                    if det.score > tau && det.rect.intersect(&local).is_some() {
                        cell = cell.max(det.score);
                    }
                }
                sum += cell;
                count += 1;
            }
            assert!(count >= 1, "window plan left ({row},{col}) uncovered");
            out.set(row, col, sum / f64::from(count));
        }
    }
    let _ = plan;
    out
}

#[test]
fn criterion_4_detection_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let labels = ObjectSet::new(vec!["object".into()]).unwrap();
    let mut max_err = 0.0f64;
    for _ in 0..200 {
        let crop = rng.gen_range(8..=24u32);
        let coarse_w = rng.gen_range(1..=16u32);
        let coarse_h = rng.gen_range(1..=16u32);
        let dims = ImageDims::new(coarse_w * 2 * crop, coarse_h * 2 * crop).unwrap();
        let grid = build_grid(dims, crop, 2).unwrap();
        let cells_w = grid.padded_dims.width_px / crop;
        let cells_h = grid.padded_dims.height_px / crop;
        let plan = loop {
            let win_w = rng.gen_range(cells_w.div_ceil(2)..=cells_w) * crop;
            let win_h = rng.gen_range(cells_h.div_ceil(2)..=cells_h) * crop;
            let sx = rng.gen_range(1..=win_w / crop) * crop;
            let sy = rng.gen_range(1..=win_h / crop) * crop;
            let plan = plan_windows(&grid, (win_w, win_h), (sx, sy)).unwrap();
            if plan.len() <= 8 {
                break plan;
            }
        };
        let mut per_window: Vec<(PixelRect, Vec<Detection>)> =
            plan.windows.iter().map(|w| (*w, Vec::new())).collect();
        for _ in 0..rng.gen_range(0..=16usize) {
            let wi = rng.gen_range(0..plan.windows.len());
            let window = plan.windows[wi];
            let x0 = rng.gen_range(0..window.width());
            let y0 = rng.gen_range(0..window.height());
            let rect = PixelRect::new(
                x0,
                y0,
                rng.gen_range(x0 + 1..=window.width()),
                rng.gen_range(y0 + 1..=window.height()),
            )
            .unwrap();
            per_window[wi]
                .1
                .push(Detection::window_local(rect, rng.gen_range(0.0..=1.0), "object").unwrap());
        }
        let detector = ScriptedDetector { per_window };
        let tau = rng.gen_range(0.0..0.6);
        let got = detection_map(&grid, &plan, &labels, &detector, tau).unwrap();
        let want = detection_bruteforce(&grid, &plan, &detector, tau);
        for (g, w) in got.values().iter().zip(want.values()) {
            max_err = max_err.max((g - w).abs());
        }
    }
    assert!(max_err <= 1e-9, "max abs error {max_err}");

    // the worked overlap case: window values 0.8 and 0.6 average to 0.7
    let grid = build_grid(ImageDims::new(448, 224).unwrap(), 112, 2).unwrap();
    let plan = plan_windows(&grid, (336, 224), (112, 224)).unwrap();
    let full = |score| {
        vec![Detection::window_local(PixelRect::new(0, 0, 336, 224).unwrap(), score, "object")
            .unwrap()]
    };
    let detector = ScriptedDetector {
        per_window: vec![(plan.windows[0], full(0.8)), (plan.windows[1], full(0.6))],
    };
    let map = detection_map(&grid, &plan, &labels, &detector, 0.0).unwrap();
    assert!((map.get(0, 1) - 0.7).abs() <= 1e-9);
    pass(4, "detection aggregation oracle, 200 instances");
}

// ---------------------------------------------------------------------------
// 5. Linear fusion properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_fusion_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..200 {
        let h = rng.gen_range(1..=8);
        let w = rng.gen_range(1..=8);
        let s: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let c: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let sm = ScoreMap::new(h, w, s.clone()).unwrap();
        let cm = ScoreMap::new(h, w, c.clone()).unwrap();
        let weight = rng.gen_range(0.0..=1.0);
        let fused = fuse_maps(&sm, &cm, weight).unwrap();
        for i in 0..h * w {
            let (lo, hi) = (s[i].min(c[i]), s[i].max(c[i]));
            assert!(fused.values()[i] >= lo - 1e-12 && fused.values()[i] <= hi + 1e-12);
        }
        // degenerate identities, exact
        assert_eq!(fuse_maps(&sm, &cm, 0.0).unwrap().values(), sm.values());
        assert_eq!(fuse_maps(&sm, &cm, 1.0).unwrap().values(), cm.values());
    }
    // spot value at the default detection weight
    let s = ScoreMap::new(1, 1, vec![0.5]).unwrap();
    let c = ScoreMap::new(1, 1, vec![1.0]).unwrap();
    let fused = fuse_maps(&s, &c, 0.4).unwrap();
    assert!((fused.get(0, 0) - 0.7).abs() <= 1e-12);
    pass(5, "linear fusion convexity, identities, spot value");
}

// ---------------------------------------------------------------------------
// 6. Preset fidelity
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_preset_fidelity() {
    for (name, crop, window, stride) in [
        ("vstar", 112u32, 1232u32, 896u32),
        ("hr4k", 224, 2240, 1792),
        ("hr8k", 448, 3136, 2688),
    ] {
        let cfg = RunConfig::from_preset(name).unwrap();
        assert_eq!(cfg.crop_px, crop);
        assert_eq!(cfg.window_px, window);
        assert_eq!(cfg.stride_px, stride);
        assert_eq!(cfg.ratio_k, 2);
        assert_eq!(cfg.weight_w, 0.4);
        let round_tripped: RunConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round_tripped, cfg);
    }
    pass(6, "preset fidelity and config round-trip");
}

// ---------------------------------------------------------------------------
// 7. Fragmentation battery
// ---------------------------------------------------------------------------

fn battery_config() -> RunConfig {
    RunConfig::from_preset("vstar").unwrap()
}

#[test]
fn criterion_7_fragmentation_battery() {
    let started = Instant::now();
    let dir = common::battery_dir("fragmentation");
    let cfg = battery_config();
    let report = evaluate_scenes(load_scene_dir(&dir).unwrap(), &ALL_METHODS, &cfg);
    let again = evaluate_scenes(load_scene_dir(&dir).unwrap(), &ALL_METHODS, &cfg);
    assert_eq!(report, again, "evaluation must be deterministic");
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert_eq!(
        report.scenes.len(),
        common::BATTERY_SIZE * ALL_METHODS.len()
    );

    let low = report.mean_recall(EvalMethod::LowOnly).unwrap();
    let multi = report.mean_recall(EvalMethod::MultiRes).unwrap();
    assert!(
        multi - low >= 0.05,
        "mean recall@16: multires {multi} vs low_only {low}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(7, "fragmentation battery recall gap");
}

// ---------------------------------------------------------------------------
// 8. Detection enhancement battery
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_detection_battery() {
    let dir = common::battery_dir("distractor");
    let cfg = battery_config();
    let report = evaluate_scenes(load_scene_dir(&dir).unwrap(), &ALL_METHODS, &cfg);
    let again = evaluate_scenes(load_scene_dir(&dir).unwrap(), &ALL_METHODS, &cfg);
    assert_eq!(report, again, "evaluation must be deterministic");
    assert!(report.errors.is_empty(), "{:?}", report.errors);

    let mut strict = 0usize;
    let mut scene_ids: Vec<String> = report
        .scenes
        .iter()
        .map(|r| r.scene_id.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    scene_ids.sort();
    assert_eq!(scene_ids.len(), common::BATTERY_SIZE);
    for id in &scene_ids {
        let multi = report.record(id, EvalMethod::MultiRes).unwrap().recall_at_k;
        let ovd = report
            .record(id, EvalMethod::MultiResOvd)
            .unwrap()
            .recall_at_k;
        assert!(ovd >= multi, "scene {id}: ovd {ovd} < multires {multi}");
        if ovd > multi {
            strict += 1;
        }
    }
    assert!(
        strict as f64 >= 0.6 * scene_ids.len() as f64,
        "strict improvement on only {strict}/{} scenes",
        scene_ids.len()
    );
    pass(8, "detection enhancement battery");
}

// ---------------------------------------------------------------------------
// 9. End-to-end determinism and scale
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_end_to_end_golden() {
    let scene = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/hr4k_scene.json");
    let golden = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/golden_retrieve_hr4k.json");
    let golden_bytes = std::fs::read(&golden).unwrap();
    for run in 0..2 {
        let started = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_mrd"))
            .args(["retrieve", "--synthetic"])
            .arg(&scene)
            .args(["--preset", "hr4k"])
            .output()
            .unwrap();
        let elapsed = started.elapsed();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(elapsed.as_secs_f64() < 10.0, "run {run} took {elapsed:?}");
        assert_eq!(
            out.stdout, golden_bytes,
            "run {run} diverged from the golden document"
        );
    }
    pass(9, "4480x4480 synthetic retrieve, golden byte-stable");
}

// ---------------------------------------------------------------------------
// 10. Tie-break and layout properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_tiebreak_and_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);

    // ranking is invariant under cell evaluation order
    for _ in 0..200 {
        let h = rng.gen_range(1..=8);
        let w = rng.gen_range(1..=8);
        // quantized values force ties
        let values: Vec<f64> = (0..h * w)
            .map(|_| (rng.gen_range(0.0f64..=1.0) * 5.0).round() / 5.0)
            .collect();
        let map = ScoreMap::new(h, w, values).unwrap();
        let k = rng.gen_range(1..=h * w + 3);
        let base = select_top_k(&map, k);

        let mut cells: Vec<(PatchIndex, f64)> = map.iter_cells().collect();
        // shuffle, then resort with the same total order
        for i in (1..cells.len()).rev() {
            cells.swap(i, rng.gen_range(0..=i));
        }
        cells.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        cells.truncate(k);
        let alt: Vec<ScoredPatch> = cells
            .into_iter()
            .map(|(index, score)| ScoredPatch { index, score })
            .collect();
        assert_eq!(base, alt);
    }

    // layout order preservation over 1000 random selections
    for _ in 0..1000 {
        let n = rng.gen_range(1..=24);
        let mut set = std::collections::BTreeSet::new();
        while set.len() < n {
            set.insert(PatchIndex::new(rng.gen_range(0..32), rng.gen_range(0..32)));
        }
        let selected: Vec<PatchIndex> = set.into_iter().collect();
        let layout = spatial_layout(&selected).unwrap();
        let place = |idx: &PatchIndex| {
            layout
                .cells
                .iter()
                .find(|(_, v)| *v == idx)
                .map(|(k, _)| *k)
                .unwrap()
        };
        for a in &selected {
            for b in &selected {
                let (ar, ac) = place(a);
                let (br, bc) = place(b);
                if a.row < b.row {
                    assert!(ar <= br);
                }
                if a.col < b.col {
                    assert!(ac <= bc);
                }
            }
        }
    }
    pass(10, "top-K tie-break and layout order preservation");
}
