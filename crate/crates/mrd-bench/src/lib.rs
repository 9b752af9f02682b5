//! Benchmark fixtures: reproducible synthetic scenes at benchmark scale.

use mrd_core::{
    FusionConfig, PatchRect, PipelineConfig, SceneTarget, SyntheticSceneSpec,
};

/// A 20x20-cell scene with one coherent target and two distractors,
/// mirroring a 4480x4480 image at crop 224.
pub fn benchmark_scene() -> SyntheticSceneSpec {
    SyntheticSceneSpec {
        grid_h: 20,
        grid_w: 20,
        targets: vec![
            SceneTarget {
                rect: PatchRect::new(8, 6, 10, 8).unwrap(),
                label: "umbrella".into(),
                coherence: 0.8,
            },
            SceneTarget {
                rect: PatchRect::new(3, 15, 4, 16).unwrap(),
                label: "barrel".into(),
                coherence: 0.9,
            },
            SceneTarget {
                rect: PatchRect::new(14, 2, 16, 4).unwrap(),
                label: "cone".into(),
                coherence: 0.88,
            },
        ],
        noise_seed: 4480,
        background_level: 0.25,
    }
}

/// Pipeline settings mirroring the 4K benchmark preset.
pub fn benchmark_config() -> PipelineConfig {
    PipelineConfig {
        crop_px: 224,
        ratio_k: 2,
        window_px: (2240, 2240),
        stride_px: (1792, 1792),
        tau_det: 0.3,
        fusion: FusionConfig::default(),
    }
}
