//! `mrd` — locate query-relevant regions in very large images.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mrd_cli::config::{load_providers_config, RunConfig};
use mrd_cli::evalrun::{self, EvalMethod, ALL_METHODS};
use mrd_cli::retrieve::{run_retrieve, RetrieveSource};
use mrd_cli::scene::{load_scene, load_scene_dir};
use mrd_cli::{imgio, maps, render, CliError};

#[derive(Parser)]
#[command(name = "mrd", version, about = "Retrieval-detection fusion over large images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Grid/window/fusion settings shared by the subcommands. A preset fixes the
/// defaults; explicit flags override individual fields.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// Benchmark preset: vstar, hr4k, or hr8k
    #[arg(long, default_value = "vstar")]
    preset: String,

    /// Low-resolution crop side in pixels
    #[arg(long)]
    crop_px: Option<u32>,

    /// Coarse/low resolution ratio (integer >= 2)
    #[arg(long)]
    ratio_k: Option<u32>,

    /// Detection window side in pixels
    #[arg(long)]
    window_px: Option<u32>,

    /// Detection window stride in pixels
    #[arg(long)]
    stride_px: Option<u32>,

    /// Detection confidence threshold (strict filter)
    #[arg(long)]
    tau_det: Option<f64>,

    /// Detection weight in the final fusion, in [0, 1]
    #[arg(long)]
    weight_w: Option<f64>,

    /// Number of crops to retrieve
    #[arg(long)]
    top_k: Option<usize>,

    /// Provider endpoint config (JSON file)
    #[arg(long)]
    providers: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::from_preset(&self.preset)?;
        if let Some(v) = self.crop_px {
            cfg.crop_px = v;
        }
        if let Some(v) = self.ratio_k {
            cfg.ratio_k = v;
        }
        if let Some(v) = self.window_px {
            cfg.window_px = v;
        }
        if let Some(v) = self.stride_px {
            cfg.stride_px = v;
        }
        if let Some(v) = self.tau_det {
            cfg.tau_det = v;
        }
        if let Some(v) = self.weight_w {
            cfg.weight_w = v;
        }
        if let Some(v) = self.top_k {
            cfg.top_k = v;
        }
        if let Some(path) = &self.providers {
            cfg.providers = Some(load_providers_config(path)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Retrieve the top-K query-relevant crops of an image
    Retrieve {
        /// PNG image to analyze (omit when using --synthetic)
        image: Option<PathBuf>,

        /// Query text (defaults to the synthetic scene's query)
        query: Option<String>,

        /// Synthetic scene JSON standing in for image + providers
        #[arg(long, conflicts_with = "image")]
        synthetic: Option<PathBuf>,

        /// Directory to write semantic/detection/fused map JSON files to
        #[arg(long, num_args = 0..=1, default_missing_value = ".")]
        dump_maps: Option<PathBuf>,

        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score pipeline variants over a directory of synthetic scenes
    Eval {
        /// Directory of scene JSON files
        scenes: PathBuf,

        /// Comma-separated methods: low_only, multires, multires+ovd
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,

        /// Write the report JSON here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print a map file as a text heatmap
    Render {
        /// Map JSON file ({grid_h, grid_w, values})
        map: PathBuf,
    },
    /// Print the sliding-window plan for an image or scene as JSON
    PlanWindows {
        /// PNG image to plan over (omit when using --synthetic)
        image: Option<PathBuf>,

        /// Synthetic scene JSON supplying the dimensions
        #[arg(long, conflicts_with = "image")]
        synthetic: Option<PathBuf>,

        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Retrieve {
            image,
            query,
            synthetic,
            dump_maps,
            config,
        } => {
            let cfg = config.resolve()?;
            let source = match (image, &synthetic) {
                (Some(path), None) => RetrieveSource::Image(path),
                (None, Some(path)) => RetrieveSource::Synthetic(path.clone()),
                (None, None) => {
                    return Err(CliError::Config(
                        "give an image path or --synthetic scene.json".into(),
                    ))
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            let json = run_retrieve(source, query, &cfg, dump_maps.as_deref())?;
            println!("{json}");
            Ok(())
        }
        Command::Eval {
            scenes,
            methods,
            out,
            config,
        } => {
            let cfg = config.resolve()?;
            let methods: Vec<EvalMethod> = if methods.is_empty() {
                ALL_METHODS.to_vec()
            } else {
                methods
                    .iter()
                    .map(|m| EvalMethod::parse(m))
                    .collect::<Result<_, _>>()?
            };
            let loaded = load_scene_dir(&scenes)?;
            let report = evalrun::evaluate_scenes(loaded, &methods, &cfg);
            print!("{}", evalrun::report_table(&report));
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Other(e.to_string()))?;
            match &out {
                Some(path) => std::fs::write(path, json + "\n")
                    .map_err(|e| CliError::Other(format!("writing {}: {e}", path.display())))?,
                None => println!("{json}"),
            }
            if report.errors.is_empty() {
                Ok(())
            } else {
                Err(CliError::Other(format!(
                    "{} scene(s) failed",
                    report.errors.len()
                )))
            }
        }
        Command::Render { map } => {
            let doc = maps::read_map_doc(&map)?;
            print!("{}", render::render_heatmap(&doc));
            Ok(())
        }
        Command::PlanWindows {
            image,
            synthetic,
            config,
        } => {
            let cfg = config.resolve()?;
            let dims = match (image, synthetic) {
                (Some(path), None) => imgio::dims_of(&imgio::load_png(&path)?)?,
                (None, Some(path)) => {
                    let scene = load_scene(&path)?;
                    scene
                        .scene
                        .image_dims(cfg.crop_px)
                        .map_err(|e| CliError::Config(e.to_string()))?
                }
                _ => {
                    return Err(CliError::Config(
                        "give an image path or --synthetic scene.json".into(),
                    ))
                }
            };
            let grid = mrd_core::build_grid(dims, cfg.crop_px, cfg.ratio_k)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let plan = mrd_core::plan_windows(
                &grid,
                (cfg.window_px, cfg.window_px),
                (cfg.stride_px, cfg.stride_px),
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let json =
                serde_json::to_string(&plan).map_err(|e| CliError::Other(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
    }
}
