//! `nds`: degrade images, pick reference views, build paired datasets and
//! score results from the command line.
//!
//! Exit codes: 0 on success, 1 for bad parameters, 2 for I/O failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    Param(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Param(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Param(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<nds_core::Error> for CliError {
    fn from(e: nds_core::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Param(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nds", version, about = "NeRF-style degradation, view selection and dataset tools")]
struct Cli {
    /// JSON file of option defaults; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// off, error, warn, info, debug or trace (default warn).
    #[arg(long, global = true)]
    log_level: Option<LevelFilter>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Degrade one PNG, or every PNG of a directory.
    Degrade(DegradeArgs),
    /// Pick reference views for targets of a camera rig.
    SelectViews(SelectArgs),
    /// Build a paired training set with a JSON-Lines manifest.
    BuildDataset(BuildArgs),
    /// PSNR and SSIM of a test image against a reference.
    Metrics(MetricsArgs),
    /// Turn an LLFF poses_bounds file into a cameras JSON document.
    ConvertPoses(ConvertArgs),
}

#[derive(Debug, Default, Args)]
pub struct Toggles {
    /// Disable splatted Gaussian noise.
    #[arg(long)]
    no_sgn: bool,
    /// Disable re-positioning.
    #[arg(long)]
    no_repos: bool,
    /// Disable anisotropic blur.
    #[arg(long)]
    no_ablur: bool,
    /// Apply stages everywhere instead of through oriented masks.
    #[arg(long)]
    no_ra: bool,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    /// Input PNG file or directory of PNGs.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output PNG file, or directory when the input is a directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (output does not depend on it).
    #[arg(long)]
    jobs: Option<usize>,
    /// Replay a stored recipe instead of sampling one (single input only).
    #[arg(long)]
    recipe: Option<PathBuf>,
    /// Also write `<stem>.preview.png`, input and output side by side.
    #[arg(long)]
    preview: bool,
    #[command(flatten)]
    toggles: Toggles,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Scene JSON with a `views` array.
    #[arg(long)]
    cameras: Option<PathBuf>,
    /// View id, or `all`.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Rays per image side.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_parser = config::parse_vec3, value_name = "X,Y,Z")]
    sphere_center: Option<[f64; 3]>,
    #[arg(long)]
    sphere_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Directory with `cameras.json` scenes (itself or one level down).
    #[arg(long)]
    scenes: Option<PathBuf>,
    /// Directory of clip folders holding PNG frames.
    #[arg(long)]
    video: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples to write (default: one per usable sequence).
    #[arg(long)]
    count: Option<usize>,
    /// Fraction of video clips kept, in (0, 1].
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    crop: Option<usize>,
    /// Every n-th scene view is held out for evaluation; 0 keeps all.
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    toggles: Toggles,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// poses_bounds.npy (or raw little-endian f64 rows).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Image directory; names default to NNN.png.
    #[arg(long)]
    images: Option<PathBuf>,
}

fn init_logging(flag: Option<LevelFilter>, file: &ConfigFile) -> Result<(), CliError> {
    let level = match (flag, &file.log_level) {
        (Some(l), _) => l,
        (None, Some(s)) => s
            .parse()
            .map_err(|_| CliError::Param(format!("invalid log_level {s:?}")))?,
        (None, None) => LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init()
        .ok();
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    init_logging(cli.log_level, &file)?;
    match cli.command {
        Command::Degrade(a) => commands::degrade(a, &file),
        Command::SelectViews(a) => commands::select_views(a, &file),
        Command::BuildDataset(a) => commands::build_dataset(a, &file),
        Command::Metrics(a) => commands::metrics(a, &file),
        Command::ConvertPoses(a) => commands::convert_poses(a, &file),
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
fn real_main<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version land here too
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(real_main(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use nds_core::degrade::DegradationRecipe;
    use nds_core::geometry::{look_at, CameraView, SceneFile};
    use nds_core::ImagePlane;

    use super::real_main;

    fn nds(args: &[&str]) -> u8 {
        real_main(std::iter::once("nds").chain(args.iter().copied()))
    }

    fn s(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    fn gradient(path: &Path, h: usize, w: usize) {
        ImagePlane::from_fn(h, w, |i, j, c| ((i * 7 + j * 3 + c * 40) % 200) as f64 / 255.0)
            .unwrap()
            .save_png(path)
            .unwrap();
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(nds(&["--help"]), 0);
        assert_eq!(nds(&["--version"]), 0);
        assert_eq!(nds(&["degrade", "--help"]), 0);
    }

    #[test]
    fn unknown_flags_and_bad_values_exit_one() {
        assert_eq!(nds(&["degrade", "--bogus"]), 1);
        assert_eq!(nds(&["frobnicate"]), 1);
        assert_eq!(nds(&["degrade", "--seed", "-3"]), 1);
        assert_eq!(nds(&["select-views", "--sphere-center", "1,2"]), 1);
        // required option missing after merging
        assert_eq!(nds(&["metrics", "--test", "x.png"]), 1);
    }

    #[test]
    fn missing_input_exits_two_without_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o/b.png");
        let missing = dir.path().join("nope.png");
        assert_eq!(nds(&["degrade", "--input", s(&missing), "--output", s(&out)]), 2);
        assert!(!dir.path().join("o").exists());
        assert_eq!(nds(&["metrics", "--ref", s(&missing), "--test", s(&missing)]), 2);
    }

    #[test]
    fn degrade_writes_recipe_that_replays() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.png");
        gradient(&a, 40, 48);
        let b = dir.path().join("b.png");
        let c = dir.path().join("c.png");
        assert_eq!(nds(&["degrade", "--input", s(&a), "--output", s(&b), "--seed", "7", "--preview"]), 0);
        let recipe = DegradationRecipe::from_json(&std::fs::read_to_string(dir.path().join("b.recipe.json")).unwrap()).unwrap();
        assert_eq!((recipe.height, recipe.width), (40, 48));
        assert_eq!(ImagePlane::load_png(dir.path().join("b.preview.png")).unwrap().dims(), (40, 96));
        let rp = dir.path().join("b.recipe.json");
        assert_eq!(nds(&["degrade", "--input", s(&a), "--output", s(&c), "--recipe", s(&rp)]), 0);
        assert_eq!(std::fs::read(&b).unwrap(), std::fs::read(&c).unwrap());
        // a recipe for other dimensions is a parameter error
        let small = dir.path().join("small.png");
        gradient(&small, 16, 16);
        let d = dir.path().join("d.png");
        assert_eq!(nds(&["degrade", "--input", s(&small), "--output", s(&d), "--recipe", s(&rp)]), 1);
        // too small for the pipeline
        let tiny = dir.path().join("tiny.png");
        gradient(&tiny, 4, 4);
        assert_eq!(nds(&["degrade", "--input", s(&tiny), "--output", s(&d)]), 1);
    }

    #[test]
    fn toggles_off_reproduce_input() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.png");
        gradient(&a, 24, 24);
        let b = dir.path().join("b.png");
        let args = ["degrade", "--input", s(&a), "--output", s(&b), "--no-sgn", "--no-repos", "--no-ablur"];
        assert_eq!(nds(&args), 0);
        assert_eq!(ImagePlane::load_png(&a).unwrap(), ImagePlane::load_png(&b).unwrap());
    }

    #[test]
    fn config_file_fills_in_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.png");
        gradient(&a, 24, 24);
        let cfg = dir.path().join("cfg.json");
        let from_cfg = dir.path().join("x.png");
        std::fs::write(
            &cfg,
            serde_json::json!({"input": a, "output": from_cfg, "seed": 5}).to_string(),
        )
        .unwrap();
        assert_eq!(nds(&["--config", s(&cfg), "degrade"]), 0);
        let seeded = dir.path().join("y.png");
        assert_eq!(nds(&["degrade", "--input", s(&a), "--output", s(&seeded), "--seed", "5"]), 0);
        assert_eq!(std::fs::read(&from_cfg).unwrap(), std::fs::read(&seeded).unwrap());

        let overridden = dir.path().join("z.png");
        assert_eq!(nds(&["--config", s(&cfg), "degrade", "--output", s(&overridden), "--seed", "6"]), 0);
        assert_ne!(std::fs::read(&from_cfg).unwrap(), std::fs::read(&overridden).unwrap());

        std::fs::write(&cfg, r#"{"seeed": 1}"#).unwrap();
        assert_eq!(nds(&["--config", s(&cfg), "degrade"]), 1);
        assert_eq!(nds(&["--config", s(&dir.path().join("none.json")), "degrade"]), 2);
    }

    #[test]
    fn select_views_and_convert_poses_run() {
        let dir = tempfile::tempdir().unwrap();
        let views: Vec<CameraView> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 6.0;
                let eye = [4.0 * a.cos(), 0.0, 4.0 * a.sin()];
                CameraView {
                    id: k,
                    image_path: format!("{k}.png").into(),
                    width: 32,
                    height: 24,
                    fx: 20.0,
                    fy: 20.0,
                    cx: 16.0,
                    cy: 12.0,
                    rotation: look_at(eye, [0.0; 3], [0.0, 1.0, 0.0]),
                    translation: eye,
                    near: 3.0,
                    far: 5.0,
                }
            })
            .collect();
        let scene = dir.path().join("cameras.json");
        std::fs::write(&scene, SceneFile::from_views(&views).to_json()).unwrap();
        assert_eq!(nds(&["select-views", "--cameras", s(&scene), "--target", "0"]), 0);
        assert_eq!(nds(&["select-views", "--cameras", s(&scene), "--target", "9"]), 1);
        assert_eq!(nds(&["select-views", "--cameras", s(&scene), "--target", "zero"]), 1);
        assert_eq!(nds(&["select-views", "--cameras", s(&scene), "--k", "6"]), 1);
        assert_eq!(
            nds(&["select-views", "--cameras", s(&scene), "--sphere-center", "0,0,0", "--sphere-radius", "1"]),
            0
        );

        let npy = dir.path().join("poses_bounds.npy");
        let poses: Vec<_> = (0..4)
            .map(|k| nds_core::geometry::llff::LlffPose {
                matrix: [
                    [0.0, 1.0, 0.0, k as f64 * 0.1, 30.0],
                    [-1.0, 0.0, 0.0, 0.0, 40.0],
                    [0.0, 0.0, 1.0, 0.0, 35.0],
                ],
                near: 1.0,
                far: 4.0,
            })
            .collect();
        std::fs::write(&npy, nds_core::geometry::llff::encode_poses_bounds(&poses)).unwrap();
        let out = dir.path().join("scene.json");
        assert_eq!(nds(&["convert-poses", "--input", s(&npy), "--output", s(&out)]), 0);
        assert_eq!(nds_core::geometry::load_scene(&out).unwrap().len(), 4);
        std::fs::write(&npy, b"garbage").unwrap();
        assert_eq!(nds(&["convert-poses", "--input", s(&npy), "--output", s(&out)]), 1);
    }

    #[test]
    fn build_dataset_from_video_dir() {
        let dir = tempfile::tempdir().unwrap();
        for c in 0..2 {
            let clip = dir.path().join(format!("v/{c}"));
            std::fs::create_dir_all(&clip).unwrap();
            for f in 0..3 {
                gradient(&clip.join(format!("{f}.png")), 24 + f, 24 + f);
            }
        }
        let out = dir.path().join("out");
        let video = dir.path().join("v");
        // frames of one clip differ in size, so every sequence is skipped
        assert_eq!(nds(&["build-dataset", "--video", s(&video), "--out", s(&out), "--crop", "16"]), 1);
        for c in 0..2 {
            for f in 0..3 {
                gradient(&video.join(format!("{c}/{f}.png")), 24, 24);
            }
        }
        let args = ["build-dataset", "--video", s(&video), "--out", s(&out), "--crop", "16", "--count", "3"];
        assert_eq!(nds(&args), 0);
        let m = nds_core::dataset::read_manifest(&out.join("manifest.jsonl")).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(nds(&["build-dataset", "--out", s(&out)]), 1);
        assert_eq!(nds(&["build-dataset", "--video", s(&dir.path().join("nope")), "--out", s(&out)]), 2);
        assert_eq!(nds(&["build-dataset", "--video", s(&video), "--out", s(&out), "--fraction", "1.5"]), 1);
    }
}
