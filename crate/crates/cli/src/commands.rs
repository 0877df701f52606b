use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use nds_core::dataset::{self, BuildConfig, HoldoutRule, RawSequence, DEFAULT_CROP};
use nds_core::degrade::{apply_recipe, sample_recipe, DegradationRecipe, StageToggles};
use nds_core::geometry::{self, SelectionConfig, SphereConfig, DEFAULT_RAY_GRID, DEFAULT_REFERENCE_COUNT};
use nds_core::rng::derive_seed;
use nds_core::{metrics as m, ImagePlane};

use crate::config::{pick, require, ConfigFile, DEFAULT_SEED};
use crate::{BuildArgs, CliError, ConvertArgs, DegradeArgs, MetricsArgs, SelectArgs, Toggles};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// The resolved options of a run, printed to stderr so the run can be
/// repeated exactly.
fn announce(command: &str, effective: impl Serialize) {
    eprintln!("{}", json!({ "command": command, "effective_config": effective }));
}

fn toggles(t: &Toggles, file: &ConfigFile) -> StageToggles {
    let off = |flag: bool, f: Option<bool>| flag || f.unwrap_or(false);
    StageToggles {
        sgn: !off(t.no_sgn, file.no_sgn),
        repos: !off(t.no_repos, file.no_repos),
        ablur: !off(t.no_ablur, file.no_ablur),
        region_adaptive: !off(t.no_ra, file.no_ra),
    }
}

fn jobs(flag: Option<usize>, file: &ConfigFile) -> Result<usize, CliError> {
    match pick(flag, file.jobs).unwrap_or(1) {
        0 => Err(CliError::Param("--jobs must be at least 1".into())),
        n => Ok(n),
    }
}

fn pool(n: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Param(format!("thread pool: {e}")))
}

/// `a/b.png` -> `a/b.<suffix>`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize)]
struct DegradeEffective<'a> {
    input: &'a Path,
    output: &'a Path,
    seed: u64,
    jobs: usize,
    toggles: StageToggles,
    recipe: Option<&'a Path>,
    preview: bool,
}

pub fn degrade(a: DegradeArgs, file: &ConfigFile) -> Result<(), CliError> {
    let input = require(pick(a.input, file.input.clone()), "input")?;
    let output = require(pick(a.output, file.output.clone()), "output")?;
    let seed = pick(a.seed, file.seed).unwrap_or(DEFAULT_SEED);
    let jobs = jobs(a.jobs, file)?;
    let recipe_path = pick(a.recipe, file.recipe.clone());
    let preview = a.preview || file.preview.unwrap_or(false);
    let toggles = toggles(&a.toggles, file);
    announce(
        "degrade",
        DegradeEffective {
            input: &input,
            output: &output,
            seed,
            jobs,
            toggles,
            recipe: recipe_path.as_deref(),
            preview,
        },
    );

    // Every input is checked before anything is written.
    let pairs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        if output.is_file() {
            return Err(CliError::Param(format!(
                "input {} is a directory but output {} is a file",
                input.display(),
                output.display()
            )));
        }
        let files = dataset::list_pngs(&input)?;
        if files.is_empty() {
            return Err(CliError::Param(format!("no PNG files in {}", input.display())));
        }
        files
            .into_iter()
            .map(|p| {
                let out = output.join(p.file_name().expect("listed files have names"));
                (p, out)
            })
            .collect()
    } else {
        vec![(input.clone(), output.clone())]
    };
    for (p, _) in &pairs {
        File::open(p).map_err(|e| io_err(p, e))?;
    }
    let replay = match &recipe_path {
        Some(p) if pairs.len() > 1 => {
            return Err(CliError::Param(format!(
                "--recipe {} replays a single image, got {} inputs",
                p.display(),
                pairs.len()
            )))
        }
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Some(DegradationRecipe::from_json(&text)?)
        }
        None => None,
    };

    let results = pool(jobs)?.install(|| {
        pairs
            .par_iter()
            .enumerate()
            .map(|(idx, (src, dst))| {
                let img = ImagePlane::load_png(src)?;
                let recipe = match replay {
                    Some(r) => r,
                    None => sample_recipe(derive_seed(seed, idx as u64), img.dims(), toggles)?,
                };
                let out = apply_recipe(&img, &recipe)?;
                if let Some(dir) = dst.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                }
                out.save_png(dst)?;
                let recipe_file = sibling(dst, "recipe.json");
                std::fs::write(&recipe_file, recipe.to_json() + "\n").map_err(|e| io_err(&recipe_file, e))?;
                let preview_file = if preview {
                    let p = sibling(dst, "preview.png");
                    img.hconcat(&out.quantized())?.save_png(&p)?;
                    Some(p)
                } else {
                    None
                };
                Ok(json!({
                    "input": src,
                    "output": dst,
                    "recipe": recipe_file,
                    "recipe_seed": recipe.seed,
                    "preview": preview_file,
                }))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    for r in results {
        println!("{r}");
    }
    Ok(())
}

pub fn select_views(a: SelectArgs, file: &ConfigFile) -> Result<(), CliError> {
    let cameras = require(pick(a.cameras, file.cameras.clone()), "cameras")?;
    let target = pick(a.target, file.target.clone()).unwrap_or_else(|| "all".into());
    let cfg = SelectionConfig {
        grid: pick(a.grid, file.grid).unwrap_or(DEFAULT_RAY_GRID),
        k: pick(a.k, file.k).unwrap_or(DEFAULT_REFERENCE_COUNT),
        sphere: SphereConfig {
            center: pick(a.sphere_center, file.sphere_center),
            radius: pick(a.sphere_radius, file.sphere_radius),
            radius_scale: None,
        },
    };
    announce("select-views", json!({ "cameras": cameras, "target": target, "selection": cfg }));

    let views = geometry::load_scene(&cameras)?;
    let targets: Vec<usize> = if target == "all" {
        views.iter().map(|v| v.id).collect()
    } else {
        vec![target
            .parse()
            .map_err(|_| CliError::Param(format!("--target must be a view id or `all`, got {target:?}")))?]
    };
    let (sphere, table) = geometry::scene_match_table(&views, &cfg)?;
    log::info!("sphere center {:?} radius {}", sphere.center, sphere.radius);
    let mut lines = Vec::with_capacity(targets.len());
    for t in targets {
        let ranked = geometry::ranked_references(&table, t, cfg.k)?;
        lines.push(json!({
            "target": t,
            "references": ranked.iter().map(|r| r.0).collect::<Vec<_>>(),
            "costs": ranked.iter().map(|r| r.1).collect::<Vec<_>>(),
        }));
    }
    for l in lines {
        println!("{l}");
    }
    Ok(())
}

pub fn build_dataset(a: BuildArgs, file: &ConfigFile) -> Result<(), CliError> {
    let scenes = pick(a.scenes, file.scenes.clone());
    let video = pick(a.video, file.video.clone());
    if scenes.is_none() && video.is_none() {
        return Err(CliError::Param("give --scenes and/or --video".into()));
    }
    let out = require(pick(a.out, file.out.clone()), "out")?;
    let seed = pick(a.seed, file.seed).unwrap_or(DEFAULT_SEED);
    let fraction = pick(a.fraction, file.fraction).unwrap_or(1.0);
    let crop = pick(a.crop, file.crop).unwrap_or(DEFAULT_CROP);
    let holdout = match pick(a.holdout, file.holdout) {
        Some(0) => HoldoutRule::None,
        Some(n) => HoldoutRule::EveryNth(n),
        None => HoldoutRule::default(),
    };
    let jobs = jobs(a.jobs, file)?;
    let toggles = toggles(&a.toggles, file);
    let count = pick(a.count, file.count);
    announce(
        "build-dataset",
        json!({
            "scenes": scenes, "video": video, "out": out, "seed": seed, "count": count,
            "fraction": fraction, "crop": crop, "holdout": holdout, "jobs": jobs, "toggles": toggles,
        }),
    );

    let mut seqs: Vec<RawSequence> = Vec::new();
    let mut scene_files = 0;
    if let Some(dir) = &scenes {
        if !dir.is_dir() {
            return Err(io_err(dir, "scene directory not found"));
        }
        for f in dataset::discover_scene_files(dir)? {
            seqs.extend(dataset::ingest_scene_views(&f, holdout, &SelectionConfig::default())?);
            scene_files += 1;
        }
    }
    let mut skipped_clips = 0;
    if let Some(dir) = &video {
        let v = dataset::ingest_video_triplets(dir, fraction, seed)?;
        if v.skipped_clips > 0 {
            log::warn!("{} clip(s) with fewer than 3 frames skipped", v.skipped_clips);
        }
        skipped_clips = v.skipped_clips;
        seqs.extend(v.sequences);
    }
    let cfg = BuildConfig {
        seed,
        crop,
        count: count.unwrap_or(seqs.len()),
        toggles,
        jobs,
    };
    let manifest = dataset::build_dataset(&seqs, &out, &cfg)?;
    if manifest.skipped_sequences > 0 {
        log::warn!("{} sequence(s) skipped for size", manifest.skipped_sequences);
    }
    println!(
        "{}",
        json!({
            "samples": manifest.entries.len(),
            "manifest": out.join(dataset::MANIFEST_FILE),
            "sequences": seqs.len(),
            "scene_files": scene_files,
            "skipped_sequences": manifest.skipped_sequences,
            "skipped_clips": skipped_clips,
        })
    );
    Ok(())
}

pub fn metrics(a: MetricsArgs, file: &ConfigFile) -> Result<(), CliError> {
    let reference = require(pick(a.reference, file.reference.clone()), "ref")?;
    let test = require(pick(a.test, file.test.clone()), "test")?;
    let r = m::evaluate(&ImagePlane::load_png(&reference)?, &ImagePlane::load_png(&test)?)?;
    println!("{}", json!({ "psnr_db": r.psnr_db, "ssim": r.ssim }));
    Ok(())
}

pub fn convert_poses(a: ConvertArgs, file: &ConfigFile) -> Result<(), CliError> {
    let input = require(pick(a.input, file.input.clone()), "input")?;
    let output = require(pick(a.output, file.output.clone()), "output")?;
    let images = pick(a.images, file.images.clone());
    announce("convert-poses", json!({ "input": input, "output": output, "images": images }));
    let scene = geometry::llff::convert_poses_file(&input, images.as_deref())?;
    std::fs::write(&output, scene.to_json()).map_err(|e| io_err(&output, e))?;
    println!("{}", json!({ "views": scene.views.len(), "output": output }));
    Ok(())
}
