use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::RawSequence;
use crate::degrade::{apply_recipe, sample_recipe, DegradationRecipe, StageToggles};
use crate::error::{Error, Result};
use crate::image::{ImagePlane, MIN_PIPELINE_DIM};
use crate::rng::stream_rng;

pub const DEFAULT_CROP: usize = 128;
pub const MAX_REF_OFFSET: i64 = 5;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRecord {
    pub top: usize,
    pub left: usize,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugRecord {
    pub hflip: bool,
    pub vflip: bool,
    /// Counter-clockwise quarter turns, 0-3.
    pub rot90: u8,
}

impl AugRecord {
    pub const IDENTITY: AugRecord = AugRecord {
        hflip: false,
        vflip: false,
        rot90: 0,
    };

    /// Horizontal flip, then vertical flip, then rotation.
    pub fn apply(&self, img: &ImagePlane) -> ImagePlane {
        let mut out = img.clone();
        if self.hflip {
            out = out.flip_horizontal();
        }
        if self.vflip {
            out = out.flip_vertical();
        }
        out.rot90(self.rot90)
    }

    pub fn invert(&self, img: &ImagePlane) -> ImagePlane {
        let mut out = img.rot90((4 - self.rot90 % 4) % 4);
        if self.vflip {
            out = out.flip_vertical();
        }
        if self.hflip {
            out = out.flip_horizontal();
        }
        out
    }
}

/// One `{degraded, ref1, ref2 | gt}` sample. Paths to written images are
/// relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifestEntry {
    pub sample_id: usize,
    pub gt_path: PathBuf,
    pub degraded_path: PathBuf,
    pub ref1_path: PathBuf,
    pub ref2_path: PathBuf,
    pub recipe: DegradationRecipe,
    /// `(dy, dx)` global translation of each reference, edge-clamped.
    pub ref_offsets: [[i64; 2]; 2],
    pub crop: CropRecord,
    pub aug: AugRecord,
    pub source: RawSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub seed: u64,
    pub crop: usize,
    pub count: usize,
    pub toggles: StageToggles,
    /// Worker threads; the output does not depend on it.
    pub jobs: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            crop: DEFAULT_CROP,
            count: 1,
            toggles: StageToggles::all(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<SampleManifestEntry>,
    /// Sequences dropped for mismatched or too-small images.
    pub skipped_sequences: usize,
}

/// Sequences whose three images share dimensions of at least `crop`.
pub fn usable_sequences(sequences: &[RawSequence], crop: usize) -> Result<(Vec<RawSequence>, usize)> {
    let mut kept = Vec::new();
    let mut skipped = 0;
    for s in sequences {
        let dims = [&s.target_path, &s.ref1_path, &s.ref2_path]
            .iter()
            .map(|p| image_dims(p))
            .collect::<Result<Vec<_>>>()?;
        let (w, h) = dims[0];
        if dims.iter().any(|d| *d != (w, h)) {
            log::warn!("skipping {}: image sizes differ", s.target_path.display());
            skipped += 1;
        } else if (h as usize) < crop || (w as usize) < crop {
            log::warn!("skipping {}: {w}x{h} smaller than crop {crop}", s.target_path.display());
            skipped += 1;
        } else {
            kept.push(s.clone());
        }
    }
    Ok((kept, skipped))
}

fn image_dims(p: &Path) -> Result<(u32, u32)> {
    if !p.is_file() {
        return Err(Error::io(
            p,
            std::io::Error::new(std::io::ErrorKind::NotFound, "image not found"),
        ));
    }
    image::image_dimensions(p).map_err(|source| Error::Image {
        path: p.to_path_buf(),
        source,
    })
}

/// Builds `count` samples into `out_dir` and writes `manifest.jsonl`.
///
/// Sample `s` uses sequence `s mod n` and draws everything from a generator
/// keyed by `(seed, s)`, so the tree is identical for any `jobs`.
pub fn build_dataset(sequences: &[RawSequence], out_dir: &Path, cfg: &BuildConfig) -> Result<Manifest> {
    if sequences.is_empty() {
        return Err(Error::param("no input sequences"));
    }
    if cfg.crop < MIN_PIPELINE_DIM {
        return Err(Error::param(format!("crop {} below {MIN_PIPELINE_DIM}", cfg.crop)));
    }
    let (usable, skipped) = usable_sequences(sequences, cfg.crop)?;
    if usable.is_empty() {
        return Err(Error::param(format!(
            "all {} sequences were skipped (size mismatch or smaller than crop {})",
            sequences.len(),
            cfg.crop
        )));
    }
    let samples_dir = out_dir.join("samples");
    std::fs::create_dir_all(&samples_dir).map_err(|e| Error::io(&samples_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    let entries = pool.install(|| {
        (0..cfg.count)
            .into_par_iter()
            .map(|s| build_sample(s, &usable[s % usable.len()], out_dir, cfg))
            .collect::<Result<Vec<_>>>()
    })?;

    write_manifest(&out_dir.join(MANIFEST_FILE), &entries)?;

    Ok(Manifest {
        root: out_dir.to_path_buf(),
        entries,
        skipped_sequences: skipped,
    })
}

fn build_sample(s: usize, seq: &RawSequence, root: &Path, cfg: &BuildConfig) -> Result<SampleManifestEntry> {
    let mut rng = stream_rng(cfg.seed, s as u64);
    let recipe_seed: u64 = rng.gen();
    let mut offset = || [rng.gen_range(-MAX_REF_OFFSET..=MAX_REF_OFFSET), rng.gen_range(-MAX_REF_OFFSET..=MAX_REF_OFFSET)];
    let ref_offsets = [offset(), offset()];

    let gt = ImagePlane::load_png(&seq.target_path)?;
    let r1 = ImagePlane::load_png(&seq.ref1_path)?;
    let r2 = ImagePlane::load_png(&seq.ref2_path)?;
    let (h, w) = gt.dims();

    let crop = CropRecord {
        top: rng.gen_range(0..=h - cfg.crop),
        left: rng.gen_range(0..=w - cfg.crop),
        size: cfg.crop,
    };
    let aug = AugRecord {
        hflip: rng.gen_bool(0.5),
        vflip: rng.gen_bool(0.5),
        rot90: rng.gen_range(0..4),
    };

    let recipe = sample_recipe(recipe_seed, (h, w), cfg.toggles)?;
    let degraded = apply_recipe(&gt, &recipe)?;
    let r1 = r1.shifted(ref_offsets[0][0], ref_offsets[0][1]);
    let r2 = r2.shifted(ref_offsets[1][0], ref_offsets[1][1]);

    let dir = PathBuf::from("samples").join(format!("{s:06}"));
    std::fs::create_dir_all(root.join(&dir)).map_err(|e| Error::io(root.join(&dir), e))?;
    let entry = SampleManifestEntry {
        sample_id: s,
        gt_path: dir.join("gt.png"),
        degraded_path: dir.join("degraded.png"),
        ref1_path: dir.join("ref1.png"),
        ref2_path: dir.join("ref2.png"),
        recipe,
        ref_offsets,
        crop,
        aug,
        source: seq.clone(),
    };
    for (img, rel) in [
        (&gt, &entry.gt_path),
        (&degraded, &entry.degraded_path),
        (&r1, &entry.ref1_path),
        (&r2, &entry.ref2_path),
    ] {
        transform(img, &crop, &aug)?.save_png(root.join(rel))?;
    }
    Ok(entry)
}

/// Crop, then flips and rotation.
pub fn transform(img: &ImagePlane, crop: &CropRecord, aug: &AugRecord) -> Result<ImagePlane> {
    Ok(aug.apply(&img.crop(crop.top, crop.left, crop.size, crop.size)?))
}

/// Regenerates the degraded patch of `entry` from its source and recipe.
pub fn replay_degraded(entry: &SampleManifestEntry) -> Result<ImagePlane> {
    let gt = ImagePlane::load_png(&entry.source.target_path)?;
    let degraded = apply_recipe(&gt, &entry.recipe)?;
    Ok(transform(&degraded, &entry.crop, &entry.aug)?.quantized())
}

/// True when the stored degraded PNG equals a fresh replay pixel-for-pixel.
pub fn verify_entry(entry: &SampleManifestEntry, root: &Path) -> Result<bool> {
    let stored = ImagePlane::load_png(root.join(&entry.degraded_path))?;
    Ok(stored == replay_degraded(entry)?)
}

pub fn read_manifest(path: &Path) -> Result<Vec<SampleManifestEntry>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::format("manifest", format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[SampleManifestEntry]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for e in entries {
        writeln!(f, "{}", serde_json::to_string(e).expect("entry serializes")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
