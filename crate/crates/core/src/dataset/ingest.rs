use std::path::{Path, PathBuf};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::geometry::{load_scene, scene_match_table, select_references, SelectionConfig};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    MultiViewScene,
    VideoTriplet,
}

/// One target view and its two references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSequence {
    pub target_path: PathBuf,
    pub ref1_path: PathBuf,
    pub ref2_path: PathBuf,
    pub source_kind: SourceKind,
}

/// Sorted PNG files directly inside `dir`.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        let is_png = p
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && p.is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VideoIngest {
    pub sequences: Vec<RawSequence>,
    /// Clips with fewer than three frames.
    pub skipped_clips: usize,
    /// Usable clips before the fraction subsample.
    pub eligible_clips: usize,
}

/// Number of items kept from `n` under `fraction`, at least one when `n > 0`.
pub fn fraction_count(n: usize, fraction: f64) -> usize {
    if n == 0 {
        return 0;
    }
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

/// Every directory under `dir` (itself included) holding PNG frames is a
/// clip. Keeps a seeded `fraction` of the usable clips and draws three frames
/// from each in random order: the first is the target, the others references.
pub fn ingest_video_triplets(dir: &Path, fraction: f64, seed: u64) -> Result<VideoIngest> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("fraction {fraction} outside (0, 1]")));
    }
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "video directory not found"),
        ));
    }
    let mut clips = Vec::new();
    let mut skipped = 0;
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(dir, e.into()))?;
        if !entry.file_type().is_dir() {
            continue;
        }
        let frames = list_pngs(entry.path())?;
        match frames.len() {
            0 => {}
            1 | 2 => {
                log::warn!("skipping clip {} with {} frame(s)", entry.path().display(), frames.len());
                skipped += 1;
            }
            _ => clips.push(frames),
        }
    }

    let keep = fraction_count(clips.len(), fraction);
    let mut chosen = index::sample(&mut stream_rng(seed, u64::MAX), clips.len(), keep).into_vec();
    chosen.sort_unstable();

    let sequences = chosen
        .into_iter()
        .map(|c| {
            let frames = &clips[c];
            let pick = index::sample(&mut stream_rng(seed, c as u64), frames.len(), 3).into_vec();
            RawSequence {
                target_path: frames[pick[0]].clone(),
                ref1_path: frames[pick[1]].clone(),
                ref2_path: frames[pick[2]].clone(),
                source_kind: SourceKind::VideoTriplet,
            }
        })
        .collect();
    Ok(VideoIngest {
        sequences,
        skipped_clips: skipped,
        eligible_clips: clips.len(),
    })
}

/// Which views are reserved for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldoutRule {
    None,
    /// Positions `n-1, 2n-1, ...` in scene order.
    EveryNth(usize),
}

impl Default for HoldoutRule {
    fn default() -> Self {
        HoldoutRule::EveryNth(8)
    }
}

impl HoldoutRule {
    pub fn is_held_out(&self, position: usize) -> bool {
        match *self {
            HoldoutRule::None => false,
            HoldoutRule::EveryNth(n) => n > 0 && (position + 1) % n == 0,
        }
    }
}

/// One sequence per training view of the scene, its references picked by
/// mutual matching cost among the training views. Held-out views take part
/// neither as targets nor as references.
pub fn ingest_scene_views(
    scene_path: &Path,
    holdout: HoldoutRule,
    cfg: &SelectionConfig,
) -> Result<Vec<RawSequence>> {
    let views = load_scene(scene_path)?;
    if views.len() < 3 {
        return Err(Error::param(format!(
            "{}: scene needs at least 3 views, has {}",
            scene_path.display(),
            views.len()
        )));
    }
    let pool: Vec<_> = views
        .into_iter()
        .enumerate()
        .filter(|(p, _)| !holdout.is_held_out(*p))
        .map(|(_, v)| v)
        .collect();
    if pool.len() <= cfg.k {
        return Err(Error::param(format!(
            "{}: {} training views cannot supply {} references",
            scene_path.display(),
            pool.len(),
            cfg.k
        )));
    }
    let (_, table) = scene_match_table(&pool, cfg)?;
    pool.iter()
        .map(|v| {
            let refs = select_references(&table, v.id, 2)?;
            let path_of = |id: usize| {
                pool.iter()
                    .find(|c| c.id == id)
                    .map(|c| c.image_path.clone())
                    .expect("selected id is in the pool")
            };
            Ok(RawSequence {
                target_path: v.image_path.clone(),
                ref1_path: path_of(refs[0]),
                ref2_path: path_of(refs[1]),
                source_kind: SourceKind::MultiViewScene,
            })
        })
        .collect()
}

/// Scene files under `dir`: `dir/cameras.json` and `dir/*/cameras.json`.
pub fn discover_scene_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let direct = dir.join("cameras.json");
    if direct.is_file() {
        out.push(direct);
    }
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut subdirs = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_dir() {
            subdirs.push(p);
        }
    }
    subdirs.sort();
    out.extend(
        subdirs
            .into_iter()
            .map(|d| d.join("cameras.json"))
            .filter(|p| p.is_file()),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_counts() {
        assert_eq!(fraction_count(1000, 0.1), 100);
        assert_eq!(fraction_count(1000, 0.5), 500);
        assert_eq!(fraction_count(1000, 1.0), 1000);
        assert_eq!(fraction_count(3, 0.1), 1);
        assert_eq!(fraction_count(0, 0.5), 0);
    }

    #[test]
    fn holdout_positions() {
        let r = HoldoutRule::EveryNth(8);
        let held: Vec<usize> = (0..20).filter(|&p| r.is_held_out(p)).collect();
        assert_eq!(held, vec![7, 15]);
        assert!(!(0..20).any(|p| HoldoutRule::None.is_held_out(p)));
    }

    #[test]
    fn bad_fraction_rejected() {
        let d = tempfile::tempdir().unwrap();
        assert!(ingest_video_triplets(d.path(), 0.0, 1).is_err());
        assert!(ingest_video_triplets(d.path(), 1.5, 1).is_err());
    }
}
