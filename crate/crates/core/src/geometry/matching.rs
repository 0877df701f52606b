use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::CameraView;
use super::nn::{brute_force_nearest, KdTree};
use super::sphere::{
    estimate_scene_sphere_with, shoot_intersections, IntersectionSet, SceneSphere, SphereConfig,
    DEFAULT_RAY_GRID,
};
use crate::error::{Error, Result};

/// Sum over points of `a` of the squared distance to the nearest point of `b`.
pub fn directed_cost(a: &IntersectionSet, b: &IntersectionSet) -> Result<f64> {
    check_nonempty(a)?;
    check_nonempty(b)?;
    Ok(directed_cost_indexed(a, &KdTree::build(&b.points)))
}

/// Same quantity as [`directed_cost`] by exhaustive search.
pub fn directed_cost_brute(a: &IntersectionSet, b: &IntersectionSet) -> Result<f64> {
    check_nonempty(a)?;
    check_nonempty(b)?;
    Ok(a.points
        .iter()
        .map(|p| brute_force_nearest(&b.points, *p).expect("nonempty").squared_distance)
        .sum())
}

fn directed_cost_indexed(a: &IntersectionSet, b: &KdTree) -> f64 {
    a.points
        .iter()
        .map(|p| b.nearest(*p).expect("nonempty").squared_distance)
        .sum()
}

fn check_nonempty(s: &IntersectionSet) -> Result<()> {
    if s.points.is_empty() {
        return Err(Error::EmptyPointSet { view_id: s.view_id });
    }
    Ok(())
}

/// Pairwise directed and mutual matching costs, indexed by position in
/// `view_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMatchTable {
    pub view_ids: Vec<usize>,
    pub directed: Vec<Vec<f64>>,
    pub mutual: Vec<Vec<f64>>,
}

impl ViewMatchTable {
    pub fn n_views(&self) -> usize {
        self.view_ids.len()
    }

    pub fn position(&self, view_id: usize) -> Option<usize> {
        self.view_ids.iter().position(|&v| v == view_id)
    }

    pub fn mutual_cost(&self, a: usize, b: usize) -> Option<f64> {
        Some(self.mutual[self.position(a)?][self.position(b)?])
    }
}

/// `C_mut[i][j] = C[i][j] + C[j][i]` with a zero diagonal.
pub fn mutual_cost_table(sets: &[IntersectionSet]) -> Result<ViewMatchTable> {
    for s in sets {
        check_nonempty(s)?;
    }
    let trees: Vec<KdTree> = sets.par_iter().map(|s| KdTree::build(&s.points)).collect();
    let n = sets.len();
    let directed: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        directed_cost_indexed(&sets[i], &trees[j])
                    }
                })
                .collect()
        })
        .collect();
    let mutual = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { directed[i][j] + directed[j][i] })
                .collect()
        })
        .collect();
    Ok(ViewMatchTable {
        view_ids: sets.iter().map(|s| s.view_id).collect(),
        directed,
        mutual,
    })
}

pub const DEFAULT_REFERENCE_COUNT: usize = 2;

/// The `k` views with the smallest mutual cost to `target`, ties broken by
/// the smaller view id.
pub fn select_references(table: &ViewMatchTable, target: usize, k: usize) -> Result<Vec<usize>> {
    Ok(ranked_references(table, target, k)?
        .into_iter()
        .map(|(id, _)| id)
        .collect())
}

/// [`select_references`] together with each selected view's mutual cost.
pub fn ranked_references(table: &ViewMatchTable, target: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    if k >= table.n_views() {
        return Err(Error::param(format!(
            "cannot select {k} references among {} views",
            table.n_views()
        )));
    }
    let t = table
        .position(target)
        .ok_or_else(|| Error::param(format!("unknown target view {target}")))?;
    let mut cands: Vec<(usize, f64)> = (0..table.n_views())
        .filter(|&j| j != t)
        .map(|j| (table.view_ids[j], table.mutual[t][j]))
        .collect();
    cands.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    cands.truncate(k);
    Ok(cands)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub grid: usize,
    pub k: usize,
    pub sphere: SphereConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_RAY_GRID,
            k: DEFAULT_REFERENCE_COUNT,
            sphere: SphereConfig::default(),
        }
    }
}

/// Sphere fit, ray shooting and the cost table for a whole scene.
pub fn scene_match_table(views: &[CameraView], cfg: &SelectionConfig) -> Result<(SceneSphere, ViewMatchTable)> {
    let sphere = estimate_scene_sphere_with(views, &cfg.sphere)?;
    let sets = views
        .par_iter()
        .map(|v| shoot_intersections(v, &sphere, cfg.grid))
        .collect::<Result<Vec<_>>>()?;
    Ok((sphere, mutual_cost_table(&sets)?))
}
