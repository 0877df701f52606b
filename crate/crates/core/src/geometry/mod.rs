//! Pinhole cameras, bounding-sphere intersections, and reference-view
//! selection by mutual nearest-point matching cost.

mod camera;
pub mod llff;
mod matching;
pub mod nn;
mod sphere;

pub use camera::{
    axis_angle, load_scene, look_at, squared_distance, CameraRecord, CameraView, Mat3, SceneFile,
    Vec3,
};
pub use matching::{
    directed_cost, directed_cost_brute, mutual_cost_table, ranked_references, scene_match_table,
    select_references, SelectionConfig, ViewMatchTable, DEFAULT_REFERENCE_COUNT,
};
pub use sphere::{
    estimate_scene_sphere, estimate_scene_sphere_with, intersect_ray, max_surface_residual,
    shoot_intersections, IntersectionSet, SceneSphere, SphereConfig, DEFAULT_RADIUS_SCALE,
    DEFAULT_RAY_GRID, MIN_SPHERE_RADIUS,
};
