//! Three-stage NeRF-style degradation: splatted Gaussian noise, pixel
//! re-positioning and anisotropic blur, each optionally blended with its
//! input through an oriented Gaussian mask.

mod recipe;
mod stages;

pub use recipe::{
    sample_recipe, AblurParams, DegradationRecipe, ReposParams, SgnParams, StageToggles,
    MASK_ANGLE_RANGE, MASK_CENTER_RANGE, MASK_FRAME, MASK_SIGMA_I_RANGE, MASK_SIGMA_J_RANGE,
    NOISE_SIGMA_RANGE, REPOS_OFFSET_RANGE, REPOS_PROBABILITY, SGN_BLUR_SIGMA_RANGE,
    SGN_KERNEL_SIZE,
};
pub use stages::{
    apply_aniso_blur, apply_recipe, apply_repositioning, apply_repositioning_in,
    apply_splatted_noise, blend_region_adaptive, OffsetRange,
};
