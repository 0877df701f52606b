//! Simulation of NeRF-style rendering artifacts over clean multi-view imagery,
//! reference-view selection by ray/sphere overlap, and reproducible paired
//! dataset construction.
//!
//! The crate is organized bottom-up:
//!
//! - [`image`], [`kernel`], [`mask`]: the image container, Gaussian kernels,
//!   replicate-border convolution and oriented Gaussian blending masks.
//! - [`degrade`]: the three-stage degradation simulator (splatted noise,
//!   re-positioning, anisotropic blur) with region-adaptive blending, driven
//!   by a serializable [`degrade::DegradationRecipe`].
//! - [`geometry`]: pinhole cameras, bounding-sphere intersections and the
//!   mutual matching cost used to pick reference views.
//! - [`dataset`]: ingestion of raw sequences and the paired-sample builder
//!   with its JSON-Lines manifest.
//! - [`metrics`]: PSNR and SSIM.

pub mod dataset;
pub mod degrade;
pub mod error;
pub mod geometry;
pub mod image;
pub mod kernel;
pub mod mask;
pub mod metrics;
pub mod rng;

pub use crate::error::{Error, Result};
pub use crate::image::ImagePlane;
pub use crate::kernel::{convolve, BorderMode, Kernel2D};
pub use crate::mask::{oriented_mask, MaskPlane, OrientedMaskParams};
