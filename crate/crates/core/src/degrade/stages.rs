use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{clamp_index, ImagePlane, CHANNELS};
use crate::kernel::{
    convolve, convolve_values, make_anisotropic_gaussian, make_isotropic_gaussian, BorderMode,
    Kernel2D,
};
use crate::mask::{oriented_mask_in_frame, MaskPlane};
use crate::rng::CounterRng;

use super::recipe::{AblurParams, DegradationRecipe, MASK_FRAME, SGN_KERNEL_SIZE};

const STREAM_NOISE: u64 = 1;
const STREAM_REPOS: u64 = 2;

/// `(img + n) * g`, with `n` i.i.d. zero-mean Gaussian of std `sigma_n`
/// drawn independently per pixel and channel from `noise_seed`.
pub fn apply_splatted_noise(
    img: &ImagePlane,
    sigma_n: f64,
    g: &Kernel2D,
    noise_seed: u64,
) -> Result<ImagePlane> {
    if !(sigma_n >= 0.0) || !sigma_n.is_finite() {
        return Err(Error::param(format!("noise sigma {sigma_n} must be non-negative")));
    }
    let (h, w) = img.dims();
    let rng = CounterRng::new(noise_seed, STREAM_NOISE);
    let mut noisy = img.data().to_vec();
    noisy
        .par_chunks_mut(w * CHANNELS)
        .enumerate()
        .for_each(|(i, row)| {
            let base = (i * w * CHANNELS) as u64;
            for (k, v) in row.iter_mut().enumerate() {
                *v += sigma_n * rng.normal(base + k as u64);
            }
        });
    let out = convolve_values(h, w, &noisy, g, BorderMode::Replicate)?;
    Ok(ImagePlane::from_raw_clamped(h, w, out))
}

/// Inclusive integer offset interval for re-positioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffsetRange {
    pub lo: i64,
    pub hi: i64,
}

impl OffsetRange {
    pub fn symmetric(bound: u32) -> Self {
        Self {
            lo: -i64::from(bound),
            hi: i64::from(bound),
        }
    }
}

/// Each pixel, with probability `probability`, fetches the input at
/// `(i + d_i, j + d_j)` with `d` uniform over `[-offset_range, offset_range]`
/// (edge-clamped); otherwise it keeps its own value.
pub fn apply_repositioning(
    img: &ImagePlane,
    probability: f64,
    offset_range: u32,
    pixel_seed: u64,
) -> Result<ImagePlane> {
    apply_repositioning_in(img, probability, OffsetRange::symmetric(offset_range), pixel_seed)
}

/// [`apply_repositioning`] over an arbitrary inclusive offset interval.
pub fn apply_repositioning_in(
    img: &ImagePlane,
    probability: f64,
    offsets: OffsetRange,
    pixel_seed: u64,
) -> Result<ImagePlane> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::param(format!("probability {probability} outside [0, 1]")));
    }
    if offsets.lo > offsets.hi {
        return Err(Error::param("empty offset range"));
    }
    let (h, w) = img.dims();
    let rng = CounterRng::new(pixel_seed, STREAM_REPOS);
    let src = img.data();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w * CHANNELS)
        .enumerate()
        .for_each(|(i, row)| {
            for j in 0..w {
                let ctr = 3 * (i * w + j) as u64;
                let (si, sj) = if rng.uniform(ctr) < probability {
                    let di = rng.int_in(ctr + 1, offsets.lo, offsets.hi);
                    let dj = rng.int_in(ctr + 2, offsets.lo, offsets.hi);
                    (clamp_index(i as i64 + di, h), clamp_index(j as i64 + dj, w))
                } else {
                    (i, j)
                };
                let s = (si * w + sj) * CHANNELS;
                row[j * CHANNELS..(j + 1) * CHANNELS].copy_from_slice(&src[s..s + CHANNELS]);
            }
        });
    Ok(ImagePlane::from_raw_unchecked(h, w, out))
}

/// Replicate-border convolution with the recipe's anisotropic kernel.
pub fn apply_aniso_blur(img: &ImagePlane, p: &AblurParams) -> Result<ImagePlane> {
    let k = make_anisotropic_gaussian(p.size, p.sigma_major, p.sigma_minor, p.angle_deg)?;
    convolve(img, &k, BorderMode::Replicate)
}

/// `mask * degraded + (1 - mask) * input`, per pixel and channel.
pub fn blend_region_adaptive(
    input: &ImagePlane,
    degraded: &ImagePlane,
    mask: &MaskPlane,
) -> Result<ImagePlane> {
    input.ensure_same_dims(degraded)?;
    if mask.dims() != input.dims() {
        return Err(Error::DimMismatch {
            expected: input.dims(),
            actual: mask.dims(),
        });
    }
    let out = input
        .data()
        .chunks_exact(CHANNELS)
        .zip(degraded.data().chunks_exact(CHANNELS))
        .zip(mask.values())
        .flat_map(|((x, y), &m)| {
            let inv = 1.0 - m;
            [
                m * y[0] + inv * x[0],
                m * y[1] + inv * x[1],
                m * y[2] + inv * x[2],
            ]
        })
        .collect();
    Ok(ImagePlane::from_raw_clamped(input.height(), input.width(), out))
}

/// Runs the enabled stages in the fixed order splatted noise, re-positioning,
/// anisotropic blur. With `region_adaptive` set, each stage output is blended
/// with that stage's input through the stage's own mask.
pub fn apply_recipe(img: &ImagePlane, r: &DegradationRecipe) -> Result<ImagePlane> {
    img.ensure_pipeline_dims()?;
    if img.dims() != (r.height, r.width) {
        return Err(Error::DimMismatch {
            expected: (r.height, r.width),
            actual: img.dims(),
        });
    }
    r.validate()?;

    let (h, w) = img.dims();
    let blend = |input: &ImagePlane, out: ImagePlane, mask| -> Result<ImagePlane> {
        if r.region_adaptive {
            let m = oriented_mask_in_frame(h, w, mask, MASK_FRAME)?;
            blend_region_adaptive(input, &out, &m)
        } else {
            Ok(out)
        }
    };

    let mut cur = img.clone();
    if r.sgn.enabled {
        let g = make_isotropic_gaussian(SGN_KERNEL_SIZE, r.sgn.blur_sigma)?;
        let out = apply_splatted_noise(&cur, r.sgn.noise_sigma, &g, r.sgn.noise_plane_seed)?;
        cur = blend(&cur, out, &r.sgn.mask)?;
    }
    if r.repos.enabled {
        let out = apply_repositioning(&cur, r.repos.probability, r.repos.offset_range, r.repos.pixel_seed)?;
        cur = blend(&cur, out, &r.repos.mask)?;
    }
    if r.ablur.enabled {
        let out = apply_aniso_blur(&cur, &r.ablur)?;
        cur = blend(&cur, out, &r.ablur.mask)?;
    }
    Ok(cur)
}
