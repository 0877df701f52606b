use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::MIN_PIPELINE_DIM;
use crate::kernel::{ANISO_SIGMA_RANGE, ANISO_SIZES};
use crate::mask::OrientedMaskParams;

/// Side of the working frame in which mask parameters are expressed.
/// Masks are stretched onto the actual image size when applied.
pub const MASK_FRAME: f64 = 128.0;

pub const NOISE_SIGMA_RANGE: (f64, f64) = (0.01, 0.05);
/// Support of the splatting blur.
pub const SGN_KERNEL_SIZE: usize = 5;
pub const SGN_BLUR_SIGMA_RANGE: (f64, f64) = (0.3, 1.0);
pub const REPOS_PROBABILITY: f64 = 0.1;
pub const REPOS_OFFSET_RANGE: u32 = 2;

/// Open interval for mask centers, both axes.
pub const MASK_CENTER_RANGE: (f64, f64) = (-16.0, 144.0);
/// Open interval for the principal mask spread.
pub const MASK_SIGMA_I_RANGE: (f64, f64) = (13.0, 25.0);
/// Half-open interval `(lo, hi]` for the secondary mask spread.
pub const MASK_SIGMA_J_RANGE: (f64, f64) = (0.0, 24.0);
/// Open interval for the mask orientation.
pub const MASK_ANGLE_RANGE: (f64, f64) = (0.0, 180.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageToggles {
    pub sgn: bool,
    pub repos: bool,
    pub ablur: bool,
    pub region_adaptive: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self::all()
    }
}

impl StageToggles {
    pub fn all() -> Self {
        Self {
            sgn: true,
            repos: true,
            ablur: true,
            region_adaptive: true,
        }
    }

    pub fn none() -> Self {
        Self {
            sgn: false,
            repos: false,
            ablur: false,
            region_adaptive: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgnParams {
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    pub noise_plane_seed: u64,
    pub mask: OrientedMaskParams,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReposParams {
    pub probability: f64,
    pub offset_range: u32,
    pub pixel_seed: u64,
    pub mask: OrientedMaskParams,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblurParams {
    pub size: usize,
    pub sigma_major: f64,
    pub sigma_minor: f64,
    pub angle_deg: f64,
    pub mask: OrientedMaskParams,
    pub enabled: bool,
}

/// Every stochastic choice needed to degrade one target view.
///
/// Mask parameters live in the [`MASK_FRAME`] working frame; everything else
/// is in pixels of the `height x width` image the recipe was sampled for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationRecipe {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub sgn: SgnParams,
    pub repos: ReposParams,
    pub ablur: AblurParams,
    pub region_adaptive: bool,
}

fn open_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    loop {
        let v = rng.gen_range(lo..hi);
        if v > lo {
            return v;
        }
    }
}

fn sample_mask(rng: &mut ChaCha8Rng) -> OrientedMaskParams {
    let ci = open_uniform(rng, MASK_CENTER_RANGE);
    let cj = open_uniform(rng, MASK_CENTER_RANGE);
    let si = open_uniform(rng, MASK_SIGMA_I_RANGE);
    // (0, 24]
    let (lo, hi) = MASK_SIGMA_J_RANGE;
    let sj = hi - rng.gen_range(0.0..(hi - lo));
    let angle = open_uniform(rng, MASK_ANGLE_RANGE);
    OrientedMaskParams {
        center: (ci, cj),
        sigmas: (si, sj),
        angle_deg: angle,
    }
}

/// Draws a recipe for an `h x w` image. Every parameter is drawn regardless
/// of the toggles, so switching a stage off leaves the others unchanged.
pub fn sample_recipe(
    rng_seed: u64,
    (height, width): (usize, usize),
    toggles: StageToggles,
) -> Result<DegradationRecipe> {
    if height < MIN_PIPELINE_DIM || width < MIN_PIPELINE_DIM {
        return Err(Error::param(format!(
            "image {height}x{width} is below the {MIN_PIPELINE_DIM}x{MIN_PIPELINE_DIM} pipeline minimum"
        )));
    }
    let mut rng = crate::rng::stream_rng(rng_seed, 0);

    let sgn = SgnParams {
        noise_sigma: rng.gen_range(NOISE_SIGMA_RANGE.0..=NOISE_SIGMA_RANGE.1),
        blur_sigma: rng.gen_range(SGN_BLUR_SIGMA_RANGE.0..=SGN_BLUR_SIGMA_RANGE.1),
        noise_plane_seed: rng.gen(),
        mask: sample_mask(&mut rng),
        enabled: toggles.sgn,
    };

    let repos = ReposParams {
        probability: REPOS_PROBABILITY,
        offset_range: REPOS_OFFSET_RANGE,
        pixel_seed: rng.gen(),
        mask: sample_mask(&mut rng),
        enabled: toggles.repos,
    };

    let size = ANISO_SIZES[rng.gen_range(0..ANISO_SIZES.len())];
    let (lo, hi) = ANISO_SIGMA_RANGE;
    let s1: f64 = rng.gen_range(lo..=hi);
    let s2: f64 = rng.gen_range(lo..=hi);
    let ablur = AblurParams {
        size,
        sigma_major: s1.max(s2),
        sigma_minor: s1.min(s2),
        angle_deg: rng.gen_range(0.0..180.0),
        mask: sample_mask(&mut rng),
        enabled: toggles.ablur,
    };

    Ok(DegradationRecipe {
        seed: rng_seed,
        height,
        width,
        sgn,
        repos,
        ablur,
        region_adaptive: toggles.region_adaptive,
    })
}

impl DegradationRecipe {
    pub fn toggles(&self) -> StageToggles {
        StageToggles {
            sgn: self.sgn.enabled,
            repos: self.repos.enabled,
            ablur: self.ablur.enabled,
            region_adaptive: self.region_adaptive,
        }
    }

    pub fn any_stage_enabled(&self) -> bool {
        self.sgn.enabled || self.repos.enabled || self.ablur.enabled
    }

    /// Checks structural validity: positive mask spreads, usable kernel
    /// parameters, probability in `[0, 1]`, dims at least the pipeline minimum.
    pub fn validate(&self) -> Result<()> {
        if self.height < MIN_PIPELINE_DIM || self.width < MIN_PIPELINE_DIM {
            return Err(Error::param(format!(
                "recipe dims {}x{} below pipeline minimum",
                self.height, self.width
            )));
        }
        for m in [&self.sgn.mask, &self.repos.mask, &self.ablur.mask] {
            m.validate()?;
        }
        if !(self.sgn.noise_sigma >= 0.0) || !self.sgn.noise_sigma.is_finite() {
            return Err(Error::param("noise sigma must be non-negative"));
        }
        if !(self.sgn.blur_sigma > 0.0) || !self.sgn.blur_sigma.is_finite() {
            return Err(Error::param("splatting blur sigma must be positive"));
        }
        if !(0.0..=1.0).contains(&self.repos.probability) {
            return Err(Error::param("re-positioning probability outside [0, 1]"));
        }
        crate::kernel::make_anisotropic_gaussian(
            self.ablur.size,
            self.ablur.sigma_major,
            self.ablur.sigma_minor,
            self.ablur.angle_deg,
        )?;
        Ok(())
    }

    /// Lists every parameter that falls outside the sampling ranges.
    pub fn range_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, ok: bool, v: f64| {
            if !ok {
                out.push(format!("{name}={v}"));
            }
        };
        let closed = |v: f64, (lo, hi): (f64, f64)| lo <= v && v <= hi;
        let open = |v: f64, (lo, hi): (f64, f64)| lo < v && v < hi;

        check("sgn.noise_sigma", closed(self.sgn.noise_sigma, NOISE_SIGMA_RANGE), self.sgn.noise_sigma);
        check("sgn.blur_sigma", closed(self.sgn.blur_sigma, SGN_BLUR_SIGMA_RANGE), self.sgn.blur_sigma);
        check("repos.probability", self.repos.probability == REPOS_PROBABILITY, self.repos.probability);
        check(
            "repos.offset_range",
            self.repos.offset_range == REPOS_OFFSET_RANGE,
            f64::from(self.repos.offset_range),
        );
        check("ablur.size", ANISO_SIZES.contains(&self.ablur.size), self.ablur.size as f64);
        check("ablur.sigma_major", closed(self.ablur.sigma_major, ANISO_SIGMA_RANGE), self.ablur.sigma_major);
        check("ablur.sigma_minor", closed(self.ablur.sigma_minor, ANISO_SIGMA_RANGE), self.ablur.sigma_minor);
        check(
            "ablur.angle_deg",
            (0.0..180.0).contains(&self.ablur.angle_deg),
            self.ablur.angle_deg,
        );
        for (stage, m) in [("sgn", &self.sgn.mask), ("repos", &self.repos.mask), ("ablur", &self.ablur.mask)] {
            check(&format!("{stage}.mask.c_i"), open(m.center.0, MASK_CENTER_RANGE), m.center.0);
            check(&format!("{stage}.mask.c_j"), open(m.center.1, MASK_CENTER_RANGE), m.center.1);
            check(&format!("{stage}.mask.sigma_i"), open(m.sigmas.0, MASK_SIGMA_I_RANGE), m.sigmas.0);
            let (lo, hi) = MASK_SIGMA_J_RANGE;
            check(&format!("{stage}.mask.sigma_j"), lo < m.sigmas.1 && m.sigmas.1 <= hi, m.sigmas.1);
            check(&format!("{stage}.mask.angle"), open(m.angle_deg, MASK_ANGLE_RANGE), m.angle_deg);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recipe serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s).map_err(|e| Error::format("recipe", e))?;
        r.validate()?;
        Ok(r)
    }
}
