//! Normalized 2D Gaussian kernels and per-channel convolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{clamp_index, ImagePlane, CHANNELS};
use crate::mask::oriented_gaussian;

pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Odd-sized, non-negative kernel whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    /// Validates an explicit row-major weight table.
    pub fn from_weights(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size % 2 == 0 || !(1..=11).contains(&size) {
            return Err(Error::param(format!("kernel size {size} must be odd and at most 11")));
        }
        if weights.len() != size * size {
            return Err(Error::param(format!(
                "kernel of size {size} needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param("kernel weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::param(format!("kernel weights sum to {sum}, expected 1")));
        }
        Ok(Self { size, weights })
    }

    /// The identity kernel.
    pub fn delta(size: usize) -> Result<Self> {
        let mut weights = vec![0.0; size * size];
        if size % 2 == 1 {
            weights[size * size / 2] = 1.0;
        }
        Self::from_weights(size, weights)
    }

    fn from_fn_normalized(size: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let r = (size / 2) as f64;
        let mut weights = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                weights.push(f(a as f64 - r, b as f64 - r));
            }
        }
        let z: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= z);
        Self { size, weights }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at row offset `a`, column offset `b`, both in `0..size`.
    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.size + b]
    }
}

/// `exp(-r^2 / 2 sigma^2)`, normalized.
pub fn make_isotropic_gaussian(size: usize, sigma: f64) -> Result<Kernel2D> {
    if size % 2 == 0 || !(3..=11).contains(&size) {
        return Err(Error::param(format!(
            "isotropic kernel size {size} must be odd in 3..=11"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("kernel sigma {sigma} must be positive")));
    }
    let two_var = 2.0 * sigma * sigma;
    Ok(Kernel2D::from_fn_normalized(size, |di, dj| {
        (-(di * di + dj * dj) / two_var).exp()
    }))
}

pub const ANISO_SIZES: [usize; 3] = [3, 5, 7];
pub const ANISO_SIGMA_RANGE: (f64, f64) = (0.2, 1.2);

/// Rotated-covariance Gaussian with the major axis at `angle_deg`
/// counter-clockwise from the row direction, normalized.
pub fn make_anisotropic_gaussian(
    size: usize,
    sigma_major: f64,
    sigma_minor: f64,
    angle_deg: f64,
) -> Result<Kernel2D> {
    if !ANISO_SIZES.contains(&size) {
        return Err(Error::param(format!(
            "anisotropic kernel size {size} not in {ANISO_SIZES:?}"
        )));
    }
    let (lo, hi) = ANISO_SIGMA_RANGE;
    for s in [sigma_major, sigma_minor] {
        if !(lo..=hi).contains(&s) {
            return Err(Error::param(format!(
                "anisotropic sigma {s} outside [{lo}, {hi}]"
            )));
        }
    }
    if !(0.0..180.0).contains(&angle_deg) {
        return Err(Error::param(format!("kernel angle {angle_deg} outside [0, 180)")));
    }
    Ok(oriented_kernel(size, sigma_major, sigma_minor, angle_deg))
}

/// Unchecked oriented kernel; any angle, any positive sigmas.
pub(crate) fn oriented_kernel(size: usize, sigma_a: f64, sigma_b: f64, angle_deg: f64) -> Kernel2D {
    Kernel2D::from_fn_normalized(size, |di, dj| {
        oriented_gaussian(di, dj, sigma_a, sigma_b, angle_deg)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorderMode {
    /// Out-of-range taps read the nearest edge pixel.
    #[default]
    Replicate,
    /// Out-of-range taps read zero.
    Zero,
}

/// Convolves each channel of `img` with `k` and clamps the result into `[0, 1]`.
pub fn convolve(img: &ImagePlane, k: &Kernel2D, border: BorderMode) -> Result<ImagePlane> {
    let (h, w) = img.dims();
    let out = convolve_values(h, w, img.data(), k, border)?;
    Ok(ImagePlane::from_raw_clamped(h, w, out))
}

/// Unclamped convolution of an arbitrary real `h x w x 3` buffer.
///
/// `out(i, j) = sum_{a, b} k(a, b) * x(i + r - a, j + r - b)`.
pub fn convolve_values(
    h: usize,
    w: usize,
    data: &[f64],
    k: &Kernel2D,
    border: BorderMode,
) -> Result<Vec<f64>> {
    if data.len() != h * w * CHANNELS {
        return Err(Error::param("buffer length does not match dimensions"));
    }
    if k.size() > h || k.size() > w {
        return Err(Error::param(format!(
            "kernel size {} exceeds image {h}x{w}",
            k.size()
        )));
    }
    let size = k.size();
    let r = k.radius() as i64;

    // Source column for every (tap column, output column); None reads zero.
    let col_src: Vec<Vec<Option<usize>>> = (0..size)
        .map(|b| {
            (0..w)
                .map(|j| source_index(j as i64 + r - b as i64, w, border))
                .collect()
        })
        .collect();

    let mut out = vec![0.0; h * w * CHANNELS];
    out.par_chunks_mut(w * CHANNELS)
        .enumerate()
        .for_each(|(i, row)| {
            for a in 0..size {
                let Some(si) = source_index(i as i64 + r - a as i64, h, border) else {
                    continue;
                };
                let src_row = &data[si * w * CHANNELS..(si + 1) * w * CHANNELS];
                for (b, cols) in col_src.iter().enumerate() {
                    let wt = k.at(a, b);
                    for (j, sj) in cols.iter().enumerate() {
                        if let Some(sj) = sj {
                            let s = &src_row[sj * CHANNELS..sj * CHANNELS + CHANNELS];
                            let o = &mut row[j * CHANNELS..j * CHANNELS + CHANNELS];
                            o[0] += wt * s[0];
                            o[1] += wt * s[1];
                            o[2] += wt * s[2];
                        }
                    }
                }
            }
        });
    Ok(out)
}

#[inline]
fn source_index(v: i64, len: usize, border: BorderMode) -> Option<usize> {
    match border {
        BorderMode::Replicate => Some(clamp_index(v, len)),
        BorderMode::Zero => (0..len as i64).contains(&v).then_some(v as usize),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcg_image(h: usize, w: usize, seed: u64) -> ImagePlane {
        let mut s = seed;
        ImagePlane::from_fn(h, w, |_, _, _| {
            s = crate::rng::mix64(s.wrapping_add(1));
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap()
    }

    /// Direct nested-loop convolution with replicate border.
    fn scalar_convolve(img: &ImagePlane, k: &Kernel2D) -> Vec<f64> {
        let (h, w) = img.dims();
        let r = k.radius() as i64;
        let mut out = Vec::new();
        for i in 0..h as i64 {
            for j in 0..w as i64 {
                for c in 0..3 {
                    let mut acc = 0.0;
                    for u in -r..=r {
                        for v in -r..=r {
                            let si = (i - u).clamp(0, h as i64 - 1) as usize;
                            let sj = (j - v).clamp(0, w as i64 - 1) as usize;
                            acc += k.at((u + r) as usize, (v + r) as usize) * img.get(si, sj, c);
                        }
                    }
                    out.push(acc.clamp(0.0, 1.0));
                }
            }
        }
        out
    }

    #[test]
    fn isotropic_delta_limit() {
        let k = make_isotropic_gaussian(5, 1e-6).unwrap();
        assert_eq!(k.at(2, 2), 1.0);
        assert!(k.weights().iter().enumerate().all(|(n, &w)| n == 12 || w < 1e-12));
    }

    #[test]
    fn isotropic_normalized_and_symmetric() {
        for size in [3, 5, 7, 9, 11] {
            let k = make_isotropic_gaussian(size, 1.0).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            for a in 0..size {
                for b in 0..size {
                    let w = k.at(a, b);
                    assert!((w - k.at(b, a)).abs() < 1e-9);
                    assert!((w - k.at(size - 1 - a, b)).abs() < 1e-9);
                    assert!((w - k.at(size - 1 - b, size - 1 - a)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn isotropic_center_matches_scalar_formula() {
        let sigma: f64 = 0.8;
        let mut z = 0.0;
        for u in -1i32..=1 {
            for v in -1i32..=1 {
                z += (-f64::from(u * u + v * v) / (2.0 * sigma * sigma)).exp();
            }
        }
        let k = make_isotropic_gaussian(3, sigma).unwrap();
        assert!((k.at(1, 1) - 1.0 / z).abs() < 1e-12);
    }

    #[test]
    fn isotropic_rejects_bad_parameters() {
        assert!(make_isotropic_gaussian(4, 1.0).is_err());
        assert!(make_isotropic_gaussian(13, 1.0).is_err());
        assert!(make_isotropic_gaussian(1, 1.0).is_err());
        assert!(make_isotropic_gaussian(5, 0.0).is_err());
        assert!(make_isotropic_gaussian(5, -1.0).is_err());
        assert!(make_isotropic_gaussian(5, f64::NAN).is_err());
    }

    #[test]
    fn anisotropic_degenerates_to_isotropic() {
        let iso = make_isotropic_gaussian(5, 0.8).unwrap();
        for ang in [0.0, 33.0, 90.0, 179.9] {
            let k = make_anisotropic_gaussian(5, 0.8, 0.8, ang).unwrap();
            for (x, y) in k.weights().iter().zip(iso.weights()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn anisotropic_at_zero_degrees_spreads_along_rows() {
        let k = make_anisotropic_gaussian(7, 1.2, 0.2, 0.0).unwrap();
        let (mut var_rows, mut var_cols) = (0.0, 0.0);
        for a in 0..7 {
            for b in 0..7 {
                var_rows += k.at(a, b) * (a as f64 - 3.0).powi(2);
                var_cols += k.at(a, b) * (b as f64 - 3.0).powi(2);
            }
        }
        assert!(var_cols > var_rows, "{var_cols} vs {var_rows}");
    }

    #[test]
    fn anisotropic_matches_rotated_covariance() {
        let (a, b, t) = (1.0f64, 0.4f64, 45f64.to_radians());
        // Sigma = R diag(a^2, b^2) R^T with the major axis along (-sin t, cos t)
        let (ai, aj, bi, bj) = (-t.sin(), t.cos(), t.cos(), t.sin());
        let s = [
            a * a * ai * ai + b * b * bi * bi,
            a * a * ai * aj + b * b * bi * bj,
            a * a * aj * aj + b * b * bj * bj,
        ];
        let det = s[0] * s[2] - s[1] * s[1];
        let mut raw = Vec::new();
        for u in -2i32..=2 {
            for v in -2i32..=2 {
                let (u, v) = (f64::from(u), f64::from(v));
                let q = (s[2] * u * u - 2.0 * s[1] * u * v + s[0] * v * v) / det;
                raw.push((-0.5 * q).exp());
            }
        }
        let z: f64 = raw.iter().sum();
        let k = make_anisotropic_gaussian(5, 1.0, 0.4, 45.0).unwrap();
        for (x, y) in k.weights().iter().zip(&raw) {
            assert!((x - y / z).abs() < 1e-12);
        }
    }

    #[test]
    fn anisotropic_half_turn_invariance() {
        for ang in [0.0, 17.0, 45.0, 120.0, 179.0] {
            let k = make_anisotropic_gaussian(7, 1.1, 0.3, ang).unwrap();
            let turned = oriented_kernel(7, 1.1, 0.3, ang + 180.0);
            for (x, y) in k.weights().iter().zip(turned.weights()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn anisotropic_rejects_out_of_range() {
        assert!(make_anisotropic_gaussian(9, 1.0, 0.5, 0.0).is_err());
        assert!(make_anisotropic_gaussian(5, 1.3, 0.5, 0.0).is_err());
        assert!(make_anisotropic_gaussian(5, 1.0, 0.1, 0.0).is_err());
        assert!(make_anisotropic_gaussian(5, 1.0, 0.5, 180.0).is_err());
        assert!(make_anisotropic_gaussian(5, 1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn delta_kernel_is_exact_identity() {
        let img = lcg_image(9, 11, 5);
        for size in [1, 3, 5, 7] {
            let k = Kernel2D::delta(size).unwrap();
            assert_eq!(convolve(&img, &k, BorderMode::Replicate).unwrap(), img);
        }
    }

    #[test]
    fn constant_image_is_invariant() {
        let img = ImagePlane::filled(10, 12, 0.5).unwrap();
        let k = make_anisotropic_gaussian(7, 1.2, 0.3, 30.0).unwrap();
        let out = convolve(&img, &k, BorderMode::Replicate).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn ramp_matches_scalar_convolution() {
        let img = ImagePlane::from_fn(8, 8, |i, j, c| (i * 8 + j) as f64 / 64.0 * (c + 1) as f64 / 3.0)
            .unwrap();
        let k = make_isotropic_gaussian(3, 10.0).unwrap();
        let out = convolve(&img, &k, BorderMode::Replicate).unwrap();
        for (x, y) in out.data().iter().zip(scalar_convolve(&img, &k)) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let img = ImagePlane::filled(4, 9, 0.1).unwrap();
        let k = make_isotropic_gaussian(5, 1.0).unwrap();
        assert!(convolve(&img, &k, BorderMode::Replicate).is_err());
    }

    #[test]
    fn zero_border_darkens_edges() {
        let img = ImagePlane::filled(8, 8, 1.0).unwrap();
        let k = make_isotropic_gaussian(3, 1.0).unwrap();
        let out = convolve(&img, &k, BorderMode::Zero).unwrap();
        assert!(out.get(0, 0, 0) < 1.0);
        assert!((out.get(4, 4, 0) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn convolution_is_linear(seed in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0,
                                 size in prop::sample::select(vec![3usize, 5, 7]), sigma in 0.2f64..3.0) {
            let (h, w) = (9, 10);
            let x = lcg_image(h, w, seed);
            let y = lcg_image(h, w, seed ^ 0xABCD);
            let k = make_isotropic_gaussian(size, sigma).unwrap();
            let mix: Vec<f64> = x.data().iter().zip(y.data()).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = convolve_values(h, w, &mix, &k, BorderMode::Replicate).unwrap();
            let cx = convolve_values(h, w, x.data(), &k, BorderMode::Replicate).unwrap();
            let cy = convolve_values(h, w, y.data(), &k, BorderMode::Replicate).unwrap();
            for n in 0..lhs.len() {
                prop_assert!((lhs[n] - (alpha * cx[n] + beta * cy[n])).abs() < 1e-6);
            }
        }

        #[test]
        fn kernels_are_normalized(size in prop::sample::select(vec![3usize, 5, 7]),
                                  a in 0.2f64..=1.2, b in 0.2f64..=1.2, ang in 0.0f64..180.0) {
            let k = make_anisotropic_gaussian(size, a, b, ang).unwrap();
            let sum: f64 = k.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            prop_assert!(k.weights().iter().all(|&w| w >= 0.0));
        }
    }
}
