//! PSNR and SSIM on normalized images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImagePlane;

/// Reported for identical inputs so values stay finite.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Rec.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
}

pub fn evaluate(reference: &ImagePlane, test: &ImagePlane) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr_db: psnr(reference, test)?,
        ssim: ssim(reference, test)?,
    })
}

/// `10 log10(1 / MSE)` over all pixels and channels, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let n = a.data().len() as f64;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// Mean SSIM over all fully-contained 11x11 Gaussian windows of the luma
/// channel, dynamic range 1.
pub fn ssim(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::param(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    let x = luma(a);
    let y = luma(b);
    let g = gaussian_window();
    let product = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(u, v)| u * v).collect() };

    let mu_x = filter_valid(&x, h, w, &g);
    let mu_y = filter_valid(&y, h, w, &g);
    let xx = filter_valid(&product(&x, &x), h, w, &g);
    let yy = filter_valid(&product(&y, &y), h, w, &g);
    let xy = filter_valid(&product(&x, &y), h, w, &g);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = mu_x.len();
    let mut total = 0.0;
    for k in 0..n {
        let (mx, my) = (mu_x[k], mu_y[k]);
        let vx = xx[k] - mx * mx;
        let vy = yy[k] - my * my;
        let cxy = xy[k] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
            / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / n as f64)
}

pub fn luma(img: &ImagePlane) -> Vec<f64> {
    img.data()
        .chunks_exact(3)
        .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
        .collect()
}

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
pub fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> = (0..SSIM_WINDOW)
        .map(|k| (-(k as f64 - r).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let z: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / z).collect()
}

/// Separable valid-mode filtering of a single-channel plane.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = (0..n).map(|t| taps[t] * src[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = (0..n).map(|t| taps[t] * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_image(h: usize, w: usize, seed: u64) -> ImagePlane {
        let mut s = seed;
        ImagePlane::from_fn(h, w, |_, _, _| {
            s = crate::rng::mix64(s.wrapping_add(0x51));
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap()
    }

    #[test]
    fn identical_images_hit_the_caps() {
        let x = noise_image(16, 16, 1);
        assert_eq!(psnr(&x, &x).unwrap(), PSNR_CAP_DB);
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_offset_psnr_is_analytic() {
        let a = ImagePlane::filled(12, 12, 100.0 / 255.0).unwrap();
        let b = ImagePlane::filled(12, 12, 110.0 / 255.0).unwrap();
        let expect = 20.0 * (255.0f64 / 10.0).log10();
        assert!((psnr(&a, &b).unwrap() - expect).abs() < 0.01);
        assert!((expect - 28.13).abs() < 0.01);
    }

    #[test]
    fn psnr_matches_scalar_mse() {
        let a = noise_image(16, 16, 3);
        let b = noise_image(16, 16, 4);
        let mut se = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                for c in 0..3 {
                    se += (a.get(i, j, c) - b.get(i, j, c)).powi(2);
                }
            }
        }
        let expect = 10.0 * (1.0 / (se / 768.0)).log10();
        assert!((psnr(&a, &b).unwrap() - expect).abs() <= 1e-9 * expect.abs());
    }

    #[test]
    fn constant_images_match_closed_form() {
        let (p, q) = (0.3, 0.4);
        let a = ImagePlane::filled(20, 20, p).unwrap();
        let b = ImagePlane::filled(20, 20, q).unwrap();
        let c1 = SSIM_K1 * SSIM_K1;
        let expect = (2.0 * p * q + c1) / (p * p + q * q + c1);
        assert!((ssim(&a, &b).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn inverted_pattern_scores_low() {
        let x = ImagePlane::from_fn(32, 32, |i, j, _| if (i / 4 + j / 4) % 2 == 0 { 0.1 } else { 0.9 })
            .unwrap();
        let inv = ImagePlane::from_fn(32, 32, |i, j, c| 1.0 - x.get(i, j, c)).unwrap();
        assert!(ssim(&x, &inv).unwrap() < 0.5);
    }

    #[test]
    fn symmetric_and_bounded() {
        for s in 0..10 {
            let a = noise_image(14, 17, s);
            let b = noise_image(14, 17, s + 100);
            assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
            let (ab, ba) = (ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
            assert!((ab - ba).abs() < 1e-9);
            assert!((-1.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn size_and_dim_errors() {
        let a = ImagePlane::filled(10, 20, 0.5).unwrap();
        assert!(ssim(&a, &a).is_err());
        let b = ImagePlane::filled(20, 10, 0.5).unwrap();
        assert!(psnr(&a, &b).is_err());
    }
}
