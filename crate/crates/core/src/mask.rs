//! Oriented anisotropic Gaussian masks used to blend each degradation stage
//! with its input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Peak-normalized oriented Gaussian evaluated at offset `(di, dj)`
/// (rows, columns) from its center.
///
/// `sigma_a` is the spread along the principal axis, which lies at
/// `angle_deg` counter-clockwise from the row direction (the `+j` axis, as
/// seen on screen with rows growing downwards). `sigma_b` is the spread along
/// the perpendicular axis. The value at the center is exactly 1.
#[inline]
pub fn oriented_gaussian(di: f64, dj: f64, sigma_a: f64, sigma_b: f64, angle_deg: f64) -> f64 {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let along = -di * s + dj * c;
    let across = di * c + dj * s;
    (-0.5 * ((along / sigma_a).powi(2) + (across / sigma_b).powi(2))).exp()
}

/// `[c_i, c_j; sigma_i, sigma_j, A]` of a blending mask, in pixels and degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedMaskParams {
    pub center: (f64, f64),
    pub sigmas: (f64, f64),
    pub angle_deg: f64,
}

impl OrientedMaskParams {
    pub fn new(center: (f64, f64), sigmas: (f64, f64), angle_deg: f64) -> Result<Self> {
        let p = Self {
            center,
            sigmas,
            angle_deg,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.center.0,
            self.center.1,
            self.sigmas.0,
            self.sigmas.1,
            self.angle_deg,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("mask parameters must be finite"));
        }
        if self.sigmas.0 <= 0.0 || self.sigmas.1 <= 0.0 {
            return Err(Error::param(format!(
                "mask sigmas must be positive, got {:?}",
                self.sigmas
            )));
        }
        Ok(())
    }

    /// Mask value at pixel coordinates `(i, j)` in the parameter frame.
    #[inline]
    pub fn value_at(&self, i: f64, j: f64) -> f64 {
        oriented_gaussian(
            i - self.center.0,
            j - self.center.1,
            self.sigmas.0,
            self.sigmas.1,
            self.angle_deg,
        )
    }
}

/// Per-pixel blending weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPlane {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl MaskPlane {
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::from_values(height, width, vec![value; height * width])
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::param(format!(
                "mask buffer holds {} values, expected {}",
                values.len(),
                height * width
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(format!("mask value {v} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }
}

/// Rasterizes `p` onto an `h x w` grid, pixel `(i, j)` sampled at integer
/// coordinates.
pub fn oriented_mask(h: usize, w: usize, p: &OrientedMaskParams) -> Result<MaskPlane> {
    oriented_mask_scaled(h, w, p, 1.0, 1.0)
}

/// Rasterizes parameters expressed in a `frame x frame` working frame onto
/// an `h x w` image: pixel `(i, j)` is evaluated at `(i * frame / h, j * frame / w)`.
pub fn oriented_mask_in_frame(
    h: usize,
    w: usize,
    p: &OrientedMaskParams,
    frame: f64,
) -> Result<MaskPlane> {
    oriented_mask_scaled(h, w, p, frame / h as f64, frame / w as f64)
}

fn oriented_mask_scaled(
    h: usize,
    w: usize,
    p: &OrientedMaskParams,
    row_scale: f64,
    col_scale: f64,
) -> Result<MaskPlane> {
    p.validate()?;
    if h == 0 || w == 0 {
        return Err(Error::param("mask dimensions must be positive"));
    }
    let mut values = Vec::with_capacity(h * w);
    for i in 0..h {
        let fi = i as f64 * row_scale;
        for j in 0..w {
            values.push(p.value_at(fi, j as f64 * col_scale));
        }
    }
    Ok(MaskPlane {
        height: h,
        width: w,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: `exp(-0.5 d^T S^-1 d)` with `S = R diag(a^2, b^2) R^T`
    /// and an explicit 2x2 inverse.
    fn covariance_oracle(di: f64, dj: f64, a: f64, b: f64, angle_deg: f64) -> f64 {
        let t = angle_deg * std::f64::consts::PI / 180.0;
        // principal axis in (i, j) coordinates
        let (ai, aj) = (-t.sin(), t.cos());
        let (bi, bj) = (t.cos(), t.sin());
        let s_ii = a * a * ai * ai + b * b * bi * bi;
        let s_ij = a * a * ai * aj + b * b * bi * bj;
        let s_jj = a * a * aj * aj + b * b * bj * bj;
        let det = s_ii * s_jj - s_ij * s_ij;
        let q = (s_jj * di * di - 2.0 * s_ij * di * dj + s_ii * dj * dj) / det;
        (-0.5 * q).exp()
    }

    #[test]
    fn peak_is_one_at_center() {
        for (h, w) in [(128, 128), (64, 96), (9, 8)] {
            let p = OrientedMaskParams::new(((h / 2) as f64, (w / 2) as f64), (3.0, 1.5), 30.0)
                .unwrap();
            let m = oriented_mask(h, w, &p).unwrap();
            assert_eq!(m.get(h / 2, w / 2), 1.0);
            assert!(m.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn fig8_style_parameters_match_covariance_form() {
        let p = OrientedMaskParams::new((64.0, 64.0), (20.0, 10.0), 45.0).unwrap();
        let m = oriented_mask(128, 128, &p).unwrap();
        let expect = covariance_oracle(20.0, 20.0, 20.0, 10.0, 45.0);
        assert!((m.get(84, 84) - expect).abs() <= 1e-12 * expect.max(1e-300));
        // (20,20) lies on the minor axis at 45 degrees: 28.28 px / 10 px
        assert!((expect - (-4.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn matches_covariance_oracle_on_random_parameters() {
        let mut state = 0x1234_5678u64;
        let mut next = || {
            state = crate::rng::mix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let (a, b, ang) = (1.0 + 20.0 * next(), 0.5 + 20.0 * next(), 180.0 * next());
            let (di, dj) = (60.0 * next() - 30.0, 60.0 * next() - 30.0);
            let got = oriented_gaussian(di, dj, a, b, ang);
            let want = covariance_oracle(di, dj, a, b, ang);
            assert!((got - want).abs() <= 1e-9 * want.max(1e-12), "{got} vs {want}");
        }
    }

    #[test]
    fn tail_decays_beyond_six_sigma() {
        let p = OrientedMaskParams::new((10.0, 10.0), (2.0, 1.0), 0.0).unwrap();
        let m = oriented_mask(64, 64, &p).unwrap();
        // along the principal (row) direction: 12 px = 6 sigma_a
        assert!(m.get(10, 22) < 1e-6);
        // across: 6 px = 6 sigma_b
        assert!(m.get(16, 10) < 1e-6);
    }

    #[test]
    fn isotropic_mask_ignores_angle() {
        let base = oriented_mask(32, 40, &OrientedMaskParams::new((12.3, 20.1), (7.0, 7.0), 0.0).unwrap())
            .unwrap();
        for ang in [13.0, 45.0, 90.0, 179.0] {
            let m = oriented_mask(32, 40, &OrientedMaskParams::new((12.3, 20.1), (7.0, 7.0), ang).unwrap())
                .unwrap();
            for (x, y) in base.values().iter().zip(m.values()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn monotone_along_principal_axes() {
        let p = OrientedMaskParams::new((32.0, 32.0), (9.0, 4.0), 0.0).unwrap();
        let m = oriented_mask(64, 64, &p).unwrap();
        for k in 32..63 {
            assert!(m.get(32, k + 1) < m.get(32, k));
            assert!(m.get(k + 1, 32) < m.get(k, 32));
        }
    }

    #[test]
    fn frame_scaling_is_identity_on_frame_sized_images() {
        let p = OrientedMaskParams::new((40.0, 90.0), (15.0, 6.0), 120.0).unwrap();
        assert_eq!(
            oriented_mask_in_frame(128, 128, &p, 128.0).unwrap(),
            oriented_mask(128, 128, &p).unwrap()
        );
        let big = oriented_mask_in_frame(256, 512, &p, 128.0).unwrap();
        assert_eq!(big.get(80, 360), 1.0);
    }

    #[test]
    fn rejects_bad_sigmas() {
        assert!(OrientedMaskParams::new((0.0, 0.0), (0.0, 1.0), 0.0).is_err());
        assert!(OrientedMaskParams::new((0.0, 0.0), (1.0, -1.0), 0.0).is_err());
        assert!(MaskPlane::filled(2, 2, 1.5).is_err());
    }
}
