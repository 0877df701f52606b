//! Python bindings: images, degradation recipes, metrics, view selection and
//! dataset building.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use nds_core::dataset::{self, BuildConfig, HoldoutRule, DEFAULT_CROP};
use nds_core::degrade::{apply_recipe, sample_recipe, DegradationRecipe, StageToggles};
use nds_core::geometry::{self, SelectionConfig, SphereConfig, DEFAULT_RAY_GRID, DEFAULT_REFERENCE_COUNT};
use nds_core::{metrics, ImagePlane, OrientedMaskParams};

fn to_py(e: nds_core::Error) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn json_loads<'py>(py: Python<'py>, s: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (s,))
}

/// RGB image with float channels in [0, 1].
#[pyclass(name = "Image", module = "nds_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyImage {
    inner: ImagePlane,
}

#[pymethods]
impl PyImage {
    #[staticmethod]
    fn from_png(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ImagePlane::load_png(path).map_err(to_py)?,
        })
    }

    /// From nested `[row][column][channel]` lists.
    #[staticmethod]
    fn from_list(rows: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let h = rows.len();
        let w = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(h * w * 3);
        for row in &rows {
            if row.len() != w {
                return Err(PyValueError::new_err("rows have different lengths"));
            }
            for px in row {
                if px.len() != 3 {
                    return Err(PyValueError::new_err("pixels need exactly 3 channels"));
                }
                data.extend_from_slice(px);
            }
        }
        Ok(Self {
            inner: ImagePlane::from_raw(h, w, data).map_err(to_py)?,
        })
    }

    fn to_list(&self) -> Vec<Vec<Vec<f64>>> {
        let (h, w) = self.inner.dims();
        (0..h)
            .map(|i| (0..w).map(|j| self.inner.pixel(i, j).to_vec()).collect())
            .collect()
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_png(path).map_err(to_py)
    }

    /// `(height, width, 3)`
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.inner.height(), self.inner.width(), 3)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.height(), self.inner.width())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// A replayable set of degradation parameters.
#[pyclass(name = "Recipe", module = "nds_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyRecipe {
    inner: DegradationRecipe,
}

#[pymethods]
impl PyRecipe {
    #[staticmethod]
    #[pyo3(signature = (seed, height, width, sgn=true, repos=true, ablur=true, region_adaptive=true))]
    fn sample(
        seed: u64,
        height: usize,
        width: usize,
        sgn: bool,
        repos: bool,
        ablur: bool,
        region_adaptive: bool,
    ) -> PyResult<Self> {
        let toggles = StageToggles {
            sgn,
            repos,
            ablur,
            region_adaptive,
        };
        Ok(Self {
            inner: sample_recipe(seed, (height, width), toggles).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: DegradationRecipe::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// The recipe as plain Python dicts.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_loads(py, &self.inner.to_json())
    }

    fn apply(&self, py: Python<'_>, image: &PyImage) -> PyResult<PyImage> {
        let img = image.inner.clone();
        let r = self.inner;
        let out = py.detach(move || apply_recipe(&img, &r)).map_err(to_py)?;
        Ok(PyImage { inner: out })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.height, self.inner.width)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

#[pyfunction]
fn psnr(reference: &PyImage, test: &PyImage) -> PyResult<f64> {
    metrics::psnr(&reference.inner, &test.inner).map_err(to_py)
}

#[pyfunction]
fn ssim(reference: &PyImage, test: &PyImage) -> PyResult<f64> {
    metrics::ssim(&reference.inner, &test.inner).map_err(to_py)
}

/// Mask values as `[row][column]`. With `frame`, the parameters are read in
/// a `frame x frame` working frame and scaled to the grid.
#[pyfunction]
#[pyo3(signature = (height, width, center, sigmas, angle_deg, frame=None))]
fn oriented_mask(
    height: usize,
    width: usize,
    center: (f64, f64),
    sigmas: (f64, f64),
    angle_deg: f64,
    frame: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let p = OrientedMaskParams::new(center, sigmas, angle_deg).map_err(to_py)?;
    let m = match frame {
        Some(f) => nds_core::mask::oriented_mask_in_frame(height, width, &p, f),
        None => nds_core::oriented_mask(height, width, &p),
    }
    .map_err(to_py)?;
    Ok(m.values().chunks(width).map(<[f64]>::to_vec).collect())
}

/// `[(view_id, mutual_cost), ...]` for the `k` best references of `target`.
#[pyfunction]
#[pyo3(signature = (cameras, target, k=DEFAULT_REFERENCE_COUNT, grid=DEFAULT_RAY_GRID, sphere_center=None, sphere_radius=None))]
fn select_references(
    py: Python<'_>,
    cameras: PathBuf,
    target: usize,
    k: usize,
    grid: usize,
    sphere_center: Option<[f64; 3]>,
    sphere_radius: Option<f64>,
) -> PyResult<Vec<(usize, f64)>> {
    let cfg = SelectionConfig {
        grid,
        k,
        sphere: SphereConfig {
            center: sphere_center,
            radius: sphere_radius,
            radius_scale: None,
        },
    };
    py.detach(|| {
        let views = geometry::load_scene(&cameras)?;
        let (_, table) = geometry::scene_match_table(&views, &cfg)?;
        geometry::ranked_references(&table, target, k)
    })
    .map_err(to_py)
}

/// Builds a dataset under `out` and returns a summary dict.
#[pyfunction]
#[pyo3(signature = (out, video=None, scenes=None, seed=0, count=None, crop=DEFAULT_CROP, fraction=1.0, holdout=8, jobs=1, sgn=true, repos=true, ablur=true, region_adaptive=true))]
#[allow(clippy::too_many_arguments)]
fn build_dataset<'py>(
    py: Python<'py>,
    out: PathBuf,
    video: Option<PathBuf>,
    scenes: Option<PathBuf>,
    seed: u64,
    count: Option<usize>,
    crop: usize,
    fraction: f64,
    holdout: usize,
    jobs: usize,
    sgn: bool,
    repos: bool,
    ablur: bool,
    region_adaptive: bool,
) -> PyResult<Bound<'py, PyAny>> {
    if video.is_none() && scenes.is_none() {
        return Err(PyValueError::new_err("give video and/or scenes"));
    }
    let holdout = if holdout == 0 {
        HoldoutRule::None
    } else {
        HoldoutRule::EveryNth(holdout)
    };
    let toggles = StageToggles {
        sgn,
        repos,
        ablur,
        region_adaptive,
    };
    let summary = py
        .detach(|| -> nds_core::Result<serde_json::Value> {
            let mut seqs = Vec::new();
            if let Some(dir) = &scenes {
                for f in dataset::discover_scene_files(dir)? {
                    seqs.extend(dataset::ingest_scene_views(&f, holdout, &SelectionConfig::default())?);
                }
            }
            let mut skipped_clips = 0;
            if let Some(dir) = &video {
                let v = dataset::ingest_video_triplets(dir, fraction, seed)?;
                skipped_clips = v.skipped_clips;
                seqs.extend(v.sequences);
            }
            let cfg = BuildConfig {
                seed,
                crop,
                count: count.unwrap_or(seqs.len()),
                toggles,
                jobs: jobs.max(1),
            };
            let m = dataset::build_dataset(&seqs, &out, &cfg)?;
            Ok(serde_json::json!({
                "samples": m.entries.len(),
                "manifest": out.join(dataset::MANIFEST_FILE),
                "sequences": seqs.len(),
                "skipped_sequences": m.skipped_sequences,
                "skipped_clips": skipped_clips,
            }))
        })
        .map_err(to_py)?;
    json_loads(py, &summary.to_string())
}

/// Manifest entries as a list of dicts.
#[pyfunction]
fn read_manifest<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let entries = dataset::read_manifest(&path).map_err(to_py)?;
    let text = serde_json::to_string(&entries).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_loads(py, &text)
}

/// Re-applies one manifest entry (a dict or JSON string) and checks it
/// against the stored degraded image under `root`.
#[pyfunction]
fn verify_entry(py: Python<'_>, entry: &Bound<'_, PyAny>, root: PathBuf) -> PyResult<bool> {
    let text: String = match entry.extract::<String>() {
        Ok(s) => s,
        Err(_) => py.import("json")?.call_method1("dumps", (entry,))?.extract()?,
    };
    let e: dataset::SampleManifestEntry =
        serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.detach(|| dataset::verify_entry(&e, &root)).map_err(to_py)
}

#[pymodule]
fn nds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyRecipe>()?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(oriented_mask, m)?)?;
    m.add_function(wrap_pyfunction!(select_references, m)?)?;
    m.add_function(wrap_pyfunction!(build_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(read_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(verify_entry, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
