//! Single-channel cloud fields: generation, ingestion, patching and thickness control.

use std::path::Path;

use crate::error::{Error, Result};
use crate::format::read_raster;
use crate::par;
use crate::raster::BandRaster;
use crate::seed;
use crate::sensor::{SensorProfile, DEFAULT_REFERENCE_WAVELENGTH};

/// Non-negative reference-band cloud radiance.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudField {
    raster: BandRaster,
}

impl CloudField {
    /// Wraps `raster`, stamping `reference_wavelength`. Values must be non-negative.
    pub fn new(raster: BandRaster, reference_wavelength: f64) -> Result<Self> {
        if let Some(v) = raster.data().iter().find(|&&v| v < 0.0) {
            return Err(Error::Validation(format!(
                "cloud radiance must be non-negative, found {v}"
            )));
        }
        let raster = raster.with_wavelength(Some(reference_wavelength))?;
        Ok(Self { raster })
    }

    pub fn raster(&self) -> &BandRaster {
        &self.raster
    }

    pub fn into_raster(self) -> BandRaster {
        self.raster
    }

    pub fn reference_wavelength(&self) -> f64 {
        self.raster
            .wavelength()
            .expect("cloud field always carries a wavelength")
    }

    pub fn width(&self) -> usize {
        self.raster.width()
    }

    pub fn height(&self) -> usize {
        self.raster.height()
    }

    pub fn restamp(self, reference_wavelength: f64) -> Result<Self> {
        Self::new(self.raster, reference_wavelength)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmParams {
    pub octaves: u32,
    pub persistence: f64,
    pub lacunarity: f64,
    /// Lattice cells per pixel at the first octave.
    pub base_frequency: f64,
    pub coverage_threshold: f64,
    pub max_radiance: f64,
    pub seed: u64,
}

impl Default for FbmParams {
    fn default() -> Self {
        Self {
            octaves: 6,
            persistence: 0.5,
            lacunarity: 2.0,
            base_frequency: 1.0 / 64.0,
            coverage_threshold: 0.35,
            max_radiance: 0.1,
            seed: 0,
        }
    }
}

impl FbmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Parameter(format!("fbm: {msg}")));
        if self.octaves < 1 {
            return bad("octaves must be >= 1");
        }
        if !(self.persistence > 0.0 && self.persistence <= 1.0) {
            return bad("persistence must lie in (0, 1]");
        }
        if !(self.lacunarity > 1.0 && self.lacunarity.is_finite()) {
            return bad("lacunarity must be > 1");
        }
        if !(self.base_frequency > 0.0 && self.base_frequency.is_finite()) {
            return bad("base frequency must be > 0");
        }
        if !(0.0..1.0).contains(&self.coverage_threshold) {
            return bad("coverage threshold must lie in [0, 1)");
        }
        if !(self.max_radiance > 0.0 && self.max_radiance.is_finite()) {
            return bad("max radiance must be > 0");
        }
        Ok(())
    }
}

#[inline]
fn lattice(ix: i64, iy: i64, octave_seed: u64) -> f64 {
    let h = seed::avalanche(
        octave_seed
            ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F),
    );
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[inline]
fn value_noise(x: f64, y: f64, octave_seed: u64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (tx, ty) = (x - fx, y - fy);
    let (ix, iy) = (fx as i64, fy as i64);
    let v00 = lattice(ix, iy, octave_seed);
    let v10 = lattice(ix + 1, iy, octave_seed);
    let v01 = lattice(ix, iy + 1, octave_seed);
    let v11 = lattice(ix + 1, iy + 1, octave_seed);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Seeded fractal value noise mapped to cloud radiance in `[0, max_radiance]`.
///
/// Octaves are summed and divided by the total amplitude, giving `n` in `[0, 1)`;
/// radiance is then `max(0, n - t) * M / (1 - t)` with `t` the coverage threshold.
pub fn generate_fbm_cloud(width: usize, height: usize, params: &FbmParams) -> Result<CloudField> {
    params.validate()?;
    if width == 0 || height == 0 {
        return Err(Error::Parameter(format!(
            "cloud dimensions must be positive, got {width}x{height}"
        )));
    }
    let octaves: Vec<(f64, f64, u64)> = (0..params.octaves)
        .map(|o| {
            let o = i32::try_from(o).unwrap_or(i32::MAX);
            (
                params.base_frequency * params.lacunarity.powi(o),
                params.persistence.powi(o),
                seed::mix(params.seed, o as u64),
            )
        })
        .collect();
    let total_amp: f64 = octaves.iter().map(|o| o.1).sum();
    let t = params.coverage_threshold;
    let scale = params.max_radiance / (1.0 - t);
    let cap = params.max_radiance as f32;

    let raster = BandRaster::from_fn(width, height, None, |x, y| {
        let n = octaves
            .iter()
            .map(|&(freq, amp, s)| amp * value_noise(x as f64 * freq, y as f64 * freq, s))
            .sum::<f64>()
            / total_amp;
        let c = (n - t).max(0.0) * scale;
        f64::from((c as f32).min(cap))
    })?;
    CloudField::new(raster, DEFAULT_REFERENCE_WAVELENGTH)
}

/// Tolerance below zero that ingestion snaps to zero.
pub const INGEST_SNAP_EPSILON: f32 = 1e-6;

/// Loads an externally produced single-band cloud field.
pub fn ingest_cloud(path: impl AsRef<Path>, profile: &SensorProfile) -> Result<CloudField> {
    let image = read_raster(path)?;
    if image.band_count() != 1 {
        return Err(Error::Shape(format!(
            "cloud field must be single-band, file has {} bands",
            image.band_count()
        )));
    }
    let band = image.into_bands().remove(0);
    if let Some(v) = band.data().iter().find(|&&v| v < -INGEST_SNAP_EPSILON) {
        return Err(Error::Validation(format!(
            "cloud radiance {v} is below -{INGEST_SNAP_EPSILON}"
        )));
    }
    let snapped = band.map(|v| v.max(0.0))?;
    CloudField::new(snapped, profile.reference_wavelength())
}

/// Provider of single-channel cloud fields for synthesis.
pub trait CloudGenerator: Sync {
    fn generate(&self, width: usize, height: usize, seed: u64) -> Result<CloudField>;
}

/// Fractal-noise provider; the per-call seed replaces `params.seed`.
#[derive(Debug, Clone)]
pub struct FbmGenerator {
    pub params: FbmParams,
    pub reference_wavelength: f64,
}

impl FbmGenerator {
    pub fn new(params: FbmParams, profile: &SensorProfile) -> Self {
        Self {
            params,
            reference_wavelength: profile.reference_wavelength(),
        }
    }
}

impl CloudGenerator for FbmGenerator {
    fn generate(&self, width: usize, height: usize, seed: u64) -> Result<CloudField> {
        let params = FbmParams { seed, ..self.params };
        generate_fbm_cloud(width, height, &params)?.restamp(self.reference_wavelength)
    }
}

/// Pool of pre-made fields (for example ingested GAN samples); the seed picks one.
#[derive(Debug, Clone)]
pub struct FieldPool {
    fields: Vec<CloudField>,
}

impl FieldPool {
    pub fn new(fields: Vec<CloudField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Parameter("cloud pool is empty".into()));
        }
        Ok(Self { fields })
    }
}

impl CloudGenerator for FieldPool {
    fn generate(&self, width: usize, height: usize, seed: u64) -> Result<CloudField> {
        let field = &self.fields[(seed % self.fields.len() as u64) as usize];
        if field.width() != width || field.height() != height {
            return Err(Error::Shape(format!(
                "pooled cloud is {}x{}, requested {width}x{height}",
                field.width(),
                field.height()
            )));
        }
        Ok(field.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    pub patch_size: usize,
    pub stride: usize,
    pub cleaning_threshold: f32,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self {
            patch_size: 512,
            stride: 128,
            cleaning_threshold: 0.015,
        }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stride < 1 || self.stride > self.patch_size {
            return Err(Error::Parameter(format!(
                "stride {} must lie in [1, {}]",
                self.stride, self.patch_size
            )));
        }
        Ok(())
    }
}

/// Top-left anchor of a patch, with its grid position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub row: usize,
    pub col: usize,
    pub x: usize,
    pub y: usize,
}

fn anchors_along(dim: usize, spec: &PatchSpec) -> usize {
    if dim < spec.patch_size {
        0
    } else {
        (dim - spec.patch_size) / spec.stride + 1
    }
}

/// Anchors in row-major order.
pub fn patch_anchors(width: usize, height: usize, spec: &PatchSpec) -> Result<Vec<Anchor>> {
    spec.validate()?;
    let (nx, ny) = (anchors_along(width, spec), anchors_along(height, spec));
    Ok((0..ny)
        .flat_map(|row| {
            (0..nx).map(move |col| Anchor {
                row,
                col,
                x: col * spec.stride,
                y: row * spec.stride,
            })
        })
        .collect())
}

pub fn extract_patches(image: &BandRaster, spec: &PatchSpec) -> Result<Vec<BandRaster>> {
    Ok(extract_anchored(image, spec)?
        .into_iter()
        .map(|(_, p)| p)
        .collect())
}

/// Like [`extract_patches`], keeping each patch's anchor.
pub fn extract_anchored(image: &BandRaster, spec: &PatchSpec) -> Result<Vec<(Anchor, BandRaster)>> {
    let anchors = patch_anchors(image.width(), image.height(), spec)?;
    par::map_slice(&anchors, |a| {
        image
            .crop(a.x, a.y, spec.patch_size, spec.patch_size)
            .map(|p| (*a, p))
    })
    .into_iter()
    .collect()
}

/// Keeps a patch when its maximum is at or above the cleaning threshold.
pub fn keeps_patch(patch: &BandRaster, spec: &PatchSpec) -> bool {
    patch.max() >= spec.cleaning_threshold
}

pub fn clean_patches(patches: Vec<BandRaster>, spec: &PatchSpec) -> Vec<BandRaster> {
    patches.into_iter().filter(|p| keeps_patch(p, spec)).collect()
}

/// `min(scale * c, cap)`; no cap means no upper limit.
pub fn adjust_thickness(cloud: &CloudField, scale: f64, cap: Option<f64>) -> Result<CloudField> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::Parameter(format!(
            "thickness scale must be >= 0, got {scale}"
        )));
    }
    if let Some(c) = cap {
        if !(c > 0.0) {
            return Err(Error::Parameter(format!("thickness cap must be > 0, got {c}")));
        }
    }
    let cap = cap.unwrap_or(f64::INFINITY);
    let raster = cloud.raster().map(|v| (scale * v).min(cap))?;
    CloudField::new(raster, cloud.reference_wavelength())
}
