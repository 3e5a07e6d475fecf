//! Raster data model, radiometric calibration and the cirrus training normalization.
//!
//! Values are stored as `f32` and treated as unitless top-of-atmosphere quantities,
//! typically within `[0, 1]`. Arithmetic on them is carried out in `f64`.

use crate::error::{Error, Result};
use crate::par;

/// One spectral band: a row-major grid of finite radiance values.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRaster {
    width: usize,
    height: usize,
    wavelength: Option<f64>,
    data: Vec<f32>,
}

impl BandRaster {
    pub fn new(
        width: usize,
        height: usize,
        wavelength: Option<f64>,
        data: Vec<f32>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Validation(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(w) = wavelength {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Validation(format!(
                    "wavelength must be positive, got {w}"
                )));
            }
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {} at index {i}",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            wavelength,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, wavelength: Option<f64>, value: f32) -> Result<Self> {
        Self::new(width, height, wavelength, vec![value; width * height])
    }

    /// Builds a raster by evaluating `f(x, y)` in `f64` for every pixel.
    pub fn from_fn<F>(width: usize, height: usize, wavelength: Option<f64>, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let mut data = vec![0f32; width * height];
        if width > 0 {
            par::for_each_row(&mut data, width, |y, row| {
                for (x, v) in row.iter_mut().enumerate() {
                    *v = f(x, y) as f32;
                }
            });
        }
        Self::new(width, height, wavelength, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn wavelength(&self) -> Option<f64> {
        self.wavelength
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn with_wavelength(mut self, wavelength: Option<f64>) -> Result<Self> {
        if let Some(w) = wavelength {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Validation(format!(
                    "wavelength must be positive, got {w}"
                )));
            }
        }
        self.wavelength = wavelength;
        Ok(self)
    }

    /// Applies `f` to every value in `f64`, keeping dimensions and wavelength.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let mut data = self.data.clone();
        par::for_each_row(&mut data, self.width, |_, row| {
            for v in row.iter_mut() {
                *v = f(f64::from(*v)) as f32;
            }
        });
        Self::new(self.width, self.height, self.wavelength, data)
    }

    /// Combines two same-shaped rasters pixel-wise, keeping `self`'s wavelength.
    pub fn zip_map<F>(&self, other: &BandRaster, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let mut data = self.data.clone();
        let w = self.width;
        par::for_each_row(&mut data, w, |y, row| {
            let rhs = other.row(y);
            for (v, &b) in row.iter_mut().zip(rhs) {
                *v = f(f64::from(*v), f64::from(b)) as f32;
            }
        });
        Self::new(self.width, self.height, self.wavelength, data)
    }

    pub fn same_shape(&self, other: &BandRaster) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn min(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn mean(&self) -> f64 {
        let w = self.width;
        par::row_sum(self.height, |y| {
            self.data[y * w..(y + 1) * w]
                .iter()
                .map(|&v| f64::from(v))
                .sum()
        }) / self.data.len() as f64
    }

    /// Copies the `width`x`height` window anchored at `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Parameter(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            data.extend_from_slice(&self.row(y)[x0..x0 + width]);
        }
        Self::new(width, height, self.wavelength, data)
    }
}

/// Co-registered stack of bands sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBandImage {
    bands: Vec<BandRaster>,
}

impl MultiBandImage {
    pub fn new(bands: Vec<BandRaster>) -> Result<Self> {
        let first = bands
            .first()
            .ok_or_else(|| Error::Validation("image has no bands".into()))?;
        if let Some((i, b)) = bands.iter().enumerate().find(|(_, b)| !b.same_shape(first)) {
            return Err(Error::Shape(format!(
                "band {i} is {}x{}, band 0 is {}x{}",
                b.width(),
                b.height(),
                first.width(),
                first.height()
            )));
        }
        Ok(Self { bands })
    }

    pub fn single(band: BandRaster) -> Self {
        Self { bands: vec![band] }
    }

    pub fn bands(&self) -> &[BandRaster] {
        &self.bands
    }

    pub fn into_bands(self) -> Vec<BandRaster> {
        self.bands
    }

    pub fn band(&self, i: usize) -> &BandRaster {
        &self.bands[i]
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn width(&self) -> usize {
        self.bands[0].width()
    }

    pub fn height(&self) -> usize {
        self.bands[0].height()
    }

    pub fn wavelengths(&self) -> Vec<Option<f64>> {
        self.bands.iter().map(BandRaster::wavelength).collect()
    }

    pub fn same_shape(&self, other: &MultiBandImage) -> bool {
        self.band_count() == other.band_count() && self.bands[0].same_shape(&other.bands[0])
    }

    pub(crate) fn check_same_shape(&self, other: &MultiBandImage) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width(),
                self.height(),
                self.band_count(),
                other.width(),
                other.height(),
                other.band_count()
            )))
        }
    }

    /// Clamps every value to `[0, 1]`, for export only.
    pub fn clamped_unit(&self) -> Result<Self> {
        let bands = self
            .bands
            .iter()
            .map(|b| b.map(|v| v.clamp(0.0, 1.0)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bands)
    }
}

/// Affine DN rescaling plus sun-elevation correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub gain: f64,
    pub offset: f64,
    /// Degrees, in `(0, 90]`.
    pub sun_elevation: f64,
}

impl CalibrationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sun_elevation > 0.0 && self.sun_elevation <= 90.0) {
            return Err(Error::Parameter(format!(
                "sun elevation must lie in (0, 90], got {}",
                self.sun_elevation
            )));
        }
        if !self.gain.is_finite() || !self.offset.is_finite() {
            return Err(Error::Parameter("gain and offset must be finite".into()));
        }
        Ok(())
    }
}

/// `(gain * dn + offset) / sin(sun_elevation)`, wavelength preserved.
pub fn calibrate_to_toa(dn: &BandRaster, params: &CalibrationParams) -> Result<BandRaster> {
    params.validate()?;
    let sin_elev = params.sun_elevation.to_radians().sin();
    let (gain, offset) = (params.gain, params.offset);
    dn.map(|v| (gain * v + offset) / sin_elev)
}

/// Cirrus radiance scale used for the training normalization.
pub const NORMALIZATION_SCALE: f64 = 0.05;

/// Maps the nominal cirrus range `[0, 0.1]` onto `[-1, 1]`; larger values clamp to 1.
pub fn normalize_for_training(c: &BandRaster) -> Result<BandRaster> {
    if c.data().iter().any(|&v| v < 0.0) {
        return Err(Error::Validation(
            "normalization requires non-negative radiance".into(),
        ));
    }
    c.map(|v| (v / NORMALIZATION_SCALE - 1.0).min(1.0))
}

/// Inverse of [`normalize_for_training`] on `[-1, 1]`.
pub fn denormalize(x: &BandRaster) -> Result<BandRaster> {
    if let Some(v) = x.data().iter().find(|v| !(-1.0..=1.0).contains(*v)) {
        return Err(Error::Validation(format!(
            "normalized value {v} outside [-1, 1]"
        )));
    }
    x.map(|v| NORMALIZATION_SCALE * (v + 1.0))
}
