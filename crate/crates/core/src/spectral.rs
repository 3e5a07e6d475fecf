//! Power-law cloud scattering across bands.
//!
//! Cloud radiance at wavelength `λ` follows `C ∝ λ^-γ`, so two bands of the same
//! pixel relate by `C_t = (λ_r / λ_t)^γ · C_r`. The exponent itself depends on the
//! reference-band radiance through the fitted model `γ = a · ln(C_r)`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::par;
use crate::raster::{BandRaster, MultiBandImage};
use crate::sensor::SensorProfile;
use crate::spatial::CloudField;

/// Default fitted coefficient of `γ = a · ln(C_r)`.
pub const DEFAULT_GAMMA_COEFFICIENT: f64 = -0.14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaModel {
    pub coefficient: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl Default for GammaModel {
    fn default() -> Self {
        Self::with_coefficient(DEFAULT_GAMMA_COEFFICIENT)
    }
}

impl GammaModel {
    pub fn with_coefficient(coefficient: f64) -> Self {
        Self {
            coefficient,
            gamma_min: 0.0,
            gamma_max: 4.0,
        }
    }

    /// `clamp(a · ln c_r, γ_min, γ_max)`; for `c_r == 0` returns `γ_max`.
    #[inline]
    pub fn gamma(&self, c_r: f64) -> f64 {
        if c_r == 0.0 {
            self.gamma_max
        } else {
            (self.coefficient * c_r.ln()).clamp(self.gamma_min, self.gamma_max)
        }
    }

    /// Cloud radiance at `lambda_t` given reference radiance `c_r` at `lambda_r`.
    #[inline]
    pub fn extrapolate(&self, c_r: f64, lambda_r: f64, lambda_t: f64) -> f64 {
        if c_r == 0.0 {
            return 0.0;
        }
        (lambda_r / lambda_t).powf(self.gamma(c_r)) * c_r
    }
}

pub fn gamma_of(c_r: f64, model: &GammaModel) -> Result<f64> {
    if !(c_r >= 0.0) {
        return Err(Error::Domain(format!(
            "reference radiance must be >= 0, got {c_r}"
        )));
    }
    Ok(model.gamma(c_r))
}

fn check_wavelength(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "target wavelength must be > 0, got {lambda}"
        )))
    }
}

/// Per-pixel extrapolation of the reference field to `lambda_t`, computed in `f64`.
pub fn extrapolate_band(
    c_r: &CloudField,
    lambda_t: f64,
    model: &GammaModel,
) -> Result<BandRaster> {
    check_wavelength(lambda_t)?;
    let lambda_r = c_r.reference_wavelength();
    c_r.raster()
        .map(|v| model.extrapolate(v, lambda_r, lambda_t))?
        .with_wavelength(Some(lambda_t))
}

/// One extrapolated band per profile band, in profile order.
pub fn extrapolate_all(
    c_r: &CloudField,
    profile: &SensorProfile,
    model: &GammaModel,
) -> Result<MultiBandImage> {
    let bands = profile
        .bands()
        .iter()
        .map(|b| extrapolate_band(c_r, b.wavelength, model))
        .collect::<Result<Vec<_>>>()?;
    MultiBandImage::new(bands)
}

/// Solves `c_i = (λ_r / λ_i)^γ · c_r` for `γ`.
pub fn invert_gamma(c_r: f64, c_i: f64, lambda_i: f64, lambda_r: f64) -> Result<f64> {
    if !(c_r > 0.0 && c_i > 0.0) {
        return Err(Error::Domain(format!(
            "radiances must be > 0, got c_r={c_r}, c_i={c_i}"
        )));
    }
    if !(lambda_i > 0.0 && lambda_r > 0.0) {
        return Err(Error::Domain(format!(
            "wavelengths must be > 0, got {lambda_i} and {lambda_r}"
        )));
    }
    if lambda_i == lambda_r {
        return Err(Error::DegeneratePair(lambda_i));
    }
    Ok((c_i / c_r).ln() / (lambda_r / lambda_i).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSample {
    pub c_r: f64,
    pub gamma: f64,
}

/// Inverts every band against the cirrus field, pixel by pixel.
///
/// `cloud_bands` must hold cloud radiance only; separating cloud from surface signal
/// is the caller's job. Pixels with cirrus below `min_cr` (or zero) and bands with
/// non-positive radiance are skipped.
pub fn collect_gamma_samples(
    cloud_bands: &MultiBandImage,
    cirrus: &CloudField,
    min_cr: f64,
) -> Result<Vec<GammaSample>> {
    if !cirrus.raster().same_shape(cloud_bands.band(0)) {
        return Err(Error::Shape(format!(
            "cirrus is {}x{}, bands are {}x{}",
            cirrus.width(),
            cirrus.height(),
            cloud_bands.width(),
            cloud_bands.height()
        )));
    }
    let lambda_r = cirrus.reference_wavelength();
    let bands: Vec<(&BandRaster, f64)> = cloud_bands
        .bands()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            b.wavelength()
                .map(|w| (b, w))
                .ok_or_else(|| Error::Parameter(format!("band {i} has no wavelength")))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&(_, w)| w != lambda_r)
        .collect();

    let rows = par::map_range(cirrus.height(), |y| {
        let mut out = Vec::new();
        for (x, &cr) in cirrus.raster().row(y).iter().enumerate() {
            let cr = f64::from(cr);
            if cr <= 0.0 || cr < min_cr {
                continue;
            }
            for &(band, lambda_i) in &bands {
                let ci = f64::from(band.get(x, y));
                if ci > 0.0 {
                    let gamma = (ci / cr).ln() / (lambda_r / lambda_i).ln();
                    out.push(GammaSample { c_r: cr, gamma });
                }
            }
        }
        out
    });
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_samples_csv<W: Write>(samples: &[GammaSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Format(format!("csv: {e}"));
    w.write_record(["c_r", "gamma"]).map_err(err)?;
    for s in samples {
        w.write_record([s.c_r.to_string(), s.gamma.to_string()])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::io("<csv>", e))
}

pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<GammaSample>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::Format(format!("csv: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "c_r" || &headers[1] != "gamma" {
        return Err(Error::Format(format!(
            "expected header `c_r,gamma`, got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Error::Format(format!("csv: {e}")))?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("row {}: bad field {k}", i + 1)))
            };
            let (c_r, gamma) = (field(0)?, field(1)?);
            if c_r <= 0.0 {
                return Err(Error::Validation(format!(
                    "row {}: c_r must be > 0, got {c_r}",
                    i + 1
                )));
            }
            Ok(GammaSample { c_r, gamma })
        })
        .collect()
}
