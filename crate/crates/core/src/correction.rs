//! Model-driven thin-cloud correction: estimate each band's cloud radiance from
//! the cirrus band and subtract it.

use crate::error::{Error, Result};
use crate::par;
use crate::raster::{BandRaster, MultiBandImage};
use crate::sensor::SensorProfile;
use crate::spatial::CloudField;
use crate::spectral::{extrapolate_all, GammaModel};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionReport {
    pub profile: String,
    pub coefficient: f64,
    pub band_names: Vec<String>,
    pub mean_cloud: Vec<f64>,
    /// Fraction of pixels per band that went negative and were set to 0.
    pub clamped_fraction: Vec<f64>,
}

impl CorrectionReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "profile = {}\ncoefficient = {}\n",
            self.profile, self.coefficient
        );
        for ((name, m), c) in self
            .band_names
            .iter()
            .zip(&self.mean_cloud)
            .zip(&self.clamped_fraction)
        {
            s.push_str(&format!("cloud_mean_{name} = {m}\n"));
            s.push_str(&format!("clamped_fraction_{name} = {c}\n"));
        }
        s
    }
}

/// Per-band cloud estimate from the cirrus field.
pub fn estimate_cloud(
    cirrus: &CloudField,
    profile: &SensorProfile,
    model: &GammaModel,
) -> Result<MultiBandImage> {
    extrapolate_all(cirrus, profile, model)
}

fn subtract_clamped(cloudy: &BandRaster, cloud: &BandRaster) -> Result<(BandRaster, usize)> {
    let w = cloudy.width();
    let rows = par::map_range(cloudy.height(), |y| {
        let mut clamped = 0usize;
        let row: Vec<f32> = cloudy
            .row(y)
            .iter()
            .zip(cloud.row(y))
            .map(|(&a, &c)| {
                if c == 0.0 {
                    return a;
                }
                let v = f64::from(a) - f64::from(c);
                if v < 0.0 {
                    clamped += 1;
                    0.0
                } else {
                    v as f32
                }
            })
            .collect();
        (row, clamped)
    });
    let mut data = Vec::with_capacity(cloudy.len());
    let mut clamped = 0;
    for (row, c) in rows {
        data.extend(row);
        clamped += c;
    }
    debug_assert_eq!(data.len(), w * cloudy.height());
    Ok((
        BandRaster::new(w, cloudy.height(), cloudy.wavelength(), data)?,
        clamped,
    ))
}

/// Subtracts the extrapolated cloud from every band; negative results become 0 and
/// are counted in the report. Pixels with zero cirrus pass through bit-unchanged.
pub fn correct_pgcs_m(
    cloudy: &MultiBandImage,
    cirrus: &CloudField,
    profile: &SensorProfile,
    model: &GammaModel,
) -> Result<(MultiBandImage, CorrectionReport)> {
    if cloudy.band_count() != profile.band_count() {
        return Err(Error::Shape(format!(
            "image has {} bands, profile {} has {}",
            cloudy.band_count(),
            profile.name(),
            profile.band_count()
        )));
    }
    if !cirrus.raster().same_shape(cloudy.band(0)) {
        return Err(Error::Shape(format!(
            "cirrus is {}x{}, image is {}x{}; resample before correcting",
            cirrus.width(),
            cirrus.height(),
            cloudy.width(),
            cloudy.height()
        )));
    }
    let estimate = estimate_cloud(cirrus, profile, model)?;
    let n = cloudy.band(0).len() as f64;
    let mut bands = Vec::with_capacity(cloudy.band_count());
    let mut mean_cloud = Vec::with_capacity(cloudy.band_count());
    let mut clamped_fraction = Vec::with_capacity(cloudy.band_count());
    for (b, c) in cloudy.bands().iter().zip(estimate.bands()) {
        let (out, clamped) = subtract_clamped(b, c)?;
        bands.push(out);
        mean_cloud.push(c.mean());
        clamped_fraction.push(clamped as f64 / n);
    }
    let report = CorrectionReport {
        profile: profile.name().to_string(),
        coefficient: model.coefficient,
        band_names: profile.bands().iter().map(|b| b.name.clone()).collect(),
        mean_cloud,
        clamped_fraction,
    };
    Ok((MultiBandImage::new(bands)?, report))
}
