//! Sensor band layouts.

use crate::error::{Error, Result};

/// Central wavelength of the cirrus reference band, µm.
pub const DEFAULT_REFERENCE_WAVELENGTH: f64 = 1.375;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorBand {
    pub name: String,
    /// Central wavelength, µm.
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorProfile {
    name: String,
    bands: Vec<SensorBand>,
    reference_wavelength: f64,
    max_parallax_offset: u32,
}

impl SensorProfile {
    pub fn new(
        name: impl Into<String>,
        bands: Vec<SensorBand>,
        reference_wavelength: f64,
        max_parallax_offset: u32,
    ) -> Result<Self> {
        let name = name.into();
        if bands.is_empty() {
            return Err(Error::Parameter(format!("profile {name} has no bands")));
        }
        for (i, b) in bands.iter().enumerate() {
            if !(b.wavelength.is_finite() && b.wavelength > 0.0) {
                return Err(Error::Parameter(format!(
                    "profile {name}: band {} has wavelength {}",
                    b.name, b.wavelength
                )));
            }
            if bands[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::Parameter(format!(
                    "profile {name}: duplicate band name {}",
                    b.name
                )));
            }
        }
        if !(reference_wavelength.is_finite() && reference_wavelength > 0.0) {
            return Err(Error::Parameter(format!(
                "profile {name}: reference wavelength {reference_wavelength}"
            )));
        }
        Ok(Self {
            name,
            bands,
            reference_wavelength,
            max_parallax_offset,
        })
    }

    fn builtin(name: &str, bands: &[(&str, f64)], max_parallax_offset: u32) -> Self {
        let bands = bands
            .iter()
            .map(|&(n, w)| SensorBand {
                name: n.to_string(),
                wavelength: w,
            })
            .collect();
        Self::new(name, bands, DEFAULT_REFERENCE_WAVELENGTH, max_parallax_offset)
            .expect("built-in profile is valid")
    }

    pub fn landsat89() -> Self {
        Self::builtin(
            "landsat89",
            &[
                ("coastal", 0.4500),
                ("blue", 0.4626),
                ("green", 0.5613),
                ("red", 0.6546),
                ("nir", 0.8650),
            ],
            2,
        )
    }

    pub fn sentinel2() -> Self {
        Self::builtin(
            "sentinel2",
            &[
                ("coastal", 0.4430),
                ("blue", 0.4900),
                ("green", 0.5600),
                ("red", 0.6650),
                ("nir", 0.8420),
            ],
            5,
        )
    }

    /// No coastal band.
    pub fn gaofen2() -> Self {
        Self::builtin(
            "gaofen2",
            &[
                ("blue", 0.4850),
                ("green", 0.5550),
                ("red", 0.6600),
                ("nir", 0.8330),
            ],
            0,
        )
    }

    pub fn builtins() -> Vec<Self> {
        vec![Self::landsat89(), Self::sentinel2(), Self::gaofen2()]
    }

    pub fn builtin_by_name(name: &str) -> Option<Self> {
        Self::builtins().into_iter().find(|p| p.name == name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bands(&self) -> &[SensorBand] {
        &self.bands
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.wavelength).collect()
    }

    pub fn reference_wavelength(&self) -> f64 {
        self.reference_wavelength
    }

    pub fn max_parallax_offset(&self) -> u32 {
        self.max_parallax_offset
    }

    pub fn with_max_parallax_offset(mut self, max: u32) -> Self {
        self.max_parallax_offset = max;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_constants() {
        let l = SensorProfile::landsat89();
        assert_eq!(l.wavelengths(), vec![0.4500, 0.4626, 0.5613, 0.6546, 0.8650]);
        assert_eq!(l.max_parallax_offset(), 2);
        assert_eq!(l.reference_wavelength(), 1.375);

        let s = SensorProfile::sentinel2();
        assert_eq!(s.wavelengths(), vec![0.4430, 0.4900, 0.5600, 0.6650, 0.8420]);
        assert_eq!(s.max_parallax_offset(), 5);

        let g = SensorProfile::gaofen2();
        assert_eq!(g.wavelengths(), vec![0.4850, 0.5550, 0.6600, 0.8330]);
        assert_eq!(g.max_parallax_offset(), 0);
    }

    #[test]
    fn rejects_invalid_profiles() {
        let band = |n: &str, w| SensorBand {
            name: n.into(),
            wavelength: w,
        };
        assert!(SensorProfile::new("x", vec![], 1.375, 0).is_err());
        assert!(SensorProfile::new("x", vec![band("a", 0.0)], 1.375, 0).is_err());
        assert!(SensorProfile::new("x", vec![band("a", 0.5), band("a", 0.6)], 1.375, 0).is_err());
        assert!(SensorProfile::new("x", vec![band("a", 0.5)], -1.0, 0).is_err());
    }
}
