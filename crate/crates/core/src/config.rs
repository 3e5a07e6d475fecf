//! `key = value` configuration with `[section]` headers.
//!
//! ```text
//! [gamma]
//! coefficient = -0.14
//!
//! [profile.landsat89]          ; overrides fields of a built-in profile
//! max_parallax_offset = 1
//!
//! [profile.custom]             ; or defines a new one
//! bands = blue:0.48 green:0.56 red:0.66
//! reference_wavelength = 1.375
//! max_parallax_offset = 0
//!
//! [generator]   octaves, persistence, lacunarity, base_frequency, coverage_threshold, max_radiance
//! [dataset]     thickness_min, thickness_max, cap, augment, parallax
//! [patches]     patch_size, stride, cleaning_threshold
//! [metrics]     peak, bins
//! ```

use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use crate::error::{Error, Result};
use crate::metrics::DEFAULT_HISTOGRAM_BINS;
use crate::sensor::{SensorBand, SensorProfile, DEFAULT_REFERENCE_WAVELENGTH};
use crate::spatial::{FbmParams, PatchSpec};
use crate::spectral::GammaModel;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDefaults {
    pub thickness_range: (f64, f64),
    pub cap: Option<f64>,
    pub augment: bool,
    pub parallax: bool,
}

impl Default for DatasetDefaults {
    fn default() -> Self {
        Self {
            thickness_range: (0.5, 1.5),
            cap: None,
            augment: true,
            parallax: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub profiles: Vec<SensorProfile>,
    pub gamma: GammaModel,
    pub generator: FbmParams,
    pub dataset: DatasetDefaults,
    pub patches: PatchSpec,
    pub peak: f64,
    pub histogram_bins: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            profiles: SensorProfile::builtins(),
            gamma: GammaModel::default(),
            generator: FbmParams::default(),
            dataset: DatasetDefaults::default(),
            patches: PatchSpec::default(),
            peak: 1.0,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
        }
    }
}

fn parse<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("[{section}] {key}: cannot parse {value:?}")))
}

fn parse_bands(value: &str) -> Result<Vec<SensorBand>> {
    value
        .split_whitespace()
        .map(|tok| {
            let (name, wl) = tok
                .split_once(':')
                .ok_or_else(|| Error::Validation(format!("band {tok:?} is not name:wavelength")))?;
            Ok(SensorBand {
                name: name.to_string(),
                wavelength: parse("profile", "bands", wl)?,
            })
        })
        .collect()
}

impl Config {
    pub fn profile(&self, name: &str) -> Result<&SensorProfile> {
        self.profiles.iter().find(|p| p.name() == name).ok_or_else(|| {
            let known: Vec<&str> = self.profiles.iter().map(SensorProfile::name).collect();
            Error::Usage(format!("unknown profile {name:?}; known: {}", known.join(", ")))
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text)
    }

    fn apply_profile(&mut self, name: &str, props: &ini::Properties) -> Result<()> {
        let base = self.profiles.iter().position(|p| p.name() == name);
        let (mut bands, mut reference, mut max_offset) = match base {
            Some(i) => {
                let p = &self.profiles[i];
                (p.bands().to_vec(), p.reference_wavelength(), p.max_parallax_offset())
            }
            None => (Vec::new(), DEFAULT_REFERENCE_WAVELENGTH, 0),
        };
        let section = format!("profile.{name}");
        for (k, v) in props.iter() {
            match k {
                "bands" => bands = parse_bands(v)?,
                "reference_wavelength" => reference = parse(&section, k, v)?,
                "max_parallax_offset" => max_offset = parse(&section, k, v)?,
                other => {
                    return Err(Error::Validation(format!("[{section}] unknown key {other:?}")))
                }
            }
        }
        let profile = SensorProfile::new(name, bands, reference, max_offset)
            .map_err(|e| Error::Validation(e.to_string()))?;
        match base {
            Some(i) => self.profiles[i] = profile,
            None => self.profiles.push(profile),
        }
        Ok(())
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        let mut cfg = Config::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if props.iter().next().is_some() {
                    return Err(Error::Validation("config keys must sit inside a [section]".into()));
                }
                continue;
            };
            if let Some(name) = section.strip_prefix("profile.") {
                cfg.apply_profile(name, props)?;
                continue;
            }
            for (k, v) in props.iter() {
                let unknown = || Error::Validation(format!("[{section}] unknown key {k:?}"));
                match section {
                    "gamma" => match k {
                        "coefficient" => cfg.gamma.coefficient = parse(section, k, v)?,
                        _ => return Err(unknown()),
                    },
                    "generator" => {
                        let g = &mut cfg.generator;
                        match k {
                            "octaves" => g.octaves = parse(section, k, v)?,
                            "persistence" => g.persistence = parse(section, k, v)?,
                            "lacunarity" => g.lacunarity = parse(section, k, v)?,
                            "base_frequency" => g.base_frequency = parse(section, k, v)?,
                            "coverage_threshold" => g.coverage_threshold = parse(section, k, v)?,
                            "max_radiance" => g.max_radiance = parse(section, k, v)?,
                            _ => return Err(unknown()),
                        }
                    }
                    "dataset" => {
                        let d = &mut cfg.dataset;
                        match k {
                            "thickness_min" => d.thickness_range.0 = parse(section, k, v)?,
                            "thickness_max" => d.thickness_range.1 = parse(section, k, v)?,
                            "cap" => {
                                d.cap = match v.trim() {
                                    "none" => None,
                                    v => Some(parse(section, k, v)?),
                                }
                            }
                            "augment" => d.augment = parse(section, k, v)?,
                            "parallax" => d.parallax = parse(section, k, v)?,
                            _ => return Err(unknown()),
                        }
                    }
                    "patches" => {
                        let p = &mut cfg.patches;
                        match k {
                            "patch_size" => p.patch_size = parse(section, k, v)?,
                            "stride" => p.stride = parse(section, k, v)?,
                            "cleaning_threshold" => p.cleaning_threshold = parse(section, k, v)?,
                            _ => return Err(unknown()),
                        }
                    }
                    "metrics" => match k {
                        "peak" => cfg.peak = parse(section, k, v)?,
                        "bins" => cfg.histogram_bins = parse(section, k, v)?,
                        _ => return Err(unknown()),
                    },
                    other => {
                        return Err(Error::Validation(format!("unknown section [{other}]")))
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Validation(e.to_string());
        self.generator.validate().map_err(wrap)?;
        self.patches.validate().map_err(wrap)?;
        if !self.gamma.coefficient.is_finite() {
            return Err(Error::Validation("gamma coefficient must be finite".into()));
        }
        let (lo, hi) = self.dataset.thickness_range;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::Validation(format!("thickness range ({lo}, {hi})")));
        }
        if !(self.peak > 0.0) || self.histogram_bins == 0 {
            return Err(Error::Validation("metrics peak and bins must be positive".into()));
        }
        Ok(())
    }
}
