//! Thin-cloud synthesis, correction and evaluation for multi-spectral rasters.
//!
//! A single-channel reference cloud field (the 1.375 µm cirrus band) is spread
//! across a sensor's bands with a wavelength power law whose exponent depends on
//! the reference radiance. The same law drives paired dataset generation,
//! subtraction-based cloud correction, and fitting of the exponent model from
//! observed scatter.

pub mod cli;
pub mod config;
pub mod correction;
pub mod error;
pub mod format;
pub mod lsgf;
pub mod metrics;
mod par;
pub mod raster;
pub mod seed;
pub mod sensor;
pub mod spatial;
pub mod spectral;
pub mod synth;

pub use correction::{correct_pgcs_m, estimate_cloud, CorrectionReport};
pub use error::{Error, Result};
pub use format::{read_raster, write_raster};
pub use lsgf::{lsgf_fit, Aggregator, LsgfFit};
pub use metrics::{cc, histogram_overlap, psnr, rmse, sam, ssim, MetricReport};
pub use raster::{calibrate_to_toa, denormalize, normalize_for_training, BandRaster, CalibrationParams, MultiBandImage};
pub use sensor::SensorProfile;
pub use spatial::{
    adjust_thickness, clean_patches, extract_patches, generate_fbm_cloud, ingest_cloud, CloudField,
    CloudGenerator, FbmParams, PatchSpec,
};
pub use spectral::{
    collect_gamma_samples, extrapolate_all, extrapolate_band, gamma_of, invert_gamma, GammaModel,
    GammaSample,
};
pub use synth::{
    apply_parallax, augment, build_dataset, composite, sample_offsets, AugmentOp, DatasetManifest,
    DatasetParams, ParallaxOffsets,
};
