//! `nimbus` command-line interface.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 validation or domain errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::correction::correct_pgcs_m;
use crate::error::{Error, Result};
use crate::format::{read_raster, write_raster};
use crate::lsgf::{lsgf_fit, Aggregator, DEFAULT_BIN_COUNT};
use crate::metrics::{cc_per_band, histogram_overlap, rmse, MetricReport, SsimParams};
use crate::raster::{calibrate_to_toa, normalize_for_training, BandRaster, CalibrationParams, MultiBandImage};
use crate::seed;
use crate::sensor::SensorProfile;
use crate::spatial::{
    extract_anchored, ingest_cloud, keeps_patch, CloudField, CloudGenerator, FbmGenerator, FieldPool, PatchSpec,
};
use crate::spectral::{collect_gamma_samples, read_samples_csv, write_samples_csv};
use crate::synth::{
    build_dataset, synthesize_item, AugmentOp, DatasetParams, ItemDraw, ManifestEntry,
    ParallaxOffsets,
};

/// Environment variable capping worker threads. Affects speed only, never output.
pub const THREADS_ENV: &str = "NIMBUS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nimbus", version, about = "Thin-cloud synthesis, correction and evaluation")]
struct Cli {
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert digital numbers to top-of-atmosphere values.
    Calibrate(CalibrateArgs),
    /// Cut cloud rasters into cleaned (and optionally normalized) patches.
    Prepare(PrepareArgs),
    /// Invert band ratios into a `c_r,gamma` sample CSV.
    CollectSamples(CollectArgs),
    /// Fit the gamma model to a sample CSV.
    FitLsgf(FitArgs),
    /// Synthesize one multi-band cloud (and cloudy image, given a ground).
    Synth(SynthArgs),
    /// Build a paired cloudy / cloud-free dataset.
    BuildDataset(DatasetArgs),
    /// Subtract the cirrus-derived cloud estimate from a cloudy image.
    Correct(CorrectArgs),
    /// Compare rasters (or directories of rasters) with the metric suite.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CalibrateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gain: f64,
    #[arg(long)]
    offset: f64,
    /// Sun elevation in degrees, (0, 90].
    #[arg(long = "sun-elev")]
    sun_elev: f64,
}

#[derive(Debug, Args)]
struct PrepareArgs {
    #[arg(long = "in-dir")]
    in_dir: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    #[arg(long = "patch-size")]
    patch_size: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long = "clean-threshold")]
    clean_threshold: Option<f32>,
    /// Keep raw radiance instead of mapping to [-1, 1].
    #[arg(long = "no-normalize")]
    no_normalize: bool,
}

#[derive(Debug, Args)]
struct CollectArgs {
    /// Multi-band cloud radiance (surface signal already removed).
    #[arg(long)]
    bands: PathBuf,
    #[arg(long)]
    cirrus: PathBuf,
    #[arg(long, default_value_t = crate::sensor::DEFAULT_REFERENCE_WAVELENGTH)]
    reference_wavelength: f64,
    #[arg(long = "min-cr", default_value_t = 0.0)]
    min_cr: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_COUNT)]
    bins: usize,
    #[arg(long, default_value = "mean")]
    aggregator: String,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CloudSource {
    #[arg(long, default_value = "landsat89")]
    profile: String,
    /// Override the gamma coefficient.
    #[arg(long)]
    coefficient: Option<f64>,
    /// Directory (build-dataset) or file (synth) of single-band clouds to use
    /// instead of the built-in fractal generator.
    #[arg(long)]
    clouds: Option<PathBuf>,
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long = "no-parallax")]
    no_parallax: bool,
    /// Clamp written cloudy rasters to [0, 1].
    #[arg(long = "clamp-export")]
    clamp_export: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SynthArgs {
    #[command(flatten)]
    source: CloudSource,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    ground: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long, default_value_t = 1.0)]
    thickness: f64,
    #[arg(long, default_value = "identity")]
    augment: String,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct DatasetArgs {
    #[command(flatten)]
    source: CloudSource,
    /// Directory of ground (cloud-free) rasters.
    #[arg(long)]
    grounds: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long = "thickness-min")]
    thickness_min: Option<f64>,
    #[arg(long = "thickness-max")]
    thickness_max: Option<f64>,
    #[arg(long = "no-augment")]
    no_augment: bool,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CorrectArgs {
    #[arg(long)]
    cloudy: PathBuf,
    #[arg(long)]
    cirrus: PathBuf,
    #[arg(long, default_value = "landsat89")]
    profile: String,
    #[arg(long)]
    coefficient: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the correction report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Cloud-free reference; prints RMSE of the corrected image against it.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Reference raster or directory.
    #[arg(long)]
    a: PathBuf,
    /// Test raster or directory (files matched by name).
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    peak: Option<f64>,
    /// Add the histogram overlap rate (a = real, b = generated).
    #[arg(long)]
    overlap: bool,
    #[arg(long)]
    bins: Option<usize>,
    /// Append one CSV row per compared pair.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also report the per-band mean correlation.
    #[arg(long = "per-band-cc")]
    per_band_cc: bool,
}

/// Runs the CLI and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    #[cfg(feature = "parallel")]
    {
        // a pool may already exist when run in-process (tests); speed-only setting
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_threads()?;
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Prepare(a) => cmd_prepare(a, &config),
        Command::CollectSamples(a) => cmd_collect(a),
        Command::FitLsgf(a) => cmd_fit_lsgf(a),
        Command::Synth(a) => cmd_synth(a, &config),
        Command::BuildDataset(a) => cmd_build_dataset(a, &config),
        Command::Correct(a) => cmd_correct(a, &config),
        Command::Evaluate(a) => cmd_evaluate(a, &config),
    }
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<()> {
    let params = CalibrationParams {
        gain: a.gain,
        offset: a.offset,
        sun_elevation: a.sun_elev,
    };
    params.validate()?;
    let dn = read_raster(&a.input)?;
    let bands = dn
        .bands()
        .iter()
        .map(|b| calibrate_to_toa(b, &params))
        .collect::<Result<Vec<_>>>()?;
    write_raster(&MultiBandImage::new(bands)?, &a.out)
}

/// `*.ras` files in `dir`, sorted by file name.
fn list_rasters(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "ras") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub const PATCH_INDEX_FILE: &str = "index.tsv";

fn cmd_prepare(a: PrepareArgs, config: &Config) -> Result<()> {
    let spec = PatchSpec {
        patch_size: a.patch_size.unwrap_or(config.patches.patch_size),
        stride: a.stride.unwrap_or(config.patches.stride),
        cleaning_threshold: a.clean_threshold.unwrap_or(config.patches.cleaning_threshold),
    };
    spec.validate()?;
    let inputs = list_rasters(&a.in_dir)?;
    create_dir(&a.out_dir)?;
    if inputs.is_empty() {
        eprintln!("warning: no .ras files in {}", a.in_dir.display());
    }

    let results: Vec<Result<Vec<(String, String)>>> = crate::par::map_slice(&inputs, |path| {
        let image = read_raster(path)?;
        if image.band_count() != 1 {
            return Err(Error::Shape(format!(
                "{}: expected a single-band cloud raster, found {} bands",
                path.display(),
                image.band_count()
            )));
        }
        let band = image.band(0);
        let stem = stem(path);
        let mut lines = Vec::new();
        for (anchor, patch) in extract_anchored(band, &spec)? {
            if !keeps_patch(&patch, &spec) {
                continue;
            }
            let max = patch.max();
            let out: BandRaster = if a.no_normalize {
                patch
            } else {
                normalize_for_training(&patch.map(|v| v.max(0.0))?)?
            };
            let name = format!("{stem}_p{}_{}.ras", anchor.row, anchor.col);
            write_raster(&MultiBandImage::single(out), a.out_dir.join(&name))?;
            lines.push((
                name.clone(),
                format!("{name}\t{}\t{}\t{}\t{max}\n", path.display(), anchor.x, anchor.y),
            ));
        }
        Ok(lines)
    });

    let mut index = String::from("# file\tsource\tx\ty\tmax\n");
    let mut count = 0;
    for r in results {
        for (_, line) in r? {
            index.push_str(&line);
            count += 1;
        }
    }
    write_text(&a.out_dir.join(PATCH_INDEX_FILE), &index)?;
    println!("patches = {count}");
    Ok(())
}

fn cmd_collect(a: CollectArgs) -> Result<()> {
    let bands = read_raster(&a.bands)?;
    let cirrus_img = read_raster(&a.cirrus)?;
    if cirrus_img.band_count() != 1 {
        return Err(Error::Shape("cirrus raster must be single-band".into()));
    }
    let band = cirrus_img.into_bands().remove(0);
    let reference = band.wavelength().unwrap_or(a.reference_wavelength);
    let cirrus = CloudField::new(band, reference)?;
    let samples = collect_gamma_samples(&bands, &cirrus, a.min_cr)?;
    let file = fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_samples_csv(&samples, std::io::BufWriter::new(file))?;
    println!("samples = {}", samples.len());
    Ok(())
}

fn cmd_fit_lsgf(a: FitArgs) -> Result<()> {
    let aggregator: Aggregator = a.aggregator.parse().map_err(|e: Error| Error::Usage(e.to_string()))?;
    let file = fs::File::open(&a.samples).map_err(|e| Error::io(&a.samples, e))?;
    let samples = read_samples_csv(std::io::BufReader::new(file))?;
    let fit = lsgf_fit(&samples, a.bins, aggregator)?;
    let report = fit.report();
    match &a.out {
        Some(p) => write_text(p, &report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn model_for(config: &Config, coefficient: Option<f64>) -> crate::spectral::GammaModel {
    let mut m = config.gamma;
    if let Some(c) = coefficient {
        m.coefficient = c;
    }
    m
}

fn cmd_synth(a: SynthArgs, config: &Config) -> Result<()> {
    let profile = config.profile(&a.source.profile)?.clone();
    let model = model_for(config, a.source.coefficient);
    let augment_op: AugmentOp = a.augment.parse().map_err(|e: Error| Error::Usage(e.to_string()))?;
    let ground = match &a.ground {
        Some(p) => Some(read_raster(p)?),
        None => None,
    };
    let base = match &ground {
        Some(g) => g.clone(),
        None => {
            let zero = BandRaster::filled(a.width, a.height, None, 0.0)
                .map_err(|e| Error::Usage(e.to_string()))?;
            MultiBandImage::new(vec![zero; profile.band_count()])?
        }
    };
    let generator: Box<dyn CloudGenerator> = match &a.source.clouds {
        Some(p) => Box::new(FieldPool::new(vec![ingest_cloud(p, &profile)?])?),
        None => Box::new(FbmGenerator::new(config.generator, &profile)),
    };
    let offsets = if a.source.no_parallax {
        ParallaxOffsets::zero(profile.band_count())
    } else {
        crate::synth::sample_offsets(&profile, seed::mix(a.seed, 0))
    };
    let draw = ItemDraw {
        seed: a.seed,
        thickness: a.thickness,
        offsets,
        augment: augment_op,
    };
    let item = synthesize_item(&base, &profile, &model, generator.as_ref(), &draw, a.source.cap)?;

    create_dir(&a.out_dir)?;
    write_raster(&MultiBandImage::single(item.cirrus.into_raster()), a.out_dir.join("cirrus.ras"))?;
    write_raster(&item.cloud, a.out_dir.join("cloud.ras"))?;
    let mut entry = ManifestEntry {
        ground_path: PathBuf::from("-"),
        cloud_path: PathBuf::from("cloud.ras"),
        cloudy_path: PathBuf::from("-"),
        seed: a.seed,
        thickness: draw.thickness,
        cap: a.source.cap,
        offsets: draw.offsets,
        augment: draw.augment,
    };
    if ground.is_some() {
        let cloudy = if a.source.clamp_export {
            item.cloudy.clamped_unit()?
        } else {
            item.cloudy
        };
        write_raster(&item.ground, a.out_dir.join("ground.ras"))?;
        write_raster(&cloudy, a.out_dir.join("cloudy.ras"))?;
        entry.ground_path = PathBuf::from("ground.ras");
        entry.cloudy_path = PathBuf::from("cloudy.ras");
    }
    println!("{}", entry.to_line());
    Ok(())
}

fn cmd_build_dataset(a: DatasetArgs, config: &Config) -> Result<()> {
    let profile = config.profile(&a.source.profile)?.clone();
    let model = model_for(config, a.source.coefficient);
    let ground_files = list_rasters(&a.grounds)?;
    if ground_files.is_empty() {
        return Err(Error::Usage(format!(
            "no ground rasters (*.ras) in {}",
            a.grounds.display()
        )));
    }
    let grounds = ground_files
        .iter()
        .map(read_raster)
        .collect::<Result<Vec<_>>>()?;
    let params = DatasetParams {
        n_pairs: a.n,
        base_seed: a.seed,
        thickness_range: (
            a.thickness_min.unwrap_or(config.dataset.thickness_range.0),
            a.thickness_max.unwrap_or(config.dataset.thickness_range.1),
        ),
        thickness_cap: a.source.cap.or(config.dataset.cap),
        augment: config.dataset.augment && !a.no_augment,
        parallax: config.dataset.parallax && !a.source.no_parallax,
        clamp_export: a.source.clamp_export,
    };
    let generator: Box<dyn CloudGenerator> = match &a.source.clouds {
        Some(dir) => {
            let fields = list_rasters(dir)?
                .iter()
                .map(|p| ingest_cloud(p, &profile))
                .collect::<Result<Vec<_>>>()?;
            Box::new(FieldPool::new(fields)?)
        }
        None => Box::new(FbmGenerator::new(config.generator, &profile)),
    };
    let manifest = build_dataset(&grounds, &profile, &model, &params, generator.as_ref(), &a.out_dir)?;
    println!("pairs = {}", manifest.entries.len());
    Ok(())
}

fn cmd_correct(a: CorrectArgs, config: &Config) -> Result<()> {
    let profile: SensorProfile = config.profile(&a.profile)?.clone();
    let model = model_for(config, a.coefficient);
    let cloudy = read_raster(&a.cloudy)?;
    let cirrus_img = read_raster(&a.cirrus)?;
    if cirrus_img.band_count() != 1 {
        return Err(Error::Shape("cirrus raster must be single-band".into()));
    }
    let cirrus = CloudField::new(cirrus_img.into_bands().remove(0), profile.reference_wavelength())?;
    let (corrected, report) = correct_pgcs_m(&cloudy, &cirrus, &profile, &model)?;
    write_raster(&corrected, &a.out)?;
    let mut text = report.to_text();
    if let Some(r) = &a.reference {
        let reference = read_raster(r)?;
        text.push_str(&format!("rmse_vs_reference = {}\n", rmse(&corrected, &reference)?));
    }
    if let Some(p) = &a.report {
        write_text(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn paired_inputs(a: &Path, b: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    match (a.is_dir(), b.is_dir()) {
        (false, false) => Ok(vec![(stem(a), a.to_path_buf(), b.to_path_buf())]),
        (true, true) => {
            let pairs: Vec<_> = list_rasters(a)?
                .into_iter()
                .filter_map(|pa| {
                    let pb = b.join(pa.file_name()?);
                    pb.is_file().then(|| (stem(&pa), pa, pb))
                })
                .collect();
            if pairs.is_empty() {
                return Err(Error::Usage("no matching file names in the two directories".into()));
            }
            Ok(pairs)
        }
        _ => Err(Error::Usage("--a and --b must both be files or both directories".into())),
    }
}

fn cmd_evaluate(a: EvaluateArgs, config: &Config) -> Result<()> {
    let params = SsimParams {
        peak: a.peak.unwrap_or(config.peak),
        ..SsimParams::default()
    };
    let bins = a.bins.unwrap_or(config.histogram_bins);
    let pairs = paired_inputs(&a.a, &a.b)?;
    let mut out = String::new();
    let mut rows = Vec::new();
    let (mut real, mut generated) = (Vec::new(), Vec::new());
    for (name, pa, pb) in &pairs {
        let (ia, ib) = (read_raster(pa)?, read_raster(pb)?);
        ia.check_same_shape(&ib)?;
        let report = MetricReport::compute(&ia, &ib, &params)?;
        if pairs.len() > 1 {
            out.push_str(&format!("[{name}]\n"));
        }
        out.push_str(&report.to_text());
        if a.per_band_cc {
            out.push_str(&format!("cc_per_band = {}\n", cc_per_band(&ia, &ib)?));
        }
        rows.push(report.csv_row(name));
        if a.overlap {
            real.extend(ia.into_bands());
            generated.extend(ib.into_bands());
        }
    }
    if a.overlap {
        let h = histogram_overlap(&real, &generated, bins)?;
        out.push_str(&format!(
            "overlap = {}\noverlap_bins = {}\noverlap_range = {} {}\n",
            h.rate, h.bin_count, h.range.0, h.range.1
        ));
    }
    print!("{out}");
    if let Some(p) = &a.csv {
        let fresh = !p.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|e| Error::io(p, e))?;
        let mut text = String::new();
        if fresh {
            text.push_str(MetricReport::CSV_HEADER);
            text.push('\n');
        }
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        f.write_all(text.as_bytes()).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}
