//! Paired cloudy / cloud-free sample synthesis.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::format::write_raster;
use crate::par;
use crate::raster::{BandRaster, MultiBandImage};
use crate::seed;
use crate::sensor::SensorProfile;
use crate::spatial::{adjust_thickness, CloudField, CloudGenerator};
use crate::spectral::{extrapolate_all, GammaModel};

/// Per-band integer channel shifts, bounded by the sensor's parallax maximum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallaxOffsets {
    shifts: Vec<(i32, i32)>,
    bound: u32,
}

impl ParallaxOffsets {
    pub fn new(shifts: Vec<(i32, i32)>, bound: u32) -> Result<Self> {
        if let Some((dx, dy)) = shifts
            .iter()
            .find(|(dx, dy)| dx.unsigned_abs() > bound || dy.unsigned_abs() > bound)
        {
            return Err(Error::Parameter(format!(
                "offset ({dx}, {dy}) exceeds parallax bound {bound}"
            )));
        }
        Ok(Self { shifts, bound })
    }

    pub fn zero(bands: usize) -> Self {
        Self {
            shifts: vec![(0, 0); bands],
            bound: 0,
        }
    }

    pub fn shifts(&self) -> &[(i32, i32)] {
        &self.shifts
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn is_zero(&self) -> bool {
        self.shifts.iter().all(|&s| s == (0, 0))
    }
}

impl fmt::Display for ParallaxOffsets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.shifts.iter().map(|(x, y)| format!("{x},{y}")).collect();
        f.write_str(&parts.join(";"))
    }
}

/// Draws each band's `(dx, dy)` uniformly from `[-max, max]²`.
pub fn sample_offsets(profile: &SensorProfile, seed: u64) -> ParallaxOffsets {
    let max = profile.max_parallax_offset();
    let m = i32::try_from(max).unwrap_or(i32::MAX);
    let mut rng = seed::rng(seed);
    let shifts = (0..profile.band_count())
        .map(|_| (rng.gen_range(-m..=m), rng.gen_range(-m..=m)))
        .collect();
    ParallaxOffsets { shifts, bound: max }
}

fn translate(band: &BandRaster, dx: i32, dy: i32) -> Result<BandRaster> {
    if dx == 0 && dy == 0 {
        return Ok(band.clone());
    }
    let (w, h) = (band.width() as i64, band.height() as i64);
    BandRaster::from_fn(band.width(), band.height(), band.wavelength(), |x, y| {
        let sx = (x as i64 - i64::from(dx)).clamp(0, w - 1) as usize;
        let sy = (y as i64 - i64::from(dy)).clamp(0, h - 1) as usize;
        f64::from(band.get(sx, sy))
    })
}

/// Shifts band `k` by `offsets[k]`: `out[x, y] = in[x - dx, y - dy]`, with vacated
/// borders filled by edge replication.
pub fn apply_parallax(cloud_bands: &MultiBandImage, offsets: &ParallaxOffsets) -> Result<MultiBandImage> {
    if offsets.shifts.len() != cloud_bands.band_count() {
        return Err(Error::Parameter(format!(
            "{} offsets for {} bands",
            offsets.shifts.len(),
            cloud_bands.band_count()
        )));
    }
    // re-validate: the bound may have been edited through `zero` + manual shifts
    let offsets = ParallaxOffsets::new(offsets.shifts.clone(), offsets.bound)?;
    let bands = cloud_bands
        .bands()
        .iter()
        .zip(offsets.shifts())
        .map(|(b, &(dx, dy))| translate(b, dx, dy))
        .collect::<Result<Vec<_>>>()?;
    MultiBandImage::new(bands)
}

/// `ground + cloud` per pixel and band, without clipping.
pub fn composite(ground: &MultiBandImage, cloud: &MultiBandImage) -> Result<MultiBandImage> {
    ground.check_same_shape(cloud)?;
    let bands = ground
        .bands()
        .iter()
        .zip(cloud.bands())
        .map(|(g, c)| g.zip_map(c, |a, b| a + b))
        .collect::<Result<Vec<_>>>()?;
    MultiBandImage::new(bands)
}

/// The eight axis-aligned symmetries of the pixel grid. Rotations are clockwise;
/// `HflipRot90` means rotate first, then flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentOp {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    Hflip,
    Vflip,
    HflipRot90,
    VflipRot90,
}

#[derive(Clone, Copy)]
enum Step {
    Rot90,
    Hflip,
    Vflip,
}

impl AugmentOp {
    pub const ALL: [AugmentOp; 8] = [
        AugmentOp::Identity,
        AugmentOp::Rot90,
        AugmentOp::Rot180,
        AugmentOp::Rot270,
        AugmentOp::Hflip,
        AugmentOp::Vflip,
        AugmentOp::HflipRot90,
        AugmentOp::VflipRot90,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentOp::Identity => "identity",
            AugmentOp::Rot90 => "rot90",
            AugmentOp::Rot180 => "rot180",
            AugmentOp::Rot270 => "rot270",
            AugmentOp::Hflip => "hflip",
            AugmentOp::Vflip => "vflip",
            AugmentOp::HflipRot90 => "hflip_rot90",
            AugmentOp::VflipRot90 => "vflip_rot90",
        }
    }

    fn steps(self) -> &'static [Step] {
        use Step::*;
        match self {
            AugmentOp::Identity => &[],
            AugmentOp::Rot90 => &[Rot90],
            AugmentOp::Rot180 => &[Rot90, Rot90],
            AugmentOp::Rot270 => &[Rot90, Rot90, Rot90],
            AugmentOp::Hflip => &[Hflip],
            AugmentOp::Vflip => &[Vflip],
            AugmentOp::HflipRot90 => &[Rot90, Hflip],
            AugmentOp::VflipRot90 => &[Rot90, Vflip],
        }
    }

    pub fn inverse(self) -> AugmentOp {
        match self {
            AugmentOp::Rot90 => AugmentOp::Rot270,
            AugmentOp::Rot270 => AugmentOp::Rot90,
            other => other,
        }
    }

    /// Output dimensions for a `width` x `height` input.
    pub fn output_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            AugmentOp::Rot90 | AugmentOp::Rot270 | AugmentOp::HflipRot90 | AugmentOp::VflipRot90 => {
                (height, width)
            }
            _ => (width, height),
        }
    }
}

impl fmt::Display for AugmentOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugmentOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AugmentOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown augmentation {s:?}")))
    }
}

fn apply_step(band: &BandRaster, step: Step) -> Result<BandRaster> {
    let (w, h) = (band.width(), band.height());
    match step {
        Step::Rot90 => BandRaster::from_fn(h, w, band.wavelength(), |x, y| {
            f64::from(band.get(y, h - 1 - x))
        }),
        Step::Hflip => BandRaster::from_fn(w, h, band.wavelength(), |x, y| {
            f64::from(band.get(w - 1 - x, y))
        }),
        Step::Vflip => BandRaster::from_fn(w, h, band.wavelength(), |x, y| {
            f64::from(band.get(x, h - 1 - y))
        }),
    }
}

pub fn augment_band(band: &BandRaster, op: AugmentOp) -> Result<BandRaster> {
    op.steps()
        .iter()
        .try_fold(band.clone(), |b, &s| apply_step(&b, s))
}

/// Applies `op` identically to every band.
pub fn augment(image: &MultiBandImage, op: AugmentOp) -> Result<MultiBandImage> {
    let bands = image
        .bands()
        .iter()
        .map(|b| augment_band(b, op))
        .collect::<Result<Vec<_>>>()?;
    MultiBandImage::new(bands)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    pub n_pairs: usize,
    pub base_seed: u64,
    /// Inclusive-exclusive range of the per-item thickness scale; equal ends fix it.
    pub thickness_range: (f64, f64),
    pub thickness_cap: Option<f64>,
    pub augment: bool,
    pub parallax: bool,
    /// Clamp written cloudy rasters to `[0, 1]`.
    pub clamp_export: bool,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            n_pairs: 1,
            base_seed: 0,
            thickness_range: (0.5, 1.5),
            thickness_cap: None,
            augment: true,
            parallax: true,
            clamp_export: false,
        }
    }
}

impl DatasetParams {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.thickness_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Parameter(format!(
                "thickness range ({lo}, {hi}) must satisfy 0 <= min <= max"
            )));
        }
        if self.n_pairs == 0 {
            return Err(Error::Parameter("n_pairs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Every random choice made for one item, derived from its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemDraw {
    pub seed: u64,
    pub thickness: f64,
    pub offsets: ParallaxOffsets,
    pub augment: AugmentOp,
}

/// Derives the draws of item `seed`: thickness then augmentation from a ChaCha8
/// stream seeded with `seed`, offsets from the stream seeded with `mix(seed, 0)`.
pub fn draw_item(seed: u64, profile: &SensorProfile, params: &DatasetParams) -> ItemDraw {
    let mut rng = seed::rng(seed);
    let (lo, hi) = params.thickness_range;
    let thickness = if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let augment = if params.augment {
        AugmentOp::ALL[rng.gen_range(0..AugmentOp::ALL.len())]
    } else {
        AugmentOp::Identity
    };
    let offsets = if params.parallax {
        sample_offsets(profile, seed::mix(seed, 0))
    } else {
        ParallaxOffsets::zero(profile.band_count())
    };
    ItemDraw {
        seed,
        thickness,
        offsets,
        augment,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthItem {
    /// Augmented ground, the cloud-free label.
    pub ground: MultiBandImage,
    /// Thickness-adjusted reference cloud field.
    pub cirrus: CloudField,
    /// Multi-band cloud after parallax.
    pub cloud: MultiBandImage,
    pub cloudy: MultiBandImage,
}

/// Synthesizes one pair: `cloudy = augment(ground) + parallax(extrapolate(adjust(cloud)))`.
pub fn synthesize_item(
    ground: &MultiBandImage,
    profile: &SensorProfile,
    model: &GammaModel,
    generator: &dyn CloudGenerator,
    draw: &ItemDraw,
    thickness_cap: Option<f64>,
) -> Result<SynthItem> {
    if ground.band_count() != profile.band_count() {
        return Err(Error::Shape(format!(
            "ground has {} bands, profile {} has {}",
            ground.band_count(),
            profile.name(),
            profile.band_count()
        )));
    }
    let ground = augment(ground, draw.augment)?;
    let field = generator.generate(ground.width(), ground.height(), draw.seed)?;
    let cirrus = adjust_thickness(&field, draw.thickness, thickness_cap)?;
    let cloud = apply_parallax(&extrapolate_all(&cirrus, profile, model)?, &draw.offsets)?;
    let cloudy = composite(&ground, &cloud)?;
    Ok(SynthItem {
        ground,
        cirrus,
        cloud,
        cloudy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub ground_path: PathBuf,
    pub cloud_path: PathBuf,
    pub cloudy_path: PathBuf,
    pub seed: u64,
    pub thickness: f64,
    pub cap: Option<f64>,
    pub offsets: ParallaxOffsets,
    pub augment: AugmentOp,
}

impl ManifestEntry {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.ground_path.display(),
            self.cloud_path.display(),
            self.cloudy_path.display(),
            self.seed,
            self.thickness,
            self.cap.map_or_else(|| "none".to_string(), |c| c.to_string()),
            self.offsets,
            self.augment
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub profile: String,
    pub coefficient: f64,
    pub base_seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# profile={}\n# coefficient={}\n# base_seed={}\n\
             # ground\tcloud\tcloudy\tseed\tthickness\tcap\toffsets\taugment\n",
            self.profile, self.coefficient, self.base_seed
        );
        for e in &self.entries {
            s.push_str(&e.to_line());
            s.push('\n');
        }
        s
    }
}

pub const MANIFEST_FILE: &str = "manifest.tsv";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Generates `n_pairs` items and writes `ground/`, `cirrus/`, `cloud/`, `cloudy/` and
/// the manifest under `out_dir`. Item `i` uses ground `i % grounds.len()` and seed
/// `mix(base_seed, i)`, so output is identical for any thread count.
pub fn build_dataset(
    grounds: &[MultiBandImage],
    profile: &SensorProfile,
    model: &GammaModel,
    params: &DatasetParams,
    generator: &dyn CloudGenerator,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    if grounds.is_empty() {
        return Err(Error::Parameter("no ground images supplied".into()));
    }
    params.validate()?;
    let dirs = ["ground", "cirrus", "cloud", "cloudy"].map(|d| out_dir.join(d));
    for d in &dirs {
        ensure_dir(d)?;
    }

    let entries = par::map_range(params.n_pairs, |i| {
        let run = || -> Result<ManifestEntry> {
            let item_seed = seed::mix(params.base_seed, i as u64);
            let draw = draw_item(item_seed, profile, params);
            let item = synthesize_item(
                &grounds[i % grounds.len()],
                profile,
                model,
                generator,
                &draw,
                params.thickness_cap,
            )?;
            let name = format!("{i:06}.ras");
            let rel: [PathBuf; 4] = ["ground", "cirrus", "cloud", "cloudy"].map(|d| Path::new(d).join(&name));
            let cloudy = if params.clamp_export {
                item.cloudy.clamped_unit()?
            } else {
                item.cloudy
            };
            write_raster(&item.ground, out_dir.join(&rel[0]))?;
            write_raster(&MultiBandImage::single(item.cirrus.into_raster()), out_dir.join(&rel[1]))?;
            write_raster(&item.cloud, out_dir.join(&rel[2]))?;
            write_raster(&cloudy, out_dir.join(&rel[3]))?;
            let [ground_path, _, cloud_path, cloudy_path] = rel;
            Ok(ManifestEntry {
                ground_path,
                cloud_path,
                cloudy_path,
                seed: item_seed,
                thickness: draw.thickness,
                cap: params.thickness_cap,
                offsets: draw.offsets,
                augment: draw.augment,
            })
        };
        run().map_err(|e| Error::Item {
            index: i,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        profile: profile.name().to_string(),
        coefficient: model.coefficient,
        base_seed: params.base_seed,
        entries,
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{FbmGenerator, FbmParams};
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize, bands: usize) -> MultiBandImage {
        MultiBandImage::new(
            (0..bands)
                .map(|b| {
                    BandRaster::from_fn(w, h, None, |x, y| (b * 1000 + y * w + x) as f64).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_offsets_are_identity() {
        let img = ramp(5, 4, 3);
        assert_eq!(apply_parallax(&img, &ParallaxOffsets::zero(3)).unwrap(), img);
    }

    #[test]
    fn translation_definition() {
        let img = ramp(5, 4, 1);
        let out = apply_parallax(&img, &ParallaxOffsets::new(vec![(1, 0)], 2).unwrap()).unwrap();
        for y in 0..4 {
            for x in 1..5 {
                assert_eq!(out.band(0).get(x, y), img.band(0).get(x - 1, y));
            }
            assert_eq!(out.band(0).get(0, y), img.band(0).get(0, y));
        }
        let out = apply_parallax(&img, &ParallaxOffsets::new(vec![(-2, 1)], 2).unwrap()).unwrap();
        assert_eq!(out.band(0).get(4, 0), img.band(0).get(4, 0));
        assert_eq!(out.band(0).get(1, 2), img.band(0).get(3, 1));
    }

    #[test]
    fn offsets_respect_bound() {
        assert!(ParallaxOffsets::new(vec![(3, 0)], 2).is_err());
        let img = ramp(4, 4, 2);
        assert!(apply_parallax(&img, &ParallaxOffsets::zero(3)).is_err());
        let g = SensorProfile::gaofen2();
        for s in 0..500 {
            assert!(sample_offsets(&g, s).is_zero());
        }
        let l = SensorProfile::landsat89();
        assert_eq!(sample_offsets(&l, 17), sample_offsets(&l, 17));
        for s in 0..500 {
            let o = sample_offsets(&l, s);
            assert_eq!(o.shifts().len(), 5);
            assert!(o.shifts().iter().all(|&(x, y)| x.abs() <= 2 && y.abs() <= 2));
        }
    }

    #[test]
    fn composite_examples() {
        let g = MultiBandImage::single(BandRaster::filled(2, 2, None, 0.2).unwrap());
        let zero = MultiBandImage::single(BandRaster::filled(2, 2, None, 0.0).unwrap());
        assert_eq!(composite(&g, &zero).unwrap(), g);
        let c = MultiBandImage::single(BandRaster::filled(2, 2, None, 0.078_956_54).unwrap());
        let out = composite(&g, &c).unwrap();
        assert!((f64::from(out.band(0).get(0, 0)) - 0.278_956_54).abs() < 1e-7);
        let bad = MultiBandImage::single(BandRaster::filled(2, 3, None, 0.0).unwrap());
        assert!(matches!(composite(&g, &bad), Err(Error::Shape(_))));
    }

    #[test]
    fn composite_minus_cloud_is_ground_for_dyadic_values() {
        let g = MultiBandImage::single(BandRaster::new(2, 1, None, vec![0.25, 0.125]).unwrap());
        let c = MultiBandImage::single(BandRaster::new(2, 1, None, vec![0.0625, 0.5]).unwrap());
        let out = composite(&g, &c).unwrap();
        let back = out.band(0).zip_map(c.band(0), |a, b| a - b).unwrap();
        assert_eq!(&back, g.band(0));
    }

    #[test]
    fn augment_group_relations() {
        let img = ramp(5, 3, 2);
        let ap = |i: &MultiBandImage, op| augment(i, op).unwrap();
        assert_eq!(ap(&ap(&img, AugmentOp::Hflip), AugmentOp::Hflip), img);
        let mut r = img.clone();
        for _ in 0..4 {
            r = ap(&r, AugmentOp::Rot90);
        }
        assert_eq!(r, img);
        assert_eq!(ap(&img, AugmentOp::Rot180), ap(&ap(&img, AugmentOp::Vflip), AugmentOp::Hflip));
        for op in AugmentOp::ALL {
            let out = ap(&img, op);
            assert_eq!((out.width(), out.height()), op.output_dims(5, 3));
            assert_eq!(ap(&out, op.inverse()), img, "{op}");
        }
    }

    #[test]
    fn rot90_is_clockwise() {
        // 2x2: [a b; c d] -> [c a; d b]
        let b = BandRaster::new(2, 2, None, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = augment_band(&b, AugmentOp::Rot90).unwrap();
        assert_eq!(r.data(), &[3.0, 1.0, 4.0, 2.0]);
    }

    #[test]
    fn augment_closure_is_dihedral() {
        // composing any two ops gives one of the eight, as a group of order 8
        let img = ramp(4, 4, 1);
        let images: Vec<MultiBandImage> = AugmentOp::ALL.iter().map(|&op| augment(&img, op).unwrap()).collect();
        for (i, a) in images.iter().enumerate() {
            assert!(images[..i].iter().all(|b| b != a), "ops must be distinct");
        }
        for &p in &AugmentOp::ALL {
            for &q in &AugmentOp::ALL {
                let pq = augment(&augment(&img, q).unwrap(), p).unwrap();
                assert!(images.contains(&pq));
            }
        }
        for op in AugmentOp::ALL {
            assert_eq!(op.name().parse::<AugmentOp>().unwrap(), op);
        }
    }

    #[test]
    fn dataset_round_robin_and_identity_pair() {
        let profile = SensorProfile::landsat89().with_max_parallax_offset(0);
        let grounds: Vec<MultiBandImage> = (0..2)
            .map(|k| {
                MultiBandImage::new(
                    (0..5)
                        .map(|_| BandRaster::filled(16, 16, None, 0.1 + 0.1 * k as f32).unwrap())
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let params = DatasetParams {
            n_pairs: 4,
            base_seed: 11,
            thickness_range: (1.0, 1.0),
            augment: false,
            ..DatasetParams::default()
        };
        let gen = FbmGenerator::new(FbmParams::default(), &profile);
        let dir = tempfile::tempdir().unwrap();
        let m = build_dataset(&grounds, &profile, &GammaModel::default(), &params, &gen, dir.path()).unwrap();
        assert_eq!(m.entries.len(), 4);
        for (i, e) in m.entries.iter().enumerate() {
            let ground = crate::format::read_raster(dir.path().join(&e.ground_path)).unwrap();
            assert_eq!(ground, grounds[i % 2]);
            let cloud = crate::format::read_raster(dir.path().join(&e.cloud_path)).unwrap();
            let cloudy = crate::format::read_raster(dir.path().join(&e.cloudy_path)).unwrap();
            for b in 0..5 {
                for ((&y, &c), &g) in cloudy.band(b).data().iter().zip(cloud.band(b).data()).zip(ground.band(b).data()) {
                    // one f32 rounding of the sum
                    assert!((f64::from(y) - f64::from(c) - f64::from(g)).abs() <= f64::from(f32::EPSILON) * f64::from(y));
                }
            }
            assert_eq!(e.seed, seed::mix(11, i as u64));
            assert_eq!(e.thickness, 1.0);
            assert!(e.offsets.is_zero());
        }
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(text.starts_with("# profile=landsat89\n# coefficient=-0.14\n"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    }

    #[test]
    fn empty_ground_list_is_rejected() {
        let profile = SensorProfile::landsat89();
        let gen = FbmGenerator::new(FbmParams::default(), &profile);
        let dir = tempfile::tempdir().unwrap();
        let err = build_dataset(&[], &profile, &GammaModel::default(), &DatasetParams::default(), &gen, dir.path());
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn item_errors_carry_index() {
        let profile = SensorProfile::landsat89();
        let gen = FbmGenerator::new(FbmParams::default(), &profile);
        let dir = tempfile::tempdir().unwrap();
        let three_band = ramp(8, 8, 3);
        let err = build_dataset(&[three_band], &profile, &GammaModel::default(), &DatasetParams::default(), &gen, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Item { index: 0, .. }), "{err}");
    }

    proptest! {
        #[test]
        fn recorded_offsets_within_bound(seed in any::<u64>()) {
            for p in SensorProfile::builtins() {
                let d = draw_item(seed, &p, &DatasetParams::default());
                let b = p.max_parallax_offset();
                prop_assert!(d.offsets.shifts().iter().all(|(x, y)| x.unsigned_abs() <= b && y.unsigned_abs() <= b));
                prop_assert!((0.5..1.5).contains(&d.thickness));
            }
        }
    }
}
