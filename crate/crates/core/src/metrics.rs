//! Full-reference quality metrics and the histogram overlap rate.
//!
//! Reductions run row by row: each row is accumulated sequentially and row partials
//! are summed in row order, so results do not depend on the thread count.

use crate::error::{Error, Result};
use crate::par;
use crate::raster::{BandRaster, MultiBandImage};

fn sum_sq_diff(a: &BandRaster, b: &BandRaster) -> f64 {
    par::row_sum(a.height(), |y| {
        a.row(y)
            .iter()
            .zip(b.row(y))
            .map(|(&p, &q)| {
                let d = f64::from(p) - f64::from(q);
                d * d
            })
            .sum()
    })
}

pub fn mse(a: &MultiBandImage, b: &MultiBandImage) -> Result<f64> {
    a.check_same_shape(b)?;
    let total: f64 = a
        .bands()
        .iter()
        .zip(b.bands())
        .map(|(p, q)| sum_sq_diff(p, q))
        .sum();
    Ok(total / (a.band(0).len() * a.band_count()) as f64)
}

/// Root mean squared difference over all pixels and bands.
pub fn rmse(a: &MultiBandImage, b: &MultiBandImage) -> Result<f64> {
    mse(a, b).map(f64::sqrt)
}

/// RMSE of each band separately.
pub fn rmse_per_band(a: &MultiBandImage, b: &MultiBandImage) -> Result<Vec<f64>> {
    a.check_same_shape(b)?;
    Ok(a.bands()
        .iter()
        .zip(b.bands())
        .map(|(p, q)| (sum_sq_diff(p, q) / p.len() as f64).sqrt())
        .collect())
}

/// `10 log10(peak² / MSE)`; identical inputs give `f64::INFINITY`.
pub fn psnr(a: &MultiBandImage, b: &MultiBandImage, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::Parameter(format!("peak must be > 0, got {peak}")));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (peak * peak / m).log10())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    /// Odd window side length.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub peak: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            peak: 1.0,
        }
    }
}

impl SsimParams {
    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| (-(i as f64 - r).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }
}

fn ssim_band(a: &BandRaster, b: &BandRaster, p: &SsimParams, taps: &[f64]) -> f64 {
    let (w, h, win) = (a.width(), a.height(), p.window);
    let (ow, oh) = (w - win + 1, h - win + 1);
    let c1 = (p.k1 * p.peak).powi(2);
    let c2 = (p.k2 * p.peak).powi(2);

    // horizontal pass: for each input row, 5 filtered moments of width `ow`
    let horiz = par::map_range(h, |y| {
        let (ra, rb) = (a.row(y), b.row(y));
        let mut m = vec![[0f64; 5]; ow];
        for (x, acc) in m.iter_mut().enumerate() {
            for (k, &t) in taps.iter().enumerate() {
                let u = f64::from(ra[x + k]);
                let v = f64::from(rb[x + k]);
                acc[0] += t * u;
                acc[1] += t * v;
                acc[2] += t * u * u;
                acc[3] += t * v * v;
                acc[4] += t * u * v;
            }
        }
        m
    });

    let total = par::row_sum(oh, |y| {
        let mut row_sum = 0.0;
        for x in 0..ow {
            let mut s = [0f64; 5];
            for (k, &t) in taps.iter().enumerate() {
                let m = &horiz[y + k][x];
                for q in 0..5 {
                    s[q] += t * m[q];
                }
            }
            let [mu_a, mu_b, e_aa, e_bb, e_ab] = s;
            let var_a = e_aa - mu_a * mu_a;
            let var_b = e_bb - mu_b * mu_b;
            let cov = e_ab - mu_a * mu_b;
            row_sum += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        }
        row_sum
    });
    total / (ow * oh) as f64
}

/// Mean local SSIM over the valid window positions, averaged over bands.
pub fn ssim_with(a: &MultiBandImage, b: &MultiBandImage, params: &SsimParams) -> Result<f64> {
    a.check_same_shape(b)?;
    if params.window == 0 || params.window % 2 == 0 {
        return Err(Error::Parameter(format!(
            "SSIM window must be odd, got {}",
            params.window
        )));
    }
    if a.width() < params.window || a.height() < params.window {
        return Err(Error::Parameter(format!(
            "image {}x{} is smaller than the {}x{} SSIM window",
            a.width(),
            a.height(),
            params.window,
            params.window
        )));
    }
    if !(params.sigma > 0.0 && params.peak > 0.0) {
        return Err(Error::Parameter("SSIM sigma and peak must be > 0".into()));
    }
    let taps = params.taps();
    let sum: f64 = a
        .bands()
        .iter()
        .zip(b.bands())
        .map(|(p, q)| ssim_band(p, q, params, &taps))
        .sum();
    Ok(sum / a.band_count() as f64)
}

/// SSIM with an 11x11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03, peak 1.
pub fn ssim(a: &MultiBandImage, b: &MultiBandImage) -> Result<f64> {
    ssim_with(a, b, &SsimParams::default())
}

fn pearson<'a>(a: impl Iterator<Item = &'a BandRaster> + Clone, b: impl Iterator<Item = &'a BandRaster> + Clone) -> Result<f64> {
    let sum = |it: &mut dyn Iterator<Item = &'a BandRaster>| -> (f64, usize) {
        it.fold((0.0, 0), |(s, n), band| {
            (
                s + par::row_sum(band.height(), |y| band.row(y).iter().map(|&v| f64::from(v)).sum()),
                n + band.len(),
            )
        })
    };
    let (sa, n) = sum(&mut a.clone());
    let (sb, _) = sum(&mut b.clone());
    let (ma, mb) = (sa / n as f64, sb / n as f64);
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (p, q) in a.zip(b) {
        let rows = par::map_range(p.height(), |y| {
            let mut acc = (0.0, 0.0, 0.0);
            for (&u, &v) in p.row(y).iter().zip(q.row(y)) {
                let (du, dv) = (f64::from(u) - ma, f64::from(v) - mb);
                acc.0 += du * du;
                acc.1 += dv * dv;
                acc.2 += du * dv;
            }
            acc
        });
        for (x, y, z) in rows {
            saa += x;
            sbb += y;
            sab += z;
        }
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Pearson correlation pooled over all pixels and bands.
pub fn cc(a: &MultiBandImage, b: &MultiBandImage) -> Result<f64> {
    a.check_same_shape(b)?;
    pearson(a.bands().iter(), b.bands().iter())
}

/// Mean of the per-band Pearson correlations.
pub fn cc_per_band(a: &MultiBandImage, b: &MultiBandImage) -> Result<f64> {
    a.check_same_shape(b)?;
    let mut total = 0.0;
    for (p, q) in a.bands().iter().zip(b.bands()) {
        total += pearson(std::iter::once(p), std::iter::once(q))?;
    }
    Ok(total / a.band_count() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamResult {
    /// Mean spectral angle in degrees over the evaluated pixels.
    pub degrees: f64,
    /// Pixels skipped because one of the spectra was all zero.
    pub skipped: usize,
}

/// Mean per-pixel angle between spectra, in degrees.
pub fn sam(a: &MultiBandImage, b: &MultiBandImage) -> Result<SamResult> {
    a.check_same_shape(b)?;
    if a.band_count() < 2 {
        return Err(Error::Parameter(
            "spectral angle needs at least 2 bands".into(),
        ));
    }
    let w = a.width();
    let rows = par::map_range(a.height(), |y| {
        let mut sum = 0.0;
        let (mut used, mut skipped) = (0usize, 0usize);
        for x in 0..w {
            let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
            for (p, q) in a.bands().iter().zip(b.bands()) {
                let u = f64::from(p.get(x, y));
                let v = f64::from(q.get(x, y));
                dot += u * v;
                nu += u * u;
                nv += v * v;
            }
            if nu == 0.0 || nv == 0.0 {
                skipped += 1;
                continue;
            }
            let cos = (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0);
            sum += cos.acos().to_degrees();
            used += 1;
        }
        (sum, used, skipped)
    });
    let (mut sum, mut used, mut skipped) = (0.0, 0, 0);
    for (s, u, k) in rows {
        sum += s;
        used += u;
        skipped += k;
    }
    if used == 0 {
        return Err(Error::Validation("every pixel has a zero spectrum".into()));
    }
    Ok(SamResult {
        degrees: sum / used as f64,
        skipped,
    })
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramOverlap {
    pub rate: f64,
    pub bin_count: usize,
    pub range: (f64, f64),
}

/// Shared-bin histogram intersection normalized by the real histogram's total.
/// Not symmetric in its arguments.
pub fn histogram_overlap(
    real: &[BandRaster],
    generated: &[BandRaster],
    bin_count: usize,
) -> Result<HistogramOverlap> {
    if real.is_empty() || generated.is_empty() {
        return Err(Error::Parameter("histogram overlap needs non-empty inputs".into()));
    }
    if bin_count == 0 {
        return Err(Error::Parameter("bin count must be >= 1".into()));
    }
    let (lo, hi) = real
        .iter()
        .chain(generated)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(f64::from(r.min())), hi.max(f64::from(r.max())))
        });
    let width = (hi - lo) / bin_count as f64;
    let bin = |v: f32| -> usize {
        if width == 0.0 {
            0
        } else {
            (((f64::from(v) - lo) / width) as usize).min(bin_count - 1)
        }
    };
    let histogram = |rasters: &[BandRaster]| -> Vec<u64> {
        let mut h = vec![0u64; bin_count];
        for r in rasters {
            for &v in r.data() {
                h[bin(v)] += 1;
            }
        }
        h
    };
    let (hr, hg) = (histogram(real), histogram(generated));
    let overlap: u64 = hr.iter().zip(&hg).map(|(a, b)| *a.min(b)).sum();
    let total: u64 = hr.iter().sum();
    Ok(HistogramOverlap {
        rate: overlap as f64 / total as f64,
        bin_count,
        range: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub cc: f64,
    pub sam: f64,
    pub rmse: f64,
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

impl MetricReport {
    /// Computes all five metrics. CC is global; SAM is 0 for single-band images.
    pub fn compute(a: &MultiBandImage, b: &MultiBandImage, ssim_params: &SsimParams) -> Result<Self> {
        Ok(Self {
            psnr: psnr(a, b, ssim_params.peak)?,
            ssim: ssim_with(a, b, ssim_params)?,
            cc: cc(a, b)?,
            sam: if a.band_count() >= 2 { sam(a, b)?.degrees } else { 0.0 },
            rmse: rmse(a, b)?,
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "psnr = {}\nssim = {}\ncc = {}\nsam = {}\nrmse = {}\n",
            fmt_psnr(self.psnr),
            self.ssim,
            self.cc,
            self.sam,
            self.rmse
        )
    }

    pub const CSV_HEADER: &'static str = "name,psnr,ssim,cc,sam,rmse";

    pub fn csv_row(&self, name: &str) -> String {
        format!(
            "{name},{},{},{},{},{}",
            fmt_psnr(self.psnr),
            self.ssim,
            self.cc,
            self.sam,
            self.rmse
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, bands: Vec<Vec<f32>>) -> MultiBandImage {
        MultiBandImage::new(
            bands
                .into_iter()
                .map(|d| BandRaster::new(w, h, None, d).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rmse_examples() {
        let a = img(2, 1, vec![vec![0.0, 0.0]]);
        let b = img(2, 1, vec![vec![0.3, 0.4]]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert!((rmse(&a, &b).unwrap() - 0.125f64.sqrt()).abs() < 1e-7);
        let c = img(2, 1, vec![vec![0.01, 0.01]]);
        assert!((rmse(&a, &c).unwrap() - 0.01).abs() < 1e-9);
        let bad = img(1, 2, vec![vec![0.0, 0.0]]);
        assert!(matches!(rmse(&a, &bad), Err(Error::Shape(_))));
    }

    #[test]
    fn psnr_examples() {
        let a = img(2, 2, vec![vec![0.5; 4]]);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        // 0.25 and 0.125 are exact in f32, so the differences are exact too
        let b = img(2, 2, vec![vec![0.25; 4]]);
        let c = img(2, 2, vec![vec![0.375; 4]]);
        assert!((psnr(&b, &c, 1.0).unwrap() - 10.0 * (1.0f64 / 0.015625).log10()).abs() < 1e-12);
        let d = img(2, 2, vec![vec![0.6; 4]]);
        assert!((psnr(&a, &d, 1.0).unwrap() - 20.0).abs() < 1e-5);
        assert!(psnr(&a, &a, 0.0).is_err());
    }

    #[test]
    fn ssim_identity_and_inversion() {
        let data: Vec<f32> = (0..256).map(|i| ((i * 37) % 101) as f32 / 100.0).collect();
        let a = img(16, 16, vec![data.clone()]);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = img(16, 16, vec![data.iter().map(|v| 1.0 - v).collect()]);
        assert!(ssim(&a, &inv).unwrap() < 1.0);
        let small = img(8, 8, vec![vec![0.0; 64]]);
        assert!(matches!(ssim(&small, &small), Err(Error::Parameter(_))));
    }

    #[test]
    fn cc_examples() {
        let a = img(2, 2, vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let b = img(2, 2, vec![vec![1.0, 2.0, 4.0, 3.0]]);
        assert!((cc(&a, &b).unwrap() - 0.8).abs() < 1e-12);
        let aff = img(2, 2, vec![vec![3.0, 5.0, 7.0, 9.0]]);
        assert!((cc(&a, &aff).unwrap() - 1.0).abs() < 1e-12);
        let neg = img(2, 2, vec![vec![-1.0, -2.0, -3.0, -4.0]]);
        assert!((cc(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        let flat = img(2, 2, vec![vec![0.5; 4]]);
        assert!(matches!(cc(&a, &flat), Err(Error::UndefinedCorrelation)));
        assert!((cc_per_band(&a, &b).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn sam_examples() {
        let a = img(1, 1, vec![vec![1.0], vec![0.0]]);
        let b = img(1, 1, vec![vec![0.0], vec![1.0]]);
        assert!((sam(&a, &b).unwrap().degrees - 90.0).abs() < 1e-12);
        let c = img(1, 1, vec![vec![1.0], vec![1.0]]);
        assert!((sam(&c, &a).unwrap().degrees - 45.0).abs() < 1e-12);
        let k = img(2, 1, vec![vec![0.2, 0.1], vec![0.3, 0.05]]);
        let k3 = img(2, 1, vec![vec![0.6, 0.3], vec![0.9, 0.15]]);
        assert!(sam(&k, &k3).unwrap().degrees < 1e-5);
        let with_zero = img(2, 1, vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let r = sam(&with_zero, &c.clone()).err();
        assert!(r.is_some(), "shape mismatch expected");
        let z2 = img(2, 1, vec![vec![0.0, 2.0], vec![0.0, 1.0]]);
        let s = sam(&with_zero, &z2).unwrap();
        assert_eq!(s.skipped, 1);
        assert!(matches!(sam(&img(1, 1, vec![vec![1.0]]), &img(1, 1, vec![vec![1.0]])), Err(Error::Parameter(_))));
    }

    #[test]
    fn overlap_examples() {
        let r = vec![BandRaster::new(4, 1, None, vec![0.0, 0.1, 0.2, 0.3]).unwrap()];
        assert_eq!(histogram_overlap(&r, &r, 256).unwrap().rate, 1.0);
        let g = vec![BandRaster::new(2, 1, None, vec![0.8, 0.9]).unwrap()];
        assert_eq!(histogram_overlap(&r, &g, 256).unwrap().rate, 0.0);
        assert!(histogram_overlap(&[], &g, 10).is_err());
    }

    #[test]
    fn overlap_is_not_symmetric() {
        let real = vec![BandRaster::new(4, 1, None, vec![0.0, 0.0, 0.0, 1.0]).unwrap()];
        let gen = vec![BandRaster::new(2, 1, None, vec![0.0, 1.0]).unwrap()];
        let rg = histogram_overlap(&real, &gen, 2).unwrap().rate;
        let gr = histogram_overlap(&gen, &real, 2).unwrap().rate;
        assert_eq!(rg, 0.5);
        assert_eq!(gr, 1.0);
    }

    fn arb_pair() -> impl Strategy<Value = (MultiBandImage, MultiBandImage)> {
        (
            prop::collection::vec(prop::collection::vec(0.01f32..1.0, 12), 3),
            prop::collection::vec(prop::collection::vec(0.01f32..1.0, 12), 3),
        )
            .prop_map(|(a, b)| (img(4, 3, a), img(4, 3, b)))
    }

    proptest! {
        #[test]
        fn symmetric_metrics((a, b) in arb_pair()) {
            prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
            prop_assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
            prop_assert!((sam(&a, &b).unwrap().degrees - sam(&b, &a).unwrap().degrees).abs() < 1e-9);
        }

        #[test]
        fn sam_scale_invariant((a, _) in arb_pair(), k in 0.1f64..10.0) {
            let scaled = MultiBandImage::new(a.bands().iter().map(|b| b.map(|v| v * k).unwrap()).collect()).unwrap();
            prop_assert!(sam(&a, &scaled).unwrap().degrees < 1e-3);
        }
    }
}
