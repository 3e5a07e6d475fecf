//! Local-statistics / global-fit estimation of the `γ(C_r)` coefficient.
//!
//! The scatter is split into equal-width `C_r` bins. Each non-empty bin contributes
//! one point `(mean C_r, aggregate γ)`, and a single origin-constrained curve
//! `γ = a · ln(C_r)` is fitted to those points by least squares. Dense regions of
//! the scatter therefore carry no more weight than sparse ones.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::GammaSample;

/// Default number of equal-width bins.
pub const DEFAULT_BIN_COUNT: usize = 250;

/// Resolution of the γ histogram used for the per-bin mode.
pub const MODE_RESOLUTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregator {
    Mode,
    Median,
    Mean,
}

impl Aggregator {
    pub const ALL: [Aggregator; 3] = [Aggregator::Mode, Aggregator::Median, Aggregator::Mean];

    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Mode => "mode",
            Aggregator::Median => "median",
            Aggregator::Mean => "mean",
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Aggregator::Mode),
            "median" => Ok(Aggregator::Median),
            "mean" => Ok(Aggregator::Mean),
            other => Err(Error::Parameter(format!("unknown aggregator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStat {
    pub mean_c_r: f64,
    pub mode_gamma: f64,
    pub median_gamma: f64,
    pub mean_gamma: f64,
    pub count: usize,
}

impl BinStat {
    pub fn aggregate(&self, agg: Aggregator) -> f64 {
        match agg {
            Aggregator::Mode => self.mode_gamma,
            Aggregator::Median => self.median_gamma,
            Aggregator::Mean => self.mean_gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFit {
    pub coefficient: f64,
    pub r_squared: f64,
}

/// Unconstrained `γ = slope · ln(C_r) + intercept`, reported for diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsgfFit {
    pub aggregator: Aggregator,
    /// Coefficient fitted to the chosen aggregator.
    pub coefficient: f64,
    /// Indexed like [`Aggregator::ALL`].
    pub per_aggregator: [CurveFit; 3],
    pub intercept_fit: Option<InterceptFit>,
    pub bin_count: usize,
    pub bin_stats: Vec<BinStat>,
}

impl LsgfFit {
    pub fn fit_for(&self, agg: Aggregator) -> CurveFit {
        let i = Aggregator::ALL.iter().position(|&a| a == agg).unwrap();
        self.per_aggregator[i]
    }

    pub fn r_squared(&self, agg: Aggregator) -> f64 {
        self.fit_for(agg).r_squared
    }

    /// Key/value report followed by the bin table.
    pub fn report(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("aggregator = {}\n", self.aggregator));
        s.push_str(&format!("coefficient = {}\n", self.coefficient));
        s.push_str(&format!("bin_count = {}\n", self.bin_count));
        s.push_str(&format!("non_empty_bins = {}\n", self.bin_stats.len()));
        for agg in Aggregator::ALL {
            let f = self.fit_for(agg);
            s.push_str(&format!("coefficient_{agg} = {}\n", f.coefficient));
            s.push_str(&format!("r_squared_{agg} = {}\n", f.r_squared));
        }
        if let Some(d) = &self.intercept_fit {
            s.push_str(&format!("diagnostic_slope = {}\n", d.slope));
            s.push_str(&format!("diagnostic_intercept = {}\n", d.intercept));
            s.push_str(&format!("diagnostic_r_squared = {}\n", d.r_squared));
        }
        s.push_str("# mean_c_r\tmode_gamma\tmedian_gamma\tmean_gamma\tcount\n");
        for b in &self.bin_stats {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                b.mean_c_r, b.mode_gamma, b.median_gamma, b.mean_gamma, b.count
            ));
        }
        s
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Midpoint of the tallest `MODE_RESOLUTION`-wide cell; ties go to the lower γ.
fn histogram_mode(sorted: &[f64]) -> f64 {
    let mut best_cell = i64::MIN;
    let mut best_count = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let cell = (sorted[i] / MODE_RESOLUTION).floor() as i64;
        let mut j = i;
        while j < sorted.len() && (sorted[j] / MODE_RESOLUTION).floor() as i64 == cell {
            j += 1;
        }
        // ascending scan, so strict > keeps the lowest cell on ties
        if j - i > best_count {
            best_count = j - i;
            best_cell = cell;
        }
        i = j;
    }
    (best_cell as f64 + 0.5) * MODE_RESOLUTION
}

fn bin_stat(c_r: &[f64], gamma: &mut [f64]) -> BinStat {
    let n = c_r.len() as f64;
    let mean_c_r = c_r.iter().sum::<f64>() / n;
    let mean_gamma = gamma.iter().sum::<f64>() / n;
    gamma.sort_by(f64::total_cmp);
    BinStat {
        mean_c_r,
        mode_gamma: histogram_mode(gamma),
        median_gamma: median_sorted(gamma),
        mean_gamma,
        count: c_r.len(),
    }
}

fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Result<CurveFit> {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all bin means sit at ln(C_r) = 0".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let a = sxy / sxx;
    Ok(CurveFit {
        coefficient: a,
        r_squared: r_squared(ys, xs.iter().map(|x| a * x)),
    })
}

/// `1 - SS_res / SS_tot`. A constant target that is fitted exactly scores 1.
fn r_squared(ys: &[f64], predicted: impl Iterator<Item = f64>) -> f64 {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

fn fit_with_intercept(xs: &[f64], ys: &[f64]) -> Option<InterceptFit> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Some(InterceptFit {
        slope,
        intercept,
        r_squared: r_squared(ys, xs.iter().map(|x| slope * x + intercept)),
    })
}

/// Bins the scatter into `bin_count` equal-width `C_r` intervals and fits
/// `γ = a · ln(C_r)` to the per-bin aggregates. Empty bins are dropped. The result
/// does not depend on sample order.
pub fn lsgf_fit(samples: &[GammaSample], bin_count: usize, aggregator: Aggregator) -> Result<LsgfFit> {
    if bin_count < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 bins, got {bin_count}"
        )));
    }
    if let Some(s) = samples
        .iter()
        .find(|s| !(s.c_r > 0.0 && s.c_r.is_finite() && s.gamma.is_finite()))
    {
        return Err(Error::Domain(format!("invalid sample {s:?}")));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s.c_r), hi.max(s.c_r))
    });
    if samples.is_empty() || lo == hi {
        return Err(Error::InsufficientData(
            "fewer than 2 non-empty bins".into(),
        ));
    }
    let width = (hi - lo) / bin_count as f64;
    let bin_of = |c: f64| (((c - lo) / width) as usize).min(bin_count - 1);

    // Bucket with a stable counting sort so every bin sees its samples in a fixed
    // order after sorting, independent of the input permutation.
    let mut counts = vec![0usize; bin_count + 1];
    for s in samples {
        counts[bin_of(s.c_r) + 1] += 1;
    }
    for k in 0..bin_count {
        counts[k + 1] += counts[k];
    }
    let mut cursor = counts.clone();
    let mut by_bin = vec![GammaSample { c_r: 0.0, gamma: 0.0 }; samples.len()];
    for s in samples {
        let k = bin_of(s.c_r);
        by_bin[cursor[k]] = *s;
        cursor[k] += 1;
    }

    let ranges: Vec<(usize, usize)> = (0..bin_count)
        .map(|k| (counts[k], counts[k + 1]))
        .filter(|(a, b)| b > a)
        .collect();
    if ranges.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} non-empty bin(s); need at least 2",
            ranges.len()
        )));
    }
    let bin_stats = par::map_slice(&ranges, |&(a, b)| {
        let mut bin: Vec<GammaSample> = by_bin[a..b].to_vec();
        bin.sort_by(|p, q| p.c_r.total_cmp(&q.c_r).then(p.gamma.total_cmp(&q.gamma)));
        let c_r: Vec<f64> = bin.iter().map(|s| s.c_r).collect();
        let mut gamma: Vec<f64> = bin.iter().map(|s| s.gamma).collect();
        bin_stat(&c_r, &mut gamma)
    });

    let xs: Vec<f64> = bin_stats.iter().map(|b| b.mean_c_r.ln()).collect();
    let fits = Aggregator::ALL
        .iter()
        .map(|&agg| {
            let ys: Vec<f64> = bin_stats.iter().map(|b| b.aggregate(agg)).collect();
            fit_through_origin(&xs, &ys)
        })
        .collect::<Result<Vec<_>>>()?;
    let per_aggregator = [fits[0], fits[1], fits[2]];
    let chosen_ys: Vec<f64> = bin_stats.iter().map(|b| b.aggregate(aggregator)).collect();

    let mut fit = LsgfFit {
        aggregator,
        coefficient: 0.0,
        per_aggregator,
        intercept_fit: fit_with_intercept(&xs, &chosen_ys),
        bin_count,
        bin_stats,
    };
    fit.coefficient = fit.fit_for(aggregator).coefficient;
    Ok(fit)
}
