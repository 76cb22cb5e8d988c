//! Empirical statistics: fixed-bin histograms, L1 and Kolmogorov–Smirnov
//! distances, sample moments.

use crate::error::{Error, Result};

/// Equal-width histogram on [lo, hi]. Samples outside the range are
/// counted in `total` but in no bin, so bin densities stay normalized
/// against the whole sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub total: usize,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidParameter(format!("histogram needs at least 2 bins, got {bins}")));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("histogram range [{lo}, {hi}] has no width")));
        }
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &s in samples {
            if s >= lo && s <= hi {
                let i = (((s - lo) / width) as usize).min(bins - 1);
                counts[i] += 1;
            }
        }
        Ok(Self { lo, hi, counts, total: samples.len() })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.total as f64
    }

    pub fn density(&self, i: usize) -> f64 {
        self.probability(i) / self.width()
    }

    /// Σ_i |p̂_i − (F(b_i) − F(a_i))|: the L1 distance between the
    /// empirical density and the model, both averaged over each bin.
    pub fn l1_to_cdf<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        (0..self.bins())
            .map(|i| {
                let (a, b) = self.edges(i);
                (self.probability(i) - (cdf(b) - cdf(a))).abs()
            })
            .sum()
    }

    /// Plug-in differential entropy −Σ p_i ln(p_i / Δ) of the binned law.
    pub fn entropy(&self) -> f64 {
        let w = self.width();
        (0..self.bins())
            .map(|i| self.probability(i))
            .filter(|&p| p > 0.0)
            .map(|p| -p * (p / w).ln())
            .sum()
    }

    /// Σ p_i ln(p_i / q_i) against the model's bin masses; bins where the
    /// model mass vanishes are skipped.
    pub fn kl_to_cdf<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        (0..self.bins())
            .filter_map(|i| {
                let p = self.probability(i);
                let (a, b) = self.edges(i);
                let q = cdf(b) - cdf(a);
                (p > 0.0 && q > 0.0).then(|| p * (p / q).ln())
            })
            .sum()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_err(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Divides every sample by the batch mean, so the batch has ⟨s⟩ = 1.
pub fn rescale_unit_mean(xs: &mut [f64]) {
    let m = mean(xs);
    if m > 0.0 {
        for x in xs.iter_mut() {
            *x /= m;
        }
    }
}

/// sup |F̂_a − F̂_b| between two empirical distributions.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// sup |F̂ − F| against a model cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}
