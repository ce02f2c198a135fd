//! Sample statistics for comparing surrogate and full-model ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default kernel bandwidth for porosity densities.
pub const POROSITY_BANDWIDTH: f64 = 0.02;

/// Sorted sample with its empirical CDF and a Gaussian kernel density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
    pub bandwidth: f64,
}

impl EmpiricalDistribution {
    pub fn new(samples: &[f64], bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("empty sample".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample {v}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { sorted, bandwidth })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of the sample `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Gaussian kernel density estimate at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (self.sorted.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        // kernels further than 8.5 h contribute below 1e-15 of their peak
        let lo = self.sorted.partition_point(|&v| v < x - 8.5 * h);
        let hi = self.sorted.partition_point(|&v| v <= x + 8.5 * h);
        norm * self.sorted[lo..hi].iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>()
    }

    /// Interval extending the sample range by `pad` bandwidths on each side.
    pub fn support(&self, pad: f64) -> (f64, f64) {
        let h = pad * self.bandwidth;
        (self.sorted[0] - h, self.sorted[self.sorted.len() - 1] + h)
    }

    /// `(x, pdf, cdf)` on `n >= 2` equispaced points of `[lo, hi]`.
    pub fn tabulate(&self, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64, f64)> {
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, self.pdf(x), self.cdf(x))
            })
            .collect()
    }

    /// Local maxima of the density on `n` points of [`Self::support`],
    /// ignoring bumps lower than `min_height` times the global maximum.
    pub fn modes(&self, n: usize, min_height: f64) -> Vec<f64> {
        let (lo, hi) = self.support(4.0);
        let t = self.tabulate(lo, hi, n);
        let peak = t.iter().fold(0.0f64, |m, r| m.max(r.1));
        (1..n - 1)
            .filter(|&i| t[i].1 > t[i - 1].1 && t[i].1 >= t[i + 1].1 && t[i].1 >= min_height * peak)
            .map(|i| t[i].0)
            .collect()
    }
}

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// empirical CDFs, taken over the pooled sample.
pub fn cdf_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("CDF distance needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
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

/// `|estimate - reference| / |reference|`.
pub fn relative_mean_error(estimate: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 || !reference.is_finite() {
        return Err(Error::UndefinedMetric(format!("reference mean is {reference}")));
    }
    Ok((estimate - reference).abs() / reference.abs())
}

/// `max_i |(s_i - f_i) / f_i|` over paired surrogate and full-model values.
pub fn max_relative_error(surrogate: &[f64], full: &[f64]) -> Result<f64> {
    if surrogate.len() != full.len() || full.is_empty() {
        return Err(Error::Domain("max error needs equally sized non-empty samples".into()));
    }
    let mut worst: f64 = 0.0;
    for (s, f) in surrogate.iter().zip(full) {
        if *f == 0.0 {
            return Err(Error::UndefinedMetric("full-model value is zero".into()));
        }
        worst = worst.max(((s - f) / f).abs());
    }
    Ok(worst)
}

/// Counts of each category per depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub depths: Vec<f64>,
    pub categories: Vec<String>,
    /// `counts[d][c]`.
    pub counts: Vec<Vec<usize>>,
    pub samples: usize,
}

impl FrequencyProfile {
    /// `labels[s][d]` is the category index of sample `s` at depth `d`.
    pub fn from_labels(depths: Vec<f64>, categories: Vec<String>, labels: &[Vec<usize>]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("frequency profile needs at least one sample".into()));
        }
        let mut counts = vec![vec![0usize; categories.len()]; depths.len()];
        for row in labels {
            if row.len() != depths.len() {
                return Err(Error::Domain("label row length differs from the depth grid".into()));
            }
            for (d, &c) in row.iter().enumerate() {
                if c >= categories.len() {
                    return Err(Error::Domain(format!("category {c} out of range")));
                }
                counts[d][c] += 1;
            }
        }
        Ok(FrequencyProfile {
            depths,
            categories,
            counts,
            samples: labels.len(),
        })
    }

    pub fn frequency(&self, d: usize, c: usize) -> f64 {
        self.counts[d][c] as f64 / self.samples as f64
    }

    /// Number of categories seen at depth index `d`.
    pub fn distinct(&self, d: usize) -> usize {
        self.counts[d].iter().filter(|&&n| n > 0).count()
    }
}

/// Fraction of samples whose labels differ, per depth.
pub fn mismatch_profile(a: &[Vec<usize>], b: &[Vec<usize>]) -> Result<Vec<f64>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Domain("mismatch profile needs paired non-empty samples".into()));
    }
    let depths = a[0].len();
    let mut miss = vec![0usize; depths];
    for (ra, rb) in a.iter().zip(b) {
        if ra.len() != depths || rb.len() != depths {
            return Err(Error::Domain("label row length differs from the depth grid".into()));
        }
        for d in 0..depths {
            miss[d] += usize::from(ra[d] != rb[d]);
        }
    }
    Ok(miss.into_iter().map(|m| m as f64 / a.len() as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_evaluated_cdf_distance() {
        assert_abs_diff_eq!(cdf_distance(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(cdf_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(cdf_distance(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap(), 1.0);
        assert!(cdf_distance(&[], &[1.0]).is_err());
    }

    #[test]
    fn single_sample_gives_one_gaussian() {
        let d = EmpiricalDistribution::new(&[0.4], 0.02).unwrap();
        let peak = 1.0 / (0.02 * (2.0 * std::f64::consts::PI).sqrt());
        assert_abs_diff_eq!(d.pdf(0.4), peak, epsilon = 1e-12);
        assert_abs_diff_eq!(d.pdf(0.42), peak * (-0.5f64).exp(), epsilon = 1e-12);
        assert_eq!(d.modes(401, 0.01).len(), 1);
    }

    #[test]
    fn undefined_metrics_are_errors() {
        assert!(matches!(relative_mean_error(1.0, 0.0), Err(Error::UndefinedMetric(_))));
        assert_eq!(relative_mean_error(-99.0, -100.0).unwrap(), 0.01);
    }

    #[test]
    fn frequency_rows_count_every_sample() {
        let labels = vec![vec![0, 1], vec![1, 1], vec![0, 2]];
        let f = FrequencyProfile::from_labels(vec![-1.0, -2.0], vec!["a".into(), "b".into(), "c".into()], &labels).unwrap();
        assert_eq!(f.counts, vec![vec![2, 1, 0], vec![0, 2, 1]]);
        assert_eq!(f.distinct(1), 2);
        assert_eq!(mismatch_profile(&labels, &labels).unwrap(), vec![0.0, 0.0]);
    }
}
