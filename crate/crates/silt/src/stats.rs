//! Statistical verdicts on sample sets: moments with jackknife standard
//! errors, a one-sample Kolmogorov–Smirnov test against `N(0, sigma^2)`,
//! and weighted log-log scaling fits.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Minimum sample count accepted by [`moments`].
pub const MIN_SAMPLES: usize = 30;

/// Sample moments with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the variance from the fourth central moment.
    pub variance_se: f64,
    /// `None` when the sample is constant.
    pub skewness: Option<f64>,
    pub skewness_se: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub kurtosis_se: Option<f64>,
}

impl Moments {
    /// `m4 / m2^2`, equal to `excess_kurtosis + 3`.
    pub fn fourth_moment_ratio(&self) -> Option<f64> {
        self.excess_kurtosis.map(|k| k + 3.0)
    }
}

struct Central {
    m2: f64,
    m3: f64,
    m4: f64,
}

fn central_from_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> Central {
    let mu = s1 / n;
    let (a2, a3, a4) = (s2 / n, s3 / n, s4 / n);
    Central {
        m2: a2 - mu * mu,
        m3: a3 - 3.0 * mu * a2 + 2.0 * mu.powi(3),
        m4: a4 - 4.0 * mu * a3 + 6.0 * mu * mu * a2 - 3.0 * mu.powi(4),
    }
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn jackknife_se(estimates: &[f64]) -> f64 {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    ((n - 1.0) / n * estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Mean, variance, skewness and excess kurtosis with standard errors.
pub fn moments(samples: &[f64]) -> Result<Moments> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: samples.len(), need: MIN_SAMPLES });
    }
    let x = sorted(samples);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let y: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let sum = |r: i32| y.iter().map(|v| v.powi(r)).sum::<f64>();
    let (s1, s2, s3, s4) = (sum(1), sum(2), sum(3), sum(4));
    let c = central_from_sums(n, s1, s2, s3, s4);
    let variance = c.m2 * n / (n - 1.0);
    let variance_se = ((c.m4 - (n - 3.0) / (n - 1.0) * variance * variance) / n).max(0.0).sqrt();
    let mean_se = (variance / n).sqrt();
    if c.m2 <= 0.0 {
        return Ok(Moments {
            n: x.len(),
            mean,
            mean_se,
            variance: 0.0,
            variance_se: 0.0,
            skewness: None,
            skewness_se: None,
            excess_kurtosis: None,
            kurtosis_se: None,
        });
    }
    let skew = |c: &Central| c.m3 / c.m2.powf(1.5);
    let kurt = |c: &Central| c.m4 / (c.m2 * c.m2) - 3.0;
    let (mut skews, mut kurts) = (Vec::with_capacity(x.len()), Vec::with_capacity(x.len()));
    for &yi in &y {
        let loo = central_from_sums(n - 1.0, s1 - yi, s2 - yi * yi, s3 - yi.powi(3), s4 - yi.powi(4));
        skews.push(skew(&loo));
        kurts.push(kurt(&loo));
    }
    Ok(Moments {
        n: x.len(),
        mean,
        mean_se,
        variance,
        variance_se,
        skewness: Some(skew(&c)),
        skewness_se: Some(jackknife_se(&skews)),
        excess_kurtosis: Some(kurt(&c)),
        kurtosis_se: Some(jackknife_se(&kurts)),
    })
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI.powi(2);
        let t: f64 = (1..=8)
            .map(|j| {
                let o = f64::from(2 * j - 1);
                (-o * o * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * t).clamp(0.0, 1.0)
    } else {
        let t: f64 = (1..=20)
            .map(|j| {
                let jf = f64::from(j);
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * jf * jf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * t).clamp(0.0, 1.0)
    }
}

/// One-sample KS statistic of `samples` against `N(0, sigma_sq)`.
pub fn ks_statistic(samples: &[f64], sigma_sq: f64) -> f64 {
    let x = sorted(samples);
    let n = x.len() as f64;
    let sigma = sigma_sq.sqrt();
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal_cdf(v / sigma);
            f64::max((i as f64 + 1.0) / n - f, f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Normality verdict against a known limiting variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub moments: Moments,
    pub sigma_sq_target: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// `m4 / m2^2`; 3 for a Gaussian.
    pub fourth_moment_ratio: Option<f64>,
    pub fourth_ratio_se: Option<f64>,
}

pub fn normality_test(samples: &[f64], sigma_sq_target: f64) -> Result<NormalityReport> {
    if !(sigma_sq_target > 0.0) {
        return Err(Error::Domain(format!("target variance must be positive, got {sigma_sq_target}")));
    }
    let moments = moments(samples)?;
    let d = ks_statistic(samples, sigma_sq_target);
    let sqrt_n = (samples.len() as f64).sqrt();
    let p = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    Ok(NormalityReport {
        moments,
        sigma_sq_target,
        ks_statistic: d,
        ks_p_value: p,
        fourth_moment_ratio: moments.fourth_moment_ratio(),
        fourth_ratio_se: moments.kurtosis_se,
    })
}

/// Abscissa of a scaling fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingModel {
    /// `log V` against `log(1/eps)`.
    Power,
    /// `log V` against `log log(1/eps)`.
    LogPower,
}

/// Variance estimate at one `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub eps: f64,
    pub variance: f64,
    pub variance_se: f64,
}

/// Weighted least-squares slope of the log variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub ci95: (f64, f64),
}

pub fn scaling_fit(points: &[ScalingPoint], model: ScalingModel) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateGrid(format!("need at least 3 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[1].eps < w[0].eps)) {
        return Err(Error::DegenerateGrid("eps grid must be strictly decreasing".into()));
    }
    if points.iter().any(|p| !(p.eps > 0.0 && p.eps < 1.0 && p.variance > 0.0)) {
        return Err(Error::DegenerateGrid("need 0 < eps < 1 and positive variances".into()));
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|p| match model {
            ScalingModel::Power => (1.0 / p.eps).ln(),
            ScalingModel::LogPower => (1.0 / p.eps).ln().ln(),
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.variance.ln()).collect();
    let weighted = points.iter().all(|p| p.variance_se > 0.0);
    let ws: Vec<f64> = points
        .iter()
        .map(|p| if weighted { (p.variance / p.variance_se).powi(2) } else { 1.0 })
        .collect();
    let sw: f64 = ws.iter().sum();
    let xbar = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateGrid("abscissae coincide".into()));
    }
    let sxy: f64 = ws.iter().zip(xs.iter().zip(&ys)).map(|(w, (x, y))| w * (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let slope_se = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (points.len() as f64 - 2.0) / sxx).sqrt()
    };
    Ok(ScalingFit {
        model,
        points: points.to_vec(),
        slope,
        slope_se,
        intercept,
        ci95: (slope - 1.96 * slope_se, slope + 1.96 * slope_se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_sample_is_flagged() {
        let m = moments(&[2.5; 40]).unwrap();
        assert_eq!(m.variance, 0.0);
        assert!(m.excess_kurtosis.is_none());
        assert!(m.skewness.is_none());
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(moments(&[1.0; 10]), Err(Error::TooFewSamples { got: 10, need: 30 }));
    }

    #[test]
    fn two_point_sample_has_zero_skew() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let m = moments(&x).unwrap();
        assert_eq!(m.skewness, Some(0.0));
        assert_relative_eq!(m.fourth_moment_ratio().unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn order_invariance() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 17) as f64 * 0.3 - 1.1).collect();
        let mut y = x.clone();
        y.reverse();
        assert_eq!(moments(&x).unwrap(), moments(&y).unwrap());
        assert_eq!(normality_test(&x, 2.0).unwrap(), normality_test(&y, 2.0).unwrap());
    }

    #[test]
    fn kolmogorov_branches_agree() {
        for &l in &[1.0, 1.1, 1.18, 1.25, 1.4] {
            let pi2 = std::f64::consts::PI.powi(2);
            let small: f64 = 1.0
                - (2.0 * std::f64::consts::PI).sqrt() / l
                    * (1..=8).map(|j| (-(f64::from(2 * j - 1)).powi(2) * pi2 / (8.0 * l * l)).exp()).sum::<f64>();
            let large: f64 =
                2.0 * (1..=20).map(|j| (-1f64).powi(j - 1) * (-2.0 * f64::from(j * j) * l * l).exp()).sum::<f64>();
            assert_relative_eq!(small, large, max_relative = 1e-12);
        }
        assert_relative_eq!(kolmogorov_survival(1.3580986393225505), 0.05, max_relative = 1e-8);
    }

    #[test]
    fn ks_scale_invariance() {
        let x: Vec<f64> = (0..64).map(|i| (i as f64 - 31.5) * 0.07).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * 4.0).collect();
        assert_eq!(ks_statistic(&x, 1.3), ks_statistic(&scaled, 1.3 * 16.0));
    }

    #[test]
    fn fit_rejects_bad_grids() {
        let p = |eps, v| ScalingPoint { eps, variance: v, variance_se: 0.0 };
        assert!(scaling_fit(&[p(0.1, 1.0), p(0.01, 2.0)], ScalingModel::Power).is_err());
        assert!(scaling_fit(&[p(0.1, 1.0), p(0.2, 2.0), p(0.01, 3.0)], ScalingModel::Power).is_err());
    }

    #[test]
    fn planted_slopes() {
        let grid = [0.04, 0.02, 0.01, 0.005];
        let pts: Vec<ScalingPoint> =
            grid.iter().map(|&e: &f64| ScalingPoint { eps: e, variance: 0.7 * e.powi(-2), variance_se: 0.0 }).collect();
        let fit = scaling_fit(&pts, ScalingModel::Power).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10);
        let pts: Vec<ScalingPoint> =
            grid.iter().map(|&e: &f64| ScalingPoint { eps: e, variance: 1.3 * (1.0 / e).ln(), variance_se: 0.0 }).collect();
        let power = scaling_fit(&pts, ScalingModel::Power).unwrap();
        let log = scaling_fit(&pts, ScalingModel::LogPower).unwrap();
        assert!((log.slope - 1.0).abs() < 1e-10);
        assert!(power.slope.abs() < 0.35);
    }
}
