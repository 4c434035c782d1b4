//! Analytic constants: Gaussian product moments, the chaos constants
//! `beta` and `phi`, limiting variances, the mean of the functional and
//! the regime-dependent renormalizers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_eps, Error, Result};
use crate::kernel::{double_factorial_odd, MultiIndex};
use crate::special::{hurwitz_zeta, ln_factorial, ln_gamma};

/// Asymptotic class of a pair `(d, |k|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// `d = 1`, `|k| = 2`.
    LogDivergent,
    /// `d = 2`, `|k| = 1`.
    LogSquared,
    /// `d <= 2`, `d + |k| >= 4`.
    PowerDivergent,
    /// `d >= 3`.
    PowerConvergent,
}

/// Whether a renormalizer refers to one chaos component or to the whole functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Chaos(u32),
    Total,
}

/// Functional form of a renormalizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    /// `(log 1/eps)^(-power)`.
    InverseLog(f64),
    /// `eps^exponent`.
    Power(f64),
}

impl Rate {
    pub fn eval(&self, eps: f64) -> f64 {
        match *self {
            Rate::InverseLog(p) => (1.0 / eps).ln().powf(-p),
            Rate::Power(e) => eps.powf(e),
        }
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::InverseLog(p) => write!(f, "(log 1/eps)^-{p}"),
            Rate::Power(e) => write!(f, "eps^{e}"),
        }
    }
}

impl Regime {
    pub fn classify(d: usize, abs_k: u32) -> Result<Self> {
        match (d, abs_k) {
            (0, _) => Err(Error::Inadmissible("dimension must be at least 1".into())),
            (_, 0) => Err(Error::Inadmissible("|k| = 0 is not covered".into())),
            (1, 1) => Err(Error::Inadmissible(
                "d = 1, |k| = 1 needs no renormalization and has no limit theorem".into(),
            )),
            (1, 2) => Ok(Regime::LogDivergent),
            (2, 1) => Ok(Regime::LogSquared),
            (d, _) if d >= 3 => Ok(Regime::PowerConvergent),
            _ => Ok(Regime::PowerDivergent),
        }
    }

    pub fn of(k: &MultiIndex) -> Result<Self> {
        Self::classify(k.d(), k.total())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Regime::LogDivergent => "LOG_DIVERGENT",
            Regime::LogSquared => "LOG_SQUARED",
            Regime::PowerDivergent => "POWER_DIVERGENT",
            Regime::PowerConvergent => "POWER_CONVERGENT",
        }
    }

    /// True when the series of per-chaos limiting variances converges.
    pub fn series_converges(&self) -> bool {
        matches!(self, Regime::PowerConvergent)
    }

    /// Renormalizing rate for `scope`.
    pub fn rate(&self, scope: Scope, d: usize, abs_k: u32) -> Result<Rate> {
        let power = Rate::Power((d as f64 + f64::from(abs_k) - 3.0) / 2.0);
        match scope {
            Scope::Chaos(m) => {
                if 2 * m <= abs_k {
                    return Err(Error::Inadmissible(format!("chaos m={m} requires 2m > |k| = {abs_k}")));
                }
                Ok(match self {
                    Regime::LogDivergent => Rate::InverseLog(0.5),
                    Regime::LogSquared if m == 1 => Rate::InverseLog(1.0),
                    Regime::LogSquared => Rate::InverseLog(0.5),
                    Regime::PowerDivergent | Regime::PowerConvergent => power,
                })
            }
            Scope::Total => match self {
                Regime::LogSquared => Ok(Rate::InverseLog(1.0)),
                Regime::PowerConvergent => Ok(power),
                Regime::LogDivergent | Regime::PowerDivergent => Err(Error::Divergent { d, abs_k }),
            },
        }
    }
}

/// Per-chaos limiting variance record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosTerm {
    pub m: u32,
    pub beta: f64,
    pub phi: f64,
    pub sigma_sq: f64,
}

/// `E[xi_1^{2 m_1} ... xi_d^{2 m_d}] = prod (2m_j)! / (prod m_j! 2^m)`.
pub fn gaussian_product_moment(parts: &[u32]) -> f64 {
    let m: u32 = parts.iter().sum();
    let log: f64 = parts
        .iter()
        .map(|&mj| ln_factorial(2 * u64::from(mj)) - ln_factorial(u64::from(mj)))
        .sum::<f64>()
        - f64::from(m) * 2f64.ln();
    log.exp()
}

fn check_chaos(m: u32, abs_k: u32) -> Result<()> {
    if 2 * m <= abs_k {
        Err(Error::Domain(format!("need 2m > |k|, got m={m}, |k|={abs_k}")))
    } else {
        Ok(())
    }
}

/// `beta_{2m-|k|,d}` as an explicit sum over compositions of `m`.
pub fn beta(m: u32, k: &MultiIndex) -> Result<f64> {
    check_chaos(m, k.total())?;
    let d = k.d();
    let base = -(d as f64) * (2.0 * PI).ln() - 2.0 * f64::from(m) * 2f64.ln();
    let mut parts = vec![0u32; d];
    let mut sum = 0.0;
    compositions(k.orders(), 0, m, &mut parts, &mut |parts| {
        let log: f64 = parts
            .iter()
            .zip(k.orders())
            .map(|(&mj, &kj)| {
                let (mj, kj) = (u64::from(mj), u64::from(kj));
                2.0 * ln_factorial(2 * mj) - ln_factorial(2 * mj - kj) - 2.0 * ln_factorial(mj)
            })
            .sum();
        sum += (base + log).exp();
    });
    Ok(sum)
}

fn compositions(orders: &[u32], j: usize, left: u32, parts: &mut [u32], visit: &mut impl FnMut(&[u32])) {
    let kj = orders[j];
    if j + 1 == orders.len() {
        if 2 * left >= kj {
            parts[j] = left;
            visit(parts);
        }
        return;
    }
    let rest_min: u32 = orders[j + 1..].iter().map(|k| k.div_ceil(2)).sum();
    for mj in kj.div_ceil(2)..=left.saturating_sub(rest_min) {
        if left < rest_min {
            break;
        }
        parts[j] = mj;
        compositions(orders, j + 1, left - mj, parts, visit);
    }
}

/// `beta_{2m-|k|,d}` for every `m` in `0..=m_max` (zero where `2m <= |k|`).
///
/// Uses the convolution form `beta = (2 pi)^-d sum prod c_{m_j} (2 m_j)_{k_j}`
/// with `c_n = binom(2n, n) / 4^n`; agrees with [`beta`] term by term.
pub fn beta_series(k: &MultiIndex, m_max: u32) -> Vec<f64> {
    let len = m_max as usize + 1;
    let mut c = vec![1.0; len];
    for n in 1..len {
        c[n] = c[n - 1] * (2.0 * n as f64 - 1.0) / (2.0 * n as f64);
    }
    let factor = |n: usize, kj: u32| -> f64 {
        if 2 * n < kj as usize {
            return 0.0;
        }
        let fall: f64 = (0..kj).map(|i| (2 * n) as f64 - f64::from(i)).product();
        c[n] * fall
    };
    let mut acc: Vec<f64> = (0..len).map(|n| factor(n, k.orders()[0])).collect();
    for &kj in &k.orders()[1..] {
        let h: Vec<f64> = (0..len).map(|n| factor(n, kj)).collect();
        let mut next = vec![0.0; len];
        for (m, slot) in next.iter_mut().enumerate() {
            *slot = (0..=m).map(|i| acc[i] * h[m - i]).sum();
        }
        acc = next;
    }
    let norm = (2.0 * PI).powi(-(k.d() as i32));
    acc.iter()
        .enumerate()
        .map(|(m, v)| if 2 * m as u32 > k.total() { v * norm } else { 0.0 })
        .collect()
}

/// `phi(m, d, |k|)`.
pub fn phi(m: u32, d: usize, abs_k: u32) -> Result<f64> {
    check_chaos(m, abs_k)?;
    let (mf, df, kf) = (f64::from(m), d as f64, f64::from(abs_k));
    if d as u32 + abs_k < 4 {
        return Err(Error::Domain(format!("phi needs d + |k| >= 4, got d={d}, |k|={abs_k}")));
    }
    let h1 = mf + df / 2.0 - 1.0;
    let h2 = mf + df / 2.0 - 2.0;
    if h2 <= 0.0 {
        return Err(Error::Domain(format!("phi needs m + d/2 - 2 > 0, got m={m}, d={d}")));
    }
    let log = ln_gamma(2.0 * mf - kf + 1.0) + ln_gamma(df + kf - 3.0) - ln_gamma(2.0 * mf + df - 2.0);
    Ok(2.0 * log.exp() / h1 * (1.0 / h1 + 1.0 / h2))
}

/// `beta * phi` for chaos `m`.
pub fn sigma_sq_term(m: u32, k: &MultiIndex) -> Result<ChaosTerm> {
    let beta = beta(m, k)?;
    let phi = phi(m, k.d(), k.total())?;
    Ok(ChaosTerm { m, beta, phi, sigma_sq: beta * phi })
}

/// Result of summing the per-chaos limiting variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    /// Partial sum plus the estimated tail.
    pub value: f64,
    /// Index `M` of the last explicitly summed term.
    pub terms_used: u32,
    pub partial_sum: f64,
    pub tail: f64,
    /// Uncertainty of `tail`.
    pub tail_error: f64,
}

/// Per-chaos limiting variances `sigma_sq` for `m` up to `m_max` (zero below the first admissible `m`).
pub fn sigma_sq_series(k: &MultiIndex, m_max: u32) -> Result<Vec<f64>> {
    let betas = beta_series(k, m_max);
    let (d, abs_k) = (k.d(), k.total());
    betas
        .iter()
        .enumerate()
        .map(|(m, &b)| {
            let m = m as u32;
            if 2 * m <= abs_k || f64::from(m) + d as f64 / 2.0 - 2.0 <= 0.0 {
                Ok(0.0)
            } else {
                Ok(b * phi(m, d, abs_k)?)
            }
        })
        .collect()
}

/// Total limiting variance `sum_m sigma_sq`, defined for `d >= 3`.
///
/// The terms behave like `m^(-d/2) (a_0 + a_1/m + ...)`. After summing
/// `m <= M`, the expansion coefficients are fitted on `[M/2, M]` and the tail
/// is summed exactly with Hurwitz zeta values; `M` doubles until the spread
/// between consecutive expansion orders drops below `rel_tol` of the total.
pub fn sigma_total(k: &MultiIndex, rel_tol: f64) -> Result<SeriesSum> {
    let regime = Regime::of(k)?;
    if !regime.series_converges() {
        return Err(Error::Divergent { d: k.d(), abs_k: k.total() });
    }
    const MAX_TERMS: u32 = 8192;
    const MAX_ORDER: usize = 8;
    let half_d = k.d() as f64 / 2.0;
    let mut m_max = 32;
    loop {
        let terms = sigma_sq_series(k, m_max)?;
        let partial: f64 = terms.iter().sum();
        let scaled = |m: u32| terms[m as usize] * f64::from(m).powf(half_d);
        let mut tails = Vec::new();
        for order in 1..=MAX_ORDER {
            let nodes: Vec<u32> = (0..=order)
                .map(|i| m_max - (i as u32 * m_max) / (2 * order as u32))
                .collect();
            let x: Vec<f64> = nodes.iter().map(|&m| 1.0 / f64::from(m)).collect();
            let y: Vec<f64> = nodes.iter().map(|&m| scaled(m)).collect();
            let coef = solve_vandermonde(&x, &y);
            let tail: f64 = coef
                .iter()
                .enumerate()
                .map(|(j, a)| a * hurwitz_zeta(half_d + j as f64, f64::from(m_max) + 1.0))
                .sum();
            tails.push(tail);
        }
        let (best, err) = tails
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i + 1, (w[1] - w[0]).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let tail = tails[best];
        let value = partial + tail;
        let err = err.max(64.0 * f64::EPSILON * value.abs());
        if err <= rel_tol * value.abs() || m_max >= MAX_TERMS {
            return Ok(SeriesSum { value, terms_used: m_max, partial_sum: partial, tail, tail_error: err });
        }
        m_max *= 2;
    }
}

fn solve_vandermonde(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut a: Vec<Vec<f64>> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let mut row: Vec<f64> = (0..n).map(|j| xi.powi(j as i32)).collect();
            row.push(yi);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for j in col..=n {
                a[row][j] -= f * a[col][j];
            }
        }
    }
    let mut coef = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| a[row][j] * coef[j]).sum();
        coef[row] = (a[row][n] - s) / a[row][row];
    }
    coef
}

/// `E[alpha^{(k)}_d(eps)] = C_k int_0^1 (1 - u) (u + eps)^(-(|k| + d)/2) du`.
pub fn expected_alpha(eps: f64, k: &MultiIndex) -> Result<f64> {
    check_eps(eps)?;
    if k.any_odd() {
        return Ok(0.0);
    }
    let c: f64 = k
        .orders()
        .iter()
        .map(|&kj| {
            let sign = if (kj / 2) % 2 == 1 { -1.0 } else { 1.0 };
            sign * double_factorial_odd(kj / 2) / (2.0 * PI).sqrt()
        })
        .product();
    let q = (f64::from(k.total()) + k.d() as f64) / 2.0;
    let log_ratio = (1.0 / eps).ln_1p();
    let integral = if q == 1.0 {
        (1.0 + eps) * log_ratio - 1.0
    } else if q == 2.0 {
        1.0 / eps - log_ratio
    } else {
        let power = |s: f64| ((1.0 + eps).powf(1.0 - s) - eps.powf(1.0 - s)) / (1.0 - s);
        (1.0 + eps) * power(q) - power(q - 1.0)
    };
    Ok(c * integral)
}

/// Renormalizing factor for `scope` at `eps`.
pub fn renormalizer(scope: Scope, k: &MultiIndex, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("renormalizer needs 0 < eps < 1, got {eps}")));
    }
    let rate = Regime::of(k)?.rate(scope, k.d(), k.total())?;
    Ok(rate.eval(eps))
}
