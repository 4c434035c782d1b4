//! Deterministic evaluation of the pre-limit variances, the interval
//! covariance kernels and the Gamma-integral identities.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{beta, phi, Regime};
use crate::error::{check_eps, Error, Result};
use crate::kernel::{expected_unchecked, MultiIndex};
use crate::quadrature::{composite_rule, geometric_breaks, integrate, Estimate};
use crate::special::{ln_factorial, ln_gamma};

/// Two time intervals `[s1, t1]` and `[s2, t2]` inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPair {
    pub s1: f64,
    pub t1: f64,
    pub s2: f64,
    pub t2: f64,
}

impl IntervalPair {
    pub fn new(s1: f64, t1: f64, s2: f64, t2: f64) -> Result<Self> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if !(inside(s1) && inside(t1) && inside(s2) && inside(t2) && s1 < t1 && s2 < t2) {
            return Err(Error::Domain(format!("invalid interval pair ({s1}, {t1}), ({s2}, {t2})")));
        }
        Ok(Self { s1, t1, s2, t2 })
    }

    pub fn swapped(&self) -> Self {
        Self { s1: self.s2, t1: self.t2, s2: self.s1, t2: self.t1 }
    }
}

fn overlap(s1: f64, t1: f64, s2: f64, t2: f64) -> f64 {
    (t1.min(t2) - s1.max(s2)).max(0.0)
}

/// `E[(B_{t1} - B_{s1})(B_{t2} - B_{s2})]`, the overlap length of the two intervals.
pub fn overlap_covariance(p: &IntervalPair) -> f64 {
    overlap(p.s1, p.t1, p.s2, p.t2)
}

/// Covariance of the increments over `[0, u1]` and `[x, x + u2]`.
pub fn mu(x: f64, u1: f64, u2: f64) -> f64 {
    overlap(0.0, u1, x, x + u2)
}

/// Closed form and quadrature of `int_0^inf mu(x, u, u)^p dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuPowerIntegral {
    pub closed_form: f64,
    pub quadrature: f64,
}

pub fn mu_power_integral(u: f64, p: u32) -> Result<MuPowerIntegral> {
    if !(u > 0.0) || p == 0 {
        return Err(Error::Domain(format!("need u > 0 and p >= 1, got u={u}, p={p}")));
    }
    let closed_form = u.powi(p as i32 + 1) / f64::from(p + 1);
    let quadrature = integrate(|x| mu(x, u, u).powi(p as i32), 0.0, u, 0.0, 1e-13)?.value;
    Ok(MuPowerIntegral { closed_form, quadrature })
}

/// Symmetrized covariance `int_0^n (1 - x/n) [mu(x,u1,u2)^p + mu(x,u2,u1)^p] dx` of `gamma_n(u1)`, `gamma_n(u2)`.
///
/// `horizon = f64::INFINITY` gives the large-horizon limit. On the diagonal this
/// is `2 int_0^inf mu(x,u,u)^p dx`; off the diagonal the two orderings differ.
pub fn gamma_covariance(p: u32, horizon: f64, u1: f64, u2: f64) -> Result<f64> {
    if !(u1 > 0.0 && u2 > 0.0 && horizon > 0.0) || p == 0 {
        return Err(Error::Domain("gamma covariance needs positive lags, horizon and p".into()));
    }
    let reach = u1.max(u2).min(horizon);
    let window = |x: f64| if horizon.is_finite() { 1.0 - x / horizon } else { 1.0 };
    let f = |x: f64| window(x) * (mu(x, u1, u2).powi(p as i32) + mu(x, u2, u1).powi(p as i32));
    let mut breaks = vec![0.0, u1.min(u2), (u1 - u2).abs(), reach];
    breaks.retain(|&b| b <= reach);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate(f, w[0], w[1], 0.0, 1e-13)?.value;
    }
    Ok(total)
}

/// Left-hand side by quadrature and right-hand side in closed form of
/// `int_0^inf b^p / (1 + b)^q db = Gamma(p+1) Gamma(q-p-1) / Gamma(q)`.
pub fn gamma_identity_check(p: u32, q: u32) -> Result<(f64, f64)> {
    if q < p + 2 {
        return Err(Error::Domain(format!("integrability needs q - p - 1 >= 1, got p={p}, q={q}")));
    }
    // b = t / (1 - t) turns the integrand into t^p (1 - t)^(q - p - 2)
    let f = |t: f64| t.powi(p as i32) * (1.0 - t).powi((q - p - 2) as i32);
    let lhs = integrate(f, 0.0, 1.0, 0.0, 1e-14)?.value;
    let (pf, qf) = (f64::from(p), f64::from(q));
    let rhs = (ln_gamma(pf + 1.0) + ln_gamma(qf - pf - 1.0) - ln_gamma(qf)).exp();
    Ok((lhs, rhs))
}

/// Node counts per geometric panel for the main and the comparison rule.
const ORDERS: (usize, usize) = (14, 10);

fn simplex_integral<F>(eps: f64, order: usize, f: F) -> f64
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let breaks = geometric_breaks(eps / 100.0, 2.0);
    let (x, w) = composite_rule(&breaks, order);
    let slices: Vec<f64> = x
        .par_iter()
        .zip(&w)
        .map(|(&b, &wb)| {
            let mut slice = 0.0;
            for (&xa, &wa) in x.iter().zip(&w) {
                let a = xa * (1.0 - b);
                let span = 1.0 - a - b;
                let mut row = 0.0;
                for (&xc, &wc) in x.iter().zip(&w) {
                    row += wc * f(a, b, xc * span);
                }
                slice += wa * (1.0 - b) * span * row;
            }
            wb * slice
        })
        .collect();
    slices.iter().sum()
}

fn simplex_estimate<F>(eps: f64, f: F) -> Estimate
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let value = simplex_integral(eps, ORDERS.0, &f);
    let coarse = simplex_integral(eps, ORDERS.1, &f);
    Estimate { value, error: (value - coarse).abs() }
}

/// Chaos-`m` variance `V^{(2m-|k|,d)}(eps) = 2 beta [V1 + V2]`.
pub fn variance_integral(eps: f64, m: u32, k: &MultiIndex) -> Result<Estimate> {
    check_eps(eps)?;
    let beta = beta(m, k)?;
    let p = (2 * m - k.total()) as i32;
    let q = f64::from(m) + k.d() as f64 / 2.0;
    let est = simplex_estimate(eps, |a, b, c| {
        let occ = 1.0 - a - b - c;
        let bp = b.powi(p);
        let v1 = ((a + b + eps) * (b + c + eps)).powf(-q);
        let v2 = ((a + b + c + eps) * (b + eps)).powf(-q);
        occ * bp * (v1 + v2)
    });
    Ok(Estimate { value: 2.0 * beta * est.value, error: 2.0 * beta * est.error })
}

/// `E[xi_1^k xi_2^k]` for a centered Gaussian pair with covariance entries `p11, p22, p12`.
fn isserlis(k: u32, p11: f64, p22: f64, p12: f64) -> f64 {
    let kf = ln_factorial(u64::from(k));
    let mut sum = 0.0;
    let mut j = k % 2;
    while j <= k {
        let h = (k - j) / 2;
        let log = 2.0 * kf - ln_factorial(u64::from(j)) - 2.0 * ln_factorial(u64::from(h)) - f64::from(2 * h) * 2f64.ln();
        sum += log.exp() * (p11 * p22).powi(h as i32) * p12.powi(j as i32);
        j += 2;
    }
    sum
}

/// Covariance of the integrand at two time pairs with lags `u1`, `u2` and increment overlap `c`.
fn pair_covariance(eps: f64, orders: &[u32], u1: f64, u2: f64, c: f64) -> f64 {
    let (s1, s2) = (u1 + eps, u2 + eps);
    let det = s1 * s2 - c * c;
    let g0 = 1.0 / (2.0 * PI * det.sqrt());
    let (p11, p22, p12) = (s2 / det, s1 / det, -c / det);
    let mut joint = 1.0;
    for &kj in orders {
        let sign = if kj % 2 == 1 { -1.0 } else { 1.0 };
        joint *= sign * g0 * isserlis(kj, p11, p22, p12);
    }
    joint - expected_unchecked(s1, orders) * expected_unchecked(s2, orders)
}

/// Exact `Var(alpha^{(k)}_d(eps))` of the continuum functional, all chaos components included.
pub fn total_variance_integral(eps: f64, k: &MultiIndex) -> Result<Estimate> {
    check_eps(eps)?;
    let orders = k.orders();
    let est = simplex_estimate(eps, |a, b, c| {
        let occ = 1.0 - a - b - c;
        occ * (pair_covariance(eps, orders, a + b, b + c, b) + pair_covariance(eps, orders, a + b + c, b, b))
    });
    Ok(Estimate { value: 2.0 * est.value, error: 2.0 * est.error })
}

/// Limiting chaos variance for `d = 1`, `|k| >= 3`.
pub fn d1_chaos_limit(m: u32, abs_k: u32) -> Result<f64> {
    if abs_k < 3 || 2 * m <= abs_k {
        return Err(Error::Domain(format!("need |k| >= 3 and 2m > |k|, got m={m}, |k|={abs_k}")));
    }
    let mf = f64::from(m);
    let log = ln_factorial(u64::from(2 * m - 1)) + ln_factorial(u64::from(abs_k - 3))
        - (2.0 * mf - 3.0) * 2f64.ln()
        - 2.0 * ln_factorial(u64::from(m - 1));
    Ok(log.exp() / PI * (1.0 / (mf - 0.5) + 1.0 / (mf - 1.5)))
}

/// Factor `r^2` that makes the chaos-`m` variance converge.
pub fn variance_normalizer(eps: f64, m: u32, k: &MultiIndex) -> Result<f64> {
    let (d, abs_k) = (k.d(), k.total());
    let rate = Regime::of(k)?.rate(crate::constants::Scope::Chaos(m), d, abs_k)?;
    let r = rate.eval(eps);
    Ok(r * r)
}

/// Known limit of `r^2 V` for chaos `m`, where one is available in closed form.
pub fn normalized_limit(m: u32, k: &MultiIndex) -> Result<Option<f64>> {
    let (d, abs_k) = (k.d(), k.total());
    Ok(match Regime::of(k)? {
        Regime::PowerConvergent | Regime::PowerDivergent => Some(beta(m, k)? * phi(m, d, abs_k)?),
        Regime::LogSquared if m == 1 => Some(1.0 / (4.0 * PI * PI)),
        Regime::LogSquared => None,
        Regime::LogDivergent => {
            let h = f64::from(m) - 0.5;
            Some(2.0 * beta(m, k)? * (1.0 / (h * h) + 1.0 / (h * (h - 1.0))))
        }
    })
}

/// Shape of a finite-`eps` correction term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    /// `eps^exponent`.
    Power(f64),
    /// `(log 1/eps)^(-power)`.
    InverseLog(f64),
}

impl Correction {
    fn scale(&self, eps: f64) -> f64 {
        match *self {
            Correction::Power(e) => eps.powf(e),
            Correction::InverseLog(p) => (1.0 / eps).ln().powf(-p),
        }
    }
}

/// Correction terms of `r^2 V(eps)` in increasing order.
///
/// In the power regimes the scaled integrand decays like `R^(1-q)` on the
/// plane where `b` stays bounded (`q = m + d/2`), which truncation at
/// `R = 1/eps` turns into `eps^(q-2)`; the homogeneous region contributes `eps^(d+|k|-3)`
/// and the occupation factor contributes `eps`.
pub fn corrections(m: u32, k: &MultiIndex) -> Result<Vec<Correction>> {
    Ok(match Regime::of(k)? {
        Regime::PowerConvergent | Regime::PowerDivergent => {
            let q = f64::from(m) + k.d() as f64 / 2.0;
            let mut e = vec![q - 2.0, f64::from(k.total()) + k.d() as f64 - 3.0, 1.0];
            e.sort_by(f64::total_cmp);
            e.dedup();
            e.into_iter().map(Correction::Power).collect()
        }
        _ => vec![Correction::InverseLog(1.0), Correction::InverseLog(2.0)],
    })
}

/// Repeated Richardson elimination of `corrections` from values on a decreasing `eps` grid.
pub fn richardson(eps: &[f64], values: &[f64], corrections: &[Correction]) -> Result<f64> {
    if eps.len() != values.len() || eps.len() < 2 {
        return Err(Error::DegenerateGrid("need at least two matching points".into()));
    }
    let mut v = values.to_vec();
    let mut grid = eps.to_vec();
    for corr in corrections.iter().take(eps.len() - 1) {
        let next: Vec<f64> = (0..v.len() - 1)
            .map(|i| {
                let (s0, s1) = (corr.scale(grid[i]), corr.scale(grid[i + 1]));
                (s0 * v[i + 1] - s1 * v[i]) / (s0 - s1)
            })
            .collect();
        v = next;
        grid.remove(0);
    }
    Ok(*v.last().unwrap())
}
