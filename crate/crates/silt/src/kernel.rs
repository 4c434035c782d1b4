//! Gaussian heat kernel and its mixed partial derivatives.
//!
//! Derivatives use the one-dimensional identity
//! `d^n/dz^n p_eps(z) = (-1)^n eps^(-n/2) He_n(z / sqrt(eps)) p_eps(z)`
//! together with the product structure of the d-dimensional kernel.
//! `He_n` is the unnormalized probabilists' Hermite polynomial; the
//! normalized polynomials `H_n = He_n / sqrt(n!)` differ by that factor only.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_eps, Error, Result};

/// Largest supported total derivative order.
pub const MAX_ORDER: u32 = 8;

/// Coordinates with `|x_j| / sqrt(eps)` above this value evaluate to exactly zero.
pub const CUTOFF: f64 = 40.0;

/// Derivative order `k = (k_1, ..., k_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex {
    orders: Vec<u32>,
}

impl MultiIndex {
    /// Builds a multi-index with `d >= 1` and `1 <= |k| <= MAX_ORDER`.
    pub fn new(orders: Vec<u32>) -> Result<Self> {
        let k = Self::with_zero(orders)?;
        if k.total() == 0 {
            return Err(Error::InvalidMultiIndex("|k| must be at least 1".into()));
        }
        Ok(k)
    }

    /// Like [`MultiIndex::new`] but also accepts `|k| = 0`.
    pub fn with_zero(orders: Vec<u32>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidMultiIndex("dimension must be at least 1".into()));
        }
        let total: u32 = orders.iter().sum();
        if total > MAX_ORDER {
            return Err(Error::OrderTooLarge(total));
        }
        Ok(Self { orders })
    }

    /// `k = (order, 0, ..., 0)` in dimension `d`.
    pub fn axis(d: usize, order: u32) -> Result<Self> {
        let mut orders = vec![0; d.max(1)];
        orders[0] = order;
        if d == 0 {
            return Err(Error::InvalidMultiIndex("dimension must be at least 1".into()));
        }
        Self::new(orders)
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn d(&self) -> usize {
        self.orders.len()
    }

    /// `|k|`.
    pub fn total(&self) -> u32 {
        self.orders.iter().sum()
    }

    /// True when `|k|` is odd.
    pub fn is_odd(&self) -> bool {
        self.total() % 2 == 1
    }

    /// True when some `k_j` is odd.
    pub fn any_odd(&self) -> bool {
        self.orders.iter().any(|&k| k % 2 == 1)
    }
}

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;

    fn try_from(orders: Vec<u32>) -> Result<Self> {
        Self::new(orders)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(k: MultiIndex) -> Self {
        k.orders
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.orders.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Probabilists' Hermite polynomial `He_n(y)`.
pub fn hermite_prob(n: u32, y: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = y;
    for j in 1..n {
        let next = y * cur - f64::from(j) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `(2 pi eps)^(-d/2) exp(-|x|^2 / (2 eps))`.
pub fn kernel(x: &[f64], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let d = x.len() as f64;
    Ok((2.0 * PI * eps).powf(-d / 2.0) * (-r2 / (2.0 * eps)).exp())
}

/// `d^k p_{d,eps}(x)`.
pub fn kernel_derivative(x: &[f64], eps: f64, k: &MultiIndex) -> Result<f64> {
    Ok(KernelDerivative::new(eps, k)?.eval(x)?)
}

/// Precomputed evaluator for `d^k p_{d,eps}` at fixed `eps` and `k`.
#[derive(Debug, Clone)]
pub struct KernelDerivative {
    orders: Vec<u32>,
    inv_sqrt_eps: f64,
    half_inv_eps: f64,
    prefactor: f64,
}

impl KernelDerivative {
    pub fn new(eps: f64, k: &MultiIndex) -> Result<Self> {
        check_eps(eps)?;
        let d = k.d() as f64;
        let total = f64::from(k.total());
        let sign = if k.is_odd() { -1.0 } else { 1.0 };
        Ok(Self {
            orders: k.orders().to_vec(),
            inv_sqrt_eps: 1.0 / eps.sqrt(),
            half_inv_eps: 0.5 / eps,
            prefactor: sign * eps.powf(-total / 2.0) * (2.0 * PI * eps).powf(-d / 2.0),
        })
    }

    pub fn d(&self) -> usize {
        self.orders.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.orders.len() {
            return Err(Error::DimensionMismatch { point: x.len(), index: self.orders.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates without checking `x.len()`; extra coordinates are ignored.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut r2 = 0.0;
        let mut poly = 1.0;
        for (&xj, &kj) in x.iter().zip(&self.orders) {
            let y = xj * self.inv_sqrt_eps;
            if y.abs() > CUTOFF {
                return 0.0;
            }
            r2 += xj * xj;
            if kj > 0 {
                poly *= hermite_prob(kj, y);
            }
        }
        self.prefactor * poly * (-r2 * self.half_inv_eps).exp()
    }
}

/// `(2n - 1)!!` with `(-1)!! = 1`.
pub(crate) fn double_factorial_odd(n: u32) -> f64 {
    (1..=n).map(|j| f64::from(2 * j - 1)).product()
}

/// `E[d^k p_{d,eps}(Z)]` for `Z ~ N(0, v I_d)`, which equals `d^k p_{d,v+eps}(0)`.
pub fn expected_kernel_derivative(v: f64, eps: f64, k: &MultiIndex) -> Result<f64> {
    check_eps(eps)?;
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("variance must be non-negative, got {v}")));
    }
    Ok(expected_unchecked(v + eps, k.orders()))
}

pub(crate) fn expected_unchecked(s: f64, orders: &[u32]) -> f64 {
    let mut out = 1.0;
    for &kj in orders {
        if kj % 2 == 1 {
            return 0.0;
        }
        let half = kj / 2;
        let sign = if half % 2 == 1 { -1.0 } else { 1.0 };
        out *= sign * double_factorial_odd(half) / (2.0 * PI).sqrt() * s.powf(-(f64::from(kj) + 1.0) / 2.0);
    }
    out
}
