//! Independent reference computations used by the property suite.

use silt::kernel::{expected_kernel_derivative, kernel};
use silt::quadrature::integrate;
use silt::variance::mu;
use silt::{MultiIndex, Result};

/// Derivative orders, mollifier widths and points exercised by the finite-difference check.
pub fn finite_difference_cases() -> Vec<(Vec<u32>, f64, Vec<f64>)> {
    let mut cases = Vec::new();
    let orders = [vec![1u32], vec![2], vec![3], vec![4], vec![1, 1], vec![2, 1], vec![0, 3], vec![1, 1, 1], vec![2, 0, 2]];
    for (i, o) in orders.iter().enumerate() {
        for (j, &eps) in [0.02f64, 0.3, 1.0].iter().enumerate() {
            let x: Vec<f64> = (0..o.len())
                .map(|c| eps.sqrt() * (0.37 * (i + 2 * j + 3 * c) as f64).sin() * 1.8)
                .collect();
            cases.push((o.clone(), eps, x));
        }
    }
    cases
}

fn central(f: &dyn Fn(f64) -> f64, x: f64, n: u32, h: f64) -> f64 {
    if n == 0 {
        return f(x);
    }
    let stencil = |h: f64| -> f64 {
        let mut sum = 0.0;
        let mut binom = 1.0;
        for j in 0..=n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom * f(x + (f64::from(n) / 2.0 - f64::from(j)) * h);
            binom = binom * f64::from(n - j) / f64::from(j + 1);
        }
        sum / h.powi(n as i32)
    };
    let mut table: Vec<f64> = (0..4).map(|i| stencil(h / 2f64.powi(i))).collect();
    for level in 1..4 {
        let factor = 4f64.powi(level);
        table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
    }
    table[0]
}

/// Mixed partial derivative of the heat kernel by nested, Richardson-extrapolated central differences.
pub fn finite_difference(x: &[f64], eps: f64, orders: &[u32]) -> f64 {
    fn nested(x: &[f64], axis: usize, eps: f64, orders: &[u32]) -> f64 {
        if axis == orders.len() {
            return kernel(x, eps).expect("positive eps");
        }
        let f = |t: f64| {
            let mut y = x.to_vec();
            y[axis] = t;
            nested(&y, axis + 1, eps, orders)
        };
        central(&f, x[axis], orders[axis], 0.4 * eps.sqrt())
    }
    nested(x, 0, eps, orders)
}

/// `int_0^1 int_0^s E[p^(k)(B_s - B_r)] dr ds` by nested adaptive quadrature.
pub fn alpha_by_double_quadrature(eps: f64, k: &MultiIndex) -> Result<f64> {
    let inner = |s: f64| -> f64 {
        integrate(|r| expected_kernel_derivative(s - r, eps, k).unwrap_or(f64::NAN), 0.0, s, 1e-15, 1e-12)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    };
    Ok(integrate(inner, 0.0, 1.0, 1e-14, 1e-11)?.value)
}

/// Sample covariance and its standard error.
pub fn sample_covariance(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let cov = prods.iter().sum::<f64>() / (n - 1.0);
    let var = prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n - 1.0);
    (cov, (var / n).sqrt())
}

/// `int_0^horizon (1 - x/horizon) mu(x, u1, u2)^p dx`, one ordering only.
pub fn one_sided_mu_integral(p: u32, horizon: f64, u1: f64, u2: f64) -> Result<f64> {
    let f = |x: f64| (1.0 - x / horizon) * mu(x, u1, u2).powi(p as i32);
    let mut breaks = vec![0.0, (u1 - u2).max(0.0), u1];
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate(f, w[0], w[1], 0.0, 1e-13)?.value;
    }
    Ok(total)
}
