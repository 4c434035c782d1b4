use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use silt::kernel::{expected_kernel_derivative, hermite_prob, kernel, kernel_derivative};
use silt::MultiIndex;

/// n-th derivative of `f` at `x` by central differences, Richardson-extrapolated over h, h/2, h/4, h/8.
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

/// Mixed derivative of the kernel by nested one-dimensional finite differences.
fn finite_difference(x: &[f64], eps: f64, orders: &[u32]) -> f64 {
    fn nested(x: &mut Vec<f64>, axis: usize, eps: f64, orders: &[u32]) -> f64 {
        if axis == orders.len() {
            return kernel(x, eps).unwrap();
        }
        let x0 = x[axis];
        let f = |t: f64| {
            let mut y = x.clone();
            y[axis] = t;
            nested(&mut y, axis + 1, eps, orders)
        };
        let v = central(&f, x0, orders[axis], 0.4 * eps.sqrt());
        x[axis] = x0;
        v
    }
    nested(&mut x.to_vec(), 0, eps, orders)
}

#[test]
fn finite_difference_reference_point() {
    let k = MultiIndex::new(vec![2, 1]).unwrap();
    let x = [0.3, -0.2];
    let exact = kernel_derivative(&x, 0.1, &k).unwrap();
    let fd = finite_difference(&x, 0.1, &[2, 1]);
    assert!((exact - fd).abs() <= 1e-6 * exact.abs(), "{exact} vs {fd}");
}

fn multi_index(max_d: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..=4, 1..=max_d).prop_filter("1 <= |k| <= 4", |v| {
        let s: u32 = v.iter().sum();
        (1..=4).contains(&s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_finite_differences(
        orders in multi_index(3),
        eps in 0.01f64..1.0,
        raw in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let k = MultiIndex::new(orders.clone()).unwrap();
        let x: Vec<f64> = raw[..k.d()].iter().map(|v| v * eps.sqrt()).collect();
        let exact = kernel_derivative(&x, eps, &k).unwrap();
        let fd = finite_difference(&x, eps, &orders);
        // error measured against the natural size eps^(-|k|/2) p(x) where the derivative crosses zero
        let envelope = eps.powf(-f64::from(k.total()) / 2.0) * kernel(&x, eps).unwrap();
        prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(envelope), "{exact} vs {fd}");
    }

    #[test]
    fn parity(orders in multi_index(4), eps in 0.01f64..2.0, raw in prop::collection::vec(-3.0f64..3.0, 4)) {
        let k = MultiIndex::new(orders).unwrap();
        let x: Vec<f64> = raw[..k.d()].to_vec();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let sign = if k.is_odd() { -1.0 } else { 1.0 };
        prop_assert_eq!(kernel_derivative(&neg, eps, &k).unwrap(), sign * kernel_derivative(&x, eps, &k).unwrap());
    }

    #[test]
    fn heat_semigroup(half in prop::collection::vec(0u32..=2, 1..=3), v in 0.0f64..3.0, eps in 0.001f64..1.0) {
        let orders: Vec<u32> = half.iter().map(|h| 2 * h).collect();
        prop_assume!((1..=8).contains(&orders.iter().sum::<u32>()));
        let k = MultiIndex::new(orders).unwrap();
        let lhs = expected_kernel_derivative(v, eps, &k).unwrap();
        let rhs = kernel_derivative(&vec![0.0; k.d()], v + eps, &k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs());
    }

    #[test]
    fn hermite_recurrence_parity(n in 0u32..=8, y in -5.0f64..5.0) {
        let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
        prop_assert_eq!(hermite_prob(n, -y), sign * hermite_prob(n, y));
    }
}

#[test]
fn kernel_normalization() {
    for &eps in &[0.01, 0.3, 1.0] {
        let half = 8.0 * f64::sqrt(eps);
        let m = 400;
        let h = 2.0 * half / m as f64;
        let weight = |i: usize| if i == 0 || i == m { 0.5 } else { 1.0 };
        let one: f64 = (0..=m).map(|i| weight(i) * h * kernel(&[-half + i as f64 * h], eps).unwrap()).sum();
        assert!((one - 1.0).abs() < 1e-8, "d=1 eps={eps}: {one}");
        let mut two = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                let x = [-half + i as f64 * h, -half + j as f64 * h];
                two += weight(i) * weight(j) * h * h * kernel(&x, eps).unwrap();
            }
        }
        assert!((two - 1.0).abs() < 1e-8, "d=2 eps={eps}: {two}");
    }
}

#[test]
fn expected_derivative_monte_carlo() {
    let k = MultiIndex::new(vec![2, 2, 0]).unwrap();
    let (v, eps) = (0.3f64, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 1_000_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    let sd = v.sqrt();
    for _ in 0..draws {
        let z: Vec<f64> = (0..3)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                sd * g
            })
            .collect();
        let f = kernel_derivative(&z, eps, &k).unwrap();
        s1 += f;
        s2 += f * f;
    }
    let n = draws as f64;
    let mean = s1 / n;
    let se = ((s2 / n - mean * mean) / n).sqrt();
    let exact = expected_kernel_derivative(v, eps, &k).unwrap();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
}
