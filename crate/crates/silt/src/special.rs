//! Special functions not covered by `statrs`.

pub use statrs::function::factorial::ln_factorial;
pub use statrs::function::gamma::{gamma, ln_gamma};

const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `sum_{n>=0} (n + a)^(-s)` for `s > 1`, `a > 0`, via Euler–Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0);
    let shift = (12.0 - a).max(0.0).ceil() as usize;
    let mut sum = 0.0;
    for n in 0..shift {
        sum += (n as f64 + a).powf(-s);
    }
    let x = a + shift as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    let mut rising = s;
    let mut fact = 2.0;
    let mut xpow = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        sum += b / fact * rising * xpow;
        let j2 = 2.0 * (j as f64 + 1.0);
        rising *= (s + j2 - 1.0) * (s + j2);
        fact *= (j2 + 1.0) * (j2 + 2.0);
        xpow /= x * x;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn riemann_values() {
        assert_relative_eq!(hurwitz_zeta(2.0, 1.0), std::f64::consts::PI.powi(2) / 6.0, max_relative = 1e-14);
        assert_relative_eq!(hurwitz_zeta(4.0, 1.0), std::f64::consts::PI.powi(4) / 90.0, max_relative = 1e-14);
        // zeta(3/2) to 20 digits
        assert_relative_eq!(hurwitz_zeta(1.5, 1.0), 2.6123753486854883433, max_relative = 1e-14);
    }

    #[test]
    fn shift_recurrence() {
        for &(s, a) in &[(1.5, 0.3), (2.5, 17.0), (3.0, 101.0), (1.1, 4.5)] {
            let lhs = hurwitz_zeta(s, a);
            let rhs = a.powf(-s) + hurwitz_zeta(s, a + 1.0);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn half_integer_shift() {
        // zeta(2, 1/2) = 3 zeta(2) = pi^2 / 2
        assert_relative_eq!(hurwitz_zeta(2.0, 0.5), std::f64::consts::PI.powi(2) / 2.0, max_relative = 1e-14);
    }
}
