//! Brownian path generation and Monte Carlo estimators for the renormalized
//! functional and for the reduced statistics `gamma` and `eta`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constants::{expected_alpha, phi, renormalizer, Regime, Scope};
use crate::error::{check_eps, Error, Result};
use crate::kernel::{expected_unchecked, KernelDerivative, MultiIndex};
use crate::quadrature::{gauss_legendre, geometric_breaks, integrate};
use crate::variance::mu;

const STREAM_SILT: u64 = 0x5349_4c54;
const STREAM_GAMMA: u64 = 0x4741_4d4d;
const STREAM_ETA: u64 = 0x4554_4120;

/// Generator for replicate `index` of stream `tag` under `master_seed`.
///
/// The key holds `(master_seed, tag)` and the ChaCha stream number holds
/// `index`, so every replicate owns an independent counter-based sequence.
pub fn stream_rng(master_seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// How the raw estimate is centered before renormalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// Subtract the exact mean of the grid estimator.
    GridMatched,
    /// Subtract the mean of the continuum functional.
    Continuum,
    /// No centering; only allowed for odd `|k|`.
    None,
}

/// Monte Carlo description of the renormalized functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k: MultiIndex,
    pub eps: f64,
    /// Number of grid steps on `[0, 1]`.
    pub n: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub centering: Centering,
}

impl SimConfig {
    pub fn new(k: MultiIndex, eps: f64, n: usize, replicates: usize, master_seed: u64, centering: Centering) -> Result<Self> {
        let cfg = Self { k, eps, n, replicates, master_seed, centering };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if self.n < 2 {
            return Err(Error::Domain(format!("need n >= 2 grid steps, got {}", self.n)));
        }
        if self.replicates < 1 {
            return Err(Error::Domain("need at least one replicate".into()));
        }
        if self.centering == Centering::None && !self.k.is_odd() {
            return Err(Error::Domain("centering can be omitted only for odd |k|".into()));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.k.d()
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Warning text when `eps < 10 delta`, where the grid under-resolves the kernel.
    pub fn resolution_warning(&self) -> Option<String> {
        (self.eps < 10.0 * self.delta()).then(|| {
            format!("eps = {} is below 10 * delta = {}; the kernel is under-resolved", self.eps, 10.0 * self.delta())
        })
    }
}

/// Brownian increments of one replicate, stored coordinate by coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIncrements {
    d: usize,
    n: usize,
    data: Vec<f64>,
}

impl PathIncrements {
    pub fn from_data(d: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != d * n {
            return Err(Error::DimensionMismatch { point: data.len(), index: d * n });
        }
        Ok(Self { d, n, data })
    }

    pub fn zeros(d: usize, n: usize) -> Self {
        Self { d, n, data: vec![0.0; d * n] }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coordinate(&self, c: usize) -> &[f64] {
        &self.data[c * self.n..(c + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn negated(&self) -> Self {
        Self { d: self.d, n: self.n, data: self.data.iter().map(|v| -v).collect() }
    }
}

/// Increments of replicate `replicate`: `d * n` independent `N(0, 1/n)` variates.
pub fn generate_increments(cfg: &SimConfig, replicate: u64) -> PathIncrements {
    let mut rng = stream_rng(cfg.master_seed, STREAM_SILT, replicate);
    let scale = cfg.delta().sqrt();
    let data = (0..cfg.d() * cfg.n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    PathIncrements { d: cfg.d(), n: cfg.n, data }
}

/// Riemann sum `sum_{0 <= i < j <= n-1} d^k p_eps(B_{t_j} - B_{t_i}) delta^2`.
pub fn silt_estimate(path: &PathIncrements, eps: f64, k: &MultiIndex) -> Result<f64> {
    if path.d != k.d() {
        return Err(Error::DimensionMismatch { point: path.d, index: k.d() });
    }
    let kernel = KernelDerivative::new(eps, k)?;
    let (d, n) = (path.d, path.n);
    let mut positions = vec![0.0; d * n];
    for c in 0..d {
        let incr = path.coordinate(c);
        for l in 1..n {
            positions[l * d + c] = positions[(l - 1) * d + c] + incr[l - 1];
        }
    }
    let mut diff = vec![0.0; d];
    let mut total = 0.0;
    for j in 1..n {
        let bj = &positions[j * d..(j + 1) * d];
        let mut row = 0.0;
        for i in 0..j {
            let bi = &positions[i * d..(i + 1) * d];
            for c in 0..d {
                diff[c] = bj[c] - bi[c];
            }
            row += kernel.eval_unchecked(&diff);
        }
        total += row;
    }
    let delta = 1.0 / n as f64;
    Ok(total * delta * delta)
}

/// Exact mean of [`silt_estimate`] under Brownian increments.
pub fn grid_expected_silt(cfg: &SimConfig) -> f64 {
    let delta = cfg.delta();
    let orders = cfg.k.orders();
    if cfg.k.any_odd() {
        return 0.0;
    }
    let sum: f64 = (1..cfg.n)
        .map(|l| (cfg.n - l) as f64 * expected_unchecked(l as f64 * delta + cfg.eps, orders))
        .sum();
    sum * delta * delta
}

/// Description of a reduced-statistic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaConfig {
    pub regime: EtaRegime,
    pub m: u32,
    pub eps: f64,
    /// Time steps per unit length.
    pub grid: usize,
    /// Largest lag; chosen automatically when absent.
    pub u_max: Option<f64>,
    pub replicates: usize,
    pub master_seed: u64,
}

/// Which reduced statistic is simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRegime {
    /// Power regime for derivative order `k`.
    Power { k: MultiIndex },
    /// `d = 1`, `|k| = 2`.
    Log,
}

impl EtaConfig {
    /// Number of independent coordinates `p = 2m - |k|`.
    pub fn p(&self) -> Result<u32> {
        let abs_k = match &self.regime {
            EtaRegime::Power { k } => k.total(),
            EtaRegime::Log => 2,
        };
        if 2 * self.m <= abs_k {
            return Err(Error::Domain(format!("need 2m > |k|, got m={}, |k|={abs_k}", self.m)));
        }
        Ok(2 * self.m - abs_k)
    }

    /// Weight exponent `q = m + d/2`.
    pub fn q(&self) -> f64 {
        let d = match &self.regime {
            EtaRegime::Power { k } => k.d(),
            EtaRegime::Log => 1,
        };
        f64::from(self.m) + d as f64 / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if self.eps >= 1.0 {
            return Err(Error::Domain("eta needs eps < 1".into()));
        }
        if self.grid == 0 || self.replicates == 0 {
            return Err(Error::Domain("grid and replicates must be positive".into()));
        }
        self.p()?;
        match &self.regime {
            EtaRegime::Power { k } => {
                if k.d() as u32 + k.total() < 4 {
                    return Err(Error::Inadmissible("power-regime eta needs d + |k| >= 4".into()));
                }
                phi(self.m, k.d(), k.total())?;
            }
            EtaRegime::Log => {
                if self.m < 2 {
                    return Err(Error::Inadmissible("log-regime eta needs m >= 2".into()));
                }
            }
        }
        Ok(())
    }

    /// Variance the statistic converges to as `eps -> 0`.
    pub fn limit_variance(&self) -> Result<f64> {
        match &self.regime {
            EtaRegime::Power { k } => phi(self.m, k.d(), k.total()),
            EtaRegime::Log => {
                let h = f64::from(self.m) - 0.5;
                Ok(2.0 * (1.0 / (h * h) + 1.0 / (h * (h - 1.0))))
            }
        }
    }

    /// Lag truncation: the explicit value, else the tail rule for the power
    /// regime and the horizon `1/eps` for the log regime.
    pub fn resolved_u_max(&self) -> Result<f64> {
        if let Some(u) = self.u_max {
            return Ok(u);
        }
        match &self.regime {
            EtaRegime::Power { .. } => eta_u_max(self.p()?, self.q(), 0.01 * self.limit_variance()?.sqrt()),
            EtaRegime::Log => Ok(1.0 / self.eps),
        }
    }
}

/// `int_U^inf (1 + u)^(-q) sqrt(2 u^(p+1) / (p+1)) du`, an L2 bound on the lag tail of `eta`.
pub fn eta_tail_bound(p: u32, q: f64, u: f64) -> Result<f64> {
    let pf = f64::from(p);
    if q - (pf + 1.0) / 2.0 <= 1.0 {
        return Err(Error::Domain(format!("tail bound diverges for p={p}, q={q}")));
    }
    let f = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let x = u / s;
        (1.0 + x).powf(-q) * (2.0 * x.powf(pf + 1.0) / (pf + 1.0)).sqrt() * u / (s * s)
    };
    Ok(integrate(f, 0.0, 1.0, 0.0, 1e-10)?.value)
}

/// Smallest lag truncation whose tail bound is below `target`.
pub fn eta_u_max(p: u32, q: f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-3f64, 1e12f64);
    if eta_tail_bound(p, q, lo)? <= target {
        return Ok(lo);
    }
    if eta_tail_bound(p, q, hi)? > target {
        return Err(Error::Domain("tail target unreachable".into()));
    }
    while hi / lo > 1.0 + 1e-6 {
        let mid = (lo * hi).sqrt();
        if eta_tail_bound(p, q, mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn brownian_paths(rng: &mut ChaCha8Rng, p: usize, len: usize, h: f64) -> Vec<Vec<f64>> {
    let scale = h.sqrt();
    (0..p)
        .map(|_| {
            let mut b = Vec::with_capacity(len);
            let mut x = 0.0;
            b.push(x);
            for _ in 1..len {
                let z: f64 = StandardNormal.sample(rng);
                x += scale * z;
                b.push(x);
            }
            b
        })
        .collect()
}

/// `G(l) = sum_{i < s} prod_c (B^c_{i+l} - B^c_i)` for `l = 0..=lags`, by direct summation.
pub fn lagged_products_direct(paths: &[Vec<f64>], s: usize, lags: usize) -> Vec<f64> {
    (0..=lags)
        .map(|l| {
            (0..s)
                .map(|i| paths.iter().map(|b| b[i + l] - b[i]).product::<f64>())
                .sum()
        })
        .collect()
}

/// Same as [`lagged_products_direct`], using prefix sums for one path and
/// FFT cross-correlations of the `2^p` subset products otherwise.
pub fn lagged_products(paths: &[Vec<f64>], s: usize, lags: usize) -> Vec<f64> {
    if paths.len() == 1 {
        let b = &paths[0];
        let mut prefix = vec![0.0; s + lags + 1];
        for j in 0..s + lags {
            prefix[j + 1] = prefix[j] + b[j];
        }
        return (0..=lags).map(|l| (prefix[s + l] - prefix[l]) - prefix[s]).collect();
    }
    let p = paths.len();
    let len = s + lags;
    let size = (len + s).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let centered: Vec<Vec<f64>> = paths
        .iter()
        .map(|b| {
            let mean = b[..len].iter().sum::<f64>() / len as f64;
            b[..len].iter().map(|v| v - mean).collect()
        })
        .collect();
    let mut acc = vec![Complex::new(0.0, 0.0); size];
    for mask in 0u32..(1 << p) {
        let mut x = vec![Complex::new(0.0, 0.0); size];
        let mut y = vec![Complex::new(0.0, 0.0); size];
        for j in 0..len {
            let mut prod = 1.0;
            for (c, b) in centered.iter().enumerate() {
                if mask >> c & 1 == 1 {
                    prod *= b[j];
                }
            }
            x[j].re = prod;
        }
        for i in 0..s {
            let mut prod = 1.0;
            for (c, b) in centered.iter().enumerate() {
                if mask >> c & 1 == 0 {
                    prod *= b[i];
                }
            }
            y[i].re = prod;
        }
        fft.process(&mut x);
        fft.process(&mut y);
        let sign = if (p as u32 - mask.count_ones()) % 2 == 1 { -1.0 } else { 1.0 };
        for (a, (xv, yv)) in acc.iter_mut().zip(x.iter().zip(&y)) {
            *a += sign * xv * yv.conj();
        }
    }
    ifft.process(&mut acc);
    (0..=lags).map(|l| acc[l].re / size as f64).collect()
}

/// `gamma_n(u) = n^(-1/2) int_0^n prod_c (B^c_{s+u} - B^c_s) ds` at lags `lag_steps * h`, from one set of paths.
pub fn gamma_process(p: u32, horizon: f64, lag_steps: &[usize], h: f64, seed: u64, replicate: u64) -> Result<Vec<f64>> {
    if p == 0 || !(horizon > 0.0 && h > 0.0) {
        return Err(Error::Domain("gamma needs p >= 1 and positive horizon and step".into()));
    }
    let s = (horizon / h).round() as usize;
    let lags = lag_steps.iter().copied().max().unwrap_or(0);
    let mut rng = stream_rng(seed, STREAM_GAMMA, replicate);
    let paths = brownian_paths(&mut rng, p as usize, s + lags + 1, h);
    let scale = h / horizon.sqrt();
    Ok(lag_steps
        .iter()
        .map(|&l| {
            let g: f64 = (0..s).map(|i| paths.iter().map(|b| b[i + l] - b[i]).product::<f64>()).sum();
            scale * g
        })
        .collect())
}

/// One realization of `gamma_n(u)` with time step `u / grid`.
pub fn gamma_simulate(p: u32, horizon: f64, u: f64, grid: usize, seed: u64, replicate: u64) -> Result<f64> {
    if !(u > 0.0) || grid == 0 {
        return Err(Error::Domain("gamma needs u > 0 and grid >= 1".into()));
    }
    Ok(gamma_process(p, horizon, &[grid], u / grid as f64, seed, replicate)?[0])
}

/// `int_0^U (1+u)^(-q) gamma_n(u) du` with trapezoid weights on the lag grid.
fn eta_core(p: u32, q: f64, horizon: f64, h: f64, u_max: f64, rng: &mut ChaCha8Rng) -> f64 {
    let s = (horizon / h).round().max(1.0) as usize;
    let lags = (u_max / h).round().max(1.0) as usize;
    let paths = brownian_paths(rng, p as usize, s + lags + 1, h);
    let g = lagged_products(&paths, s, lags);
    let scale = h / horizon.sqrt();
    let mut sum = 0.0;
    for (l, gl) in g.iter().enumerate() {
        let w = if l == 0 || l == lags { 0.5 } else { 1.0 };
        sum += w * (1.0 + l as f64 * h).powf(-q) * gl;
    }
    sum * h * scale
}

/// One realization of the power-regime statistic for chaos `m` and order `k`.
pub fn eta_power_simulate(m: u32, k: &MultiIndex, eps: f64, grid: usize, u_max: Option<f64>, seed: u64, replicate: u64) -> Result<f64> {
    let cfg = EtaConfig {
        regime: EtaRegime::Power { k: k.clone() },
        m,
        eps,
        grid,
        u_max,
        replicates: 1,
        master_seed: seed,
    };
    cfg.validate()?;
    eta_sample(&cfg, cfg.resolved_u_max()?, replicate)
}

/// One realization of the log-regime statistic for chaos `m` (`d = 1`, `|k| = 2`).
pub fn eta_log_simulate(m: u32, eps: f64, grid: usize, u_max: Option<f64>, seed: u64, replicate: u64) -> Result<f64> {
    let cfg = EtaConfig { regime: EtaRegime::Log, m, eps, grid, u_max, replicates: 1, master_seed: seed };
    cfg.validate()?;
    eta_sample(&cfg, cfg.resolved_u_max()?, replicate)
}

fn eta_sample(cfg: &EtaConfig, u_max: f64, replicate: u64) -> Result<f64> {
    let horizon = 1.0 / cfg.eps;
    let mut rng = stream_rng(cfg.master_seed, STREAM_ETA, replicate);
    let raw = eta_core(cfg.p()?, cfg.q(), horizon, 1.0 / cfg.grid as f64, u_max, &mut rng);
    Ok(match cfg.regime {
        EtaRegime::Power { .. } => raw,
        EtaRegime::Log => raw / horizon.ln().sqrt(),
    })
}

/// Exact variance of the lag-truncated statistic at finite horizon,
/// `int int w(u1) w(u2) Cov(gamma_n(u1), gamma_n(u2)) du1 du2` with `w(u) = (1+u)^(-q)`,
/// before the log normalization of the log regime.
pub fn eta_exact_variance(p: u32, q: f64, horizon: f64, u_max: f64) -> f64 {
    let (gx, gw) = gauss_legendre(24);
    let (cx, cw) = gauss_legendre(p as usize / 2 + 2);
    let cov = |u1: f64, u2: f64| -> f64 {
        let (hi, lo) = (u1.max(u2), u1.min(u2));
        let reach = hi.min(horizon);
        let mut breaks = vec![0.0, lo, hi - lo, reach];
        breaks.retain(|&b| b <= reach);
        breaks.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wt) in cx.iter().zip(&cw) {
                let t = mid + half * x;
                let f = (1.0 - t / horizon) * (mu(t, u1, u2).powi(p as i32) + mu(t, u2, u1).powi(p as i32));
                total += half * wt * f;
            }
        }
        total
    };
    let mut outer = geometric_breaks(1e-3 / u_max, 2.0).iter().map(|b| b * u_max).collect::<Vec<f64>>();
    if horizon < u_max {
        outer.push(horizon);
        outer.sort_by(f64::total_cmp);
    }
    let weight = |u: f64| (1.0 + u).powf(-q);
    let mut total = 0.0;
    for pair in outer.windows(2) {
        let (mid, half) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
        for (x1, w1) in gx.iter().zip(&gw) {
            let u1 = mid + half * x1;
            let mut inner_breaks: Vec<f64> = geometric_breaks(1e-3, 2.0).iter().map(|b| b * u1).collect();
            if u1 > horizon {
                inner_breaks.push(u1 - horizon);
                inner_breaks.sort_by(f64::total_cmp);
            }
            let mut inner = 0.0;
            for ib in inner_breaks.windows(2) {
                let (m2, h2) = (0.5 * (ib[0] + ib[1]), 0.5 * (ib[1] - ib[0]));
                for (x2, w2) in gx.iter().zip(&gw) {
                    let u2 = m2 + h2 * x2;
                    inner += h2 * w2 * weight(u2) * cov(u1, u2);
                }
            }
            total += half * w1 * weight(u1) * inner;
        }
    }
    2.0 * total
}

/// Which experiment produced a [`SampleSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Silt(SimConfig),
    Eta(EtaConfig),
}

/// Collected statistics of one experiment, in replicate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub experiment: Experiment,
    pub values: Vec<f64>,
    /// Stream index of each replicate under the master seed.
    pub streams: Vec<u64>,
    /// Subtracted centering term (zero for eta).
    pub center: f64,
    /// Multiplicative renormalizer applied after centering.
    pub scale: f64,
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Renormalized, centered samples of the functional. `workers = 0` uses the global pool.
pub fn run_silt_experiment(cfg: &SimConfig, workers: usize) -> Result<SampleSet> {
    cfg.validate()?;
    Regime::of(&cfg.k)?;
    let scale = renormalizer(Scope::Total, &cfg.k, cfg.eps)?;
    run_silt_with_scale(cfg, scale, workers)
}

/// Centered samples of the functional multiplied by `scale`.
pub fn run_silt_with_scale(cfg: &SimConfig, scale: f64, workers: usize) -> Result<SampleSet> {
    cfg.validate()?;
    let center = match cfg.centering {
        Centering::GridMatched => grid_expected_silt(cfg),
        Centering::Continuum => expected_alpha(cfg.eps, &cfg.k)?,
        Centering::None => 0.0,
    };
    let cfg_arc = Arc::new(cfg.clone());
    let values = with_workers(workers, || {
        (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let path = generate_increments(&cfg_arc, r);
                silt_estimate(&path, cfg_arc.eps, &cfg_arc.k).map(|v| scale * (v - center))
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(SampleSet {
        experiment: Experiment::Silt(cfg.clone()),
        values,
        streams: (0..cfg.replicates as u64).collect(),
        center,
        scale,
    })
}

/// Independent realizations of the reduced statistic.
pub fn run_eta_experiment(cfg: &EtaConfig, workers: usize) -> Result<SampleSet> {
    cfg.validate()?;
    let u_max = cfg.resolved_u_max()?;
    let values = with_workers(workers, || {
        (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|r| eta_sample(cfg, u_max, r))
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(SampleSet {
        experiment: Experiment::Eta(EtaConfig { u_max: Some(u_max), ..cfg.clone() }),
        values,
        streams: (0..cfg.replicates as u64).collect(),
        center: 0.0,
        scale: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn cfg(k: &[u32], eps: f64, n: usize, reps: usize) -> SimConfig {
        let centering = if idx(k).is_odd() { Centering::None } else { Centering::GridMatched };
        SimConfig::new(idx(k), eps, n, reps, 11, centering).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(idx(&[2]), 0.1, 1, 1, 0, Centering::GridMatched).is_err());
        assert!(SimConfig::new(idx(&[2]), 0.1, 8, 0, 0, Centering::GridMatched).is_err());
        assert!(SimConfig::new(idx(&[2]), 0.1, 8, 1, 0, Centering::None).is_err());
        assert!(SimConfig::new(idx(&[1, 0, 0]), 0.1, 8, 1, 0, Centering::None).is_ok());
        assert!(cfg(&[1, 0, 0], 0.001, 1024, 1).resolution_warning().is_some());
        assert!(cfg(&[1, 0, 0], 0.01, 1024, 1).resolution_warning().is_none());
    }

    #[test]
    fn increments_are_deterministic() {
        let c = cfg(&[1, 0], 0.1, 64, 4);
        assert_eq!(generate_increments(&c, 3), generate_increments(&c, 3));
        assert_ne!(generate_increments(&c, 3), generate_increments(&c, 2));
    }

    #[test]
    fn zero_path_closed_form() {
        let n = 16;
        let eps: f64 = 0.2;
        let est = silt_estimate(&PathIncrements::zeros(1, n), eps, &idx(&[2])).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        let expected = -(2.0 * std::f64::consts::PI).powf(-0.5) * eps.powf(-1.5) * pairs / (n * n) as f64;
        assert_relative_eq!(est, expected, max_relative = 1e-13);
    }

    #[test]
    fn odd_order_flips_sign() {
        let c = cfg(&[2, 1], 0.1, 64, 1);
        let path = generate_increments(&c, 0);
        let a = silt_estimate(&path, 0.1, &c.k).unwrap();
        let b = silt_estimate(&path.negated(), 0.1, &c.k).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn grid_mean_two_points() {
        let c = cfg(&[2], 0.3, 2, 1);
        let direct = expected_unchecked(0.5 + 0.3, &[2]) * 0.25;
        assert_relative_eq!(grid_expected_silt(&c), direct, max_relative = 1e-15);
        assert_eq!(grid_expected_silt(&cfg(&[1, 0, 0], 0.3, 16, 1)), 0.0);
    }

    #[test]
    fn grid_mean_converges_to_continuum() {
        let k = idx(&[2]);
        let eps = 0.1;
        let continuum = expected_alpha(eps, &k).unwrap();
        let mut prev: Option<f64> = None;
        for n in [64, 128, 256, 512] {
            let g = grid_expected_silt(&SimConfig::new(k.clone(), eps, n, 1, 0, Centering::GridMatched).unwrap());
            if let Some(p) = prev {
                assert!((g - continuum).abs() < (p - continuum).abs());
                assert!((g - continuum).signum() == (p - continuum).signum());
                assert!(((2.0 * g - p) - continuum).abs() < 0.05 * (g - continuum).abs());
            }
            prev = Some(g);
        }
    }

    #[test]
    fn lagged_products_fft_matches_direct() {
        let mut rng = stream_rng(5, 1, 0);
        for p in 1..=3 {
            let paths = brownian_paths(&mut rng, p, 200, 0.25);
            let direct = lagged_products_direct(&paths, 120, 79);
            let fast = lagged_products(&paths, 120, 79);
            for (a, b) in direct.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn eta_u_max_tail_rule() {
        let target = 0.01 * phi(1, 3, 1).unwrap().sqrt();
        let u = eta_u_max(1, 2.5, target).unwrap();
        assert!((eta_tail_bound(1, 2.5, u).unwrap() - target).abs() < 1e-4 * target);
        // (1 + u)^(-5/2) u is about u^(-3/2), so the bound is near 2 U^(-1/2)
        assert!((u - (2.0 / target).powi(2)).abs() < 0.01 * u);
    }

    #[test]
    fn silt_experiment_composition() {
        assert!(run_silt_experiment(&cfg(&[2, 0], 0.05, 32, 1), 1).is_err());
        let c = cfg(&[1, 0, 0], 0.05, 32, 1);
        let set = run_silt_experiment(&c, 1).unwrap();
        let raw = silt_estimate(&generate_increments(&c, 0), c.eps, &c.k).unwrap();
        assert_eq!(set.values[0], raw * 0.05f64.sqrt());
        assert_eq!(set.streams, vec![0]);
    }
}
