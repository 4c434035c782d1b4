use silt::simulation::{
    eta_exact_variance, gamma_process, generate_increments, run_eta_experiment, run_silt_experiment,
    run_silt_with_scale, Centering, EtaConfig, EtaRegime, PathIncrements, SimConfig,
};
use silt::stats::moments;
use silt::variance::gamma_covariance;
use silt::MultiIndex;

fn idx(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec()).unwrap()
}

#[test]
fn increments_have_variance_delta_and_are_independent() {
    let n = 64;
    let cfg = SimConfig::new(idx(&[1, 0]), 0.2, n, 500, 3, Centering::None).unwrap();
    let paths: Vec<PathIncrements> = (0..cfg.replicates as u64).map(|r| generate_increments(&cfg, r)).collect();
    let all: Vec<f64> = paths.iter().flat_map(|p| p.data().iter().copied()).collect();
    let count = all.len() as f64;
    let var = all.iter().map(|v| v * v).sum::<f64>() / count;
    let se = var * (2.0 / count).sqrt();
    assert!((var - 1.0 / n as f64).abs() < 3.0 * se, "{var} vs {}", 1.0 / n as f64);
    let cross: Vec<f64> = paths
        .windows(2)
        .flat_map(|w| w[0].data().iter().zip(w[1].data()).map(|(a, b)| a * b * n as f64).collect::<Vec<_>>())
        .collect();
    let corr = cross.iter().sum::<f64>() / cross.len() as f64;
    assert!(corr.abs() < 3.0 / (cross.len() as f64).sqrt(), "{corr}");
}

#[test]
fn grid_matched_centering_is_unbiased() {
    let cfg = SimConfig::new(idx(&[2, 0]), 0.1, 128, 2000, 5, Centering::GridMatched).unwrap();
    let set = run_silt_with_scale(&cfg, 1.0, 0).unwrap();
    let m = moments(&set.values).unwrap();
    assert!(m.mean.abs() < 3.0 * m.mean_se, "{} (se {})", m.mean, m.mean_se);
}

#[test]
fn odd_order_statistic_is_symmetric() {
    let cfg = SimConfig::new(idx(&[1, 0, 0]), 0.05, 128, 2000, 9, Centering::None).unwrap();
    let set = run_silt_experiment(&cfg, 0).unwrap();
    let m = moments(&set.values).unwrap();
    assert!(m.mean.abs() < 3.0 * m.mean_se);
    let (s, se) = (m.skewness.unwrap(), m.skewness_se.unwrap());
    assert!(s.abs() < 3.0 * se, "{s} (se {se})");
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = SimConfig::new(idx(&[1, 0, 0]), 0.05, 64, 40, 21, Centering::None).unwrap();
    let eta = EtaConfig {
        regime: EtaRegime::Power { k: idx(&[1, 0, 0]) },
        m: 1,
        eps: 0.05,
        grid: 4,
        u_max: Some(50.0),
        replicates: 40,
        master_seed: 21,
    };
    let silt_ref: Vec<u64> = run_silt_experiment(&cfg, 1).unwrap().values.iter().map(|v| v.to_bits()).collect();
    let eta_ref: Vec<u64> = run_eta_experiment(&eta, 1).unwrap().values.iter().map(|v| v.to_bits()).collect();
    for workers in [2, 3] {
        let s: Vec<u64> = run_silt_experiment(&cfg, workers).unwrap().values.iter().map(|v| v.to_bits()).collect();
        let e: Vec<u64> = run_eta_experiment(&eta, workers).unwrap().values.iter().map(|v| v.to_bits()).collect();
        assert_eq!(s, silt_ref);
        assert_eq!(e, eta_ref);
    }
}

struct CovEstimate {
    value: f64,
    se: f64,
}

fn sample_cov(x: &[f64], y: &[f64]) -> CovEstimate {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let value = prods.iter().sum::<f64>() / (n - 1.0);
    let var = prods.iter().map(|p| (p - value).powi(2)).sum::<f64>() / (n - 1.0);
    CovEstimate { value, se: (var / n).sqrt() }
}

#[test]
fn gamma_moments_match_covariance_kernel() {
    let (horizon, h) = (20.0, 0.05);
    let lags = [0.5, 1.0, 1.5];
    let steps: Vec<usize> = lags.iter().map(|u| (u / h as f64).round() as usize).collect();
    for p in [1u32, 2] {
        let reps = 3000;
        let draws: Vec<Vec<f64>> = (0..reps).map(|r| gamma_process(p, horizon, &steps, h, 17, r).unwrap()).collect();
        let col = |j: usize| draws.iter().map(|d| d[j]).collect::<Vec<f64>>();
        let m = moments(&col(1)).unwrap();
        assert!(m.mean.abs() < 3.0 * m.mean_se, "p={p}: mean {}", m.mean);
        for (a, b) in [(0, 0), (1, 1), (0, 1), (1, 2)] {
            let est = sample_cov(&col(a), &col(b));
            let exact = gamma_covariance(p, horizon, lags[a], lags[b]).unwrap();
            assert!(
                (est.value - exact).abs() < 3.0 * est.se,
                "p={p} ({}, {}): {} vs {exact} (se {})",
                lags[a],
                lags[b],
                est.value,
                est.se
            );
        }
    }
}

#[test]
fn gamma_variance_vanishes_with_lag() {
    for p in [1u32, 2, 3] {
        let values: Vec<f64> = [1.0, 0.1, 0.01, 0.001].iter().map(|&u| gamma_covariance(p, 50.0, u, u).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        assert!(values[3] < 1e-5);
    }
}

#[test]
fn eta_matches_exact_finite_horizon_variance() {
    let cfg = EtaConfig {
        regime: EtaRegime::Power { k: idx(&[1, 0, 0]) },
        m: 1,
        eps: 0.01,
        grid: 4,
        u_max: Some(200.0),
        replicates: 2000,
        master_seed: 33,
    };
    let set = run_eta_experiment(&cfg, 0).unwrap();
    let m = moments(&set.values).unwrap();
    let exact = eta_exact_variance(1, 2.5, 100.0, 200.0);
    assert!((exact - 1.2223).abs() < 1e-3, "{exact}");
    assert!(m.mean.abs() < 3.0 * m.mean_se);
    assert!((m.variance - exact).abs() < 3.0 * m.variance_se, "{} vs {exact} (se {})", m.variance, m.variance_se);
    let ratio = m.fourth_moment_ratio().unwrap();
    assert!((ratio - 3.0).abs() < 3.0 * m.kurtosis_se.unwrap(), "{ratio}");
}

#[test]
fn eta_config_rejects_inadmissible_input() {
    let base = EtaConfig {
        regime: EtaRegime::Power { k: idx(&[1, 0]) },
        m: 1,
        eps: 0.01,
        grid: 4,
        u_max: None,
        replicates: 10,
        master_seed: 0,
    };
    assert!(run_eta_experiment(&base, 0).is_err());
    let log = EtaConfig { regime: EtaRegime::Log, m: 1, ..base.clone() };
    assert!(run_eta_experiment(&log, 0).is_err());
    let big_eps = EtaConfig { regime: EtaRegime::Power { k: idx(&[1, 0, 0]) }, eps: 1.5, ..base };
    assert!(run_eta_experiment(&big_eps, 0).is_err());
}

#[test]
fn grid_refinement_is_within_sampling_noise() {
    let variance = |n: usize| {
        let cfg = SimConfig::new(idx(&[1, 0, 0]), 0.01, n, 300, 13, Centering::None).unwrap();
        moments(&run_silt_experiment(&cfg, 0).unwrap().values).unwrap()
    };
    let (coarse, fine) = (variance(1024), variance(2048));
    let se = coarse.variance_se.hypot(fine.variance_se);
    assert!((coarse.variance - fine.variance).abs() < 3.0 * se, "{} vs {} (se {se})", coarse.variance, fine.variance);
}
