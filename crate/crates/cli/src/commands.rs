//! Subcommand implementations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use silt::constants::{beta, phi, renormalizer, sigma_total, Regime, Scope};
use silt::simulation::{
    run_eta_experiment, run_silt_experiment, run_silt_with_scale, Centering, EtaConfig, EtaRegime, Experiment,
    SampleSet, SimConfig,
};
use silt::stats::{moments, normality_test, Moments, NormalityReport};
use silt::variance::{corrections, normalized_limit, richardson, variance_integral, variance_normalizer};
use silt::MultiIndex;
use silt_validation::{run_all, Check, CriterionResult};

use crate::config::{ExperimentConfig, Tolerances, SCHEMA_VERSION};
use crate::output::{histogram, pretty, Cell, OutDir, Table};
use crate::{Cli, CliError, Command, Verdict};

const DEFAULT_OUT: &str = "silt-out";

pub fn run(cli: &Cli) -> Result<Verdict, CliError> {
    let cfg = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let ctx = Context::new(cli, cfg.as_ref());
    match &cli.command {
        Command::Constants => constants(&ctx, required(cfg.as_ref())?),
        Command::Variance => variance(&ctx, required(cfg.as_ref())?),
        Command::Simulate => simulate(&ctx, required(cfg.as_ref())?),
        Command::Eta => eta(&ctx, required(cfg.as_ref())?),
        Command::Verify => verify(&ctx),
        Command::Report { input } => report(&ctx, input),
    }
}

fn required(cfg: Option<&ExperimentConfig>) -> Result<&ExperimentConfig, CliError> {
    cfg.ok_or_else(|| CliError::Usage("this command needs --config <path>".into()))
}

struct Context {
    out: OutDir,
    workers: usize,
    seed: Option<u64>,
    format: crate::output::Format,
}

impl Context {
    fn new(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Self {
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.and_then(|c| c.out.clone()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let workers = cli.workers.or_else(|| cfg.and_then(|c| c.workers)).unwrap_or(0);
        Self { out: OutDir::new(out), workers, seed: cli.seed, format: cli.format }
    }

    fn seed(&self, cfg: &ExperimentConfig) -> u64 {
        self.seed.or(cfg.master_seed).unwrap_or(0)
    }
}

fn forbidding_clause(k: &MultiIndex) -> String {
    match (k.d(), k.total()) {
        (1, 1) => "d = 1, |k| = 1 needs no renormalization and lies outside every limit theorem".into(),
        (d, abs_k) => format!("no limit theorem covers d = {d}, |k| = {abs_k}"),
    }
}

fn regime(k: &MultiIndex) -> Result<Regime, CliError> {
    Regime::of(k).map_err(|e| CliError::Usage(format!("inadmissible multi-index {k}: {e} ({})", forbidding_clause(k))))
}

#[derive(Debug, Serialize)]
struct ConstantsSummary {
    schema_version: u32,
    k: MultiIndex,
    regime: &'static str,
    total: TotalSeries,
}

#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum TotalSeries {
    Converged { value: f64, terms_used: u32, tail: f64, tail_error: f64 },
    Divergent { reason: String },
}

fn constants(ctx: &Context, cfg: &ExperimentConfig) -> Result<Verdict, CliError> {
    let k = &cfg.k;
    let regime = regime(k)?;
    let m_max = cfg.m_max.unwrap_or(10);
    let mut table = Table::new(vec!["m", "regime", "beta", "phi", "sigma_sq", "cumulative", "normalized_limit"]);
    let mut cumulative = 0.0;
    let first = k.total() / 2 + 1;
    for m in first..=m_max {
        let b = beta(m, k)?;
        let p = phi(m, k.d(), k.total()).ok();
        let s = p.map(|p| b * p);
        if let Some(s) = s {
            cumulative += s;
        }
        let limit = normalized_limit(m, k)?;
        table.push(vec![
            m.into(),
            regime.tag().into(),
            b.into(),
            p.into(),
            s.into(),
            s.map(|_| cumulative).into(),
            limit.into(),
        ]);
    }
    let total = match sigma_total(k, cfg.rel_tol) {
        Ok(s) => TotalSeries::Converged { value: s.value, terms_used: s.terms_used, tail: s.tail, tail_error: s.tail_error },
        Err(silt::Error::Divergent { d, abs_k }) => TotalSeries::Divergent {
            reason: format!("the sigma^2 series diverges for d = {d} <= 2 (|k| = {abs_k})"),
        },
        Err(e) => return Err(e.into()),
    };
    let summary = ConstantsSummary { schema_version: SCHEMA_VERSION, k: k.clone(), regime: regime.tag(), total };
    print!("{}", table.render(ctx.format));
    eprintln!("{}", serde_json::to_string(&summary.total).expect("serializable"));
    ctx.out.write_table("constants", &table, ctx.format)?;
    ctx.out.write("constants_summary.json", &pretty(&summary))?;
    Ok(Verdict::Pass)
}

fn variance(ctx: &Context, cfg: &ExperimentConfig) -> Result<Verdict, CliError> {
    let k = &cfg.k;
    regime(k)?;
    let m = cfg.require(&cfg.m, "m")?;
    let grid = cfg.require(&cfg.eps_grid, "eps_grid")?;
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] < w[0])) || grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Usage("eps_grid must be strictly decreasing inside (0, 1)".into()));
    }
    let analytic = normalized_limit(m, k)?;
    let corr = corrections(m, k)?;
    let mut table = Table::new(vec![
        "eps",
        "variance",
        "quadrature_error",
        "normalized",
        "extrapolated",
        "analytic_limit",
        "relative_gap",
        "status",
    ]);
    let (mut eps_ok, mut values_ok) = (Vec::new(), Vec::new());
    for &eps in &grid {
        let row = variance_integral(eps, m, k).and_then(|v| Ok((v, v.value * variance_normalizer(eps, m, k)?)));
        match row {
            Ok((v, normalized)) => {
                eps_ok.push(eps);
                values_ok.push(normalized);
                let extrapolated =
                    if eps_ok.len() >= 2 { richardson(&eps_ok, &values_ok, &corr).ok() } else { None };
                let gap = analytic.map(|a| (normalized - a).abs() / a.abs());
                table.push(vec![
                    eps.into(),
                    v.value.into(),
                    v.error.into(),
                    normalized.into(),
                    extrapolated.into(),
                    analytic.into(),
                    gap.into(),
                    "ok".into(),
                ]);
            }
            Err(e) => table.push(vec![
                eps.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                analytic.into(),
                Cell::Empty,
                format!("failed: {e}").into(),
            ]),
        }
    }
    print!("{}", table.render(ctx.format));
    ctx.out.write_table("variance", &table, ctx.format)?;
    Ok(Verdict::Pass)
}

/// Stored samples together with the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub samples: SampleSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub experiment: &'static str,
    pub sigma_sq_target: Option<f64>,
    pub target_source: String,
    pub moments: Moments,
    pub normality: Option<NormalityReport>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn silt_config(cfg: &ExperimentConfig, seed: u64) -> Result<SimConfig, CliError> {
    let k = cfg.k.clone();
    let centering = cfg.centering.unwrap_or(if k.is_odd() { Centering::None } else { Centering::GridMatched });
    Ok(SimConfig::new(
        k,
        cfg.require(&cfg.eps, "eps")?,
        cfg.n.unwrap_or(1024),
        cfg.require(&cfg.replicates, "replicates")?,
        seed,
        centering,
    )?)
}

fn eta_config(cfg: &ExperimentConfig, seed: u64) -> Result<EtaConfig, CliError> {
    let section = cfg.eta.clone().unwrap_or(crate::config::EtaSection { log: false, grid: 4, u_max: None });
    let regime = if section.log { EtaRegime::Log } else { EtaRegime::Power { k: cfg.k.clone() } };
    let eta = EtaConfig {
        regime,
        m: cfg.require(&cfg.m, "m")?,
        eps: cfg.require(&cfg.eps, "eps")?,
        grid: section.grid,
        u_max: section.u_max,
        replicates: cfg.require(&cfg.replicates, "replicates")?,
        master_seed: seed,
    };
    eta.validate()?;
    Ok(eta)
}

fn silt_target(cfg: &ExperimentConfig) -> Result<(Option<f64>, String), CliError> {
    if let Some(t) = cfg.sigma_sq_target {
        return Ok((Some(t), "config".into()));
    }
    match Regime::of(&cfg.k)? {
        Regime::PowerConvergent => Ok((Some(sigma_total(&cfg.k, cfg.rel_tol)?.value), "sigma_total".into())),
        r => Ok((None, format!("no closed-form total variance in regime {}", r.tag()))),
    }
}

fn eta_target(cfg: &ExperimentConfig, eta: &EtaConfig) -> Result<(Option<f64>, String), CliError> {
    if let Some(t) = cfg.sigma_sq_target {
        return Ok((Some(t), "config".into()));
    }
    let source = match eta.regime {
        EtaRegime::Power { .. } => "phi",
        EtaRegime::Log => "log-regime limit",
    };
    Ok((Some(eta.limit_variance()?), source.into()))
}

/// Builds the verdict for `samples`; a pure function of its arguments.
pub fn build_report(cfg: &ExperimentConfig, samples: &SampleSet) -> Result<TestReport, CliError> {
    let tol: Tolerances = cfg.tolerances;
    let m = moments(&samples.values)?;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let (experiment, (target, source)) = match &samples.experiment {
        Experiment::Silt(sim) => {
            warnings.extend(sim.resolution_warning());
            if sim.k.is_odd() {
                let (s, se) = (m.skewness.unwrap_or(f64::NAN), m.skewness_se.unwrap_or(0.0));
                checks.push(Check::absolute("skewness", s, 0.0, tol.se_multiple * se));
            }
            ("silt", silt_target(cfg)?)
        }
        Experiment::Eta(eta) => {
            let ratio = m.fourth_moment_ratio().unwrap_or(f64::NAN);
            checks.push(Check::relative("fourth-moment ratio", ratio, 3.0, tol.fourth_ratio_rel));
            ("eta", eta_target(cfg, eta)?)
        }
    };
    checks.push(Check::absolute("mean", m.mean, 0.0, tol.se_multiple * m.mean_se));
    let normality = match target {
        Some(t) => {
            let r = normality_test(&samples.values, t)?;
            checks.push(Check::relative("variance", m.variance, t, tol.variance_rel));
            checks.push(Check::above("KS p-value", r.ks_p_value, tol.ks_p_min));
            Some(r)
        }
        None => None,
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(TestReport {
        schema_version: SCHEMA_VERSION,
        experiment,
        sigma_sq_target: target,
        target_source: source,
        moments: m,
        normality,
        warnings,
        checks,
        passed,
    })
}

fn emit_samples(ctx: &Context, cfg: &ExperimentConfig, samples: SampleSet) -> Result<Verdict, CliError> {
    let report = build_report(cfg, &samples)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut values = Table::new(vec!["replicate", "value"]);
    for (s, v) in samples.streams.iter().zip(&samples.values) {
        values.push(vec![(*s).into(), (*v).into()]);
    }
    ctx.out.write_table("samples", &values, ctx.format)?;
    ctx.out.write_table("histogram", &histogram(&samples.values, report.sigma_sq_target), ctx.format)?;
    let file = SampleFile { schema_version: SCHEMA_VERSION, config: cfg.clone(), samples };
    ctx.out.write("sample_set.json", &pretty(&file))?;
    ctx.out.write("report.json", &pretty(&report))?;
    for c in &report.checks {
        println!("{c}");
    }
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
    Ok(if report.passed { Verdict::Pass } else { Verdict::Fail })
}

fn with_seed(cfg: &ExperimentConfig, seed: u64) -> ExperimentConfig {
    ExperimentConfig { master_seed: Some(seed), ..cfg.clone() }
}

fn simulate(ctx: &Context, cfg: &ExperimentConfig) -> Result<Verdict, CliError> {
    let seed = ctx.seed(cfg);
    let sim = silt_config(cfg, seed)?;
    let samples = match Regime::of(&sim.k)? {
        Regime::PowerConvergent | Regime::LogSquared => run_silt_experiment(&sim, ctx.workers)?,
        _ => {
            let scale = renormalizer(Scope::Chaos(1), &sim.k, sim.eps).unwrap_or(1.0);
            run_silt_with_scale(&sim, scale, ctx.workers)?
        }
    };
    emit_samples(ctx, &with_seed(cfg, seed), samples)
}

fn eta(ctx: &Context, cfg: &ExperimentConfig) -> Result<Verdict, CliError> {
    let seed = ctx.seed(cfg);
    let eta = eta_config(cfg, seed)?;
    let samples = run_eta_experiment(&eta, ctx.workers)?;
    emit_samples(ctx, &with_seed(cfg, seed), samples)
}

#[derive(Debug, Serialize)]
struct VerifySummary<'a> {
    schema_version: u32,
    passed: usize,
    failed: usize,
    criteria: &'a [CriterionResult],
}

fn verify(ctx: &Context) -> Result<Verdict, CliError> {
    let results = run_all(ctx.workers);
    for r in &results {
        print!("{r}");
    }
    println!();
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let summary = VerifySummary { schema_version: SCHEMA_VERSION, passed: results.len() - failed, failed, criteria: &results };
    ctx.out.write("verify_summary.json", &pretty(&summary))?;
    Ok(if failed == 0 { Verdict::Pass } else { Verdict::Fail })
}

fn report(ctx: &Context, input: &Path) -> Result<Verdict, CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Usage(format!("cannot read sample file {}: {e}", input.display())))?;
    let file: SampleFile =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid sample file: {e}")))?;
    let report = build_report(&file.config, &file.samples)?;
    ctx.out.write("report.json", &pretty(&report))?;
    for c in &report.checks {
        println!("{c}");
    }
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
    Ok(if report.passed { Verdict::Pass } else { Verdict::Fail })
}
