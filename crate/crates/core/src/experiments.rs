//! The claw mixture, the Monte Carlo study comparing the law of √(n/M)·D_n with
//! the accompanying law, and simultaneous-coverage studies of the band.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bands::{build_band_with, AccompanyingLaw, BandPoint, ConfidenceBand};
use crate::error::{Error, Result};
use crate::estimator::{self, fit, max_deviation, EstimateResult, Sample, DEFAULT_GRID_PER_CELL, DEFAULT_LAMBDA};
use crate::exec::Exec;
use crate::normal;
use crate::rng;

pub const CLAW_INTERVAL: (f64, f64) = (-3.0, 3.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mu: f64,
    pub sigma2: f64,
}

/// Finite normal mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDensity {
    components: Vec<Component>,
}

impl MixtureDensity {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("components", "need at least one component"));
        }
        if components.iter().any(|c| !(c.weight > 0.0) || !(c.sigma2 > 0.0) || !c.mu.is_finite()) {
            return Err(Error::param("components", "weights and variances must be positive"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("components", format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    /// ½N(0, 1) + Σ_{j=0}^{4} (1/10) N(j/2 − 1, 1/100).
    pub fn claw() -> Self {
        let mut c = vec![Component {
            weight: 0.5,
            mu: 0.0,
            sigma2: 1.0,
        }];
        c.extend((0..5).map(|j| Component {
            weight: 0.1,
            mu: j as f64 / 2.0 - 1.0,
            sigma2: 0.01,
        }));
        Self { components: c }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal::pdf_with(x, c.mu, c.sigma2))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal::cdf((x - c.mu) / c.sigma2.sqrt()))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mu).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.components
            .iter()
            .map(|c| c.weight * (c.sigma2 + (c.mu - m).powi(2)))
            .sum()
    }

    /// `n` draws from the stream `(seed, 0)`: a component by its weight, then a
    /// normal variate.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n)
            .map(|_| {
                let u: f64 = r.random();
                let mut acc = 0.0;
                let mut pick = self.components.len() - 1;
                for (i, c) in self.components.iter().enumerate() {
                    acc += c.weight;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                let c = &self.components[pick];
                let z: f64 = r.sample(StandardNormal);
                c.mu + c.sigma2.sqrt() * z
            })
            .collect()
    }
}

pub fn claw_density(x: f64) -> f64 {
    MixtureDensity::claw().density(x)
}

/// n claw draws on [−3, 3]; the few points outside are kept and counted.
pub fn sample_claw(n: usize, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    Sample::new(MixtureDensity::claw().sample(n, seed), CLAW_INTERVAL.0, CLAW_INTERVAL.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub runs: usize,
    pub degree: usize,
    pub lambda: f64,
    pub seed: u64,
    pub grid_per_cell: usize,
    /// Also record simultaneous coverage at this level.
    pub alpha: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_values: vec![500, 3000, 10_000],
            runs: 25,
            degree: 4,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            grid_per_cell: DEFAULT_GRID_PER_CELL,
            alpha: None,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.runs < 10 {
            return Err(Error::param("runs", "need at least 10 runs"));
        }
        if !(self.lambda > 1.0 / 3.0 && self.lambda < 1.0) {
            return Err(Error::param("lambda", "must lie in (1/3, 1)"));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::param("n_values", "need positive sample sizes"));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::param("alpha", "must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Results for one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub n: usize,
    pub m: usize,
    pub c_m: f64,
    pub run_seeds: Vec<u64>,
    /// √(n/M)·D_n per run, in run order.
    pub statistics: Vec<f64>,
    pub n_outside: Vec<usize>,
    pub sup_distance: f64,
    pub quantile: Option<f64>,
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub sizes: Vec<SizeReport>,
}

impl ExperimentReport {
    pub fn sup_distances(&self) -> Vec<f64> {
        self.sizes.iter().map(|s| s.sup_distance).collect()
    }
}

/// Seed of run `run` at sample size `n`.
pub fn run_seed(master: u64, n: usize, run: usize) -> u64 {
    rng::derive_seed(master, &[n as u64, run as u64])
}

struct RunOutcome {
    statistic: f64,
    n_outside: usize,
}

fn one_run(n: usize, m: usize, degree: usize, grid: usize, seed: u64) -> Result<(EstimateResult, RunOutcome)> {
    let sample = sample_claw(n, seed)?;
    let fitted = fit(&sample, degree, m)?;
    let dev = max_deviation(&fitted, claw_density, grid)?;
    let outcome = RunOutcome {
        statistic: (n as f64 / m as f64).sqrt() * dev.d_n,
        n_outside: sample.n_outside(),
    };
    Ok((fitted, outcome))
}

/// For each n: M = ⌊n^λ⌋, `runs` independent claw fits, the statistics
/// √(n/M)·D_n and their Kolmogorov distance to A_M.
pub fn figure_ff_pipeline(config: &ExperimentConfig, exec: Exec) -> Result<ExperimentReport> {
    config.validate()?;
    let mut sizes = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        let m = estimator::m_rule(n, config.lambda);
        let law = law_for(config.degree, m)?;
        let q = config.alpha.map(|a| law.quantile(a)).transpose()?;
        let run_seeds: Vec<u64> = (0..config.runs).map(|r| run_seed(config.seed, n, r)).collect();
        let outcomes = exec.try_map(config.runs, |r| {
            one_run(n, m, config.degree, config.grid_per_cell, run_seeds[r]).map(|(_, o)| o)
        })?;
        let statistics: Vec<f64> = outcomes.iter().map(|o| o.statistic).collect();
        let coverage = q.map(|q| {
            statistics.iter().filter(|&&s| s <= q.value).count() as f64 / statistics.len() as f64
        });
        sizes.push(SizeReport {
            n,
            m,
            c_m: law.c_m,
            run_seeds,
            sup_distance: kolmogorov_distance(&statistics, &law),
            n_outside: outcomes.iter().map(|o| o.n_outside).collect(),
            statistics,
            quantile: q.map(|q| q.value),
            coverage,
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        sizes,
    })
}

fn law_for(degree: usize, m: usize) -> Result<AccompanyingLaw> {
    let spec = crate::basis::BasisSpec::new(degree, CLAW_INTERVAL.0, CLAW_INTERVAL.1, m)?;
    AccompanyingLaw::for_basis(&spec)
}

/// sup_t |F_emp(t) − A_M(t)|, checked on both sides of every jump of either
/// function.
pub fn kolmogorov_distance(values: &[f64], law: &AccompanyingLaw) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let below = |t: f64| sorted.partition_point(|&v| v < t) as f64 / n;
    let upto = |t: f64| sorted.partition_point(|&v| v <= t) as f64 / n;
    let left_limit = |t: f64| if t <= law.c_m { 0.0 } else { law.cdf(t) };
    sorted
        .iter()
        .copied()
        .chain(std::iter::once(law.c_m))
        .map(|t| (upto(t) - law.cdf(t)).abs().max((below(t) - left_limit(t)).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageConfig {
    pub n: usize,
    pub runs: usize,
    pub alpha: f64,
    pub degree: usize,
    pub lambda: f64,
    pub seed: u64,
    pub grid_per_cell: usize,
    /// Use this half-width factor instead of √(M/n)·q_{α,M}.
    pub k_override: Option<f64>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            runs: 200,
            alpha: 0.1,
            degree: 4,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            grid_per_cell: DEFAULT_GRID_PER_CELL,
            k_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageResult {
    pub n: usize,
    pub m: usize,
    pub runs: usize,
    pub alpha: f64,
    pub quantile: f64,
    pub k: f64,
    pub covered: usize,
    pub coverage: f64,
}

/// Fraction of runs whose band contains the claw density at every grid point.
pub fn coverage_study(config: &CoverageConfig, exec: Exec) -> Result<CoverageResult> {
    if config.runs == 0 {
        return Err(Error::param("runs", "need at least one run"));
    }
    if config.n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    let m = estimator::m_rule(config.n, config.lambda);
    let law = law_for(config.degree, m)?;
    let q = law.quantile(config.alpha)?;
    let hits = exec.try_map(config.runs, |r| -> Result<bool> {
        let sample = sample_claw(config.n, run_seed(config.seed, config.n, r))?;
        let fitted = fit(&sample, config.degree, m)?;
        let mut band = build_band_with(&fitted, &law, config.alpha, config.grid_per_cell)?;
        if let Some(k) = config.k_override {
            rebuild_with_k(&mut band, k);
        }
        Ok(band.covers(claw_density))
    })?;
    let covered = hits.iter().filter(|&&h| h).count();
    let k = config
        .k_override
        .unwrap_or((m as f64 / config.n as f64).sqrt() * q.value);
    Ok(CoverageResult {
        n: config.n,
        m,
        runs: config.runs,
        alpha: config.alpha,
        quantile: q.value,
        k,
        covered,
        coverage: covered as f64 / config.runs as f64,
    })
}

fn rebuild_with_k(band: &mut ConfidenceBand, k: f64) {
    band.k = k;
    for p in &mut band.points {
        *p = BandPoint {
            x: p.x,
            ..crate::bands::band_interval(p.p_hat, k)
        };
    }
}

/// CSV `x,p,p_hat` on `points` uniform points of [A, B].
pub fn write_density_panel<W: Write, F: Fn(f64) -> f64>(
    mut w: W,
    fitted: &EstimateResult,
    truth: F,
    points: usize,
) -> Result<()> {
    writeln!(w, "x,p,p_hat")?;
    let (a, b) = (fitted.spec.lo, fitted.spec.hi);
    let steps = points.max(2) - 1;
    for i in 0..=steps {
        let x = if i == steps { b } else { a + (b - a) * i as f64 / steps as f64 };
        writeln!(w, "{},{},{}", x, truth(x), fitted.eval(x)?)?;
    }
    Ok(())
}

/// CSV `t,ecdf,A_M` at the sorted statistics.
pub fn write_cdf_panel<W: Write>(mut w: W, statistics: &[f64], law: &AccompanyingLaw) -> Result<()> {
    writeln!(w, "t,ecdf,A_M")?;
    let mut sorted = statistics.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    for (i, t) in sorted.iter().enumerate() {
        writeln!(w, "{},{},{}", t, (i + 1) as f64 / n, law.cdf(*t))?;
    }
    Ok(())
}

/// The fitted estimate of one run, for the density panel.
pub fn example_fit(n: usize, degree: usize, lambda: f64, seed: u64) -> Result<EstimateResult> {
    let m = estimator::m_rule(n, lambda);
    Ok(one_run(n, m, degree, DEFAULT_GRID_PER_CELL, run_seed(seed, n, 0))?.0)
}

/// The accompanying law used for sample size n.
pub fn law_for_n(degree: usize, n: usize, lambda: f64) -> Result<AccompanyingLaw> {
    law_for(degree, estimator::m_rule(n, lambda))
}
