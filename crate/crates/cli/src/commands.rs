use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use projband::bands::{build_band_with, AccompanyingLaw, Quantile};
use projband::chi::{self, optimize_chi_with, Branch};
use projband::estimator::{fit, m_rule, Sample};
use projband::experiments::{
    claw_density, coverage_study, example_fit, figure_ff_pipeline, law_for_n, write_cdf_panel, write_density_panel,
};
use projband::io::{read_binary_sample, read_text_sample, EstimateJson};
use projband::{Exec, GaussianProcessModel};

use crate::config::{
    BandConfig, ChiConfig, EstimateConfig, ExperimentCmdConfig, ExperimentKind, McSupConfig, RiceConfig, SampleFormat,
};
use crate::error::CliError;
use crate::output::{Meta, OutDir};

fn read_sample(input: Option<&Path>, format: SampleFormat, interval: (f64, f64)) -> Result<Sample, CliError> {
    let path = input.ok_or_else(|| CliError::Usage("no input sample: set `input` or pass --input".into()))?;
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    let values = match format {
        SampleFormat::Text => read_text_sample(BufReader::new(file))?,
        SampleFormat::Binary => read_binary_sample(BufReader::new(file))?,
    };
    Ok(Sample::new(values, interval.0, interval.1)?)
}

fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
        .collect()
}

pub fn estimate(mut cfg: EstimateConfig, input: Option<PathBuf>, out: &Path) -> Result<OutDir, CliError> {
    if input.is_some() {
        cfg.input = input;
    }
    let sample = read_sample(cfg.input.as_deref(), cfg.format, cfg.interval)?;
    let cells = cfg.cells.unwrap_or_else(|| m_rule(sample.n(), cfg.lambda));
    let est = fit(&sample, cfg.degree, cells)?;
    let grid = uniform_grid(cfg.interval.0, cfg.interval.1, cfg.grid_points);
    let values = est.eval_many(&grid)?;

    let mut dir = OutDir::create(out, Meta::new("estimate", &cfg, cfg.seed))?;
    dir.json("estimate.json", &EstimateJson::from(&est))?;
    dir.csv("estimate.csv", |w| {
        writeln!(w, "x,p_hat")?;
        for (x, v) in grid.iter().zip(&values) {
            writeln!(w, "{x},{v}")?;
        }
        Ok(())
    })?;
    Ok(dir)
}

#[derive(Serialize)]
struct BandSummary {
    n: usize,
    n_outside: usize,
    degree: usize,
    cells: usize,
    law: AccompanyingLaw,
    alpha: f64,
    quantile: Quantile,
    k: f64,
    points: usize,
    negative_points: usize,
    empty_points: usize,
}

pub fn band(mut cfg: BandConfig, input: Option<PathBuf>, out: &Path) -> Result<OutDir, CliError> {
    if input.is_some() {
        cfg.input = input;
    }
    let sample = read_sample(cfg.input.as_deref(), cfg.format, cfg.interval)?;
    let cells = cfg.cells.unwrap_or_else(|| m_rule(sample.n(), cfg.lambda));
    let est = fit(&sample, cfg.degree, cells)?;
    let law = AccompanyingLaw::for_basis(&est.spec)?;
    let band = build_band_with(&est, &law, cfg.alpha, cfg.grid_per_cell)?;

    let mut dir = OutDir::create(out, Meta::new("band", &cfg, cfg.seed))?;
    dir.csv("band.csv", |w| Ok(band.write_csv(w)?))?;
    dir.json(
        "band.json",
        &BandSummary {
            n: est.n,
            n_outside: est.n_outside,
            degree: cfg.degree,
            cells,
            law,
            alpha: cfg.alpha,
            quantile: band.q,
            k: band.k,
            points: band.points.len(),
            negative_points: band.points.iter().filter(|p| p.negative).count(),
            empty_points: band.n_empty(),
        },
    )?;
    Ok(dir)
}

#[derive(Serialize)]
struct ChiSummary {
    degree: usize,
    s: f64,
    d1: f64,
    chi_opt: f64,
    delta_opt: f64,
    plateau: (f64, f64),
    binding: Branch,
    chi3_closed_form: f64,
}

pub fn chi_opt(cfg: ChiConfig, out: &Path, exec: Exec) -> Result<OutDir, CliError> {
    let model = GaussianProcessModel::legendre(cfg.degree, cfg.interval.0, cfg.interval.1)?;
    let profile = optimize_chi_with(&model, cfg.delta_range, cfg.grid, exec)?;
    let mut dir = OutDir::create(out, Meta::new("chi-opt", &cfg, cfg.seed))?;
    dir.csv("chi.csv", |w| Ok(profile.write_csv(w)?))?;
    dir.json(
        "chi.json",
        &ChiSummary {
            degree: cfg.degree,
            s: model.s_max(),
            d1: chi::d1(&model)?,
            chi_opt: profile.chi_opt,
            delta_opt: profile.delta_opt,
            plateau: profile.plateau,
            binding: profile.binding,
            chi3_closed_form: chi::chi3_closed_form(cfg.degree),
        },
    )?;
    Ok(dir)
}

#[derive(Serialize)]
struct SupRow {
    level: f64,
    u: f64,
    p_hat: f64,
    std_err: f64,
    asymptotic: f64,
}

pub fn mc_sup(cfg: McSupConfig, out: &Path, exec: Exec) -> Result<OutDir, CliError> {
    let model = GaussianProcessModel::legendre(cfg.degree, cfg.interval.0, cfg.interval.1)?;
    let root = model.s_max().sqrt();
    let us: Vec<f64> = cfg.levels.iter().map(|l| l * root).collect();
    let est = model.simulate_sup_levels(&us, cfg.n_rep, cfg.grid, cfg.seed, exec)?;
    let rows = cfg
        .levels
        .iter()
        .zip(&est)
        .map(|(&level, e)| {
            Ok(SupRow {
                level,
                u: e.u,
                p_hat: e.p_hat,
                std_err: e.std_err,
                asymptotic: model.asymptotic_tail(e.u)?,
            })
        })
        .collect::<Result<Vec<_>, projband::Error>>()?;
    let mut dir = OutDir::create(out, Meta::new("mc-sup", &cfg, cfg.seed))?;
    dir.csv("mc_sup.csv", |w| {
        writeln!(w, "level,u,p_hat,std_err,asymptotic")?;
        for r in &rows {
            writeln!(w, "{},{},{},{},{}", r.level, r.u, r.p_hat, r.std_err, r.asymptotic)?;
        }
        Ok(())
    })?;
    dir.json("mc_sup.json", &rows)?;
    Ok(dir)
}

#[derive(Serialize)]
struct RiceRow {
    level: f64,
    u: f64,
    quadrature: f64,
    mc_mean: Option<f64>,
    mc_std_err: Option<f64>,
}

pub fn rice(cfg: RiceConfig, out: &Path, exec: Exec) -> Result<OutDir, CliError> {
    let model = GaussianProcessModel::legendre(cfg.degree, cfg.interval.0, cfg.interval.1)?;
    let root = model.s_max().sqrt();
    let us: Vec<f64> = cfg.levels.iter().map(|l| l * root).collect();
    let quad = us
        .iter()
        .map(|&u| model.rice_upcrossings(u, cfg.region))
        .collect::<Result<Vec<_>, _>>()?;
    let mc = if cfg.n_rep > 0 {
        Some(model.mc_upcrossings(&us, cfg.region, cfg.n_rep, cfg.grid, cfg.seed, exec)?)
    } else {
        None
    };
    let rows: Vec<RiceRow> = (0..us.len())
        .map(|i| RiceRow {
            level: cfg.levels[i],
            u: us[i],
            quadrature: quad[i],
            mc_mean: mc.as_ref().map(|m| m[i].mean),
            mc_std_err: mc.as_ref().map(|m| m[i].std_err),
        })
        .collect();
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut dir = OutDir::create(out, Meta::new("rice", &cfg, cfg.seed))?;
    dir.csv("rice.csv", |w| {
        writeln!(w, "level,u,quadrature,mc_mean,mc_std_err")?;
        for r in &rows {
            writeln!(w, "{},{},{},{},{}", r.level, r.u, r.quadrature, opt(r.mc_mean), opt(r.mc_std_err))?;
        }
        Ok(())
    })?;
    dir.json("rice.json", &rows)?;
    Ok(dir)
}

pub fn experiment(mut cfg: ExperimentCmdConfig, out: &Path, exec: Exec) -> Result<OutDir, CliError> {
    cfg.distribution.seed = cfg.seed;
    cfg.coverage.seed = cfg.seed;
    let meta = Meta::new("experiment", &cfg, cfg.seed);
    match cfg.kind {
        ExperimentKind::Distribution => {
            let d = &cfg.distribution;
            let report = figure_ff_pipeline(d, exec)?;
            let mut dir = OutDir::create(out, meta)?;
            dir.json("experiment.json", &report)?;
            dir.csv("distance.csv", |w| {
                writeln!(w, "n,m,c_m,sup_distance")?;
                for s in &report.sizes {
                    writeln!(w, "{},{},{},{}", s.n, s.m, s.c_m, s.sup_distance)?;
                }
                Ok(())
            })?;
            for s in &report.sizes {
                let law = law_for_n(d.degree, s.n, d.lambda)?;
                dir.csv(&format!("cdf_n{}.csv", s.n), |w| Ok(write_cdf_panel(w, &s.statistics, &law)?))?;
                let fitted = example_fit(s.n, d.degree, d.lambda, d.seed)?;
                dir.csv(&format!("density_n{}.csv", s.n), |w| {
                    Ok(write_density_panel(w, &fitted, claw_density, cfg.panel_points)?)
                })?;
            }
            Ok(dir)
        }
        ExperimentKind::Coverage => {
            let c = coverage_study(&cfg.coverage, exec)?;
            let mut dir = OutDir::create(out, meta)?;
            dir.json("coverage.json", &c)?;
            dir.csv("coverage.csv", |w| {
                writeln!(w, "n,m,runs,alpha,quantile,k,covered,coverage")?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    c.n, c.m, c.runs, c.alpha, c.quantile, c.k, c.covered, c.coverage
                )?;
                Ok(())
            })?;
            Ok(dir)
        }
    }
}
