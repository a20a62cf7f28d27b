//! Projection density estimates p̂_n on a partitioned Legendre basis and the
//! sup-deviation statistics built from them.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, DEFAULT_NODES};

pub const DEFAULT_GRID_PER_CELL: usize = 32;
pub const DEFAULT_LAMBDA: f64 = 2.0 / 3.0;

/// Observations together with the interval the estimate lives on. Points
/// outside `[lo, hi]` are kept but do not enter any coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    lo: f64,
    hi: f64,
    n_outside: usize,
}

impl Sample {
    pub fn new(values: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("sample", "need at least one observation"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("interval", format!("need A < B, got [{lo}, {hi}]")));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::param("sample", format!("non-finite value {x}")));
        }
        let n_outside = values.iter().filter(|&&x| x < lo || x > hi).count();
        Ok(Self {
            values,
            lo,
            hi,
            n_outside,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn n_outside(&self) -> usize {
        self.n_outside
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Coefficients c_{m,j} of p̂ = Σ_m Σ_j c_{m,j} ψ_j^(m), stored row-major by cell.
///
/// `n = 0` marks an exact projection of a density rather than a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub spec: BasisSpec,
    pub coeffs: Vec<f64>,
    pub n: usize,
    pub n_outside: usize,
}

/// Sup statistics of an estimate against a known density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    /// sup |p̂ − p|/√p over the grid.
    pub d_n: f64,
    /// sup |p̂ − E p̂|/√p over the grid.
    pub r_n: f64,
    /// Grid point attaining `d_n`.
    pub argmax: f64,
}

/// Fits p̂_n in one pass over the sample.
pub fn fit(sample: &Sample, degree: usize, cells: usize) -> Result<EstimateResult> {
    let (lo, hi) = sample.interval();
    let spec = BasisSpec::new(degree, lo, hi, cells)?;
    if sample.n_outside() == sample.n() {
        return Err(Error::EmptySample { lo, hi });
    }
    let k = degree + 1;
    let mut coeffs = vec![0.0; cells * k];
    let mut row = vec![0.0; k];
    for &x in sample.values() {
        if x < lo || x > hi {
            continue;
        }
        let m = spec.cell_of(x)?;
        spec.cell_values_into(m, x, &mut row);
        for (c, v) in coeffs[m * k..(m + 1) * k].iter_mut().zip(&row) {
            *c += v;
        }
    }
    let n = sample.n() as f64;
    coeffs.iter_mut().for_each(|c| *c /= n);
    Ok(EstimateResult {
        spec,
        coeffs,
        n: sample.n(),
        n_outside: sample.n_outside(),
    })
}

/// Orthogonal projection of `density` onto the basis, which equals E p̂_n(x)
/// when the sample is drawn from `density`. Uses 128-node Gauss–Legendre per cell.
pub fn project<F: Fn(f64) -> f64>(spec: &BasisSpec, density: F) -> Result<EstimateResult> {
    let k = spec.degree + 1;
    let gl = GaussLegendre::new(DEFAULT_NODES.max(k + 1));
    let mut coeffs = vec![0.0; spec.cells * k];
    let mut row = vec![0.0; k];
    for m in 0..spec.cells {
        let (a, b) = spec.cell_bounds(m);
        for (x, w) in gl.mapped(a, b) {
            let p = density(x);
            if !p.is_finite() {
                return Err(Error::param("density", format!("non-finite value at {x}")));
            }
            spec.cell_values_into(m, x, &mut row);
            for (c, v) in coeffs[m * k..(m + 1) * k].iter_mut().zip(&row) {
                *c += w * p * v;
            }
        }
    }
    Ok(EstimateResult {
        spec: *spec,
        coeffs,
        n: 0,
        n_outside: 0,
    })
}

/// E p̂_n(x) under `density`.
pub fn expected_estimate<F: Fn(f64) -> f64>(spec: &BasisSpec, density: F, x: f64) -> Result<f64> {
    let m = spec.cell_of(x)?;
    let k = spec.degree + 1;
    let gl = GaussLegendre::new(DEFAULT_NODES.max(k + 1));
    let (a, b) = spec.cell_bounds(m);
    let mut at_x = vec![0.0; k];
    spec.cell_values_into(m, x, &mut at_x);
    let mut row = vec![0.0; k];
    let mut total = 0.0;
    for (y, w) in gl.mapped(a, b) {
        spec.cell_values_into(m, y, &mut row);
        let kernel: f64 = row.iter().zip(&at_x).map(|(u, v)| u * v).sum();
        total += w * density(y) * kernel;
    }
    Ok(total)
}

/// sup |E p̂_n − p| over the default per-cell grid.
pub fn sup_bias<F: Fn(f64) -> f64>(spec: &BasisSpec, density: F) -> Result<f64> {
    let proj = project(spec, &density)?;
    let mut worst: f64 = 0.0;
    proj.for_each_grid_point(DEFAULT_GRID_PER_CELL, |_, x, v| {
        worst = worst.max((v - density(x)).abs());
    });
    Ok(worst)
}

/// M = ⌊n^λ⌋, at least 1.
pub fn m_rule(n: usize, lambda: f64) -> usize {
    // the nudge keeps exact powers such as 1000^(2/3) from flooring to 99
    let m = ((n as f64).powf(lambda) * (1.0 + 1e-12)).floor() as usize;
    m.max(1)
}

/// D_n and the stochastic-part proxy R_n over `grid_per_cell + 1` uniform points
/// per closed cell, using each cell's own polynomial at both of its endpoints.
pub fn max_deviation<F: Fn(f64) -> f64>(
    result: &EstimateResult,
    density: F,
    grid_per_cell: usize,
) -> Result<Deviation> {
    if grid_per_cell < 4 {
        return Err(Error::param("grid_per_cell", "need at least 4"));
    }
    let mean = project(&result.spec, &density)?;
    let k = result.spec.degree + 1;
    let mut row = vec![0.0; k];
    let mut out = Deviation {
        d_n: 0.0,
        r_n: 0.0,
        argmax: result.spec.lo,
    };
    for m in 0..result.spec.cells {
        let (a, b) = result.spec.cell_bounds(m);
        for i in 0..=grid_per_cell {
            let x = a + (b - a) * i as f64 / grid_per_cell as f64;
            let p = density(x);
            if !(p > 0.0) {
                return Err(Error::NonPositiveDensity { x, value: p });
            }
            result.spec.cell_values_into(m, x, &mut row);
            let fitted = dot(result.cell(m), &row);
            let expected = dot(mean.cell(m), &row);
            let s = p.sqrt();
            let d = (fitted - p).abs() / s;
            if d > out.d_n {
                out.d_n = d;
                out.argmax = x;
            }
            out.r_n = out.r_n.max((fitted - expected).abs() / s);
        }
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

impl EstimateResult {
    pub fn degree(&self) -> usize {
        self.spec.degree
    }

    pub fn cells(&self) -> usize {
        self.spec.cells
    }

    /// Coefficients c_{m,0..=J} of cell m.
    pub fn cell(&self, m: usize) -> &[f64] {
        let k = self.spec.degree + 1;
        &self.coeffs[m * k..(m + 1) * k]
    }

    pub fn coeff(&self, m: usize, j: usize) -> f64 {
        self.cell(m)[j]
    }

    /// p̂(x); may be negative.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let m = self.spec.cell_of(x)?;
        let mut row = vec![0.0; self.spec.degree + 1];
        self.spec.cell_values_into(m, x, &mut row);
        Ok(dot(self.cell(m), &row))
    }

    /// p̂ on a list of points.
    pub fn eval_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// ∫ p̂ over [A, B], which only the j = 0 terms carry.
    pub fn mass(&self) -> f64 {
        let s = self.spec.cell_width().sqrt();
        (0..self.spec.cells).map(|m| self.coeff(m, 0) * s).sum()
    }

    /// Visits `grid_per_cell + 1` points of every closed cell with the cell's
    /// own polynomial value, as `f(m, x, value)`.
    pub fn for_each_grid_point<G: FnMut(usize, f64, f64)>(&self, grid_per_cell: usize, mut f: G) {
        let mut row = vec![0.0; self.spec.degree + 1];
        let g = grid_per_cell.max(1);
        for m in 0..self.spec.cells {
            let (a, b) = self.spec.cell_bounds(m);
            for i in 0..=g {
                let x = a + (b - a) * i as f64 / g as f64;
                self.spec.cell_values_into(m, x, &mut row);
                f(m, x, dot(self.cell(m), &row));
            }
        }
    }

    /// ∫ (p̂ − p)² over [A, B] by per-cell Gauss–Legendre.
    pub fn l2_error<F: Fn(f64) -> f64>(&self, density: F) -> f64 {
        let k = self.spec.degree + 1;
        let gl = GaussLegendre::new(64.max(2 * k));
        let mut row = vec![0.0; k];
        let mut total = 0.0;
        for m in 0..self.spec.cells {
            let (a, b) = self.spec.cell_bounds(m);
            total += gl.integrate(a, b, |x| {
                self.spec.cell_values_into(m, x, &mut row);
                let e = dot(self.cell(m), &row) - density(x);
                e * e
            });
        }
        total.sqrt()
    }
}
