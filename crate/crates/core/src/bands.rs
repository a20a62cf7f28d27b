//! Accompanying laws A_M, their quantiles, the confidence band obtained by
//! inverting |p̂ − p| ≤ k√p, and the Gumbel normalisers a_M, u_M.

use std::io::Write;

use serde::Serialize;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::estimator::{EstimateResult, DEFAULT_GRID_PER_CELL};
use crate::gproc::GaussianProcessModel;
use crate::normal;

/// A_M(x) = exp{−M·2k(1 − Φ(x/√S))} for x ≥ c_M = √(2S ln M) − S, else 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccompanyingLaw {
    pub s: f64,
    pub k: usize,
    pub m: usize,
    pub c_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantile {
    pub value: f64,
    /// The quantile is the jump point c_M.
    pub at_jump: bool,
}

impl AccompanyingLaw {
    pub fn new(s: f64, k: usize, m: usize) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param("S", "must be positive"));
        }
        if k == 0 {
            return Err(Error::param("k", "need at least one variance maximum"));
        }
        if m < 2 {
            return Err(Error::param("M", "need M >= 2"));
        }
        let c_m = (2.0 * s * (m as f64).ln()).sqrt() - s;
        Ok(Self { s, k, m, c_m })
    }

    /// Law for an estimate on `spec`: S and k come from the unpartitioned basis.
    pub fn for_basis(spec: &BasisSpec) -> Result<Self> {
        let model = GaussianProcessModel::legendre(spec.degree, spec.lo, spec.hi)?;
        Self::new(model.s_max(), model.argmax().len(), spec.cells)
    }

    /// 2k(1 − Φ(u/√S)).
    pub fn tail(&self, u: f64) -> f64 {
        2.0 * self.k as f64 * normal::sf(u / self.s.sqrt())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.c_m {
            0.0
        } else {
            (-(self.m as f64) * self.tail(x)).exp()
        }
    }

    /// Smallest q with A_M(q) ≥ 1 − α, by bisection on [c_M, c_M + 20√S].
    pub fn quantile(&self, alpha: f64) -> Result<Quantile> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1)"));
        }
        let target = 1.0 - alpha;
        if self.cdf(self.c_m) >= target {
            return Ok(Quantile {
                value: self.c_m,
                at_jump: true,
            });
        }
        let (mut lo, mut hi) = (self.c_m, self.c_m + 20.0 * self.s.sqrt());
        if self.cdf(hi) < target {
            return Err(Error::param("alpha", "quantile beyond c_M + 20 sqrt(S)"));
        }
        while hi - lo > 1e-12 * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Quantile {
            value: hi,
            at_jump: false,
        })
    }
}

/// One evaluation point of a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub x: f64,
    pub lower: f64,
    pub p_hat: f64,
    pub upper: f64,
    /// p̂(x) < 0.
    pub negative: bool,
    /// p̂(x) < −k²/4, so no p(x) ≥ 0 satisfies the inequality; lower = upper = 0.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceBand {
    pub alpha: f64,
    pub q: Quantile,
    /// k_{α,M} = √(M/n)·q_{α,M}.
    pub k: f64,
    pub points: Vec<BandPoint>,
}

/// Interval of p values with |p̂ − p| ≤ k√p:
/// p̂ + k²/2 ∓ √(p̂k² + k⁴/4).
pub fn band_interval(p_hat: f64, k: f64) -> BandPoint {
    let disc = p_hat * k * k + 0.25 * k.powi(4);
    let mid = p_hat + 0.5 * k * k;
    let (lower, upper, empty) = if disc < 0.0 {
        (0.0, 0.0, true)
    } else {
        let r = disc.sqrt();
        ((mid - r).max(0.0), mid + r, false)
    };
    BandPoint {
        x: f64::NAN,
        lower,
        p_hat,
        upper,
        negative: p_hat < 0.0,
        empty,
    }
}

/// Band on the default per-cell grid (32 steps per closed cell).
pub fn build_band(result: &EstimateResult, law: &AccompanyingLaw, alpha: f64) -> Result<ConfidenceBand> {
    build_band_with(result, law, alpha, DEFAULT_GRID_PER_CELL)
}

pub fn build_band_with(
    result: &EstimateResult,
    law: &AccompanyingLaw,
    alpha: f64,
    grid_per_cell: usize,
) -> Result<ConfidenceBand> {
    if result.n == 0 {
        return Err(Error::param("n", "band needs a fitted estimate"));
    }
    let q = law.quantile(alpha)?;
    let k = (result.spec.cells as f64 / result.n as f64).sqrt() * q.value;
    let mut points = Vec::with_capacity(result.spec.cells * (grid_per_cell + 1));
    result.for_each_grid_point(grid_per_cell, |_, x, p_hat| {
        points.push(BandPoint {
            x,
            ..band_interval(p_hat, k)
        });
    });
    Ok(ConfidenceBand { alpha, q, k, points })
}

impl ConfidenceBand {
    /// Whether `density` lies inside the band at every grid point.
    pub fn covers<F: Fn(f64) -> f64>(&self, density: F) -> bool {
        self.points.iter().all(|b| {
            let p = density(b.x);
            p >= b.lower && p <= b.upper
        })
    }

    pub fn n_empty(&self) -> usize {
        self.points.iter().filter(|b| b.empty).count()
    }

    /// CSV `x,lower,p_hat,upper,negative,empty`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,lower,p_hat,upper,negative,empty")?;
        for b in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                b.x, b.lower, b.p_hat, b.upper, b.negative as u8, b.empty as u8
            )?;
        }
        Ok(())
    }
}

/// a_M and u_M(x) = a_M + xS/a_M, under which A_M(u_M(x)) → exp(−e^{−x}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SbrNormalizers {
    pub s: f64,
    pub c0: f64,
    pub a_m: f64,
    /// (ln ln M)²/(16 ln M).
    pub lambda_m: f64,
}

impl SbrNormalizers {
    /// a_M = √(2S ln M) − (√S/2^{3/2})·ln((2S/c0²) ln M)/√(ln M), which solves
    /// M·c0·e^{−a²/2S}/a = 1 to leading order.
    pub fn new(law: &AccompanyingLaw, c0: f64) -> Result<Self> {
        if law.m < 3 {
            return Err(Error::param("M", "need M >= 3"));
        }
        if !(c0 > 0.0) {
            return Err(Error::param("c0", "must be positive"));
        }
        Ok(Self::from_parts(law.s, c0, law.m as f64))
    }

    /// Same formulas for real M ≥ 3.
    pub fn from_parts(s: f64, c0: f64, m: f64) -> Self {
        let l = m.ln();
        let a_m = (2.0 * s * l).sqrt() - s.sqrt() / 2f64.powf(1.5) * ((2.0 * s / (c0 * c0)) * l).ln() / l.sqrt();
        Self {
            s,
            c0,
            a_m,
            lambda_m: l.ln().powi(2) / (16.0 * l),
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        self.a_m + x * self.s / self.a_m
    }
}

/// exp(−e^{−x}).
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}
