//! Legendre polynomials and the orthonormal bases built from them: the
//! affinely rescaled basis ψ_j on [A, B] and its piecewise copies ψ_j^(m) on the
//! M equal cells of a partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DOMAIN_TOL: f64 = 1e-12;

/// Legendre polynomial P_j(x) by the Bonnet recurrence.
pub fn legendre(j: usize, x: f64) -> Result<f64> {
    let x = check_reference(x)?;
    if x == 1.0 {
        return Ok(1.0);
    }
    if x == -1.0 {
        return Ok(if j.is_multiple_of(2) { 1.0 } else { -1.0 });
    }
    let (mut p0, mut p1) = (1.0, x);
    if j == 0 {
        return Ok(1.0);
    }
    for k in 1..j {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// First or second derivative of P_j at x.
///
/// At x = ±1 the analytic limits are used:
/// P′_j(±1) = (±1)^{j−1} j(j+1)/2 and P″_j(±1) = (±1)^j (j−1)j(j+1)(j+2)/8.
/// Elsewhere the recurrence is differentiated term by term, which avoids the
/// (1 − x²) division entirely.
pub fn legendre_deriv(j: usize, x: f64, order: u8) -> Result<f64> {
    let x = check_reference(x)?;
    if !(1..=2).contains(&order) {
        return Err(Error::param("order", "derivative order must be 1 or 2"));
    }
    let jf = j as f64;
    if x.abs() == 1.0 {
        let (mag, parity) = match order {
            1 => (jf * (jf + 1.0) / 2.0, j + 1),
            _ => ((jf - 1.0) * jf * (jf + 1.0) * (jf + 2.0) / 8.0, j),
        };
        let sign = if x < 0.0 && parity % 2 == 1 { -1.0 } else { 1.0 };
        return Ok(sign * mag);
    }
    let mut row = LegendreRow::new(j);
    row.fill(x);
    Ok(if order == 1 { row.d1[j] } else { row.d2[j] })
}

fn check_reference(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_TOL {
        return Err(Error::Domain { x });
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// P_0..P_J with first and second derivatives at a single point.
#[derive(Debug, Clone)]
pub struct LegendreRow {
    pub p: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl LegendreRow {
    pub fn new(degree: usize) -> Self {
        Self {
            p: vec![0.0; degree + 1],
            d1: vec![0.0; degree + 1],
            d2: vec![0.0; degree + 1],
        }
    }

    /// Evaluate at x ∈ [-1, 1] (not checked).
    pub fn fill(&mut self, x: f64) {
        let n = self.p.len();
        self.p[0] = 1.0;
        self.d1[0] = 0.0;
        self.d2[0] = 0.0;
        if n == 1 {
            return;
        }
        self.p[1] = x;
        self.d1[1] = 1.0;
        self.d2[1] = 0.0;
        for k in 1..n - 1 {
            let a = (2 * k + 1) as f64;
            let b = k as f64;
            let c = (k + 1) as f64;
            self.p[k + 1] = (a * x * self.p[k] - b * self.p[k - 1]) / c;
            self.d1[k + 1] = (a * (self.p[k] + x * self.d1[k]) - b * self.d1[k - 1]) / c;
            self.d2[k + 1] = (a * (2.0 * self.d1[k] + x * self.d2[k]) - b * self.d2[k - 1]) / c;
        }
    }
}

/// A Legendre basis of degree ≤ `degree` rescaled to `[lo, hi]` and split into
/// `cells` equal subintervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub degree: usize,
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

/// Maximum of σ²(t) and where it is attained.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMax {
    pub value: f64,
    pub argmax: Vec<f64>,
}

impl BasisSpec {
    pub fn new(degree: usize, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("interval", format!("need A < B, got [{lo}, {hi}]")));
        }
        if cells == 0 {
            return Err(Error::param("M", "need at least one cell"));
        }
        Ok(Self {
            degree,
            lo,
            hi,
            cells,
        })
    }

    /// The M = 1 basis.
    pub fn unpartitioned(degree: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(degree, lo, hi, 1)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn cell_width(&self) -> f64 {
        self.width() / self.cells as f64
    }

    /// Endpoints (a_m, b_m) of the zero-based cell `m`.
    pub fn cell_bounds(&self, m: usize) -> (f64, f64) {
        let d = self.cell_width();
        let a = self.lo + d * m as f64;
        let b = if m + 1 == self.cells {
            self.hi
        } else {
            self.lo + d * (m + 1) as f64
        };
        (a, b)
    }

    /// Zero-based cell containing x. Cells are half-open `[a_m, b_m)` except the
    /// last, which also contains B.
    pub fn cell_of(&self, x: f64) -> Result<usize> {
        self.check_point(x)?;
        let x = x.clamp(self.lo, self.hi);
        let guess = ((x - self.lo) / self.cell_width()).floor();
        let mut m = (guess.max(0.0) as usize).min(self.cells - 1);
        if m > 0 && x < self.cell_bounds(m).0 {
            m -= 1;
        } else if m + 1 < self.cells && x >= self.cell_bounds(m + 1).0 {
            m += 1;
        }
        Ok(m)
    }

    fn check_point(&self, x: f64) -> Result<()> {
        let slack = DOMAIN_TOL * self.width().max(1.0);
        if !x.is_finite() || x < self.lo - slack || x > self.hi + slack {
            return Err(Error::OutOfInterval {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j > self.degree {
            return Err(Error::Index {
                name: "j",
                value: j,
                max: self.degree,
            });
        }
        Ok(())
    }

    /// Affine map [A, B] → [-1, 1].
    pub fn to_reference(&self, x: f64) -> f64 {
        ((2.0 * x - self.lo - self.hi) / self.width()).clamp(-1.0, 1.0)
    }

    pub fn from_reference(&self, y: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * self.width() * y
    }

    fn norm(&self, j: usize) -> f64 {
        ((2 * j + 1) as f64 / self.width()).sqrt()
    }

    /// ψ_j(x) = √((2j+1)/(B−A)) · P_j(map(x)), orthonormal on [A, B].
    pub fn psi(&self, j: usize, x: f64) -> Result<f64> {
        self.check_index(j)?;
        self.check_point(x)?;
        Ok(self.norm(j) * legendre(j, self.to_reference(x))?)
    }

    /// d^order ψ_j / dx^order for order 0, 1 or 2.
    pub fn psi_deriv(&self, j: usize, x: f64, order: u8) -> Result<f64> {
        if order == 0 {
            return self.psi(j, x);
        }
        self.check_index(j)?;
        self.check_point(x)?;
        let chain = (2.0 / self.width()).powi(order as i32);
        Ok(self.norm(j) * chain * legendre_deriv(j, self.to_reference(x), order)?)
    }

    /// ψ_j^(m)(x) = √M · ψ_j(M(x − a_m) + A) on the closed cell [a_m, b_m] and 0
    /// outside it. `m` is zero-based.
    pub fn psi_cell(&self, m: usize, j: usize, x: f64) -> Result<f64> {
        self.check_index(j)?;
        if m >= self.cells {
            return Err(Error::Index {
                name: "m",
                value: m,
                max: self.cells - 1,
            });
        }
        self.check_point(x)?;
        let (a, b) = self.cell_bounds(m);
        if x < a || x > b {
            return Ok(0.0);
        }
        let y = (2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
        Ok(((2 * j + 1) as f64 / (b - a)).sqrt() * legendre(j, y)?)
    }

    /// All ψ_j^(m)(x), j = 0..=J, into `out` (no range checks; x is taken
    /// relative to cell m even if it lies outside).
    pub fn cell_values_into(&self, m: usize, x: f64, out: &mut [f64]) {
        let (a, b) = self.cell_bounds(m);
        let y = (2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
        legendre_values_into(y, out);
        let w = b - a;
        for (j, v) in out.iter_mut().enumerate() {
            *v *= ((2 * j + 1) as f64 / w).sqrt();
        }
    }

    /// All ψ_j(x) and their first two x-derivatives for the unpartitioned basis.
    pub fn psi_row(&self, x: f64, row: &mut LegendreRow) {
        row.fill(self.to_reference(x));
        let c = 2.0 / self.width();
        for j in 0..row.p.len() {
            let n = self.norm(j);
            row.p[j] *= n;
            row.d1[j] *= n * c;
            row.d2[j] *= n * c * c;
        }
    }

    /// σ²(t) = Σ_j ψ_j²(t), the variance of Υ(t) for the unpartitioned basis.
    pub fn sigma2(&self, t: f64) -> Result<f64> {
        self.check_point(t)?;
        let mut out = vec![0.0; self.degree + 1];
        legendre_values_into(self.to_reference(t), &mut out);
        Ok(out
            .iter()
            .enumerate()
            .map(|(j, p)| self.norm(j).powi(2) * p * p)
            .sum())
    }

    fn sigma2_slope(&self, t: f64, row: &mut LegendreRow) -> f64 {
        self.psi_row(t, row);
        2.0 * row.p.iter().zip(&row.d1).map(|(p, d)| p * d).sum::<f64>()
    }

    /// Numerical maximum of σ² over [A, B]: a uniform grid of `grid` points,
    /// with interior candidates refined by bisection on (σ²)′.
    ///
    /// Fails with [`Error::DegeneratePlateau`] when more than J + 2 maxima tie,
    /// which is what a constant variance (J = 0) produces.
    pub fn variance_max_with(&self, grid: usize) -> Result<VarianceMax> {
        if self.cells != 1 {
            return Err(Error::param("M", "variance maximum is defined for M = 1"));
        }
        if grid < 3 {
            return Err(Error::param("grid", "need at least 3 points"));
        }
        let h = self.width() / (grid - 1) as f64;
        let ts: Vec<f64> = (0..grid)
            .map(|i| if i + 1 == grid { self.hi } else { self.lo + h * i as f64 })
            .collect();
        let vs: Vec<f64> = ts.iter().map(|&t| self.sigma2(t)).collect::<Result<_>>()?;

        let mut row = LegendreRow::new(self.degree);
        let mut candidates = Vec::new();
        for i in 0..grid {
            let left = i == 0 || vs[i] >= vs[i - 1];
            let right = i + 1 == grid || vs[i] >= vs[i + 1];
            if !(left && right) {
                continue;
            }
            if i == 0 || i + 1 == grid {
                candidates.push((ts[i], vs[i]));
                continue;
            }
            let (mut a, mut b) = (ts[i - 1], ts[i + 1]);
            let (fa, fb) = (self.sigma2_slope(a, &mut row), self.sigma2_slope(b, &mut row));
            if fa > 0.0 && fb < 0.0 {
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if self.sigma2_slope(mid, &mut row) > 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    if b - a < 1e-15 * self.width() {
                        break;
                    }
                }
                let t = 0.5 * (a + b);
                candidates.push((t, self.sigma2(t)?));
            } else {
                candidates.push((ts[i], vs[i]));
            }
        }
        let value = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let tie = 1e-9 * value.abs().max(f64::MIN_POSITIVE);
        let mut argmax: Vec<f64> = candidates
            .iter()
            .filter(|c| value - c.1 <= tie)
            .map(|c| c.0)
            .collect();
        argmax.dedup_by(|x, y| (*x - *y).abs() < 1.5 * h);
        if argmax.len() > self.degree + 2 {
            return Err(Error::DegeneratePlateau {
                value,
                count: argmax.len(),
            });
        }
        Ok(VarianceMax { value, argmax })
    }

    /// [`BasisSpec::variance_max_with`] on a 10⁴-point grid.
    pub fn variance_max(&self) -> Result<VarianceMax> {
        self.variance_max_with(10_000)
    }

    /// Closed form for the Legendre basis: S = (J+1)²/(B−A) at {A, B}.
    pub fn legendre_variance_max(&self) -> VarianceMax {
        let j1 = (self.degree + 1) as f64;
        VarianceMax {
            value: j1 * j1 / self.width(),
            argmax: vec![self.lo, self.hi],
        }
    }
}

/// P_0(y)..P_J(y) into `out`.
pub fn legendre_values_into(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = y;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * y * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}
