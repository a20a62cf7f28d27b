//! The finite-rank Gaussian process Υ(t) = Σ_j ψ_j(t) Z_j on the unpartitioned
//! basis: covariance derivatives, Monte Carlo sup-tail and up-crossing
//! estimates, the two-boundary-maximum tail asymptote, and the Rice integral
//! for the expected number of up-crossings.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::basis::{BasisSpec, LegendreRow};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::normal;
use crate::quadrature::{self, Tolerance};
use crate::rng;

pub const DEFAULT_GRID: usize = 4001;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProcessModel {
    spec: BasisSpec,
    s_max: f64,
    argmax: Vec<f64>,
    c0: f64,
}

/// Monte Carlo estimate of P{max |Υ| ≥ u} on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupTailEstimate {
    pub u: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub n_rep: usize,
    pub grid_size: usize,
    pub seed: u64,
}

/// Monte Carlo estimate of the expected number of up-crossings of level `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEstimate {
    pub u: f64,
    pub mean: f64,
    pub std_err: f64,
    pub n_rep: usize,
    pub grid_size: usize,
    pub seed: u64,
}

impl GaussianProcessModel {
    /// Builds the model for an unpartitioned basis; the variance maximum is
    /// located numerically.
    pub fn new(spec: BasisSpec) -> Result<Self> {
        if spec.cells != 1 {
            return Err(Error::param("M", "the process is defined on the unpartitioned basis"));
        }
        let vm = spec.variance_max()?;
        let k = vm.argmax.len() as f64;
        // each boundary maximum contributes 2√(S/(2π)) to c0
        let c0 = 2.0 * k * (vm.value / (2.0 * std::f64::consts::PI)).sqrt();
        Ok(Self {
            spec,
            s_max: vm.value,
            argmax: vm.argmax,
            c0,
        })
    }

    pub fn legendre(degree: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(BasisSpec::unpartitioned(degree, lo, hi)?)
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    /// S = max σ²(t).
    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn argmax(&self) -> &[f64] {
        &self.argmax
    }

    /// The constant in P{max|Υ| > u} ~ (c0/u) e^{−u²/(2S)}.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn degree(&self) -> usize {
        self.spec.degree
    }

    fn check(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.spec.width().max(1.0);
        if !(t >= self.spec.lo - slack && t <= self.spec.hi + slack) {
            return Err(Error::OutOfInterval {
                x: t,
                lo: self.spec.lo,
                hi: self.spec.hi,
            });
        }
        Ok(())
    }

    pub(crate) fn row(&self, t: f64) -> LegendreRow {
        let mut row = LegendreRow::new(self.spec.degree);
        self.spec.psi_row(t, &mut row);
        row
    }

    /// r_kl(s, t) = ∂^{k+l} r / ∂s^k ∂t^l = Σ_j ψ_j^{(k)}(s) ψ_j^{(l)}(t), k, l ≤ 2.
    pub fn covariance(&self, k: u8, l: u8, s: f64, t: f64) -> Result<f64> {
        if k > 2 || l > 2 {
            return Err(Error::param("k,l", "derivative orders are limited to 2"));
        }
        self.check(s)?;
        self.check(t)?;
        let rs = self.row(s);
        let rt = self.row(t);
        let pick = |r: &LegendreRow, o: u8| -> Vec<f64> {
            match o {
                0 => r.p.clone(),
                1 => r.d1.clone(),
                _ => r.d2.clone(),
            }
        };
        Ok(pick(&rs, k).iter().zip(pick(&rt, l)).map(|(a, b)| a * b).sum())
    }

    pub fn sigma2(&self, t: f64) -> Result<f64> {
        self.spec.sigma2(t)
    }

    fn grid(&self, grid_size: usize) -> Vec<f64> {
        let (a, b) = (self.spec.lo, self.spec.hi);
        let h = (b - a) / (grid_size - 1) as f64;
        (0..grid_size)
            .map(|i| if i + 1 == grid_size { b } else { a + h * i as f64 })
            .collect()
    }

    /// Row-major `grid × (J+1)` table of ψ_j on the simulation grid.
    fn basis_table(&self, ts: &[f64]) -> Vec<f64> {
        let width = self.spec.degree + 1;
        let mut table = vec![0.0; ts.len() * width];
        for (i, &t) in ts.iter().enumerate() {
            let row = self.row(t);
            table[i * width..(i + 1) * width].copy_from_slice(&row.p);
        }
        table
    }

    fn draw(&self, seed: u64, rep: usize, z: &mut [f64]) {
        let mut r = rng::stream(seed, rep as u64);
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut r);
        }
    }

    /// Grid maxima of |Υ| for `n_rep` independent trajectories, in replicate
    /// order.
    pub fn sup_samples(&self, n_rep: usize, grid_size: usize, seed: u64, exec: Exec) -> Result<Vec<f64>> {
        if grid_size < 2 {
            return Err(Error::param("grid_size", "need at least 2 grid points"));
        }
        if n_rep == 0 {
            return Err(Error::param("n_rep", "need at least one replicate"));
        }
        let width = self.spec.degree + 1;
        let table = self.basis_table(&self.grid(grid_size));
        Ok(exec.map(n_rep, |rep| {
            let mut z = vec![0.0; width];
            self.draw(seed, rep, &mut z);
            table
                .chunks_exact(width)
                .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().abs())
                .fold(0.0, f64::max)
        }))
    }

    /// P{max_{t∈[A,B]} |Υ(t)| ≥ u} by Monte Carlo on a uniform grid.
    pub fn simulate_sup(&self, u: f64, n_rep: usize, grid_size: usize, seed: u64) -> Result<SupTailEstimate> {
        Ok(self.simulate_sup_levels(&[u], n_rep, grid_size, seed, Exec::default())?[0])
    }

    /// [`simulate_sup`](Self::simulate_sup) for several levels on one shared set
    /// of trajectories.
    pub fn simulate_sup_levels(
        &self,
        levels: &[f64],
        n_rep: usize,
        grid_size: usize,
        seed: u64,
        exec: Exec,
    ) -> Result<Vec<SupTailEstimate>> {
        let sups = self.sup_samples(n_rep, grid_size, seed, exec)?;
        Ok(levels
            .iter()
            .map(|&u| {
                let hits = sups.iter().filter(|&&s| s >= u).count();
                let p_hat = hits as f64 / n_rep as f64;
                SupTailEstimate {
                    u,
                    p_hat,
                    std_err: (p_hat * (1.0 - p_hat) / n_rep as f64).sqrt(),
                    n_rep,
                    grid_size,
                    seed,
                }
            })
            .collect())
    }

    /// Σ_i 𝒫_i(u) with 𝒫_i(u) = 2(1 − Φ(u/√S)) for each boundary maximum with
    /// non-vanishing variance slope.
    pub fn asymptotic_tail(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::param("u", "level must be positive"));
        }
        let tol = 1e-9 * self.spec.width();
        for &t in &self.argmax {
            let boundary = (t - self.spec.lo).abs() < tol || (t - self.spec.hi).abs() < tol;
            let slope = self.covariance(1, 0, t, t)?;
            if !boundary || slope.abs() <= 1e-12 * self.s_max {
                return Err(Error::UnsupportedMaximum { t });
            }
        }
        Ok(2.0 * self.argmax.len() as f64 * normal::sf(u / self.s_max.sqrt()))
    }

    /// Rice integrand: ∫₀^∞ x p_t(u, x) dx, the up-crossing intensity at t.
    pub fn upcrossing_intensity(&self, u: f64, t: f64) -> Result<f64> {
        let row = self.row(t);
        let r: f64 = row.p.iter().map(|p| p * p).sum();
        let r10: f64 = row.p.iter().zip(&row.d1).map(|(p, d)| p * d).sum();
        let r11: f64 = row.d1.iter().map(|d| d * d).sum();
        if r <= 0.0 {
            return Err(Error::param("region", format!("σ(t) = 0 at t = {t}")));
        }
        let d2 = r11 - r10 * r10 / r;
        if d2 <= 0.0 {
            return Err(Error::DegenerateDerivative { t, d2 });
        }
        let m = u * r10 / r;
        let dens = (-u * u / (2.0 * r)).exp() / (2.0 * std::f64::consts::PI * r).sqrt();
        Ok(dens * normal::positive_part_mean(m, d2.sqrt()))
    }

    /// E N_u⁺ over `region` by adaptive Gauss–Kronrod quadrature of the Rice
    /// intensity.
    pub fn rice_upcrossings(&self, u: f64, region: (f64, f64)) -> Result<f64> {
        self.rice_upcrossings_with(u, region, Tolerance::default())
    }

    pub fn rice_upcrossings_with(&self, u: f64, region: (f64, f64), tol: Tolerance) -> Result<f64> {
        let (lo, hi) = region;
        if lo > hi {
            return Err(Error::param("region", "need lo <= hi"));
        }
        self.check(lo)?;
        self.check(hi)?;
        quadrature::adaptive(|t| self.upcrossing_intensity(u, t), lo, hi, tol)
    }

    /// Monte Carlo mean number of up-crossings of each level inside `region`:
    /// a crossing is a pair of consecutive grid points with Υ − u ≤ 0 then > 0.
    ///
    /// The standard error uses the sample variance floored at that of a single
    /// observed event, `1/n_rep`, so rare levels with zero observed crossings
    /// still get a finite error bar.
    pub fn mc_upcrossings(
        &self,
        levels: &[f64],
        region: (f64, f64),
        n_rep: usize,
        grid_size: usize,
        seed: u64,
        exec: Exec,
    ) -> Result<Vec<CrossingEstimate>> {
        if grid_size < 2 {
            return Err(Error::param("grid_size", "need at least 2 grid points"));
        }
        if n_rep == 0 {
            return Err(Error::param("n_rep", "need at least one replicate"));
        }
        self.check(region.0)?;
        self.check(region.1)?;
        let ts: Vec<f64> = self
            .grid(grid_size)
            .into_iter()
            .filter(|&t| t >= region.0 && t <= region.1)
            .collect();
        if ts.len() < 2 {
            return Err(Error::param("region", "fewer than two grid points inside"));
        }
        let width = self.spec.degree + 1;
        let table = self.basis_table(&ts);
        let counts: Vec<Vec<u64>> = exec.map(n_rep, |rep| {
            let mut z = vec![0.0; width];
            self.draw(seed, rep, &mut z);
            let path: Vec<f64> = table
                .chunks_exact(width)
                .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
                .collect();
            levels
                .iter()
                .map(|&u| path.windows(2).filter(|w| w[0] - u <= 0.0 && w[1] - u > 0.0).count() as u64)
                .collect()
        });
        let n = n_rep as f64;
        Ok(levels
            .iter()
            .enumerate()
            .map(|(li, &u)| {
                let sum: u64 = counts.iter().map(|c| c[li]).sum();
                let sum_sq: u64 = counts.iter().map(|c| c[li] * c[li]).sum();
                let mean = sum as f64 / n;
                let var = if n_rep > 1 {
                    ((sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                CrossingEstimate {
                    u,
                    mean,
                    std_err: (var.max(1.0 / n) / n).sqrt(),
                    n_rep,
                    grid_size,
                    seed,
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn j4() -> GaussianProcessModel {
        GaussianProcessModel::legendre(4, -1.0, 1.0).unwrap()
    }

    #[test]
    fn model_constants() {
        let m = j4();
        assert_abs_diff_eq!(m.s_max(), 12.5, epsilon = 1e-9);
        assert_eq!(m.argmax(), &[-1.0, 1.0]);
        let c0 = 2.0 * 5.0 / std::f64::consts::PI.sqrt();
        assert_abs_diff_eq!(m.c0(), c0, epsilon = 1e-9);
    }

    #[test]
    fn covariance_diagonal_is_variance() {
        let m = j4();
        for i in 0..100 {
            let t = -1.0 + 2.0 * ((i * 37) % 100) as f64 / 99.0;
            assert_abs_diff_eq!(m.covariance(0, 0, t, t).unwrap(), m.sigma2(t).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn r10_is_half_variance_slope() {
        let m = j4();
        let h = 1e-5;
        for i in 1..40 {
            let t = -1.0 + 2.0 * i as f64 / 40.0;
            let fd = (m.sigma2(t + h).unwrap() - m.sigma2(t - h).unwrap()) / (2.0 * h);
            let r10 = m.covariance(1, 0, t, t).unwrap();
            assert!((r10 - fd / 2.0).abs() < 1e-6 * fd.abs().max(1.0), "t={t}");
        }
    }

    #[test]
    fn boundary_slope_sum() {
        let m = j4();
        // −Σ ψ′_j(−1) ψ_j(−1) = J(J+1)²(J+2)/8
        assert_abs_diff_eq!(-m.covariance(0, 1, -1.0, -1.0).unwrap(), 75.0, epsilon = 1e-10);
        assert_abs_diff_eq!(-m.covariance(1, 0, -1.0, -1.0).unwrap(), 75.0, epsilon = 1e-10);
    }

    #[test]
    fn cauchy_schwarz_on_grid() {
        let m = j4();
        for i in 0..100 {
            for k in 0..100 {
                let s = -1.0 + 2.0 * i as f64 / 99.0;
                let t = -1.0 + 2.0 * k as f64 / 99.0;
                let r = m.covariance(0, 0, s, t).unwrap();
                let bound = (m.sigma2(s).unwrap() * m.sigma2(t).unwrap()).sqrt();
                assert!(r.abs() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = j4();
        let h = 1e-5;
        let r = |s: f64, t: f64| m.covariance(0, 0, s, t).unwrap();
        for &(s, t) in &[(-0.7, -0.2), (0.1, 0.5), (-0.9, 0.8)] {
            let r10 = (r(s + h, t) - r(s - h, t)) / (2.0 * h);
            let r11 = (r(s + h, t + h) - r(s + h, t - h) - r(s - h, t + h) + r(s - h, t - h)) / (4.0 * h * h);
            let r02 = (r(s, t + h) - 2.0 * r(s, t) + r(s, t - h)) / (h * h);
            let check = |got: f64, want: f64, tol: f64| {
                assert!((got - want).abs() <= tol * want.abs().max(1.0), "{got} vs {want}");
            };
            check(m.covariance(1, 0, s, t).unwrap(), r10, 1e-6);
            check(m.covariance(1, 1, s, t).unwrap(), r11, 1e-5);
            check(m.covariance(0, 2, s, t).unwrap(), r02, 1e-4);
        }
    }

    #[test]
    fn simulate_sup_trivial_levels() {
        let m = j4();
        assert_eq!(m.simulate_sup(-1.0, 200, 101, 3).unwrap().p_hat, 1.0);
        assert_eq!(m.simulate_sup(0.0, 200, 101, 3).unwrap().p_hat, 1.0);
        assert!(m.simulate_sup(1.0, 10, 1, 3).is_err());
    }

    #[test]
    fn simulate_sup_is_deterministic_and_monotone() {
        let m = j4();
        let a = m.simulate_sup_levels(&[2.0, 5.0, 8.0], 2000, 401, 11, Exec::Parallel).unwrap();
        let b = m.simulate_sup_levels(&[2.0, 5.0, 8.0], 2000, 401, 11, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a[0].p_hat >= a[1].p_hat && a[1].p_hat >= a[2].p_hat);
    }

    #[test]
    fn asymptotic_tail_values() {
        let m = j4();
        let s = m.s_max().sqrt();
        // 4(1 − Φ(1)) = 4 × 0.158655254 = 0.634621016
        assert_abs_diff_eq!(m.asymptotic_tail(s).unwrap(), 0.634_621_016, epsilon = 1e-8);
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let v = m.asymptotic_tail(k as f64).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-15);
        for j in 1..6 {
            let m3 = GaussianProcessModel::legendre(j, -3.0, 3.0).unwrap();
            let u = 2.3;
            let want = 4.0 * normal::sf(6f64.sqrt() * u / (j + 1) as f64);
            assert!((m3.asymptotic_tail(u).unwrap() - want).abs() < 1e-12 * want.max(1e-300));
        }
        assert!(m.asymptotic_tail(0.0).is_err());
    }

    #[test]
    fn rice_vanishes_for_high_levels() {
        let m = j4();
        let s = m.s_max();
        for k in [3.0, 4.0, 6.0] {
            let u = k * s.sqrt();
            let v = m.rice_upcrossings(u, (-1.0, 0.0)).unwrap();
            assert!(v >= 0.0 && v < 10.0 * (-u * u / (2.0 * s)).exp());
        }
    }

    #[test]
    fn inner_integral_matches_numeric_double_integral() {
        use crate::quadrature::GaussLegendre;
        let gl = GaussLegendre::new(128);
        for &(mu, d) in &[(-1.0f64, 1.0f64), (0.5, 2.0), (-30.0, 5.0)] {
            // ∫₀^∞ x N(x; m, d²) dx truncated at m + 12d, split for accuracy
            let hi: f64 = (mu + 12.0 * d).max(1.0);
            let num: f64 = (0..16)
                .map(|k| {
                    let a = hi * k as f64 / 16.0;
                    let b = hi * (k + 1) as f64 / 16.0;
                    gl.integrate(a, b, |x| x * normal::pdf_with(x, mu, d * d))
                })
                .sum();
            let closed = normal::positive_part_mean(mu, d);
            assert!((num - closed).abs() < 1e-12 + 1e-9 * closed, "{mu},{d}: {num} vs {closed}");
        }
    }

    #[test]
    fn rice_matches_crossing_counts_at_moderate_level() {
        let m = j4();
        let u = 1.0 * m.s_max().sqrt();
        let quad = m.rice_upcrossings(u, (-1.0, 0.0)).unwrap();
        let mc = m.mc_upcrossings(&[u], (-1.0, 0.0), 20_000, 2001, 5, Exec::default()).unwrap()[0];
        assert!((quad - mc.mean).abs() < 3.0 * mc.std_err, "{quad} vs {} ± {}", mc.mean, mc.std_err);
    }
}
