//! Optimisation of the remainder exponent χ over the level-set parameter δ for
//! a process whose variance peaks at the left endpoint A with a negative slope.
//!
//! For δ > 0 the left part of the level set {σ² ≥ S/(1+δ)} ∩ [A, (A+B)/2] must
//! be an interval [A, b]; three constraints on χ follow from it:
//!
//! * χ₁(δ) = min{δ, (S − (b−A)D₁)/((b−A)D₁)}, with D₁ = −r₀₁(A, A);
//! * χ₂(δ) = min over [A, b] of r₁₀²(t,t)/r₁₁(t,t);
//! * χ₃(δ) = 4S/R(δ) − 1, with R(δ) the maximum over [A, b]² of
//!   Σ_j (ψ_j(s) + (−1)^j ψ_j(t))².
//!
//! m(δ) = min(χ₁, χ₂, χ₃) and χ_opt = max_δ m(δ).

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gproc::GaussianProcessModel;

const LEVEL_GRID: usize = 10_000;
const PSI_GRID: usize = 2000;
const R_GRID: usize = 200;
/// |m(δ) − χ_opt| below this counts as on the plateau.
pub const PLATEAU_TOL: f64 = 1e-4;

/// Which constraint is smallest at a given δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Chi1,
    Chi2,
    Chi3,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiProfile {
    pub degree: usize,
    pub delta_grid: Vec<f64>,
    pub chi1: Vec<f64>,
    pub chi2: Vec<f64>,
    pub chi3: Vec<f64>,
    pub m: Vec<f64>,
    pub chi_opt: f64,
    pub delta_opt: f64,
    pub plateau: (f64, f64),
    pub binding: Branch,
}

/// R(δ) and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chi3 {
    pub value: f64,
    pub r_max: f64,
    pub argmax: (f64, f64),
    /// Whether the maximiser sits at (A, A) within grid resolution.
    pub at_corner: bool,
}

/// `[A, b]`, the part of the level set {σ² ≥ S/(1+δ)} in the left half.
///
/// Fails unless the set, traced on a 10⁴-point grid, starts at A and leaves
/// exactly once before the midpoint.
pub fn level_set(model: &GaussianProcessModel, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    let spec = model.spec();
    let (a, mid) = (spec.lo, 0.5 * (spec.lo + spec.hi));
    let thr = model.s_max() / (1.0 + delta);
    let f = |t: f64| -> Result<f64> { Ok(model.sigma2(t)? - thr) };

    let h = (mid - a) / (LEVEL_GRID - 1) as f64;
    let mut exits = 0;
    let mut entries = 0;
    let mut first_exit = None;
    let mut prev = f(a)?;
    if prev < 0.0 {
        return Err(Error::LevelSetNotInterval { delta, crossings: 0 });
    }
    for i in 1..LEVEL_GRID {
        let t = a + h * i as f64;
        let cur = f(t)?;
        if prev >= 0.0 && cur < 0.0 {
            exits += 1;
            first_exit.get_or_insert(i);
        } else if prev < 0.0 && cur >= 0.0 {
            entries += 1;
        }
        prev = cur;
    }
    let Some(i) = first_exit.filter(|_| exits == 1 && entries == 0) else {
        return Err(Error::LevelSetNotInterval {
            delta,
            crossings: exits + entries,
        });
    };
    let (mut lo, mut hi) = (a + h * (i - 1) as f64, a + h * i as f64);
    while hi - lo > 1e-12 {
        let t = 0.5 * (lo + hi);
        if f(t)? >= 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    Ok((a, 0.5 * (lo + hi)))
}

/// D₁ = −Σ_j ψ_j(A) ψ′_j(A).
pub fn d1(model: &GaussianProcessModel) -> Result<f64> {
    let a = model.spec().lo;
    Ok(-model.covariance(0, 1, a, a)?)
}

/// χ₁ in its general form and in the Legendre closed form
/// min{δ, 4/((b̃+1)J(J+2)) − 1}, b̃ being b in reference coordinates.
pub fn chi1_forms(model: &GaussianProcessModel, delta: f64) -> Result<(f64, f64)> {
    let j = model.degree();
    if j == 0 {
        return Err(Error::param("J", "chi1 needs J >= 1"));
    }
    let (a, b) = level_set(model, delta)?;
    if b - a <= 0.0 {
        return Err(Error::param("delta", "level set collapsed to a point"));
    }
    let d1 = d1(model)?;
    let general = delta.min((model.s_max() - (b - a) * d1) / ((b - a) * d1));
    let jf = j as f64;
    let b_ref = model.spec().to_reference(b);
    let closed = delta.min(4.0 / ((b_ref + 1.0) * jf * (jf + 2.0)) - 1.0);
    Ok((general, closed))
}

pub fn chi1(model: &GaussianProcessModel, delta: f64) -> Result<f64> {
    let (general, closed) = chi1_forms(model, delta)?;
    assert!(
        (general - closed).abs() <= 1e-10 * general.abs().max(1.0),
        "chi1 forms disagree: {general} vs {closed}"
    );
    Ok(general)
}

/// Ψ(t) = r₁₀²(t,t)/r₁₁(t,t).
pub fn psi_ratio(model: &GaussianProcessModel, t: f64) -> Result<f64> {
    let row = model.row(t);
    let r10: f64 = row.p.iter().zip(&row.d1).map(|(p, d)| p * d).sum();
    let r11: f64 = row.d1.iter().map(|d| d * d).sum();
    if r11 <= 0.0 {
        return Err(Error::NonPositiveR11 { t, value: r11 });
    }
    Ok(r10 * r10 / r11)
}

pub fn chi2(model: &GaussianProcessModel, delta: f64) -> Result<f64> {
    let (a, b) = level_set(model, delta)?;
    let h = (b - a) / (PSI_GRID - 1) as f64;
    let mut best = (f64::INFINITY, 0);
    for i in 0..PSI_GRID {
        let v = psi_ratio(model, a + h * i as f64)?;
        if v < best.0 {
            best = (v, i);
        }
    }
    let i = best.1;
    let lo = a + h * i.saturating_sub(1) as f64;
    let hi = (a + h * (i + 1) as f64).min(b);
    let (refined, _) = golden_min(|t| psi_ratio(model, t).unwrap_or(f64::INFINITY), lo, hi, 1e-12);
    Ok(best.0.min(refined))
}

/// 𝓡(s, t) = Σ_j (ψ_j(s) + (−1)^j ψ_j(t))².
pub fn r_surface(model: &GaussianProcessModel, s: f64, t: f64) -> f64 {
    let ps = model.row(s).p;
    let pt = model.row(t).p;
    r_from_rows(&ps, &pt)
}

fn r_from_rows(ps: &[f64], pt: &[f64]) -> f64 {
    ps.iter()
        .zip(pt)
        .enumerate()
        .map(|(j, (a, b))| {
            let v = if j % 2 == 0 { a + b } else { a - b };
            v * v
        })
        .sum()
}

/// χ₃(δ) from a 200×200 grid maximum of 𝓡 with coordinate-wise refinement.
/// A maximiser away from (A, A) is reported through `at_corner`, not an error.
pub fn chi3(model: &GaussianProcessModel, delta: f64) -> Result<Chi3> {
    let (a, b) = level_set(model, delta)?;
    let h = (b - a) / (R_GRID - 1) as f64;
    let rows: Vec<Vec<f64>> = (0..R_GRID).map(|i| model.row(a + h * i as f64).p).collect();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, ri) in rows.iter().enumerate() {
        for (k, rk) in rows.iter().enumerate() {
            let v = r_from_rows(ri, rk);
            if v > best.0 {
                best = (v, i, k);
            }
        }
    }
    let (mut s, mut t) = (a + h * best.1 as f64, a + h * best.2 as f64);
    let mut r_max = best.0;
    let clip = |c: f64| ((c - h).max(a), (c + h).min(b));
    for _ in 0..4 {
        let (lo, hi) = clip(s);
        let (v, arg) = golden_min(|x| -r_surface(model, x, t), lo, hi, 1e-13);
        if -v > r_max {
            r_max = -v;
            s = arg;
        }
        let (lo, hi) = clip(t);
        let (v, arg) = golden_min(|x| -r_surface(model, s, x), lo, hi, 1e-13);
        if -v > r_max {
            r_max = -v;
            t = arg;
        }
    }
    // golden section never probes the bracket ends, so try the corner directly
    let corner = r_surface(model, a, a);
    if corner >= r_max {
        r_max = corner;
        s = a;
        t = a;
    }
    Ok(Chi3 {
        value: 4.0 * model.s_max() / r_max - 1.0,
        r_max,
        argmax: (s, t),
        at_corner: (s - a).abs() <= h && (t - a).abs() <= h,
    })
}

/// Closed-form χ₃ for the Legendre process: J/(J+2) for even J, (J+2)/J for odd.
pub fn chi3_closed_form(degree: usize) -> f64 {
    let j = degree as f64;
    if degree.is_multiple_of(2) {
        j / (j + 2.0)
    } else {
        (j + 2.0) / j
    }
}

/// Closed-form R on [−1, 1]: (J+1)(J+2) for even J, J(J+1) for odd.
pub fn r_closed_form(degree: usize) -> f64 {
    let j = degree as f64;
    if degree.is_multiple_of(2) {
        (j + 1.0) * (j + 2.0)
    } else {
        j * (j + 1.0)
    }
}

/// (χ₁, χ₂, χ₃) at δ.
pub fn chi_components(model: &GaussianProcessModel, delta: f64) -> Result<[f64; 3]> {
    Ok([chi1(model, delta)?, chi2(model, delta)?, chi3(model, delta)?.value])
}

pub fn m_delta(model: &GaussianProcessModel, delta: f64) -> Result<f64> {
    Ok(chi_components(model, delta)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Checks −ψ_j(s) ψ′_j(t) ≥ 0 for all j on a `grid × grid` mesh of [A, b]².
pub fn sign_property_holds(model: &GaussianProcessModel, delta: f64, grid: usize) -> Result<bool> {
    let (a, b) = level_set(model, delta)?;
    let h = (b - a) / (grid.max(2) - 1) as f64;
    let rows: Vec<_> = (0..grid.max(2)).map(|i| model.row(a + h * i as f64)).collect();
    Ok(rows.iter().all(|rs| {
        rows.iter()
            .all(|rt| rs.p.iter().zip(&rt.d1).all(|(p, d)| -p * d >= -1e-12))
    }))
}

pub fn optimize_chi(model: &GaussianProcessModel, delta_range: (f64, f64), grid_n: usize) -> Result<ChiProfile> {
    optimize_chi_with(model, delta_range, grid_n, Exec::default())
}

/// Sweeps m(δ) over a uniform δ grid, refines the maximum by golden-section
/// search and brackets the plateau {m ≥ χ_opt − 1e−4} by bisection.
pub fn optimize_chi_with(
    model: &GaussianProcessModel,
    delta_range: (f64, f64),
    grid_n: usize,
    exec: Exec,
) -> Result<ChiProfile> {
    let (lo, hi) = delta_range;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::param("delta_range", "need 0 < lo < hi"));
    }
    if grid_n < 10 {
        return Err(Error::param("grid_n", "need at least 10 points"));
    }
    let step = (hi - lo) / (grid_n - 1) as f64;
    let delta_grid: Vec<f64> = (0..grid_n)
        .map(|i| if i + 1 == grid_n { hi } else { lo + step * i as f64 })
        .collect();
    let comps = exec.try_map(grid_n, |i| chi_components(model, delta_grid[i]))?;
    let chi1: Vec<f64> = comps.iter().map(|c| c[0]).collect();
    let chi2: Vec<f64> = comps.iter().map(|c| c[1]).collect();
    let chi3: Vec<f64> = comps.iter().map(|c| c[2]).collect();
    let m: Vec<f64> = comps.iter().map(|c| c[0].min(c[1]).min(c[2])).collect();

    let (imax, &gmax) = m
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let m_at = |d: f64| m_delta(model, d).unwrap_or(f64::NEG_INFINITY);
    let (neg, d_star) = golden_min(
        |d| -m_at(d),
        delta_grid[imax.saturating_sub(1)],
        delta_grid[(imax + 1).min(grid_n - 1)],
        1e-10,
    );
    let (chi_opt, delta_opt) = if -neg > gmax { (-neg, d_star) } else { (gmax, delta_grid[imax]) };

    let level = chi_opt - PLATEAU_TOL;
    let mut left = imax;
    while left > 0 && m[left - 1] >= level {
        left -= 1;
    }
    let mut right = imax;
    while right + 1 < grid_n && m[right + 1] >= level {
        right += 1;
    }
    let edge = |inside: usize, outside: Option<usize>| -> f64 {
        match outside {
            None => delta_grid[inside],
            Some(o) => {
                let (mut a, mut b) = (delta_grid[inside], delta_grid[o]);
                for _ in 0..60 {
                    let c = 0.5 * (a + b);
                    if m_at(c) >= level {
                        a = c;
                    } else {
                        b = c;
                    }
                }
                0.5 * (a + b)
            }
        }
    };
    let plateau = (
        edge(left, left.checked_sub(1)),
        edge(right, (right + 1 < grid_n).then_some(right + 1)),
    );

    let at_opt = chi_components(model, delta_opt)?;
    let binding = [Branch::Chi1, Branch::Chi2, Branch::Chi3]
        .into_iter()
        .zip(at_opt)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(b, _)| b)
        .expect("three branches");

    Ok(ChiProfile {
        degree: model.degree(),
        delta_grid,
        chi1,
        chi2,
        chi3,
        m,
        chi_opt,
        delta_opt,
        plateau,
        binding,
    })
}

impl ChiProfile {
    /// CSV table `delta,chi1,chi2,chi3,m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "delta,chi1,chi2,chi3,m")?;
        for i in 0..self.delta_grid.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.delta_grid[i], self.chi1[i], self.chi2[i], self.chi3[i], self.m[i]
            )?;
        }
        Ok(())
    }
}

/// Golden-section minimisation on [a, b]; returns (min value, argmin).
fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (f(x), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn j4() -> GaussianProcessModel {
        GaussianProcessModel::legendre(4, -1.0, 1.0).unwrap()
    }

    #[test]
    fn level_set_examples() {
        let m = j4();
        let (a, b_small) = level_set(&m, 1e-6).unwrap();
        assert_eq!(a, -1.0);
        assert!(b_small + 1.0 < 1e-6);
        assert!(level_set(&m, 4.44).is_ok());
        assert!(matches!(level_set(&m, 4.6), Err(Error::LevelSetNotInterval { .. })));
        let (_, b) = level_set(&m, 1.0).unwrap();
        assert_abs_diff_eq!(m.sigma2(b).unwrap() * 2.0 / m.s_max(), 1.0, epsilon = 1e-10);
        assert!(level_set(&m, 0.0).is_err());
    }

    #[test]
    fn d1_closed_form() {
        for j in 1..=8 {
            let m = GaussianProcessModel::legendre(j, -1.0, 1.0).unwrap();
            let jf = j as f64;
            let want = jf * (jf + 1.0).powi(2) * (jf + 2.0) / 8.0;
            assert!((d1(&m).unwrap() - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn chi1_forms_agree_and_small_delta_binds() {
        let m = j4();
        for &d in &[1e-4, 0.3, 1.0, 2.0, 3.5] {
            let (g, c) = chi1_forms(&m, d).unwrap();
            assert!((g - c).abs() < 1e-10);
        }
        assert_eq!(chi1(&m, 1e-3).unwrap(), 1e-3);
        // pinned from the bisection root b(1.0) ≈ −0.941982
        assert_abs_diff_eq!(chi1(&m, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let m3 = GaussianProcessModel::legendre(4, -3.0, 3.0).unwrap();
        let (g, c) = chi1_forms(&m3, 1.7).unwrap();
        assert!((g - c).abs() < 1e-10);
        assert!((chi1(&m3, 1.7).unwrap() - chi1(&m, 1.7).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn chi2_left_endpoint_and_monotone() {
        let m = j4();
        // r10(−1,−1) = −75, r11(−1,−1) = Σ (2j+1)/2 (j(j+1)/2)² = 600
        assert_abs_diff_eq!(psi_ratio(&m, -1.0).unwrap(), 75.0 * 75.0 / 600.0, epsilon = 1e-9);
        let vals: Vec<f64> = [0.2, 0.5, 1.0, 1.5, 2.0, 3.0].iter().map(|&d| chi2(&m, d).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        // golden master at δ = 1
        assert_abs_diff_eq!(vals[2], 3.532_454, epsilon = 1e-5);
    }

    #[test]
    fn chi3_matches_closed_forms() {
        let m = j4();
        for &d in &[0.1, 1.0, 2.5, 4.0] {
            let c = chi3(&m, d).unwrap();
            assert!(c.at_corner);
            assert_abs_diff_eq!(c.r_max, 30.0, epsilon = 1e-9);
            assert_abs_diff_eq!(c.value, 2.0 / 3.0, epsilon = 1e-9);
        }
        let m5 = GaussianProcessModel::legendre(5, -1.0, 1.0).unwrap();
        let c5 = chi3(&m5, 1.0).unwrap();
        assert_abs_diff_eq!(c5.value, 7.0 / 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c5.r_max, r_closed_form(5), epsilon = 1e-9);
        assert_eq!(chi3_closed_form(5), 1.4);
    }

    #[test]
    fn chi3_degree_one_leaves_corner() {
        let m1 = GaussianProcessModel::legendre(1, -1.0, 1.0).unwrap();
        let (_, b) = level_set(&m1, 1.0).unwrap();
        assert_abs_diff_eq!(b, -(1.0f64 / 3.0).sqrt(), epsilon = 1e-10);
        let c = chi3(&m1, 1.0).unwrap();
        assert!(!c.at_corner);
        assert_abs_diff_eq!(c.r_max, 2.0 + 1.5 * (1.0 + b).powi(2), epsilon = 1e-9);
    }

    #[test]
    fn sign_property_for_small_delta() {
        assert!(sign_property_holds(&j4(), 0.5, 60).unwrap());
    }

    #[test]
    fn optimize_reproduces_plateau() {
        let p = optimize_chi(&j4(), (0.01, 4.0), 400).unwrap();
        assert!((p.chi_opt - 2.0 / 3.0).abs() < 0.01, "{}", p.chi_opt);
        assert!((p.plateau.0 - 0.71).abs() < 0.05, "{:?}", p.plateau);
        assert!((p.plateau.1 - 2.13).abs() < 0.05, "{:?}", p.plateau);
        for i in 0..p.m.len() {
            assert_eq!(p.m[i], p.chi1[i].min(p.chi2[i]).min(p.chi3[i]));
            assert!(p.m[i] <= p.chi3[i]);
            assert!((p.chi3[i] - 2.0 / 3.0).abs() < 1e-9);
        }
        assert!(p.m[0] <= 0.01 + 1e-12);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("delta,chi1,chi2,chi3,m\n"));
        assert_eq!(text.lines().count(), 401);
    }

    #[test]
    fn optimize_rejects_bad_ranges() {
        assert!(optimize_chi(&j4(), (0.0, 1.0), 50).is_err());
        assert!(optimize_chi(&j4(), (0.5, 1.0), 5).is_err());
        assert!(optimize_chi(&j4(), (0.5, 6.0), 50).is_err());
    }
}
