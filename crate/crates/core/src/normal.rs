//! Standard normal distribution helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Density of N(0, 1).
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(x), computed through `erfc` so both tails keep full relative accuracy.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(x).
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Density of N(mean, var).
pub fn pdf_with(x: f64, mean: f64, var: f64) -> f64 {
    let z = (x - mean) / var.sqrt();
    pdf(z) / var.sqrt()
}

/// `∫₀^∞ x N(x; m, d²) dx = m Φ(m/d) + d φ(m/d)`, the positive-part mean of a
/// normal variable.
pub fn positive_part_mean(m: f64, d: f64) -> f64 {
    let z = m / d;
    m * cdf(z) + d * pdf(z)
}
