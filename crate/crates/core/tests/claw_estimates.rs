use projband::estimator::{fit, m_rule, max_deviation, sup_bias, DEFAULT_LAMBDA};
use projband::experiments::{claw_density, sample_claw};
use projband::BasisSpec;

#[test]
fn claw_l2_error_at_ten_thousand() {
    let n = 10_000;
    let m = m_rule(n, DEFAULT_LAMBDA);
    assert_eq!(m, 464);
    let s = sample_claw(n, 17).unwrap();
    let r = fit(&s, 4, m).unwrap();
    let err = r.l2_error(claw_density);
    // golden threshold frozen from the first run (observed ≈ 0.2)
    assert!(err < 0.25, "L2 error {err}");
    assert!((r.mass() - (n - s.n_outside()) as f64 / n as f64).abs() < 1e-12);
}

#[test]
fn piecewise_constant_bias_halves_when_cells_double() {
    let b = |m| sup_bias(&BasisSpec::new(0, -3.0, 3.0, m).unwrap(), claw_density).unwrap();
    for &m in &[200, 400] {
        let ratio = b(m) / b(2 * m);
        assert!((ratio - 2.0).abs() < 0.4, "M = {m}: ratio {ratio}");
    }
}

#[test]
fn bias_slope_for_degree_four() {
    let ms = [20usize, 40, 80, 160];
    let biases: Vec<f64> = ms
        .iter()
        .map(|&m| sup_bias(&BasisSpec::new(4, -3.0, 3.0, m).unwrap(), claw_density).unwrap())
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = ms.iter().zip(&biases).map(|(&m, b)| ((m as f64).ln(), b.ln())).unzip();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
        / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    assert!(slope <= -1.0 + 0.2, "slope {slope}");
}

#[test]
fn deviation_grid_sensitivity() {
    let s = sample_claw(3000, 4).unwrap();
    let r = fit(&s, 4, m_rule(3000, DEFAULT_LAMBDA)).unwrap();
    let d32 = max_deviation(&r, claw_density, 32).unwrap().d_n;
    let d64 = max_deviation(&r, claw_density, 64).unwrap().d_n;
    assert!(d64 >= d32 * (1.0 - 1e-12));
    assert!((d64 - d32) / d32 < 0.05, "{d32} vs {d64}");
}
