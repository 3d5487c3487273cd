use approx::assert_relative_eq;
use halting_lab::average_case::{
    expected_grad_norm, gd_integral_closed, nesterov_cvx_asymptotic, nesterov_sc_integral_asymptotic,
    nesterov_sc_integral_closed, polyak_integral_closed, quadrature_grad_norm, rate_curve, tau_epsilon, Provenance,
    RateParams, RidgeParams,
};
use halting_lab::polynomials::{method_p, MethodKind, MethodSpec};
use halting_lab::spectrum::mp_edges;
use halting_lab::Error;
use proptest::prelude::*;

/// `∫λ·h(λ)dμ` by the trapezoid rule after `λ = (λ⁺+λ⁻)/2 − (λ⁺−λ⁻)/2·cos θ`.
///
/// The density becomes `w²sin²θ/(2πλσ²r)`, so `λ·h(λ)·density` is a smooth
/// even periodic function of `θ` and the rule is exact for polynomial `h` once
/// `nodes` exceeds the trigonometric degree. The atom at zero carries no mass
/// for integrands with a factor `λ`.
fn trig_moment(h: impl Fn(f64) -> f64, r: f64, sigma: f64, nodes: usize) -> f64 {
    let (lm, lp) = mp_edges(r, sigma).unwrap();
    let (c, w) = ((lp + lm) / 2.0, (lp - lm) / 2.0);
    let s2 = sigma * sigma;
    let step = std::f64::consts::PI / nodes as f64;
    let mut total = 0.0;
    for j in 1..nodes {
        let theta = step * j as f64;
        let (sin, cos) = theta.sin_cos();
        total += h(c - w * cos) * w * w * sin * sin;
    }
    total * step / (std::f64::consts::TAU * s2 * r)
}

/// `R²∫λ²P_k²dμ + R̃²r∫λP_k²dμ` through [`trig_moment`].
fn oracle_grad_norm(kind: MethodKind, k: usize, big_r: f64, r_tilde: f64, r: f64, sigma: f64) -> f64 {
    let (lm, lp) = mp_edges(r, sigma).unwrap();
    let spec = MethodSpec::new(kind, lm, lp).unwrap();
    trig_moment(
        |l| {
            let p = method_p(&spec, k, l);
            (big_r * big_r * l + r_tilde * r_tilde * r) * p * p
        },
        r,
        sigma,
        2 * k + 64,
    )
}

fn oracle_integral(kind: MethodKind, k: usize, ell: u32, r: f64, sigma: f64) -> f64 {
    let (lm, lp) = mp_edges(r, sigma).unwrap();
    let spec = MethodSpec::new(kind, lm, lp).unwrap();
    trig_moment(
        |l| {
            let p = method_p(&spec, k, l);
            l.powi(ell as i32 - 1) * p * p
        },
        r,
        sigma,
        2 * k + 64,
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Least-squares slope of `log y` against `log k` on log-spaced `k`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, y) in points {
        num += (x.ln() - mx) * (y.ln() - my);
        den += (x.ln() - mx).powi(2);
    }
    num / den
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<usize> {
    (0..count)
        .map(|i| (lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).round() as usize)
        .collect()
}

#[test]
fn oracle_reproduces_moments() {
    for r in [0.25, 1.0, 4.0] {
        assert_relative_eq!(trig_moment(|_| 1.0, r, 1.0, 64), 1.0, max_relative = 1e-13);
        assert_relative_eq!(trig_moment(|l| l, r, 1.0, 64), 1.0 + r, max_relative = 1e-13);
        assert_relative_eq!(trig_moment(|l| l * l, r, 1.0, 64), 1.0 + 3.0 * r + r * r, max_relative = 1e-13);
    }
}

#[test]
fn initial_value_is_second_moment() {
    let p = RateParams::least_squares(MethodKind::Gd, 1.5, 0.0, 1.0, 1.0).unwrap();
    assert_relative_eq!(expected_grad_norm(&p, 0).unwrap(), 2.0 * 1.5 * 1.5, max_relative = 1e-14);
}

#[test]
fn gd_noiseless_constant_at_ratio_one() {
    // R²(λ⁺)²Γ(5/2)/(2^{3/2}π) with λ⁺ = 4, R = 1; Γ(5/2) = 3√π/4.
    let constant = 16.0 * 0.75 * std::f64::consts::PI.sqrt() / (2f64.powf(1.5) * std::f64::consts::PI);
    let p = RateParams::least_squares(MethodKind::Gd, 1.0, 0.0, 1.0, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for k in [1_000usize, 10_000, 100_000] {
        let scaled = expected_grad_norm(&p, k).unwrap() * (k as f64).powf(2.5);
        let err = rel(scaled, constant);
        assert!(err < 5.0 / k as f64, "k = {k}: {scaled} vs {constant}");
        assert!(err < prev);
        prev = err;
    }
}

#[test]
fn closed_forms_match_polynomial_quadrature() {
    let cases = [
        (MethodKind::Gd, 1.0),
        (MethodKind::Gd, 0.5),
        (MethodKind::Gd, 4.0),
        (MethodKind::NesterovSc, 0.25),
        (MethodKind::NesterovSc, 4.0),
        (MethodKind::Polyak, 0.25),
        (MethodKind::Polyak, 4.0),
        (MethodKind::NesterovCvx, 1.0),
    ];
    for (kind, r) in cases {
        let p = RateParams::least_squares(kind, 1.2, 0.3, r, 1.0).unwrap();
        for k in [1, 5, 20, 100] {
            let v = expected_grad_norm(&p, k).unwrap();
            let q = quadrature_grad_norm(&p, k).unwrap();
            let o = oracle_grad_norm(kind, k, 1.2, 0.3, r, 1.0);
            assert!(rel(v, o) <= 1e-6, "{kind:?} r = {r}, k = {k}: {v} vs oracle {o}");
            assert!(rel(q, o) <= 1e-6, "{kind:?} r = {r}, k = {k}: quadrature {q} vs oracle {o}");
        }
    }
}

#[test]
fn gd_integral_examples() {
    assert_relative_eq!(gd_integral_closed(0, 1, 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
    assert_relative_eq!(gd_integral_closed(0, 2, 1.0, 1.0).unwrap(), 2.0, max_relative = 1e-14);
    let ratio = gd_integral_closed(1, 1, 4.0, 1.0).unwrap() / gd_integral_closed(0, 1, 4.0, 1.0).unwrap();
    let oracle = oracle_integral(MethodKind::Gd, 1, 1, 4.0, 1.0) / oracle_integral(MethodKind::Gd, 0, 1, 4.0, 1.0);
    assert!((ratio - oracle).abs() <= 1e-8, "{ratio} vs {oracle}");
    // At r = 4 successive values decay by (8/9)² times the Beta-function
    // ratio B(3/2, 2k+7/2)/B(3/2, 2k+3/2).
    for k in [10, 100, 1000] {
        let step = gd_integral_closed(k + 1, 1, 4.0, 1.0).unwrap() / gd_integral_closed(k, 1, 4.0, 1.0).unwrap();
        let j = 2.0 * k as f64;
        let expected = (64.0 / 81.0) * (j + 2.5) * (j + 1.5) / ((j + 4.0) * (j + 3.0));
        assert!(rel(step, expected) < 1e-10, "k = {k}: {step} vs {expected}");
    }
}

#[test]
fn gd_integral_matches_oracle_in_both_regimes() {
    for r in [0.25, 0.5, 1.0, 2.0, 4.0] {
        for sigma in [0.7, 1.0] {
            for k in [0, 1, 2, 7, 30, 100] {
                for ell in [1, 2] {
                    let v = gd_integral_closed(k, ell, r, sigma).unwrap();
                    let o = oracle_integral(MethodKind::Gd, k, ell, r, sigma);
                    assert!(rel(v, o) <= 1e-9, "r = {r}, σ = {sigma}, k = {k}, ℓ = {ell}: {v} vs {o}");
                }
            }
        }
    }
}

#[test]
fn integrals_reject_bad_ell() {
    assert!(matches!(gd_integral_closed(3, 0, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(gd_integral_closed(3, 3, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(polyak_integral_closed(3, 3, 2.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn nesterov_sc_integral_matches_oracle() {
    for r in [0.25, 4.0] {
        for k in 0..=30 {
            for ell in [1, 2] {
                let v = nesterov_sc_integral_closed(k, ell, r, 1.0).unwrap();
                let o = oracle_integral(MethodKind::NesterovSc, k, ell, r, 1.0);
                assert!(rel(v, o) <= 1e-6, "r = {r}, k = {k}, ℓ = {ell}: {v} vs {o}");
            }
        }
    }
}

#[test]
fn nesterov_sc_initial_values_are_moments() {
    for r in [0.25, 4.0] {
        assert_relative_eq!(nesterov_sc_integral_closed(0, 1, r, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(nesterov_sc_integral_closed(0, 2, r, 1.0).unwrap(), 1.0 + r, max_relative = 1e-12);
    }
}

#[test]
fn nesterov_sc_rejects_ratio_one() {
    assert!(matches!(nesterov_sc_integral_closed(4, 1, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(polyak_integral_closed(4, 1, 1.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn nesterov_sc_large_k_approaches_asymptotic_form() {
    // The relative correction is O(√κ/k), so a well-conditioned ratio is used;
    // values underflow beyond k ≈ 850 at this rate.
    let r = 0.25;
    let mut prev = f64::INFINITY;
    for k in [100, 200, 400, 800] {
        let exact = nesterov_sc_integral_closed(k, 1, r, 1.0).unwrap();
        let asym = nesterov_sc_integral_asymptotic(k, r, 1.0).unwrap();
        let err = rel(exact, asym);
        assert!(err < prev, "k = {k}: {err}");
        prev = err;
    }
    assert!(prev < 0.01, "{prev}");
}

#[test]
fn polyak_integral_matches_oracle() {
    for k in 0..=100 {
        let v = polyak_integral_closed(k, 1, 4.0, 1.0).unwrap();
        let o = oracle_integral(MethodKind::Polyak, k, 1, 4.0, 1.0);
        assert!(rel(v, o) <= 1e-6, "k = {k}: {v} vs {o}");
    }
}

#[test]
fn polyak_second_integral_ratio_is_edge_midpoint() {
    for r in [0.25, 4.0] {
        let (lm, lp) = mp_edges(r, 1.0).unwrap();
        for k in 1..=20 {
            let ratio = oracle_integral(MethodKind::Polyak, k, 2, r, 1.0) / oracle_integral(MethodKind::Polyak, k, 1, r, 1.0);
            assert!(rel(ratio, (lp + lm) / 2.0) <= 1e-9, "r = {r}, k = {k}: {ratio}");
            let closed = polyak_integral_closed(k, 2, r, 1.0).unwrap() / polyak_integral_closed(k, 1, r, 1.0).unwrap();
            assert_relative_eq!(closed, (lp + lm) / 2.0, max_relative = 1e-14);
        }
    }
}

#[test]
fn polyak_initial_values_are_moments() {
    for r in [0.25, 4.0] {
        assert_relative_eq!(polyak_integral_closed(0, 1, r, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(polyak_integral_closed(0, 2, r, 1.0).unwrap(), 1.0 + r, max_relative = 1e-14);
    }
}

#[test]
fn nesterov_cvx_asymptotic_examples() {
    // At k = 3 the formula reads (λ⁺)²log 3/(27π²σ²).
    let (i1, i2) = nesterov_cvx_asymptotic(3, 1.0).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert_relative_eq!(i1, 16.0 * 3f64.ln() / (27.0 * pi2), max_relative = 1e-14);
    assert_relative_eq!(i2, 128.0 / (81.0 * pi2), max_relative = 1e-14);
    assert!(nesterov_cvx_asymptotic(1, 1.0).is_err());

    let (_, i2) = nesterov_cvx_asymptotic(2000, 1.0).unwrap();
    let quad = oracle_integral(MethodKind::NesterovCvx, 2000, 2, 1.0, 1.0);
    let ratio = quad / i2;
    assert!((0.8..=1.2).contains(&ratio), "{ratio}");
}

fn fitted_exponent(kind: MethodKind, big_r: f64, r_tilde: f64, remove_log: bool) -> f64 {
    let p = RateParams::least_squares(kind, big_r, r_tilde, 1.0, 1.0).unwrap();
    let curve = rate_curve(&p, 10_000).unwrap();
    let points: Vec<(f64, f64)> = log_spaced(1e3, 1e4, 25)
        .into_iter()
        .map(|k| {
            let v = curve.values[k];
            (k as f64, if remove_log { v / (k as f64).ln() } else { v })
        })
        .collect();
    loglog_slope(&points)
}

#[test]
fn predicted_exponents_at_ratio_one() {
    let cases = [
        (MethodKind::Gd, 1.0, 0.0, false, -2.5),
        (MethodKind::Gd, 1.0, 0.5, false, -1.5),
        (MethodKind::NesterovCvx, 1.0, 0.0, false, -4.0),
        (MethodKind::NesterovCvx, 1.0, 0.5, true, -3.0),
    ];
    for (kind, big_r, r_tilde, remove_log, expected) in cases {
        let slope = fitted_exponent(kind, big_r, r_tilde, remove_log);
        assert!((slope - expected).abs() <= 0.05, "{kind:?} R̃ = {r_tilde}: {slope}");
    }
}

#[test]
fn curve_provenance_and_nonnegativity() {
    let gd = rate_curve(&RateParams::least_squares(MethodKind::Gd, 1.0, 0.1, 1.0, 1.0).unwrap(), 50).unwrap();
    assert!(gd.provenance.iter().all(|&p| p == Provenance::ClosedForm));
    assert!(gd.values.windows(2).all(|w| w[1] <= w[0]));
    let cvx = rate_curve(&RateParams::least_squares(MethodKind::NesterovCvx, 1.0, 0.1, 1.0, 1.0).unwrap(), 50).unwrap();
    assert!(cvx.provenance.iter().all(|&p| p == Provenance::Quadrature));
    assert!(cvx.values.iter().all(|&v| v >= 0.0));
    assert_eq!(cvx.values.len(), 51);
}

#[test]
fn shared_rule_curve_matches_pointwise_quadrature() {
    let p = RateParams::least_squares(MethodKind::NesterovCvx, 1.0, 0.2, 1.0, 1.0).unwrap();
    let curve = rate_curve(&p, 300).unwrap();
    for k in [0, 1, 10, 100, 300] {
        let q = quadrature_grad_norm(&p, k).unwrap();
        assert!(rel(curve.values[k], q) <= 1e-7, "k = {k}");
    }
}

#[test]
fn strongly_convex_curves_follow_linear_rate() {
    let r = 0.25;
    let (lm, lp) = mp_edges(r, 1.0).unwrap();
    let rate = 2.0 * (1.0f64 - lm / lp).ln();
    let p = RateParams::least_squares(MethodKind::Gd, 1.0, 0.1, r, 1.0).unwrap();
    let (a, b) = (1000, 2000);
    let (va, vb): (f64, f64) = (expected_grad_norm(&p, a).unwrap(), expected_grad_norm(&p, b).unwrap());
    let slope = (vb.ln() - va.ln()) / (b - a) as f64;
    assert!(rel(slope, rate) <= 0.01, "{slope} vs {rate}");
}

#[test]
fn ridge_reduces_to_least_squares_as_gamma_vanishes() {
    let (r_dot, r_hat) = (0.6, 0.8);
    let plain = RateParams::least_squares(MethodKind::Gd, 1.0, 0.3, 0.5, 1.0).unwrap();
    for k in [0, 3, 20] {
        let base = expected_grad_norm(&plain, k).unwrap();
        let ridge = RateParams::ridge(MethodKind::Gd, RidgeParams { gamma: 1e-9, r_dot, r_hat }, 0.3, 0.5, 1.0).unwrap();
        let v = expected_grad_norm(&ridge, k).unwrap();
        assert!(rel(v, base) <= 1e-6, "k = {k}: {v} vs {base}");
    }
}

#[test]
fn ridge_initial_value_is_moment_combination() {
    let (gamma, r_dot, r_hat, r_tilde, r) = (0.3, 0.7, 1.1, 0.4, 2.0);
    let params = RateParams::ridge(MethodKind::NesterovSc, RidgeParams { gamma, r_dot, r_hat }, r_tilde, r, 1.0).unwrap();
    // ∫(λ+γ)²dμ = m₂ + 2γm₁ + γ², with m₁ = 1 and m₂ = 1 + r.
    let m1 = 1.0;
    let m2 = 1.0 + r;
    let expected = r_dot * r_dot * (m2 + 2.0 * gamma * m1 + gamma * gamma) + r_hat * r_hat * m2 + r_tilde * r_tilde * r * m1;
    assert_relative_eq!(expected_grad_norm(&params, 0).unwrap(), expected, max_relative = 1e-9);
}

#[test]
fn ridge_gd_decays_at_shifted_edge_rate() {
    let gamma = 0.5;
    let params = RateParams::ridge(MethodKind::Gd, RidgeParams { gamma, r_dot: 1.0, r_hat: 0.5 }, 0.1, 1.0, 1.0).unwrap();
    let curve = rate_curve::<f64>(&params, 400).unwrap();
    // The spectral edge at zero adds a power-law factor, so log v is fitted
    // by a + b·k + c·log k and b is compared with the linear rate.
    let rows: Vec<[f64; 3]> = (200..=400).map(|k| [1.0, k as f64, (k as f64).ln()]).collect();
    let ys: Vec<f64> = (200..=400).map(|k| curve.values[k].ln()).collect();
    let slope = least_squares_3(&rows, &ys)[1];
    let expected = 2.0 * (1.0f64 - gamma / (4.0 + gamma)).ln();
    assert!(rel(slope, expected) <= 0.01, "{slope} vs {expected}");
}

/// Normal-equation solve of a three-column least-squares fit.
fn least_squares_3(rows: &[[f64; 3]], ys: &[f64]) -> [f64; 3] {
    let mut g = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (row, &y) in rows.iter().zip(ys) {
        for i in 0..3 {
            rhs[i] += row[i] * y;
            for j in 0..3 {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| g[i][j]);
    let x = m.lu().solve(&nalgebra::Vector3::from(rhs)).unwrap();
    [x[0], x[1], x[2]]
}

#[test]
fn ridge_validation() {
    let bad = RateParams::ridge(MethodKind::Gd, RidgeParams { gamma: 0.0, r_dot: 1.0, r_hat: 1.0 }, 0.1, 1.0, 1.0);
    assert!(matches!(bad, Err(Error::Domain(_))));
    assert!(RateParams::least_squares(MethodKind::Gd, -1.0, 0.1, 1.0, 1.0).is_err());
    assert!(RateParams::least_squares(MethodKind::Gd, 1.0, -0.1, 1.0, 1.0).is_err());
}

#[test]
fn tau_is_one_when_eps_exceeds_first_value() {
    let p = RateParams::least_squares(MethodKind::Gd, 1.0, 0.1, 1.0, 1.0).unwrap();
    let v1 = expected_grad_norm(&p, 1).unwrap();
    let pred = tau_epsilon(&p, v1 * 1.5, 100).unwrap();
    assert_eq!(pred.tau, 1);
    assert_eq!(pred.m_eps, 0);
}

#[test]
fn tau_matches_linear_scan() {
    let p = RateParams::least_squares(MethodKind::Gd, 2f64.sqrt(), 0.1, 1.0, 1.0).unwrap();
    let eps = 1e-6;
    let tau = tau_epsilon(&p, eps, 1_000_000).unwrap().tau;
    let mut scan = None;
    for k in 1.. {
        if gd_integral_closed(k, 2, 1.0, 1.0).unwrap() * 2.0 + 0.01 * gd_integral_closed(k, 1, 1.0, 1.0).unwrap() <= eps {
            scan = Some(k);
            break;
        }
    }
    assert_eq!(Some(tau), scan);
    // Monotone curve: bisection on the closed form lands on the same index.
    let (mut lo, mut hi) = (1usize, 1usize << 20);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if expected_grad_norm(&p, mid).unwrap() <= eps {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    assert_eq!(lo, tau);
}

#[test]
fn tau_reports_touching_boundary() {
    let p = RateParams::least_squares(MethodKind::NesterovCvx, 1.0, 0.0, 1.0, 1.0).unwrap();
    let curve = rate_curve(&p, 200).unwrap();
    let k = 40;
    let pred = curve.tau(curve.values[k]).unwrap();
    assert!(pred.tau <= k);
    assert!(curve.values[pred.tau] <= curve.values[k]);
    if pred.m_eps > 0 {
        assert!(curve.values[pred.tau + pred.m_eps] < curve.values[k]);
    }
}

#[test]
fn tau_search_errors() {
    let p = RateParams::least_squares(MethodKind::Gd, 1.0, 0.1, 1.0, 1.0).unwrap();
    assert!(matches!(tau_epsilon(&p, 0.0, 10), Err(Error::Domain(_))));
    match tau_epsilon(&p, 1e-12, 10) {
        Err(Error::Bound { k_max, last, .. }) => {
            assert_eq!(k_max, 10);
            assert_relative_eq!(last, expected_grad_norm(&p, 10).unwrap(), max_relative = 1e-14);
        }
        other => panic!("{other:?}"),
    }
    let cvx = RateParams::least_squares(MethodKind::NesterovCvx, 1.0, 0.1, 1.0, 1.0).unwrap();
    assert!(matches!(tau_epsilon(&cvx, 1e-12, 50), Err(Error::Bound { .. })));
}

#[test]
fn quadrature_tau_agrees_with_curve_scan() {
    let p = RateParams::least_squares(MethodKind::NesterovCvx, 1.0, 0.1, 1.0, 1.0).unwrap();
    let eps = 1e-4;
    let pred = tau_epsilon(&p, eps, 100_000).unwrap();
    let curve = rate_curve(&p, pred.tau + 10).unwrap();
    assert!(curve.values[pred.tau] <= eps);
    assert!(curve.values[1..pred.tau].iter().all(|&v| v > eps));
}

#[test]
fn float32_closed_form() {
    let v = gd_integral_closed::<f32>(10, 2, 1.0, 1.0).unwrap();
    let w = gd_integral_closed::<f64>(10, 2, 1.0, 1.0).unwrap();
    assert!(((v as f64) - w).abs() <= 1e-5 * w);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gd_curve_is_nonincreasing(r in 0.1f64..5.0, sigma in 0.3f64..2.0, big_r in 0.1f64..3.0, r_tilde in 0.0f64..1.0) {
        let p = RateParams::least_squares(MethodKind::Gd, big_r, r_tilde, r, sigma).unwrap();
        let curve = rate_curve(&p, 60).unwrap();
        for w in curve.values.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            prop_assert!(w[1] >= 0.0);
        }
    }

    #[test]
    fn closed_forms_agree_with_oracle(r in prop_oneof![0.1f64..0.8, 1.25f64..6.0], k in 0usize..120, ell in 1u32..=2) {
        let cases = [
            (MethodKind::Gd, gd_integral_closed(k, ell, r, 1.0).unwrap()),
            (MethodKind::NesterovSc, nesterov_sc_integral_closed(k, ell, r, 1.0).unwrap()),
            (MethodKind::Polyak, polyak_integral_closed(k, ell, r, 1.0).unwrap()),
        ];
        for (kind, v) in cases {
            let o = oracle_integral(kind, k, ell, r, 1.0);
            prop_assert!(v >= 0.0);
            prop_assert!(rel(v, o) <= 1e-6, "{:?}: {} vs {}", kind, v, o);
        }
    }

    #[test]
    fn tau_is_first_crossing(log_eps in -8.0f64..-1.0) {
        let p = RateParams::least_squares(MethodKind::Gd, 1.0, 0.05, 0.5, 1.0).unwrap();
        let eps = 10f64.powf(log_eps);
        let pred = tau_epsilon(&p, eps, 1_000_000).unwrap();
        prop_assert!(expected_grad_norm(&p, pred.tau).unwrap() <= eps);
        if pred.tau > 1 {
            prop_assert!(expected_grad_norm(&p, pred.tau - 1).unwrap() > eps);
        }
    }
}
