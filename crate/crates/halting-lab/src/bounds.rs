//! Adversarial average-case guarantees and classical worst-case bounds.
//!
//! The adversarial value replaces the spectral average by the maximum of the
//! integrand `R²λ²P_k²(λ) + R̃²rλP_k²(λ)` over the support `[λ⁻, λ⁺]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::ProblemInstance;
use crate::linalg::norm_sq;
use crate::polynomials::{method_p, MethodSpec};
use crate::scalar::Real;
use crate::special::j1_sq_sup;

/// Maximum of the adversarial integrand and where it is attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdversarialResult<T> {
    /// Maximal value.
    pub value: T,
    /// Maximizer `λ*` in `[λ⁻, λ⁺]`.
    pub lambda_star: T,
}

/// The adversarial integrand `(R²λ² + R̃²rλ)P_k(λ)²`.
pub fn adversarial_integrand<T: Real>(method: &MethodSpec<T>, k: usize, big_r: T, r_tilde: T, r: T, lambda: T) -> T {
    let p = method_p(method, k, lambda);
    (big_r * big_r * lambda * lambda + r_tilde * r_tilde * r * lambda) * p * p
}

/// `max_{λ ∈ [λ⁻, λ⁺]} (R²λ² + R̃²rλ)P_k(λ)²` over the method's own edges.
///
/// The integrand oscillates, so a grid of `4k + 16` points (uniform in `θ`
/// with `λ = λ⁻ + (λ⁺ − λ⁻)sin²θ`) brackets the candidates and a
/// golden-section search refines the three best grid maxima.
pub fn adversarial_rate<T: Real>(method: &MethodSpec<T>, k: usize, big_r: T, r_tilde: T, r: T) -> AdversarialResult<T> {
    let (lm, lp) = (method.lambda_minus, method.lambda_plus);
    let width = lp - lm;
    let lambda_of = |theta: T| {
        let s = theta.sin();
        (lm + width * s * s).max(lm).min(lp)
    };
    let g = |theta: T| adversarial_integrand(method, k, big_r, r_tilde, r, lambda_of(theta));
    let n = 4 * k + 16;
    let h = T::FRAC_PI_2() / T::from_count(n - 1);
    let values: Vec<T> = (0..n).map(|i| g(h * T::from_count(i))).collect();

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] >= values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right
        })
        .collect();
    candidates.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    candidates.truncate(3);

    let mut best = AdversarialResult { value: values[0], lambda_star: lambda_of(T::zero()) };
    for i in candidates {
        let a = h * T::from_count(i.saturating_sub(1));
        let b = h * T::from_count((i + 1).min(n - 1));
        let (theta, value) = golden_max(g, a, b, T::lit(1e-13));
        let (theta, value) = if values[i] > value { (h * T::from_count(i), values[i]) } else { (theta, value) };
        if value > best.value {
            best = AdversarialResult { value, lambda_star: lambda_of(theta) };
        }
    }
    best
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_max<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    candidates
        .into_iter()
        .fold(candidates[0], |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Large-`k` adversarial value of gradient descent.
///
/// For `λ⁻ > 0` the maximizer sits at `λ⁻` and the value is
/// `[R²(λ⁻)² + rR̃²λ⁻](1−λ⁻/λ⁺)^{2k}`. For `λ⁻ = 0` it is
/// `R²(λ⁺)²e⁻²/(k+1)²` without noise and
/// `[R²(λ⁺)²/(4k²) + rR̃²λ⁺/(2k)]e⁻¹` with noise, the maximizer being near
/// `λ/λ⁺ = 1/(2k)` where `(1 − 1/(2k))^{2k} → e⁻¹`.
pub fn adversarial_gd_closed<T: Real>(k: usize, big_r: T, r_tilde: T, r: T, lambda_minus: T, lambda_plus: T) -> T {
    let (r2, n2) = (big_r * big_r, r_tilde * r_tilde);
    let kf = T::from_count(k);
    if lambda_minus > T::zero() {
        let rate = (T::from_count(2 * k) * (-lambda_minus / lambda_plus).ln_1p()).exp();
        return (r2 * lambda_minus * lambda_minus + r * n2 * lambda_minus) * rate;
    }
    let lp2 = lambda_plus * lambda_plus;
    if n2 == T::zero() {
        let k1 = kf + T::one();
        return r2 * lp2 * (-T::lit(2.0)).exp() / (k1 * k1);
    }
    (r2 * lp2 / (T::lit(4.0) * kf * kf) + r * n2 * lambda_plus / (T::lit(2.0) * kf)) * (-T::one()).exp()
}

/// Large-`k` adversarial value of convex Nesterov at `r = 1`.
///
/// Noiseless: `8e^{−1/2}/(√2π)(λ⁺)²R²k^{−7/2}`. Noisy: the `λP_k²` term
/// behaves like `4λ⁺e^{−ku}J₁²(k√u)/k²`, so its maximum is
/// `4‖J₁²‖∞λ⁺R̃²/k²`; both terms are added.
pub fn adversarial_nesterov_cvx_closed<T: Real>(k: usize, big_r: T, r_tilde: T, lambda_plus: T) -> T {
    let kf = T::from_count(k);
    let noiseless = T::lit(8.0) * T::lit(-0.5).exp() / (T::SQRT_2() * T::PI())
        * lambda_plus
        * lambda_plus
        * big_r
        * big_r
        / kf.powf(T::lit(3.5));
    let noisy = T::lit(4.0 * j1_sq_sup()) * lambda_plus * r_tilde * r_tilde / (kf * kf);
    noiseless + noisy
}

/// Classical worst-case bounds on `‖∇f(x_k)‖²`.
///
/// The linear-rate bounds of the momentum methods carry an unspecified
/// constant; it is taken to be `(λ⁺)²‖x₀−x⋆‖²` like the gradient descent ones,
/// times the `(k+1)²` growth of the double characteristic root at `λ⁻`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorstCaseKind {
    /// Gradient descent, smooth convex: `(λ⁺)²‖x₀−x⋆‖²/(k+1)²`.
    GdCvx,
    /// Gradient descent, strongly convex: `(λ⁺)²‖x₀−x⋆‖²(1−λ⁻/λ⁺)^{2k}`.
    GdSc,
    /// Convex Nesterov: `8(λ⁺)²‖x₀−x⋆‖²/(k(k+2)²)`.
    NesterovCvx,
    /// Strongly convex Nesterov: `(λ⁺)²‖x₀−x⋆‖²(k+1)²ρ^k(1−λ⁻/λ⁺)^k`,
    /// `ρ = 1 − 2√λ⁻/(√λ⁺+√λ⁻)`.
    NesterovSc,
    /// Polyak momentum: `(λ⁺)²‖x₀−x⋆‖²(k+1)²ρ^{2k}`.
    Polyak,
}

/// Worst-case bound with `dist0 = ‖x₀ − x⋆‖²`.
pub fn worst_case_bound<T: Real>(kind: WorstCaseKind, k: usize, lambda_minus: T, lambda_plus: T, dist0: T) -> T {
    let base = lambda_plus * lambda_plus * dist0;
    let kf = T::from_count(k);
    let gd_log = (-lambda_minus / lambda_plus).ln_1p();
    let (sm, sp) = (lambda_minus.sqrt(), lambda_plus.sqrt());
    let momentum_log = (-T::lit(2.0) * sm / (sp + sm)).ln_1p();
    match kind {
        WorstCaseKind::GdCvx => {
            let k1 = T::from_count(k + 1);
            base / (k1 * k1)
        }
        WorstCaseKind::GdSc => base * (T::lit(2.0) * kf * gd_log).exp(),
        WorstCaseKind::NesterovCvx => {
            if k == 0 {
                return T::infinity();
            }
            let k2 = kf + T::lit(2.0);
            T::lit(8.0) * base / (kf * k2 * k2)
        }
        WorstCaseKind::NesterovSc => {
            let k1 = T::from_count(k + 1);
            base * k1 * k1 * (kf * (momentum_log + gd_log)).exp()
        }
        WorstCaseKind::Polyak => {
            let k1 = T::from_count(k + 1);
            base * k1 * k1 * (T::lit(2.0) * kf * momentum_log).exp()
        }
    }
}

/// Regularization of the normal equations in [`dist_to_opt`].
pub const DIST_RIDGE: f64 = 1e-12;

/// `‖x₀ − x⋆‖²` with `x⋆` the minimal-norm least-squares solution.
///
/// Solves `(AᵀA/n + εI)x = Aᵀb/n` when `n ≥ d`, and `x = Aᵀy` with
/// `(AAᵀ/n + εI)y = b/n` otherwise; both equal `(AᵀA + nεI)⁻¹Aᵀb`.
pub fn dist_to_opt<T: Real>(problem: &ProblemInstance<T>) -> Result<T> {
    let x_star = min_norm_solution(problem)?;
    let diff: Vec<T> = problem
        .x0
        .iter()
        .zip(&x_star)
        .map(|(&a, &b)| a - T::lit(b))
        .collect();
    Ok(norm_sq(&diff))
}

/// Minimal-norm least-squares solution (regularized by [`DIST_RIDGE`]) in `f64`.
pub fn min_norm_solution<T: Real>(problem: &ProblemInstance<T>) -> Result<Vec<f64>> {
    let a = problem.a.to_nalgebra();
    let b = nalgebra::DVector::from_iterator(problem.n, problem.b.iter().map(|v| v.as_f64()));
    let n = problem.n as f64;
    let fail = || Error::Numeric("normal equations are not positive definite".into());
    let x = if problem.n >= problem.d {
        let mut g = a.tr_mul(&a) / n;
        for i in 0..problem.d {
            g[(i, i)] += DIST_RIDGE;
        }
        let rhs = a.tr_mul(&b) / n;
        g.cholesky().ok_or_else(fail)?.solve(&rhs)
    } else {
        let mut g = &a * a.transpose() / n;
        for i in 0..problem.n {
            g[(i, i)] += DIST_RIDGE;
        }
        let y = g.cholesky().ok_or_else(fail)?.solve(&(b / n));
        a.tr_mul(&y)
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(fail());
    }
    Ok(x.iter().copied().collect())
}
