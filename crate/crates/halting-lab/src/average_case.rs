//! Deterministic large-dimension limit of `E‖∇f(x_k)‖²` and the predicted
//! halting time.
//!
//! For least squares with isotropic features the limit is
//! `R²∫λ²P_k²dμ + R̃²r∫λP_k²dμ` against the Marčenko–Pastur law `μ`. Gradient
//! descent, strongly convex Nesterov and Polyak have closed-form integrals;
//! convex Nesterov and the ridge variant are integrated numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomials::{method_p, MethodKind, MethodSpec, PolySequence};
use crate::scalar::{ln_binomial, ln_gamma, Real};
use crate::spectrum::{mp_integrate_with, QuadOptions, SpectralModel};

/// Default search horizon of [`tau_epsilon`].
pub const DEFAULT_K_MAX: usize = 1_000_000;

/// Relative tolerance of the quadrature fallback.
const QUAD_REL_TOL: f64 = 1e-11;

/// Ridge-regression part of [`RateParams`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeParams<T> {
    /// Regularization `γ > 0`.
    pub gamma: T,
    /// Magnitude `Ṙ` of the initial point `x₀`.
    pub r_dot: T,
    /// Magnitude `R̂` of the signal `x̃`.
    pub r_hat: T,
}

/// Inputs of the limiting gradient-norm curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams<T> {
    /// Signal magnitude `R`, with `R² = E‖x₀ − x̃‖²`.
    pub big_r: T,
    /// Noise magnitude `R̃` (per-entry noise standard deviation).
    pub r_tilde: T,
    /// Ratio `r = d/n`.
    pub r: T,
    /// Entry standard deviation `σ`.
    pub sigma: T,
    /// Method and the edges its coefficients use.
    pub method: MethodSpec<T>,
    /// Ridge regularization, when present.
    pub ridge: Option<RidgeParams<T>>,
}

impl<T: Real> RateParams<T> {
    /// Least-squares parameters with the method tuned to the Marčenko–Pastur edges.
    pub fn least_squares(kind: MethodKind, big_r: T, r_tilde: T, r: T, sigma: T) -> Result<Self> {
        let model = SpectralModel::marchenko_pastur(r, sigma)?;
        let method = MethodSpec::new(kind, model.lambda_minus, model.lambda_plus)?;
        let params = Self { big_r, r_tilde, r, sigma, method, ridge: None };
        params.validate()?;
        Ok(params)
    }

    /// Ridge parameters; the method is tuned to the shifted edges `λ± + γ`.
    pub fn ridge(kind: MethodKind, ridge: RidgeParams<T>, r_tilde: T, r: T, sigma: T) -> Result<Self> {
        let model = SpectralModel::marchenko_pastur(r, sigma)?;
        let method =
            MethodSpec::new(kind, model.lambda_minus + ridge.gamma, model.lambda_plus + ridge.gamma)?;
        let big_r = (ridge.r_dot * ridge.r_dot + ridge.r_hat * ridge.r_hat).sqrt();
        let params = Self { big_r, r_tilde, r, sigma, method, ridge: Some(ridge) };
        params.validate()?;
        Ok(params)
    }

    /// Checks signs of the magnitudes and of `γ`.
    pub fn validate(&self) -> Result<()> {
        if !(self.big_r >= T::zero()) || !(self.r_tilde >= T::zero()) {
            return Err(Error::Domain("R and R_tilde must be nonnegative".into()));
        }
        if let Some(ridge) = &self.ridge {
            if !(ridge.gamma > T::zero()) {
                return Err(Error::Domain(format!("ridge gamma must be positive, got {}", ridge.gamma)));
            }
            if !(ridge.r_dot >= T::zero()) || !(ridge.r_hat >= T::zero()) {
                return Err(Error::Domain("ridge magnitudes must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Marčenko–Pastur law of the data.
    pub fn model(&self) -> Result<SpectralModel<T>> {
        SpectralModel::marchenko_pastur(self.r, self.sigma)
    }

    fn has_closed_form(&self) -> bool {
        self.ridge.is_none()
            && match self.method.kind {
                MethodKind::Gd => true,
                MethodKind::NesterovSc | MethodKind::Polyak => self.r != T::one(),
                MethodKind::NesterovCvx => false,
            }
            && self.method_matches_model()
    }

    /// Closed forms assume the method is tuned to the law's own edges.
    fn method_matches_model(&self) -> bool {
        match self.model() {
            Ok(m) => {
                let close = |a: T, b: T| (a - b).abs() <= T::lit(1e-12) * b.abs().max(T::one());
                close(m.lambda_plus, self.method.lambda_plus)
                    && (self.method.kind == MethodKind::Gd || close(m.lambda_minus, self.method.lambda_minus))
            }
            Err(_) => false,
        }
    }
}

/// How a curve value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Exact Beta-function or binomial formula.
    ClosedForm,
    /// Numerical integration against the spectral law.
    Quadrature,
    /// Large-`k` asymptotic formula.
    Asymptotic,
}

/// Predicted `E‖∇f(x_k)‖²` for `k = 0, 1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateCurve<T> {
    /// Value at each `k`.
    pub values: Vec<T>,
    /// Origin of each value.
    pub provenance: Vec<Provenance>,
}

impl<T: Real> RateCurve<T> {
    /// Predicted halting time for level `eps` on this curve.
    pub fn tau(&self, eps: T) -> Result<HaltingPrediction> {
        scan_tau(|k| Ok(self.values[k]), eps, self.values.len().saturating_sub(1))
    }
}

/// Predicted halting time `τ_ε` and boundary width `M_ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltingPrediction {
    /// First `k > 0` with curve value `≤ ε`.
    pub tau: usize,
    /// Steps after `τ` until the curve is strictly below `ε`, when it touches
    /// `ε` at `τ` to within `1e−12` relative; `0` otherwise.
    pub m_eps: usize,
}

/// `E‖∇f(x_k)‖²` in the large-dimension limit.
pub fn expected_grad_norm<T: Real>(params: &RateParams<T>, k: usize) -> Result<T> {
    if params.ridge.is_some() {
        return ridge_expected_grad_norm(params, k);
    }
    if params.has_closed_form() {
        return closed_form_grad_norm(params, k);
    }
    quadrature_grad_norm(params, k)
}

/// Same as [`expected_grad_norm`] but always by quadrature of the method's polynomial.
pub fn quadrature_grad_norm<T: Real>(params: &RateParams<T>, k: usize) -> Result<T> {
    let model = params.model()?;
    let (r2, n2) = weights(params);
    let spec = params.method;
    mp_integrate_with(
        |l| {
            let p = method_p(&spec, k, l);
            (r2 * l * l + n2 * l) * p * p
        },
        &model,
        quad_options(k),
    )
}

/// Ridge limit `Ṙ²∫(λ+γ)²P_k²(λ+γ)dμ + R̂²∫λ²P_k²(λ+γ)dμ + R̃²r∫λP_k²(λ+γ)dμ`.
pub fn ridge_expected_grad_norm<T: Real>(params: &RateParams<T>, k: usize) -> Result<T> {
    let ridge = params
        .ridge
        .ok_or_else(|| Error::Domain("ridge parameters missing".into()))?;
    params.validate()?;
    let model = params.model()?;
    let (rd2, rh2) = (ridge.r_dot * ridge.r_dot, ridge.r_hat * ridge.r_hat);
    let n2 = params.r_tilde * params.r_tilde * params.r;
    let spec = params.method;
    let g = ridge.gamma;
    mp_integrate_with(
        |l| {
            let s = l + g;
            let p = method_p(&spec, k, s);
            (rd2 * s * s + rh2 * l * l + n2 * l) * p * p
        },
        &model,
        quad_options(k),
    )
}

fn quad_options(k: usize) -> QuadOptions {
    // Start with enough panels to resolve the ~k oscillations of P_k.
    QuadOptions {
        abs_tol: f64::MIN_POSITIVE,
        rel_tol: QUAD_REL_TOL,
        initial_panels: (k / 8).max(1),
        max_doublings: 14,
    }
}

fn weights<T: Real>(params: &RateParams<T>) -> (T, T) {
    (params.big_r * params.big_r, params.r_tilde * params.r_tilde * params.r)
}

fn closed_form_grad_norm<T: Real>(params: &RateParams<T>, k: usize) -> Result<T> {
    let (r2, n2) = weights(params);
    let (i1, i2) = match params.method.kind {
        MethodKind::Gd => (
            gd_integral_closed(k, 1, params.r, params.sigma)?,
            gd_integral_closed(k, 2, params.r, params.sigma)?,
        ),
        MethodKind::NesterovSc => (
            nesterov_sc_integral_closed(k, 1, params.r, params.sigma)?,
            nesterov_sc_integral_closed(k, 2, params.r, params.sigma)?,
        ),
        MethodKind::Polyak => (
            polyak_integral_closed(k, 1, params.r, params.sigma)?,
            polyak_integral_closed(k, 2, params.r, params.sigma)?,
        ),
        MethodKind::NesterovCvx => unreachable!("no closed form"),
    };
    Ok(r2 * i2 + n2 * i1)
}

/// Predicted curve for `k = 0..=k_max`.
///
/// Closed forms are evaluated term by term. Otherwise a single composite
/// rule is shared by all `k`: each node runs the method's recurrence once and
/// the panel count doubles until every `k` agrees to relative `1e−8`.
pub fn rate_curve<T: Real>(params: &RateParams<T>, k_max: usize) -> Result<RateCurve<T>> {
    if params.has_closed_form() {
        let values = (0..=k_max)
            .map(|k| closed_form_grad_norm(params, k))
            .collect::<Result<Vec<_>>>()?;
        return Ok(RateCurve { provenance: vec![Provenance::ClosedForm; values.len()], values });
    }
    let values = quadrature_curve(params, k_max, 1e-8)?;
    Ok(RateCurve { provenance: vec![Provenance::Quadrature; values.len()], values })
}

fn quadrature_curve<T: Real>(params: &RateParams<T>, k_max: usize, rel_tol: f64) -> Result<Vec<T>> {
    let model = params.model()?;
    let spec = params.method;
    let (rd2, rh2, n2, gamma) = match params.ridge {
        Some(r) => (
            r.r_dot * r.r_dot,
            r.r_hat * r.r_hat,
            params.r_tilde * params.r_tilde * params.r,
            r.gamma,
        ),
        None => {
            let (r2, n2) = weights(params);
            (T::zero(), r2, n2, T::zero())
        }
    };
    let pass = |panels: usize| -> Vec<T> {
        let (nodes, w) = model.rule(panels);
        let mut acc = vec![T::zero(); k_max + 1];
        let mut add = |l: T, weight: T| {
            let s = l + gamma;
            let c = weight * (rd2 * s * s + rh2 * l * l + n2 * l);
            if c == T::zero() {
                return;
            }
            let mut seq = PolySequence::new(spec, s);
            acc[0] = acc[0] + c;
            for a in acc.iter_mut().skip(1) {
                let p = seq.advance().p;
                *a = *a + c * p * p;
            }
        };
        for (&l, &wi) in nodes.iter().zip(&w) {
            add(l, wi);
        }
        if model.atom_at_zero > T::zero() {
            add(T::zero(), model.atom_at_zero);
        }
        acc
    };
    let mut panels = (k_max / 16).max(2);
    let mut prev = pass(panels);
    for _ in 0..12 {
        panels *= 2;
        let next = pass(panels);
        let worst = prev
            .iter()
            .zip(&next)
            .map(|(&a, &b)| ((a - b).abs() / b.abs().max(T::min_positive_value())).as_f64())
            .fold(0.0, f64::max);
        prev = next;
        if worst <= rel_tol {
            return Ok(prev);
        }
    }
    let k = prev.len() - 1;
    Err(Error::Accuracy { estimate: prev[k].as_f64(), error: f64::NAN, tol: rel_tol })
}

/// `∫λ^ℓ P_k² dμ` for gradient descent, `ℓ ∈ {1, 2}`, as Beta functions.
///
/// With `t = (λ−λ⁻)/(λ⁺−λ⁻)`, `1 − λ/λ⁺ = (1−λ⁻/λ⁺)(1−t)` and the integral is
/// `(λ⁺−λ⁻)²/(2πσ²r)(1−λ⁻/λ⁺)^{2k}[λ⁻B(3/2, 2k+3/2)]` for `ℓ = 1` plus a
/// `(λ⁺−λ⁻)B(5/2, 2k+3/2)` term for `ℓ = 2`. At `r = 1` this is
/// `(λ⁺)^{ℓ+1}Γ(2k+3/2)Γ(ℓ+1/2)/(2πσ²Γ(2k+ℓ+2))`.
pub fn gd_integral_closed<T: Real>(k: usize, ell: u32, r: T, sigma: T) -> Result<T> {
    check_ell(ell)?;
    let model = SpectralModel::marchenko_pastur(r, sigma)?;
    let (lm, lp) = (model.lambda_minus, model.lambda_plus);
    let s2 = model.sigma2;
    let kk = T::from_count(2 * k);
    let half = T::lit(0.5);
    let ln_2pi_s2 = (T::TAU() * s2).ln();
    if r == T::one() {
        let l = T::from(ell).expect("small integer");
        let ln = (l + T::one()) * lp.ln() + ln_gamma(kk + T::lit(1.5)) + ln_gamma(l + half)
            - ln_2pi_s2
            - ln_gamma(kk + l + T::lit(2.0));
        return Ok(ln.exp());
    }
    let width = lp - lm;
    let ln_pref = T::lit(2.0) * width.ln() - ln_2pi_s2 - r.ln() + kk * (-lm / lp).ln_1p();
    let ln_b1 = ln_gamma(kk + T::lit(1.5)) + ln_gamma(T::lit(1.5)) - ln_gamma(kk + T::lit(3.0));
    let first = (ln_pref + ln_b1).exp();
    if ell == 1 {
        return Ok(first);
    }
    let ln_b2 = ln_gamma(kk + T::lit(1.5)) + ln_gamma(T::lit(2.5)) - ln_gamma(kk + T::lit(4.0));
    Ok(lm * first + width * (ln_pref + ln_b2).exp())
}

/// `∫λ^ℓ P_k² dμ` for strongly convex Nesterov (`r ≠ 1`), `ℓ ∈ {1, 2}`.
///
/// Binomials `C(2k+2, k+j)` enter only through `S = C(2k+2, k+1)/4^k` and the
/// exact ratios `C(2k+2, k+1) − C(2k+2, k) = 4^k S/(k+2)` and
/// `3C(2k+2, k+1) − 4C(2k+2, k) + C(2k+2, k−1) = 6·4^k S/((k+2)(k+3))`,
/// so no near-equal binomials are subtracted.
pub fn nesterov_sc_integral_closed<T: Real>(k: usize, ell: u32, r: T, sigma: T) -> Result<T> {
    check_ell(ell)?;
    if r == T::one() {
        return Err(Error::Domain("strongly convex Nesterov closed form needs r != 1".into()));
    }
    let model = SpectralModel::marchenko_pastur(r, sigma)?;
    let (lm, lp) = (model.lambda_minus, model.lambda_plus);
    let spec = MethodSpec::new(MethodKind::NesterovSc, lm, lp)?;
    let beta = spec.beta();
    let a = T::lit(2.0) * beta / (T::one() + beta);
    let b = T::one() - a;
    let kf = T::from_count(k);
    let four_k = T::lit(4.0).ln() * kf;
    let inv4k = (-four_k).exp();
    let s = (ln_binomial::<T>(2 * k as u64 + 2, k as u64 + 1) - four_k).exp();
    let d = s / (kf + T::lit(2.0));
    let e = T::lit(6.0) * s / ((kf + T::lit(2.0)) * (kf + T::lit(3.0)));
    let width = lp - lm;
    let ln_rate = kf * (beta.ln() + (-lm / lp).ln_1p());
    let two = T::lit(2.0);

    let bracket1 = a * a * ((-kf * kf + kf / two + T::one()) * inv4k + d)
        + two * a * b * ((two * kf + T::one()) * inv4k + d)
        + two * b * b * (s - inv4k);
    let ln_pref1 = two * width.ln() - T::lit(32.0).ln() - model.sigma2.ln() - r.ln() + ln_rate;
    let i1 = ln_pref1.exp() * bracket1;
    if ell == 1 {
        return Ok(i1);
    }
    let cubic = (two * kf.powi(3) - T::lit(9.0) * kf * kf + kf + T::lit(6.0)) / T::lit(3.0);
    let quad = -two * kf * kf + T::lit(3.0) * kf + two;
    let bracket2 = a * a * (cubic * inv4k + e)
        + two * a * b * (quad * inv4k + e)
        + T::lit(4.0) * b * b * (kf * inv4k + d);
    let ln_pref2 = T::lit(3.0) * width.ln() - T::lit(128.0).ln() - model.sigma2.ln() - r.ln() + ln_rate;
    Ok(lm * i1 + ln_pref2.exp() * bracket2)
}

/// Large-`k` form `(λ⁺−λ⁻)²(1−a)²(β(1−λ⁻/λ⁺))^k / (4σ²r√(πk))` of the
/// strongly convex Nesterov `ℓ = 1` integral.
pub fn nesterov_sc_integral_asymptotic<T: Real>(k: usize, r: T, sigma: T) -> Result<T> {
    let model = SpectralModel::marchenko_pastur(r, sigma)?;
    let (lm, lp) = (model.lambda_minus, model.lambda_plus);
    let spec = MethodSpec::new(MethodKind::NesterovSc, lm, lp)?;
    let beta = spec.beta();
    let b = T::one() - T::lit(2.0) * beta / (T::one() + beta);
    let kf = T::from_count(k);
    let ln = T::lit(2.0) * (lp - lm).ln() + T::lit(2.0) * b.ln() + kf * (beta.ln() + (-lm / lp).ln_1p())
        - (T::lit(4.0) * model.sigma2 * r * (T::PI() * kf).sqrt()).ln();
    Ok(ln.exp())
}

/// `∫λ^ℓ P_k² dμ` for Polyak momentum (`r ≠ 1`), `ℓ ∈ {1, 2}`.
///
/// For `k ≥ 2`, `ℓ = 1` is `(λ⁺−λ⁻)²β^{2k}(c² + 2cd + 2d²)/(32rσ²)`; for
/// `k < 2` the polynomial has degree at most one and the integral is a
/// combination of the moments `σ²`, `σ⁴(1+r)`, `σ⁶(1+3r+r²)`. In both cases
/// `ℓ = 2` is `(λ⁺+λ⁻)/2` times `ℓ = 1`.
pub fn polyak_integral_closed<T: Real>(k: usize, ell: u32, r: T, sigma: T) -> Result<T> {
    check_ell(ell)?;
    if r == T::one() {
        return Err(Error::Domain("Polyak closed form needs r != 1".into()));
    }
    let model = SpectralModel::marchenko_pastur(r, sigma)?;
    let (lm, lp) = (model.lambda_minus, model.lambda_plus);
    let spec = MethodSpec::new(MethodKind::Polyak, lm, lp)?;
    let s2 = model.sigma2;
    let m1 = s2;
    let m2 = s2 * s2 * (T::one() + r);
    let m3 = s2 * s2 * s2 * (T::one() + T::lit(3.0) * r + r * r);
    let i1 = match k {
        0 => m1,
        1 => {
            let t = spec.polyak_first_step();
            m1 - T::lit(2.0) * t * m2 + t * t * m3
        }
        _ => {
            let sum = lp + lm;
            let c = (lp.sqrt() - lm.sqrt()).powi(2) / sum;
            let d = T::lit(2.0) * (lm * lp).sqrt() / sum;
            let ln = T::lit(2.0) * (lp - lm).ln() - (T::lit(32.0) * r * s2).ln()
                + T::from_count(2 * k) * spec.beta().ln();
            ln.exp() * (c * c + T::lit(2.0) * c * d + T::lit(2.0) * d * d)
        }
    };
    Ok(if ell == 1 { i1 } else { (lp + lm) / T::lit(2.0) * i1 })
}

/// Large-`k` forms `(∫λP_k²dμ, ∫λ²P_k²dμ) ≈ ((λ⁺)²log k/(π²σ²k³), 2(λ⁺)³/(π²σ²k⁴))`
/// for convex Nesterov at `r = 1`.
pub fn nesterov_cvx_asymptotic<T: Real>(k: usize, sigma: T) -> Result<(T, T)> {
    if k < 2 {
        return Err(Error::Domain("asymptotic form needs k >= 2".into()));
    }
    let s2 = sigma * sigma;
    let lp = T::lit(4.0) * s2;
    let kf = T::from_count(k);
    let pi2 = T::PI() * T::PI();
    Ok((lp * lp * kf.ln() / (pi2 * s2 * kf.powi(3)), T::lit(2.0) * lp.powi(3) / (pi2 * s2 * kf.powi(4))))
}

/// First `k > 0` at which the predicted curve is `≤ eps`, searching up to `k_max`.
pub fn tau_epsilon<T: Real>(params: &RateParams<T>, eps: T, k_max: usize) -> Result<HaltingPrediction> {
    if !(eps > T::zero()) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if params.has_closed_form() {
        return scan_tau(|k| closed_form_grad_norm(params, k), eps, k_max);
    }
    // Quadrature curves are built for growing horizons.
    let mut horizon = 64.min(k_max).max(1);
    loop {
        let curve = rate_curve(params, horizon)?;
        match curve.tau(eps) {
            Ok(pred) if pred.tau + pred.m_eps < horizon || horizon == k_max => return Ok(pred),
            Err(e @ Error::Bound { .. }) if horizon == k_max => return Err(e),
            Err(Error::Bound { .. }) | Ok(_) => horizon = (horizon * 4).min(k_max),
            Err(e) => return Err(e),
        }
    }
}

fn scan_tau<T: Real>(
    mut value: impl FnMut(usize) -> Result<T>,
    eps: T,
    k_max: usize,
) -> Result<HaltingPrediction> {
    let touch = T::lit(1e-12) * eps;
    let mut last = T::nan();
    for k in 1..=k_max {
        let v = value(k)?;
        last = v;
        if v <= eps {
            let mut m_eps = 0;
            if eps - v <= touch {
                for j in (k + 1)..=k_max {
                    if value(j)? < eps {
                        m_eps = j - k;
                        break;
                    }
                }
            }
            return Ok(HaltingPrediction { tau: k, m_eps });
        }
    }
    Err(Error::Bound { eps: eps.as_f64(), k_max, last: last.as_f64() })
}

fn check_ell(ell: u32) -> Result<()> {
    if ell == 1 || ell == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("ell must be 1 or 2, got {ell}")))
    }
}
