//! Residual polynomials `P_k` and iteration polynomials `Q_k` of first-order
//! methods on quadratics.
//!
//! Every method here writes its iterates as
//! `x_k − x̃ = P_k(H)(x₀ − x̃) + Q_k(H)·Aᵀη/n` with `P_k(λ) = 1 − λQ_k(λ)`.
//! Three evaluation routes are provided: the generic coefficient recurrence,
//! each method's three-term recurrence, and the explicit closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{bessel_j1_ratio, chebyshev_t, chebyshev_u, legendre};

/// First-order methods with known residual polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// Gradient descent with step `1/λ⁺`.
    Gd,
    /// Nesterov's accelerated method with momentum `β_k = k/(k+3)`.
    NesterovCvx,
    /// Nesterov's accelerated method with constant momentum for `λ⁻ > 0`.
    NesterovSc,
    /// Polyak's heavy-ball momentum.
    Polyak,
}

impl MethodKind {
    /// Snake-case name used in configs and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Gd => "gd",
            MethodKind::NesterovCvx => "nesterov_cvx",
            MethodKind::NesterovSc => "nesterov_sc",
            MethodKind::Polyak => "polyak",
        }
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A method together with the spectral edges its parameters are tuned to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodSpec<T> {
    /// Which algorithm.
    pub kind: MethodKind,
    /// Lower edge `λ⁻` used for the coefficients.
    pub lambda_minus: T,
    /// Upper edge `λ⁺` used for the coefficients.
    pub lambda_plus: T,
}

impl<T: Real> MethodSpec<T> {
    /// Validates the edges: `0 ≤ λ⁻ ≤ λ⁺`, `λ⁺ > 0`, and `λ⁻ > 0` for the
    /// strongly convex Nesterov variant and for Polyak.
    pub fn new(kind: MethodKind, lambda_minus: T, lambda_plus: T) -> Result<Self> {
        if !(lambda_plus > T::zero()) || !lambda_plus.is_finite() {
            return Err(Error::Domain(format!("lambda_plus must be positive, got {lambda_plus}")));
        }
        if !(lambda_minus >= T::zero()) || lambda_minus > lambda_plus {
            return Err(Error::Domain(format!(
                "lambda_minus must lie in [0, lambda_plus], got {lambda_minus}"
            )));
        }
        if matches!(kind, MethodKind::NesterovSc | MethodKind::Polyak) && lambda_minus <= T::zero() {
            return Err(Error::Domain(format!("{kind} requires lambda_minus > 0")));
        }
        Ok(Self { kind, lambda_minus, lambda_plus })
    }

    /// Step size `α = 1/λ⁺` of gradient descent and Nesterov.
    pub fn alpha(&self) -> T {
        T::one() / self.lambda_plus
    }

    /// `β = (√λ⁺ − √λ⁻)/(√λ⁺ + √λ⁻)`.
    pub fn beta(&self) -> T {
        let (a, b) = (self.lambda_plus.sqrt(), self.lambda_minus.sqrt());
        (a - b) / (a + b)
    }

    /// Momentum used when forming `P_{k+1}`: `β_{k−1}`, which is `0` at `k = 0`.
    pub fn momentum(&self, k: usize) -> T {
        if k == 0 {
            return T::zero();
        }
        match self.kind {
            MethodKind::Gd => T::zero(),
            MethodKind::NesterovCvx => {
                let j = T::from_count(k - 1);
                j / (j + T::lit(3.0))
            }
            MethodKind::NesterovSc => self.beta(),
            MethodKind::Polyak => self.polyak_m(),
        }
    }

    /// Polyak momentum parameter `m = −β²`.
    pub fn polyak_m(&self) -> T {
        -self.beta().powi(2)
    }

    /// Polyak gradient weight `α_P = −4/(√λ⁻ + √λ⁺)²` (the update adds `α_P ∇f`).
    pub fn polyak_alpha(&self) -> T {
        let s = self.lambda_minus.sqrt() + self.lambda_plus.sqrt();
        -T::lit(4.0) / (s * s)
    }

    /// Polyak first step `2/(λ⁺ + λ⁻)`.
    pub fn polyak_first_step(&self) -> T {
        T::lit(2.0) / (self.lambda_plus + self.lambda_minus)
    }

    /// Coefficients `(A, B, c)` of step `k → k+1`:
    /// `P_{k+1} = A P_k + B P_{k−1}` and `Q_{k+1} = A Q_k + B Q_{k−1} + c`.
    fn step_coefficients(&self, k: usize, lambda: T) -> (T, T, T) {
        let alpha = self.alpha();
        match self.kind {
            MethodKind::Gd => (T::one() - alpha * lambda, T::zero(), alpha),
            MethodKind::NesterovCvx | MethodKind::NesterovSc => {
                let b = self.momentum(k);
                let x = T::one() - alpha * lambda;
                ((T::one() + b) * x, -b * x, alpha)
            }
            MethodKind::Polyak => {
                if k == 0 {
                    let s = self.polyak_first_step();
                    (T::one() - s * lambda, T::zero(), s)
                } else {
                    let m = self.polyak_m();
                    let a = self.polyak_alpha();
                    (T::one() - m + a * lambda, m, -a)
                }
            }
        }
    }
}

/// Values `(P_k(λ), Q_k(λ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyPair<T> {
    /// Residual polynomial value.
    pub p: T,
    /// Iteration polynomial value.
    pub q: T,
}

/// Streaming evaluator of a method's three-term recurrence at a fixed `λ`.
#[derive(Clone, Debug)]
pub struct PolySequence<T> {
    spec: MethodSpec<T>,
    lambda: T,
    k: usize,
    prev: PolyPair<T>,
    cur: PolyPair<T>,
}

impl<T: Real> PolySequence<T> {
    /// Starts at `k = 0` with `(P₀, Q₀) = (1, 0)`.
    pub fn new(spec: MethodSpec<T>, lambda: T) -> Self {
        let one = PolyPair { p: T::one(), q: T::zero() };
        Self { spec, lambda, k: 0, prev: one, cur: one }
    }

    /// Current index `k`.
    pub fn index(&self) -> usize {
        self.k
    }

    /// Current `(P_k, Q_k)`.
    pub fn current(&self) -> PolyPair<T> {
        self.cur
    }

    /// Advances to `k + 1` and returns the new pair.
    pub fn advance(&mut self) -> PolyPair<T> {
        let (a, b, c) = self.spec.step_coefficients(self.k, self.lambda);
        let next = PolyPair {
            p: a * self.cur.p + b * self.prev.p,
            q: a * self.cur.q + b * self.prev.q + c,
        };
        self.prev = self.cur;
        self.cur = next;
        self.k += 1;
        next
    }
}

/// `(P_k(λ), Q_k(λ))` by the method's three-term recurrence.
pub fn recurrence_pair<T: Real>(spec: &MethodSpec<T>, k: usize, lambda: T) -> PolyPair<T> {
    let mut seq = PolySequence::new(*spec, lambda);
    for _ in 0..k {
        seq.advance();
    }
    seq.current()
}

/// Lower-triangular schedule `c_{k,i}`, `0 ≤ i ≤ k`, of a gradient-based method
/// `x_{k+1} = x₀ + Σᵢ c_{k,i} ∇f(xᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSchedule<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Real> CoefficientSchedule<T> {
    /// Builds rows `0..steps` from `f(k, i)`.
    pub fn from_fn(steps: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let rows = (0..steps).map(|k| (0..=k).map(|i| f(k, i)).collect()).collect();
        Self { rows }
    }

    /// Builds the schedule from explicit rows; row `k` must have length `k + 1`.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::Size(format!(
                    "schedule row {k} has {} entries, expected {}",
                    row.len(),
                    k + 1
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Schedule of `spec` for `steps` steps, obtained by expanding the
    /// method's update rule in the gradient basis.
    pub fn for_method(spec: &MethodSpec<T>, steps: usize) -> Self {
        // a[k] holds the weights of x_k − x₀ on ∇f(x₀), …, ∇f(x_{k−1}).
        let mut a: Vec<Vec<T>> = vec![Vec::new()];
        let alpha = spec.alpha();
        for k in 0..steps {
            let mut next = a[k].clone();
            next.push(T::zero());
            match spec.kind {
                MethodKind::Gd => next[k] = next[k] - alpha,
                MethodKind::NesterovCvx | MethodKind::NesterovSc => {
                    // y_k = x_k + β(x_k − x_{k−1}); for quadratics
                    // ∇f(y_k) = (1+β)∇f(x_k) − β∇f(x_{k−1}).
                    let b = spec.momentum(k);
                    if k > 0 {
                        for (i, v) in next.iter_mut().enumerate().take(k) {
                            let older = a[k - 1].get(i).copied().unwrap_or(T::zero());
                            *v = *v + b * (a[k][i] - older);
                        }
                        next[k - 1] = next[k - 1] + alpha * b;
                    }
                    next[k] = next[k] - alpha * (T::one() + b);
                }
                MethodKind::Polyak => {
                    if k == 0 {
                        next[0] = -spec.polyak_first_step();
                    } else {
                        let m = spec.polyak_m();
                        for (i, v) in next.iter_mut().enumerate().take(k) {
                            let older = a[k - 1].get(i).copied().unwrap_or(T::zero());
                            *v = *v + m * (older - a[k][i]);
                        }
                        next[k] = next[k] + spec.polyak_alpha();
                    }
                }
            }
            a.push(next);
        }
        Self { rows: a.into_iter().skip(1).collect() }
    }

    /// Number of steps covered.
    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    /// Row `c_{k,·}`.
    pub fn row(&self, k: usize) -> &[T] {
        &self.rows[k]
    }
}

/// `(P_k(λ), Q_k(λ))` from a coefficient schedule:
/// `Q_{j+1} = Σᵢ c_{j,i}(λQᵢ − 1)` and `P = 1 − λQ`.
pub fn generic_recurrence<T: Real>(
    schedule: &CoefficientSchedule<T>,
    k: usize,
    lambda: T,
) -> Result<PolyPair<T>> {
    if k > schedule.steps() {
        return Err(Error::Domain(format!(
            "schedule covers {} steps, requested k = {k}",
            schedule.steps()
        )));
    }
    let mut q = vec![T::zero(); k + 1];
    for j in 0..k {
        q[j + 1] = schedule
            .row(j)
            .iter()
            .zip(&q)
            .map(|(&c, &qi)| c * (lambda * qi - T::one()))
            .sum();
    }
    Ok(PolyPair { p: T::one() - lambda * q[k], q: q[k] })
}

/// Gradient descent: `P_k(λ) = (1 − λ/λ⁺)^k`.
pub fn gd_p<T: Real>(k: usize, lambda: T, lambda_plus: T) -> T {
    (T::one() - lambda / lambda_plus).powi(k as i32)
}

/// Strongly convex Nesterov, explicit Chebyshev form.
///
/// `P_k = (β(1−αλ))^{k/2} [a T_k(y) + (1−a) U_k(y)]` with `a = 2β/(1+β)` and
/// `y = (1+β)√(1−αλ)/(2√β)`; the prefactor is formed in log space and the
/// `y > 1` branch uses the hyperbolic form with its growth folded into it.
pub fn nesterov_sc_p<T: Real>(k: usize, lambda: T, spec: &MethodSpec<T>) -> Result<T> {
    if !(spec.lambda_minus > T::zero()) {
        return Err(Error::Domain("strongly convex Nesterov requires lambda_minus > 0".into()));
    }
    let x = T::one() - spec.alpha() * lambda;
    if x < T::zero() || lambda < T::zero() {
        return Err(Error::Domain(format!("lambda = {lambda} outside [0, lambda_plus]")));
    }
    if k == 0 {
        return Ok(T::one());
    }
    let beta = spec.beta();
    let a = T::lit(2.0) * beta / (T::one() + beta);
    let b = T::one() - a;
    let half_k = T::from_count(k) / T::lit(2.0);
    let log_pref = half_k * (beta * x).ln();
    let y = (T::one() + beta) * x.sqrt() / (T::lit(2.0) * beta.sqrt());
    if y <= T::one() {
        let bracket = a * chebyshev_t(k, y) + b * chebyshev_u(k, y);
        return Ok(exp_or_zero(log_pref) * bracket);
    }
    let t = y.acosh();
    let kf = T::from_count(k);
    let two = T::lit(2.0);
    let even = (T::one() + (-two * kf * t).exp()) / two;
    let ratio = if t > T::zero() {
        (-two * (kf + T::one()) * t).exp_m1() / (-two * t).exp_m1()
    } else {
        kf + T::one()
    };
    Ok(exp_or_zero(log_pref + kf * t) * (a * even + b * ratio))
}

/// Convex Nesterov, `β_k = k/(k+3)`, by forward three-term recurrence.
pub fn nesterov_cvx_p<T: Real>(k: usize, lambda: T, lambda_plus: T) -> T {
    nesterov_cvx_pair(k, lambda, lambda_plus).p
}

/// `(P_k, Q_k)` of convex Nesterov by forward recurrence.
pub fn nesterov_cvx_pair<T: Real>(k: usize, lambda: T, lambda_plus: T) -> PolyPair<T> {
    let spec = MethodSpec { kind: MethodKind::NesterovCvx, lambda_minus: T::zero(), lambda_plus };
    recurrence_pair(&spec, k, lambda)
}

/// Convex Nesterov via Legendre polynomials, valid for `k ≥ 1` and `0 < λ ≤ λ⁺`:
/// `P_k = 2v^{k+1}/(kαλ)·(v L_k(v) − L_{k+1}(v))` with `v = √(1−αλ)`.
///
/// Loses accuracy as `λ → 0`; kept as an independent cross-check.
pub fn nesterov_cvx_legendre<T: Real>(k: usize, lambda: T, lambda_plus: T) -> Result<T> {
    let u = lambda / lambda_plus;
    if k == 0 || !(u > T::zero()) || u > T::one() {
        return Err(Error::Domain(format!("Legendre form needs k >= 1 and 0 < lambda <= lambda_plus (k = {k}, lambda = {lambda})")));
    }
    let v = (T::one() - u).sqrt();
    let kf = T::from_count(k);
    let pref = T::lit(2.0) * v.powi(k as i32 + 1) / (kf * u);
    Ok(pref * (v * legendre(k, v) - legendre(k + 1, v)))
}

/// Bessel approximation `2J₁(k√(αλ))/(k√(αλ))·e^{−αλk/2}` of convex Nesterov.
pub fn nesterov_cvx_bessel<T: Real>(k: usize, lambda: T, lambda_plus: T) -> T {
    let u = lambda / lambda_plus;
    let kf = T::from_count(k);
    let z = kf * u.max(T::zero()).sqrt();
    bessel_j1_ratio(z) * (-u * kf / T::lit(2.0)).exp()
}

/// Polyak explicit form `β^k [c T_k(σ) + d U_k(σ)]` on `[λ⁻, λ⁺]`, with
/// `c = (√λ⁺−√λ⁻)²/(λ⁺+λ⁻)`, `d = 2√(λ⁻λ⁺)/(λ⁺+λ⁻)` and
/// `σ = (λ⁺+λ⁻−2λ)/(λ⁺−λ⁻)`.
pub fn polyak_p<T: Real>(k: usize, lambda: T, spec: &MethodSpec<T>) -> Result<T> {
    let (lm, lp) = (spec.lambda_minus, spec.lambda_plus);
    if !(lm > T::zero()) {
        return Err(Error::Domain("Polyak requires lambda_minus > 0".into()));
    }
    if k == 0 {
        return Ok(T::one());
    }
    let slack = T::lit(1e-12) * lp;
    if lambda < lm - slack || lambda > lp + slack || lp <= lm {
        return Err(Error::Domain(format!(
            "Polyak explicit form needs lambda in [{lm}, {lp}], got {lambda}"
        )));
    }
    let s = (lp + lm - T::lit(2.0) * lambda) / (lp - lm);
    let s = s.max(-T::one()).min(T::one());
    let sum = lp + lm;
    let c = (lp.sqrt() - lm.sqrt()).powi(2) / sum;
    let d = T::lit(2.0) * (lm * lp).sqrt() / sum;
    let pref = exp_or_zero(T::from_count(k) * spec.beta().ln());
    Ok(pref * (c * chebyshev_t(k, s) + d * chebyshev_u(k, s)))
}

/// `P_k(λ)` of `spec`, from the explicit form where it applies and from the
/// three-term recurrence otherwise.
pub fn method_p<T: Real>(spec: &MethodSpec<T>, k: usize, lambda: T) -> T {
    let explicit = match spec.kind {
        MethodKind::Gd => Ok(gd_p(k, lambda, spec.lambda_plus)),
        MethodKind::NesterovSc => nesterov_sc_p(k, lambda, spec),
        MethodKind::Polyak => polyak_p(k, lambda, spec),
        MethodKind::NesterovCvx => Err(Error::Domain(String::new())),
    };
    explicit.unwrap_or_else(|_| recurrence_pair(spec, k, lambda).p)
}

/// `(P_k, Q_k)` with `Q_k = (1 − P_k)/λ`; below `|λ| < 1e−8` the recurrence
/// supplies `Q_k` directly.
pub fn method_pair<T: Real>(spec: &MethodSpec<T>, k: usize, lambda: T) -> PolyPair<T> {
    if lambda.abs() < T::lit(1e-8) {
        let rec = recurrence_pair(spec, k, lambda);
        return PolyPair { p: T::one() - lambda * rec.q, q: rec.q };
    }
    let p = method_p(spec, k, lambda);
    PolyPair { p, q: (T::one() - p) / lambda }
}

fn exp_or_zero<T: Real>(x: T) -> T {
    if x < T::lit(-745.0) {
        T::zero()
    } else {
        x.exp()
    }
}
