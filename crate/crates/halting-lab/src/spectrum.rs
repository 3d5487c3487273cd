//! Limiting and empirical spectra of `H = AᵀA/n`.
//!
//! The Marčenko–Pastur law with ratio `r = d/n` and scale `σ²` has a density
//! on `[λ⁻, λ⁺]` and, for `r > 1`, a point mass `1 − 1/r` at zero. Integrals
//! against it use the substitution `λ = λ⁻ + (λ⁺ − λ⁻) sin²θ`, which turns the
//! square-root edges into a smooth integrand, followed by composite
//! Gauss–Legendre quadrature with panel doubling.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::composite_legendre;
use crate::scalar::Real;

/// Default absolute tolerance of [`mp_integrate`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Marčenko–Pastur law: ratio, scale, support edges and atom at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralModel<T> {
    /// Ratio `r = d/n`.
    pub r: T,
    /// Entry variance `σ²`.
    pub sigma2: T,
    /// Lower support edge `σ²(1 − √r)²`.
    pub lambda_minus: T,
    /// Upper support edge `σ²(1 + √r)²`.
    pub lambda_plus: T,
    /// Point mass at zero, `max(1 − 1/r, 0)`.
    pub atom_at_zero: T,
}

impl<T: Real> SpectralModel<T> {
    /// Law for ratio `r > 0` and entry standard deviation `sigma > 0`.
    pub fn marchenko_pastur(r: T, sigma: T) -> Result<Self> {
        let (lambda_minus, lambda_plus) = mp_edges(r, sigma)?;
        let atom_at_zero = (T::one() - T::one() / r).max(T::zero());
        Ok(Self { r, sigma2: sigma * sigma, lambda_minus, lambda_plus, atom_at_zero })
    }

    /// Density of the continuous part at `lambda` (the atom is excluded).
    pub fn density(&self, lambda: T) -> T {
        mp_density(lambda, self)
    }

    /// Cumulative distribution function, atom included.
    pub fn cdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        let width = self.lambda_plus - self.lambda_minus;
        if x <= self.lambda_minus || width <= T::zero() {
            return self.atom_at_zero;
        }
        if x >= self.lambda_plus {
            return T::one();
        }
        let theta = ((x - self.lambda_minus) / width).sqrt().asin();
        let (nodes, weights) = composite_legendre(T::zero(), theta, 32);
        let part: T = nodes
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| w * self.substituted_weight(t))
            .sum();
        self.atom_at_zero + part
    }

    /// `λ(θ)` and the density times the Jacobian `dλ/dθ` at `θ`.
    fn substituted(&self, theta: T) -> (T, T) {
        let width = self.lambda_plus - self.lambda_minus;
        let s = theta.sin();
        let lambda = self.lambda_minus + width * s * s;
        (lambda, self.substituted_weight(theta))
    }

    fn substituted_weight(&self, theta: T) -> T {
        let width = self.lambda_plus - self.lambda_minus;
        let (s, c) = theta.sin_cos();
        let lambda = self.lambda_minus + width * s * s;
        if lambda <= T::zero() {
            // r = 1 at θ = 0: the λ in the denominator cancels against sin²θ.
            return self.lambda_plus * c * c / (T::PI() * self.sigma2 * self.r);
        }
        width * width * s * s * c * c / (T::PI() * lambda * self.sigma2 * self.r)
    }

    /// Quadrature rule `(λᵢ, wᵢ)` for the continuous part with `panels`
    /// Gauss–Legendre panels in the `θ` variable.
    pub fn rule(&self, panels: usize) -> (Vec<T>, Vec<T>) {
        let (thetas, weights) = composite_legendre(T::zero(), T::FRAC_PI_2(), panels);
        thetas
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| {
                let (lambda, jac) = self.substituted(t);
                (lambda, w * jac)
            })
            .unzip()
    }
}

/// Support edges `(σ²(1 − √r)², σ²(1 + √r)²)`.
pub fn mp_edges<T: Real>(r: T, sigma: T) -> Result<(T, T)> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::Domain(format!("ratio r must be positive and finite, got {r}")));
    }
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive and finite, got {sigma}")));
    }
    let s2 = sigma * sigma;
    let sr = r.sqrt();
    Ok((s2 * (T::one() - sr).powi(2), s2 * (T::one() + sr).powi(2)))
}

/// Density `√((λ−λ⁻)(λ⁺−λ)) / (2πλσ²r)` on `[λ⁻, λ⁺]`, zero elsewhere.
pub fn mp_density<T: Real>(lambda: T, model: &SpectralModel<T>) -> T {
    if lambda <= model.lambda_minus || lambda >= model.lambda_plus || lambda <= T::zero() {
        return T::zero();
    }
    let num = ((lambda - model.lambda_minus) * (model.lambda_plus - lambda)).sqrt();
    num / (T::TAU() * lambda * model.sigma2 * model.r)
}

/// Stopping rule of the panel-doubling quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    /// Absolute tolerance on the difference of successive refinements.
    pub abs_tol: f64,
    /// Relative tolerance; the stopping threshold is `max(abs_tol, rel_tol·|I|)`.
    pub rel_tol: f64,
    /// Panel count of the first pass.
    pub initial_panels: usize,
    /// Maximum number of doublings after the first pass.
    pub max_doublings: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: DEFAULT_TOL, rel_tol: 0.0, initial_panels: 1, max_doublings: 14 }
    }
}

impl QuadOptions {
    /// Absolute tolerance only.
    pub fn absolute(tol: f64) -> Self {
        Self { abs_tol: tol, ..Self::default() }
    }

    /// Relative tolerance only (useful for integrals that are exponentially small).
    pub fn relative(tol: f64) -> Self {
        Self { abs_tol: 0.0, rel_tol: tol, ..Self::default() }
    }

    fn threshold(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// `atom·f(0) + ∫ f dμ` to absolute tolerance `tol`.
pub fn mp_integrate<T: Real>(f: impl Fn(T) -> T, model: &SpectralModel<T>, tol: T) -> Result<T> {
    mp_integrate_with(f, model, QuadOptions::absolute(tol.as_f64()))
}

/// [`mp_integrate`] with an explicit stopping rule.
pub fn mp_integrate_with<T: Real>(
    f: impl Fn(T) -> T,
    model: &SpectralModel<T>,
    opts: QuadOptions,
) -> Result<T> {
    let atom = if model.atom_at_zero > T::zero() { model.atom_at_zero * f(T::zero()) } else { T::zero() };
    let continuous = |panels: usize| -> T {
        let (nodes, weights) = model.rule(panels);
        nodes.iter().zip(&weights).map(|(&l, &w)| w * f(l)).sum()
    };
    let mut panels = opts.initial_panels.max(1);
    let mut prev = continuous(panels);
    let mut err = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        panels *= 2;
        let next = continuous(panels);
        err = (next - prev).abs().as_f64();
        prev = next;
        if err <= opts.threshold(next.as_f64()) {
            return Ok(atom + next);
        }
    }
    Err(Error::Accuracy { estimate: (atom + prev).as_f64(), error: err, tol: opts.threshold(prev.as_f64()) })
}

/// Sorted eigenvalues of an `H = AᵀA/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSpectrum<T> {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> EmpiricalSpectrum<T> {
    /// Fraction of eigenvalues `≤ x`.
    pub fn cdf(&self, x: T) -> T {
        let count = self.eigenvalues.partition_point(|&e| e <= x);
        T::from_count(count) / T::from_count(self.eigenvalues.len())
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> T {
        *self.eigenvalues.last().expect("spectrum is non-empty")
    }

    /// Kolmogorov distance to a Marčenko–Pastur law.
    pub fn kolmogorov_mp(&self, model: &SpectralModel<T>) -> T {
        let n = T::from_count(self.eigenvalues.len());
        let mut worst = T::zero();
        for (i, &e) in self.eigenvalues.iter().enumerate() {
            let f = model.cdf(e);
            let below = T::from_count(i) / n;
            let above = T::from_count(i + 1) / n;
            worst = worst.max((f - below).abs()).max((above - f).abs());
        }
        worst
    }

    /// Kolmogorov distance between two empirical spectra.
    pub fn kolmogorov(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for &e in self.eigenvalues.iter().chain(&other.eigenvalues) {
            worst = worst.max((self.cdf(e) - other.cdf(e)).abs());
        }
        worst
    }
}

/// Eigenvalues of `AᵀA/n` by a dense symmetric eigensolver (validation scale only).
pub fn esm<T: Real>(a: &Matrix<T>) -> Result<EmpiricalSpectrum<T>> {
    let h = a.gram_f64();
    let values = h.symmetric_eigenvalues();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("symmetric eigensolver returned non-finite values".into()));
    }
    let mut eigenvalues: Vec<T> = values.iter().map(|&v| T::lit(v.max(0.0))).collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(EmpiricalSpectrum { eigenvalues })
}

/// Power-iteration estimate of the largest eigenvalue of `H = AᵀA/n`.
///
/// Starts from the constant unit vector and returns the Rayleigh quotient of
/// the iterate after `iters` applications of `H`.
pub fn power_iteration_lambda_max<T: Real>(a: &Matrix<T>, iters: usize) -> T {
    let d = a.cols();
    let mut v = vec![T::one() / T::from_count(d).sqrt(); d];
    let mut w = vec![T::zero(); d];
    let mut scratch = vec![T::zero(); a.rows()];
    let mut estimate = T::zero();
    for _ in 0..iters.max(1) {
        a.gram_apply(&v, &mut scratch, &mut w);
        estimate = crate::linalg::dot(&v, &w);
        let norm = crate::linalg::norm_sq(&w).sqrt();
        if norm == T::zero() || !norm.is_finite() {
            return T::zero();
        }
        v.iter_mut().zip(&w).for_each(|(vi, &wi)| *vi = wi / norm);
    }
    estimate
}

/// Large-dimension limit of [`power_iteration_lambda_max`] under `model`.
///
/// A generic start vector weights the spectrum by `μ`, so after `iters`
/// applications the Rayleigh quotient tends to `∫λ^{2m+1}dμ / ∫λ^{2m}dμ`
/// with `m = iters − 1`.
pub fn power_iteration_limit<T: Real>(model: &SpectralModel<T>, iters: usize) -> Result<T> {
    let m = 2 * (iters.max(1) as i32 - 1);
    let top = model.lambda_plus;
    let opts = QuadOptions { rel_tol: 1e-12, abs_tol: 0.0, ..QuadOptions::default() };
    let num = mp_integrate_with(|l| (l / top).powi(m + 1), model, opts)?;
    let den = mp_integrate_with(|l| (l / top).powi(m), model, opts)?;
    Ok(top * num / den)
}
