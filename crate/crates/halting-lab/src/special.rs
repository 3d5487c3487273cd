//! Chebyshev, Legendre and Bessel functions.

use crate::scalar::Real;

/// Chebyshev polynomial of the first kind `T_k(x)`.
///
/// Uses `cos(k·arccos x)` on `[-1, 1]` and `±cosh(k·arccosh|x|)` outside, so
/// large `k` does not accumulate the error of the monomial recurrence.
pub fn chebyshev_t<T: Real>(k: usize, x: T) -> T {
    let kf = T::from_count(k);
    if x.abs() <= T::one() {
        (kf * x.acos()).cos()
    } else {
        let sign = if x < T::zero() && k % 2 == 1 { -T::one() } else { T::one() };
        sign * (kf * x.abs().acosh()).cosh()
    }
}

/// Chebyshev polynomial of the second kind `U_k(x)`.
pub fn chebyshev_u<T: Real>(k: usize, x: T) -> T {
    let k1 = T::from_count(k + 1);
    let ax = x.abs();
    let sign = if x < T::zero() && k % 2 == 1 { -T::one() } else { T::one() };
    if ax == T::one() {
        return sign * k1;
    }
    if ax < T::one() {
        let theta = x.acos();
        (k1 * theta).sin() / theta.sin()
    } else {
        let t = ax.acosh();
        sign * (k1 * t).sinh() / t.sinh()
    }
}

/// Legendre polynomial `L_k(x)` by Bonnet's recurrence.
pub fn legendre<T: Real>(k: usize, x: T) -> T {
    let (mut p0, mut p1) = (T::one(), x);
    if k == 0 {
        return p0;
    }
    for j in 1..k {
        let j = T::from_count(j);
        let p2 = ((j + j + T::one()) * x * p1 - j * p0) / (j + T::one());
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Bessel function of the first kind of order one, `J₁(x)`.
///
/// Ascending series for `|x| < 8`, Hankel's asymptotic expansion beyond.
pub fn bessel_j1<T: Real>(x: T) -> T {
    let v = x.as_f64();
    let sign = v.signum();
    let a = v.abs();
    let value = if a < 8.0 { j1_series(a) } else { j1_hankel(a) };
    T::lit(sign * value)
}

/// `2J₁(x)/x`, continuous at zero with value 1.
pub fn bessel_j1_ratio<T: Real>(x: T) -> T {
    let v = x.as_f64().abs();
    if v < 1e-4 {
        // Two series terms are exact to double precision here.
        return T::lit(1.0 - v * v / 8.0);
    }
    T::lit(2.0 * bessel_j1::<f64>(v) / v)
}

fn j1_series(x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = h;
    let mut sum = term;
    for m in 1..60 {
        let m = m as f64;
        term *= -h2 / (m * (m + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn j1_hankel(x: f64) -> f64 {
    // J₁(x) = √(2/(πx)) (P cos χ − Q sin χ), χ = x − 3π/4, with
    // aⱼ = Πᵢ (4 − (2i−1)²) / (j! (8x)ʲ) alternating into P (even j) and Q (odd j).
    let mu = 4.0;
    let z = 8.0 * x;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0f64;
    let mut prev = f64::INFINITY;
    for j in 1..40 {
        let odd = (2 * j - 1) as f64;
        term *= (mu - odd * odd) / (j as f64 * z);
        if term.abs() >= prev || term.abs() < 1e-18 {
            break;
        }
        prev = term.abs();
        match j % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = x - 0.75 * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `sup_x J₁(x)²`, attained at the first maximum of `J₁` near `x ≈ 1.8412`.
pub fn j1_sq_sup() -> f64 {
    // J₁ is unimodal on [1, 3]; golden-section search on -J₁.
    let (x, _) = crate::bounds::golden_max(|x: f64| bessel_j1(x), 1.0, 3.0, 1e-12);
    bessel_j1(x).powi(2)
}
