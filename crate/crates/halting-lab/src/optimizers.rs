//! First-order methods run on sampled instances.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::ProblemInstance;
use crate::linalg::{axpy, dot, norm_sq};
use crate::polynomials::{MethodKind, MethodSpec};
use crate::rng::{stream, Component};
use crate::scalar::Real;
use crate::spectrum::{mp_edges, power_iteration_lambda_max};

/// Power-iteration steps used to estimate `λ⁺_H`.
pub const POWER_ITERS: usize = 64;

/// Squared gradient norm above which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e16;

/// Smallest `λ⁻` handed to methods that need a positive lower edge.
pub const LAMBDA_MINUS_FLOOR: f64 = 1e-12;

/// Loss being minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ObjectiveKind {
    /// `‖Ax − b‖²/(2n)`.
    LeastSquares,
    /// `‖Ax − b‖²/(2n) + γ‖x‖²/2`.
    Ridge {
        /// Regularization strength.
        gamma: f64,
    },
    /// Mean cross-entropy against targets `σ(Ax̃ + η)`.
    Logistic,
}

/// A loss bound to a problem instance.
#[derive(Clone, Debug)]
pub struct Objective<'a, T> {
    /// Loss.
    pub kind: ObjectiveKind,
    /// Instance supplying `A` and the targets.
    pub problem: &'a ProblemInstance<T>,
    targets: Vec<T>,
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<'a, T: Real> Objective<'a, T> {
    /// Binds `kind` to `problem`; logistic targets are `σ(b)` with `b = Ax̃ + η`.
    pub fn new(kind: ObjectiveKind, problem: &'a ProblemInstance<T>) -> Result<Self> {
        if let ObjectiveKind::Ridge { gamma } = kind {
            if !(gamma > 0.0) {
                return Err(Error::Domain(format!("ridge gamma must be positive, got {gamma}")));
            }
        }
        let targets = match kind {
            ObjectiveKind::Logistic => problem.b.iter().map(|&v| sigmoid(v)).collect(),
            _ => problem.b.clone(),
        };
        Ok(Self { kind, problem, targets })
    }

    /// Least-squares objective.
    pub fn least_squares(problem: &'a ProblemInstance<T>) -> Self {
        Self { kind: ObjectiveKind::LeastSquares, problem, targets: problem.b.clone() }
    }

    /// Targets the loss is fitted to.
    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    /// Loss value at `x`.
    pub fn value(&self, x: &[T]) -> T {
        let a = &self.problem.a;
        let n = T::from_count(a.rows());
        let mut total = T::zero();
        for i in 0..a.rows() {
            let z = dot(a.row(i), x);
            let y = self.targets[i];
            total = total
                + match self.kind {
                    ObjectiveKind::LeastSquares | ObjectiveKind::Ridge { .. } => {
                        let r = z - y;
                        r * r / T::lit(2.0)
                    }
                    ObjectiveKind::Logistic => softplus(z) - y * z,
                };
        }
        let mut v = total / n;
        if let ObjectiveKind::Ridge { gamma } = self.kind {
            v = v + T::lit(gamma / 2.0) * norm_sq(x);
        }
        v
    }

    /// Gradient at `x`.
    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.gradient_into(x, &mut out);
        out
    }

    /// Gradient at `x`, written into `out`.
    pub fn gradient_into(&self, x: &[T], out: &mut [T]) {
        self.rows_gradient(0..self.problem.n, self.problem.n, x, out);
    }

    /// Gradient of the loss restricted to `rows`, averaged over `count` rows.
    ///
    /// The full gradient is the case `rows = 0..n`, so a mini-batch that
    /// contains every row reproduces it operation for operation.
    fn rows_gradient(&self, rows: impl Iterator<Item = usize>, count: usize, x: &[T], out: &mut [T]) {
        let a = &self.problem.a;
        out.iter_mut().for_each(|o| *o = T::zero());
        for i in rows {
            let row = a.row(i);
            let z = dot(row, x);
            let resid = match self.kind {
                ObjectiveKind::Logistic => sigmoid(z) - self.targets[i],
                _ => z - self.targets[i],
            };
            axpy(resid, row, out);
        }
        let inv = T::one() / T::from_count(count);
        out.iter_mut().for_each(|o| *o = *o * inv);
        if let ObjectiveKind::Ridge { gamma } = self.kind {
            axpy(T::lit(gamma), x, out);
        }
    }
}

fn softplus<T: Real>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

/// Record of one optimization run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    /// `‖∇f‖²` at each recorded point, starting with `x₀`.
    pub grad_sq_norms: Vec<T>,
    /// First recorded index `k ≥ 1` with value `≤ ε`.
    pub halted_at: Option<usize>,
    /// Estimate of `λ⁺_H` the step size was derived from.
    pub lambda_max_est: T,
    /// Optimizer steps between consecutive records (1 for full-batch methods).
    pub record_every: usize,
    /// Final iterate.
    pub x_final: Vec<T>,
}

/// First `k ≥ 1` with `values[k] ≤ eps`.
pub fn halting_time<T: Real>(values: &[T], eps: T) -> Option<usize> {
    values.iter().enumerate().skip(1).find(|(_, &v)| v <= eps).map(|(k, _)| k)
}

/// Strongly convex or convex Nesterov, by the configured ratio and the lower edge.
pub fn select_nesterov(r: f64, lambda_minus: f64, lambda_plus: f64) -> MethodKind {
    if r == 1.0 || lambda_minus < 1e-8 * lambda_plus {
        MethodKind::NesterovCvx
    } else {
        MethodKind::NesterovSc
    }
}

/// Method spec for `obj` with `λ⁺` from [`POWER_ITERS`] power-iteration steps.
///
/// The lower edge is the Marčenko–Pastur plug-in `σ²(1−√r)²` at the
/// configured ratio, floored at [`LAMBDA_MINUS_FLOOR`]. Ridge shifts both
/// edges by `γ`; logistic divides `λ⁺` by 4 so that `α = 4/λ⁺_H`.
pub fn method_for_problem<T: Real>(kind: MethodKind, obj: &Objective<'_, T>) -> Result<MethodSpec<T>> {
    let problem = obj.problem;
    let lp = power_iteration_lambda_max(&problem.a, POWER_ITERS);
    let (lm, _) = mp_edges(problem.r_target, problem.sigma)?;
    let lm = T::lit(lm.max(LAMBDA_MINUS_FLOOR));
    let (lm, lp) = match obj.kind {
        ObjectiveKind::LeastSquares => (lm, lp),
        ObjectiveKind::Ridge { gamma } => (lm + T::lit(gamma), lp + T::lit(gamma)),
        ObjectiveKind::Logistic => (lm, lp / T::lit(4.0)),
    };
    if !(lp > T::zero()) {
        return Err(Error::Numeric("power iteration returned a non-positive lambda_max".into()));
    }
    MethodSpec::new(kind, lm.min(lp), lp)
}

/// Runs `method` from `x₀` until `‖∇f(x_k)‖² ≤ eps` or `max_iter` steps.
pub fn run<T: Real>(method: &MethodSpec<T>, obj: &Objective<'_, T>, eps: T, max_iter: usize) -> Result<Trajectory<T>> {
    run_observed(method, obj, eps, max_iter, |_, _| {})
}

/// [`run`] calling `observe(k, x_k)` at every iterate.
pub fn run_observed<T: Real>(
    method: &MethodSpec<T>,
    obj: &Objective<'_, T>,
    eps: T,
    max_iter: usize,
    mut observe: impl FnMut(usize, &[T]),
) -> Result<Trajectory<T>> {
    let d = obj.problem.d;
    let alpha = method.alpha();
    let mut x = obj.problem.x0.clone();
    let mut x_prev = x.clone();
    let mut g = vec![T::zero(); d];
    let mut gy = vec![T::zero(); d];
    let mut y = vec![T::zero(); d];
    let mut norms = Vec::new();
    let mut halted_at = None;
    let limit = T::lit(DIVERGENCE_LIMIT);
    for k in 0..=max_iter {
        observe(k, &x);
        obj.gradient_into(&x, &mut g);
        let gn = norm_sq(&g);
        norms.push(gn);
        if !gn.is_finite() || gn > limit {
            return Err(Error::Divergence { step: k, prefix: norms.iter().map(|v| v.as_f64()).collect() });
        }
        if k >= 1 && gn <= eps {
            halted_at = Some(k);
            break;
        }
        if k == max_iter {
            break;
        }
        let next: Vec<T> = match method.kind {
            MethodKind::Gd => x.iter().zip(&g).map(|(&xi, &gi)| xi - alpha * gi).collect(),
            MethodKind::NesterovCvx | MethodKind::NesterovSc => {
                let b = method.momentum(k);
                for i in 0..d {
                    y[i] = x[i] + b * (x[i] - x_prev[i]);
                }
                obj.gradient_into(&y, &mut gy);
                y.iter().zip(&gy).map(|(&yi, &gi)| yi - alpha * gi).collect()
            }
            MethodKind::Polyak => {
                if k == 0 {
                    let s = method.polyak_first_step();
                    x.iter().zip(&g).map(|(&xi, &gi)| xi - s * gi).collect()
                } else {
                    let m = method.polyak_m();
                    let a = method.polyak_alpha();
                    (0..d).map(|i| x[i] + m * (x_prev[i] - x[i]) + a * g[i]).collect()
                }
            }
        };
        x_prev = std::mem::replace(&mut x, next);
    }
    Ok(Trajectory {
        grad_sq_norms: norms,
        halted_at,
        lambda_max_est: method.lambda_plus,
        record_every: 1,
        x_final: x,
    })
}

/// Step-size choice of [`run_sgd`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdStep {
    /// Step size used.
    pub step: f64,
    /// Smoothness estimate `L = λ⁺_H`.
    pub l: f64,
    /// Growth constant `B² = (2 + r′(2+R̃²))/(2 + r(2+R̃²))`, `r′ = d/batch`.
    pub b2: f64,
    /// Stationary noise constant `M = R̃²(1−r)(r′−r)` (under-parametrized only).
    pub m: f64,
    /// Step solving `ᾱLM = ε` before capping (under-parametrized only).
    pub step_target: Option<f64>,
    /// Cap `1/(L·B²)` (under-parametrized) or the step `2/(L·B²)` (over-parametrized).
    pub step_cap: f64,
    /// Whether `d ≥ n`.
    pub over_parametrized: bool,
    /// Optimizer steps between full-gradient evaluations, `⌈n/batch⌉`.
    pub record_every: usize,
}

/// Step size of mini-batch SGD for least squares.
///
/// Over-parametrized (`d ≥ n`): `2/(L·B²)`. Under-parametrized: `ᾱ` with
/// `ᾱLM = ε`, capped at `1/(L·B²)`.
pub fn sgd_step<T: Real>(obj: &Objective<'_, T>, batch: usize, eps: f64, l: f64) -> Result<SgdStep> {
    let p = obj.problem;
    if batch == 0 || batch > p.n {
        return Err(Error::Domain(format!("batch must lie in [1, {}], got {batch}", p.n)));
    }
    let r = p.d as f64 / p.n as f64;
    let r_prime = p.d as f64 / batch as f64;
    let noise = p.r_tilde * p.r_tilde;
    let b2 = (2.0 + r_prime * (2.0 + noise)) / (2.0 + r * (2.0 + noise));
    let over = p.d >= p.n;
    let record_every = p.n.div_ceil(batch);
    if over {
        let step = 2.0 / (l * b2);
        return Ok(SgdStep { step, l, b2, m: 0.0, step_target: None, step_cap: step, over_parametrized: true, record_every });
    }
    let m = noise * (1.0 - r) * (r_prime - r);
    let cap = 1.0 / (l * b2);
    let target = if m > 0.0 { Some(eps / (l * m)) } else { None };
    let step = target.map_or(cap, |t| t.min(cap));
    Ok(SgdStep { step, l, b2, m, step_target: target, step_cap: cap, over_parametrized: false, record_every })
}

/// Mini-batch SGD with the step of [`sgd_step`]; `L` from power iteration.
pub fn run_sgd<T: Real>(
    obj: &Objective<'_, T>,
    batch: usize,
    eps: T,
    max_iter: usize,
    seed: u64,
) -> Result<(Trajectory<T>, SgdStep)> {
    let l = power_iteration_lambda_max(&obj.problem.a, POWER_ITERS).as_f64();
    let step = sgd_step(obj, batch, eps.as_f64(), l)?;
    let traj = run_sgd_with_step(obj, batch, T::lit(step.step), eps, max_iter, seed, step.record_every)?;
    Ok((Trajectory { lambda_max_est: T::lit(l), ..traj }, step))
}

/// Mini-batch SGD with a fixed step.
///
/// Each step draws `batch` distinct rows uniformly, visits them in increasing
/// order, and moves along the averaged gradient. The full gradient norm is
/// recorded every `record_every` steps; `max_iter` counts optimizer steps.
pub fn run_sgd_with_step<T: Real>(
    obj: &Objective<'_, T>,
    batch: usize,
    step: T,
    eps: T,
    max_iter: usize,
    seed: u64,
    record_every: usize,
) -> Result<Trajectory<T>> {
    let p = obj.problem;
    if batch == 0 || batch > p.n {
        return Err(Error::Domain(format!("batch must lie in [1, {}], got {batch}", p.n)));
    }
    let record_every = record_every.max(1);
    let mut rng = stream(seed, Component::Batches);
    let mut x = p.x0.clone();
    let mut g = vec![T::zero(); p.d];
    let mut norms = Vec::new();
    let mut halted_at = None;
    let limit = T::lit(DIVERGENCE_LIMIT);
    let mut idx: Vec<usize> = Vec::with_capacity(batch);
    for t in 0..=max_iter {
        if t % record_every == 0 {
            obj.gradient_into(&x, &mut g);
            let gn = norm_sq(&g);
            norms.push(gn);
            let k = norms.len() - 1;
            if !gn.is_finite() || gn > limit {
                return Err(Error::Divergence { step: t, prefix: norms.iter().map(|v| v.as_f64()).collect() });
            }
            if k >= 1 && gn <= eps {
                halted_at = Some(k);
                break;
            }
        }
        if t == max_iter {
            break;
        }
        idx.clear();
        if batch == p.n {
            idx.extend(0..p.n);
        } else {
            idx.extend(sample(&mut rng, p.n, batch).iter());
            idx.sort_unstable();
        }
        obj.rows_gradient(idx.iter().copied(), batch, &x, &mut g);
        axpy(-step, &g, &mut x);
    }
    Ok(Trajectory {
        grad_sq_norms: norms,
        halted_at,
        lambda_max_est: T::zero(),
        record_every,
        x_final: x,
    })
}
