//! Random data matrices, signal/noise/initial vectors, and problem instances.
//!
//! Every generator is a pure function of its arguments and a 64-bit seed.
//! Each random component reads its own stream of that seed (see
//! [`crate::rng`]), so e.g. changing the noise level never changes `A`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::gauss_hermite_normal;
use crate::rng::{stream, Component};
use crate::scalar::Real;

/// Gauss–Hermite order used for the activation's Gaussian mean.
const HERMITE_ORDER: usize = 64;

/// Law of the entries of an isotropic data matrix, standardized to mean 0 and variance 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    /// Standard normal.
    #[default]
    Gaussian,
    /// Symmetric ±1.
    Bernoulli,
    /// Student's t with 5 degrees of freedom scaled by `√(3/5)`.
    #[serde(rename = "student_t_5")]
    StudentT5,
}

impl EntryDistribution {
    /// Snake-case name used in configs and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            EntryDistribution::Gaussian => "gaussian",
            EntryDistribution::Bernoulli => "bernoulli",
            EntryDistribution::StudentT5 => "student_t_5",
        }
    }

    /// Draws `count` standardized samples.
    fn fill<R: Rng>(self, rng: &mut R, count: usize) -> Vec<f64> {
        match self {
            EntryDistribution::Gaussian => (0..count).map(|_| StandardNormal.sample(rng)).collect(),
            EntryDistribution::Bernoulli => {
                (0..count).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
            }
            EntryDistribution::StudentT5 => {
                let t = StudentT::new(5.0).expect("5 degrees of freedom is valid");
                let scale = (3.0f64 / 5.0).sqrt();
                (0..count).map(|_| scale * t.sample(rng)).collect()
            }
        }
    }
}

impl std::fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Activation of the one-hidden-layer model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `1/(1 + e^{−x})`.
    #[default]
    Sigmoid,
    /// `log(1 + eˣ)`.
    Softplus,
}

impl Activation {
    /// Evaluates the activation.
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
        }
    }

    /// Gaussian mean `E[g(sZ)]`, `Z ~ N(0, 1)`, by Gauss–Hermite quadrature.
    pub fn gaussian_mean(self, s: f64) -> f64 {
        let (nodes, weights) = gauss_hermite_normal(HERMITE_ORDER);
        nodes.iter().zip(&weights).map(|(&z, &w)| w * self.apply(s * z)).sum()
    }
}

fn check_sigma<T: Real>(name: &str, sigma: T) -> Result<()> {
    if sigma > T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {sigma}")))
    }
}

fn checked_count(n: usize, d: usize) -> Result<usize> {
    if n == 0 || d == 0 {
        return Err(Error::Size(format!("dimensions must be positive, got {n}x{d}")));
    }
    n.checked_mul(d)
        .ok_or_else(|| Error::Size(format!("{n}x{d} overflows the index type")))
}

/// `n × d` matrix with i.i.d. entries of variance `σ²`.
pub fn gen_isotropic<T: Real>(n: usize, d: usize, dist: EntryDistribution, sigma: T, seed: u64) -> Result<Matrix<T>> {
    let count = checked_count(n, d)?;
    check_sigma("sigma", sigma)?;
    let mut rng = stream(seed, Component::Matrix);
    let s = sigma.as_f64();
    let data = dist.fill(&mut rng, count).into_iter().map(|v| T::lit(s * v)).collect();
    Matrix::from_row_major(n, d, data)
}

/// `n × d` matrix `W Σ^{1/2}` with `W` standard Gaussian and `Σ` diagonal.
///
/// `profile` lists eigenvalues of `Σ`; it is stretched to length `d` by
/// block repetition, so `[1, 4]` gives the first half of the columns
/// variance 1 and the second half variance 4.
pub fn gen_correlated<T: Real>(n: usize, d: usize, profile: &[T], seed: u64) -> Result<Matrix<T>> {
    let count = checked_count(n, d)?;
    if profile.is_empty() {
        return Err(Error::Domain("eigenvalue profile is empty".into()));
    }
    if let Some(bad) = profile.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
        return Err(Error::Domain(format!("eigenvalue profile has invalid entry {bad}")));
    }
    let scales: Vec<f64> = (0..d)
        .map(|j| profile[j * profile.len() / d].as_f64().sqrt())
        .collect();
    let mut rng = stream(seed, Component::Matrix);
    let w = EntryDistribution::Gaussian.fill(&mut rng, count);
    let data = w
        .chunks_exact(d)
        .flat_map(|row| row.iter().zip(&scales).map(|(&v, &s)| T::lit(v * s)))
        .collect();
    Matrix::from_row_major(n, d, data)
}

/// `n × d` random-features matrix `g_c([WY]/√m)` with `W` (`n × m`) and `Y`
/// (`m × d`) Gaussian of standard deviations `σ_w`, `σ_y`, and `g_c` the
/// activation minus its Gaussian mean at scale `σ_wσ_y`.
pub fn gen_one_hidden_layer<T: Real>(
    n: usize,
    m: usize,
    d: usize,
    activation: Activation,
    sigma_w: T,
    sigma_y: T,
    seed: u64,
) -> Result<Matrix<T>> {
    checked_count(n, d)?;
    checked_count(n, m)?;
    checked_count(m, d)?;
    check_sigma("sigma_w", sigma_w)?;
    check_sigma("sigma_y", sigma_y)?;
    let (sw, sy) = (sigma_w.as_f64(), sigma_y.as_f64());
    let center = activation.gaussian_mean(sw * sy);
    let mut rw = stream(seed, Component::HiddenWeights);
    let mut ry = stream(seed, Component::HiddenInputs);
    let w = nalgebra::DMatrix::from_row_iterator(
        n,
        m,
        EntryDistribution::Gaussian.fill(&mut rw, n * m).into_iter().map(|v| sw * v),
    );
    let y = nalgebra::DMatrix::from_row_iterator(
        m,
        d,
        EntryDistribution::Gaussian.fill(&mut ry, m * d).into_iter().map(|v| sy * v),
    );
    let z = w * y;
    let scale = 1.0 / (m as f64).sqrt();
    Matrix::from_fn(n, d, |i, j| T::lit(activation.apply(z[(i, j)] * scale) - center))
}

/// Initial point, signal and noise of a least-squares instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Vectors<T> {
    /// Initial point `x₀`.
    pub x0: Vec<T>,
    /// Signal `x̃`.
    pub x_tilde: Vec<T>,
    /// Noise `η`.
    pub eta: Vec<T>,
}

/// `x̃ ~ N(0, I/d)`, `x₀ = x̃ + N(0, R²I/d)`, `η ~ N(0, R̃²I_n)`.
pub fn gen_vectors<T: Real>(d: usize, n: usize, big_r: T, r_tilde: T, seed: u64) -> Result<Vectors<T>> {
    checked_count(n, d)?;
    if !(big_r >= T::zero()) || !(r_tilde >= T::zero()) {
        return Err(Error::Domain("R and R_tilde must be nonnegative".into()));
    }
    let x_tilde = gaussian_vector(seed, Component::Signal, d, 1.0 / (d as f64).sqrt());
    let offset = gaussian_vector::<T>(seed, Component::Init, d, big_r.as_f64() / (d as f64).sqrt());
    let x0 = x_tilde.iter().zip(&offset).map(|(&a, &b)| a + b).collect();
    let eta = noise_vector(seed, n, r_tilde);
    Ok(Vectors { x0, x_tilde, eta })
}

fn noise_vector<T: Real>(seed: u64, n: usize, r_tilde: T) -> Vec<T> {
    if r_tilde == T::zero() {
        vec![T::zero(); n]
    } else {
        gaussian_vector(seed, Component::Noise, n, r_tilde.as_f64())
    }
}

fn gaussian_vector<T: Real>(seed: u64, component: Component, len: usize, sd: f64) -> Vec<T> {
    let mut rng = stream(seed, component);
    EntryDistribution::Gaussian
        .fill(&mut rng, len)
        .into_iter()
        .map(|v| T::lit(sd * v))
        .collect()
}

/// Independent initial point and signal of the ridge model.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeVectors<T> {
    /// `x₀ ~ N(0, Ṙ²I/d)`.
    pub x0: Vec<T>,
    /// `x̃ ~ N(0, R̂²I/d)`.
    pub x_tilde: Vec<T>,
    /// Magnitude `Ṙ` of `x₀`.
    pub r_dot: T,
    /// Magnitude `R̂` of `x̃`.
    pub r_hat: T,
}

/// Samples `x₀` and `x̃` from independent streams with variances `Ṙ²/d`, `R̂²/d`.
pub fn gen_ridge_vectors<T: Real>(d: usize, r_dot: T, r_hat: T, seed: u64) -> Result<RidgeVectors<T>> {
    if d == 0 {
        return Err(Error::Size("d must be positive".into()));
    }
    if !(r_dot >= T::zero()) || !(r_hat >= T::zero()) {
        return Err(Error::Domain("ridge magnitudes must be nonnegative".into()));
    }
    let sd = 1.0 / (d as f64).sqrt();
    Ok(RidgeVectors {
        x0: gaussian_vector(seed, Component::Init, d, r_dot.as_f64() * sd),
        x_tilde: gaussian_vector(seed, Component::Signal, d, r_hat.as_f64() * sd),
        r_dot,
        r_hat,
    })
}

/// Data model of a configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// I.i.d. entries.
    #[default]
    Isotropic,
    /// Gaussian rows with diagonal covariance profile.
    Correlated,
    /// Random features of a one-hidden-layer network.
    OneHidden,
}

/// JSON description of a data model and its vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Data model.
    #[serde(default)]
    pub model: ModelKind,
    /// Entry law of the isotropic model.
    #[serde(default)]
    pub dist: EntryDistribution,
    /// Number of samples.
    pub n: usize,
    /// Number of features; derived as `⌊r·n⌋` when absent.
    #[serde(default)]
    pub d: Option<usize>,
    /// Target ratio `d/n`, used when `d` is absent.
    #[serde(default)]
    pub r: Option<f64>,
    /// Entry standard deviation.
    #[serde(default = "one")]
    pub sigma: f64,
    /// Noise magnitude `R̃`.
    #[serde(rename = "R_tilde", alias = "r_tilde", default)]
    pub r_tilde: f64,
    /// Signal magnitude `R`; when absent `x₀` and `x̃` are independent
    /// `N(0, I/d)` and `R = √2`.
    #[serde(rename = "R", alias = "big_r", default)]
    pub big_r: Option<f64>,
    /// Instance seed.
    #[serde(default)]
    pub seed: u64,
    /// Activation of the one-hidden-layer model.
    #[serde(default)]
    pub activation: Option<Activation>,
    /// Hidden width of the one-hidden-layer model.
    #[serde(default)]
    pub m: Option<usize>,
    /// Covariance eigenvalue profile of the correlated model.
    #[serde(default)]
    pub sigma_profile: Option<Vec<f64>>,
    /// Weight scale of the one-hidden-layer model.
    #[serde(default)]
    pub sigma_w: Option<f64>,
    /// Input scale of the one-hidden-layer model.
    #[serde(default)]
    pub sigma_y: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    /// Isotropic configuration with `d` features and noise `r_tilde`.
    pub fn isotropic(n: usize, d: usize, dist: EntryDistribution, r_tilde: f64, seed: u64) -> Self {
        Self {
            model: ModelKind::Isotropic,
            dist,
            n,
            d: Some(d),
            r: None,
            sigma: 1.0,
            r_tilde,
            big_r: None,
            seed,
            activation: None,
            m: None,
            sigma_profile: None,
            sigma_w: None,
            sigma_y: None,
        }
    }

    /// Number of features: `d` if given, else `⌊r·n⌋`.
    pub fn features(&self) -> Result<usize> {
        match (self.d, self.r) {
            (Some(d), _) if d > 0 => Ok(d),
            (Some(_), _) => Err(Error::Config("d must be positive".into())),
            (None, Some(r)) if r > 0.0 && r.is_finite() => {
                let d = (r * self.n as f64).floor() as usize;
                if d == 0 {
                    Err(Error::Config(format!("r = {r} with n = {} gives d = 0", self.n)))
                } else {
                    Ok(d)
                }
            }
            (None, Some(r)) => Err(Error::Config(format!("r must be positive, got {r}"))),
            (None, None) => Err(Error::Config("either d or r is required".into())),
        }
    }

    /// Target ratio: `r` if given, else `d/n`.
    pub fn ratio(&self) -> Result<f64> {
        match self.r {
            Some(r) => Ok(r),
            None => Ok(self.features()? as f64 / self.n as f64),
        }
    }
}

/// One sampled least-squares problem `b = A x̃ + η`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance<T> {
    /// `n × d` data matrix.
    pub a: Matrix<T>,
    /// Targets.
    pub b: Vec<T>,
    /// Initial point.
    pub x0: Vec<T>,
    /// Signal.
    pub x_tilde: Vec<T>,
    /// Noise.
    pub eta: Vec<T>,
    /// Samples.
    pub n: usize,
    /// Features.
    pub d: usize,
    /// Requested ratio `d/n`.
    pub r_target: f64,
    /// Signal magnitude `R`.
    pub big_r: f64,
    /// Noise magnitude `R̃`.
    pub r_tilde: f64,
    /// Entry standard deviation of the data model.
    pub sigma: f64,
    /// Seed the instance was built from.
    pub seed: u64,
}

impl<T: Real> ProblemInstance<T> {
    /// Assembles an instance from its parts, computing `b = A x̃ + η`.
    pub fn from_parts(a: Matrix<T>, vectors: Vectors<T>, meta: InstanceMeta) -> Result<Self> {
        let (n, d) = (a.rows(), a.cols());
        if vectors.x0.len() != d || vectors.x_tilde.len() != d || vectors.eta.len() != n {
            return Err(Error::Size("vector lengths do not match the matrix".into()));
        }
        let mut b = vec![T::zero(); n];
        a.mul_vec(&vectors.x_tilde, &mut b);
        b.iter_mut().zip(&vectors.eta).for_each(|(bi, &e)| *bi = *bi + e);
        Ok(Self {
            a,
            b,
            x0: vectors.x0,
            x_tilde: vectors.x_tilde,
            eta: vectors.eta,
            n,
            d,
            r_target: meta.r_target,
            big_r: meta.big_r,
            r_tilde: meta.r_tilde,
            sigma: meta.sigma,
            seed: meta.seed,
        })
    }
}

/// Metadata recorded with an instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceMeta {
    /// Requested ratio.
    pub r_target: f64,
    /// Signal magnitude.
    pub big_r: f64,
    /// Noise magnitude.
    pub r_tilde: f64,
    /// Entry standard deviation.
    pub sigma: f64,
    /// Seed.
    pub seed: u64,
}

/// Samples the instance described by `config`.
pub fn build_problem<T: Real>(config: &ModelConfig) -> Result<ProblemInstance<T>> {
    let n = config.n;
    let d = config.features()?;
    let seed = config.seed;
    if !(config.r_tilde >= 0.0) {
        return Err(Error::Config(format!("R_tilde must be nonnegative, got {}", config.r_tilde)));
    }
    let a = match config.model {
        ModelKind::Isotropic => gen_isotropic(n, d, config.dist, T::lit(config.sigma), seed)?,
        ModelKind::Correlated => {
            let profile: Vec<T> = config
                .sigma_profile
                .as_ref()
                .ok_or_else(|| Error::Config("correlated model needs sigma_profile".into()))?
                .iter()
                .map(|&v| T::lit(v))
                .collect();
            gen_correlated(n, d, &profile, seed)?
        }
        ModelKind::OneHidden => {
            let m = config
                .m
                .ok_or_else(|| Error::Config("one_hidden model needs m".into()))?;
            gen_one_hidden_layer(
                n,
                m,
                d,
                config.activation.unwrap_or_default(),
                T::lit(config.sigma_w.unwrap_or(1.0)),
                T::lit(config.sigma_y.unwrap_or(1.0)),
                seed,
            )?
        }
    };
    let r_tilde = T::lit(config.r_tilde);
    let (vectors, big_r) = match config.big_r {
        Some(big_r) => (gen_vectors(d, n, T::lit(big_r), r_tilde, seed)?, big_r),
        None => {
            let sd = 1.0 / (d as f64).sqrt();
            let v = Vectors {
                x0: gaussian_vector(seed, Component::Init, d, sd),
                x_tilde: gaussian_vector(seed, Component::Signal, d, sd),
                eta: noise_vector(seed, n, r_tilde),
            };
            (v, std::f64::consts::SQRT_2)
        }
    };
    let meta = InstanceMeta {
        r_target: config.ratio()?,
        big_r,
        r_tilde: config.r_tilde,
        sigma: config.sigma,
        seed,
    };
    ProblemInstance::from_parts(a, vectors, meta)
}
