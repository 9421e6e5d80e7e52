//! Claim-size distributions.
//!
//! Every family exposes its first five raw moments, the moment generating
//! function on its domain, the Laplace transform on the complex plane (needed
//! by contour inversion), the tail, and the ladder-height quantities built on
//! the equilibrium distribution `H₂(x) = ∫₀ˣ F̄(t) dt / μ₁`:
//!
//! * `H₃ = H₁ * H₂`, the convolution with the diffusion ladder `H₁(x) = 1 − e^{−τx}`,
//!   computed as `H₂(x) − J(x)/μ₁` with `J(x) = ∫₀ˣ e^{−τ(x−t)} F̄(t) dt`;
//! * its density `h₃ = τ J / μ₁`.
//!
//! `J` has a closed form for exponentials, integer-shape gammas and mixtures of
//! exponentials; other shapes fall back to adaptive quadrature.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Result, RuinError};
use crate::quad;

/// Relative distance below which `τ` and a claim rate are treated as equal.
const COINCIDENCE: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-10;
const MAX_INTEGER_SHAPE: f64 = 200.0;

pub trait ClaimDistribution {
    /// Raw moments `μ₁..μ₅`.
    fn moments(&self) -> [f64; 5];

    /// Supremum of the arguments at which the MGF is finite.
    fn mgf_sup(&self) -> f64;

    /// `M(r) − 1` without the cancellation near `r = 0`. Assumes `r < mgf_sup`.
    fn mgf_minus_one_unchecked(&self, r: f64) -> f64;

    /// `E[e^{−sX}]` for complex `s` off the negative branch cut.
    fn laplace_c(&self, s: Complex64) -> Complex64;

    /// `(1 − E[e^{−sX}]) / (s μ₁)`, with the `s → 0` limit handled.
    fn equilibrium_laplace_c(&self, s: Complex64) -> Complex64;

    fn tail(&self, x: f64) -> f64;

    /// Equilibrium CDF `H₂(x)`.
    fn equilibrium_cdf(&self, x: f64) -> f64;

    /// `J(x) = ∫₀ˣ e^{−τ(x−t)} F̄(t) dt`.
    fn ladder_convolution(&self, x: f64, tau: f64) -> f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    fn raw_moment(&self, k: usize) -> Result<f64> {
        match k {
            1..=5 => Ok(self.moments()[k - 1]),
            _ => Err(RuinError::UnsupportedOrder(k)),
        }
    }

    fn mean(&self) -> f64 {
        self.moments()[0]
    }

    fn mgf_minus_one(&self, r: f64) -> Result<f64> {
        let sup = self.mgf_sup();
        if r.is_nan() || r >= sup {
            return Err(RuinError::MgfDomain { r, sup });
        }
        Ok(self.mgf_minus_one_unchecked(r))
    }

    fn mgf(&self, r: f64) -> Result<f64> {
        self.mgf_minus_one(r).map(|m| 1.0 + m)
    }

    fn laplace(&self, s: f64) -> f64 {
        self.laplace_c(Complex64::new(s, 0.0)).re
    }

    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail(x)
    }

    /// `h₂*(s)`; equals 1 at `s = 0`.
    fn equilibrium_laplace(&self, s: f64) -> f64 {
        if s == 0.0 {
            1.0
        } else {
            self.equilibrium_laplace_c(Complex64::new(s, 0.0)).re
        }
    }

    /// `h₂(x) = F̄(x) / μ₁`.
    fn equilibrium_density(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.tail(x) / self.mean()
        }
    }

    /// `H₃(x; τ)`, the CDF of the diffusion ladder plus one claim ladder.
    fn h3_cdf(&self, x: f64, tau: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let v = self.equilibrium_cdf(x) - self.ladder_convolution(x, tau) / self.mean();
        v.clamp(0.0, 1.0)
    }

    fn h3_density(&self, x: f64, tau: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        tau * self.ladder_convolution(x, tau) / self.mean()
    }
}

/// `H₃(x; τ)` by direct quadrature of `∫₀ˣ (1 − e^{−τ(x−t)}) F̄(t)/μ₁ dt`.
pub fn h3_cdf_quadrature<D: ClaimDistribution + ?Sized>(dist: &D, x: f64, tau: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mu = dist.mean();
    quad::integrate(|t| -(-tau * (x - t)).exp_m1() * dist.tail(t) / mu, 0.0, x, QUAD_TOL * 0.1).value
}

/// `∫₀ˣ t^j e^{−βt − τ(x−t)} dt`.
fn weighted_kernel(j: u32, beta: f64, tau: f64, x: f64) -> f64 {
    let a = tau - beta;
    let ax = a * x;
    if ax.abs() <= 1.0 || a.abs() < COINCIDENCE * beta {
        // e^{−τx} Σ_m a^m x^{j+m+1} / (m! (j+m+1)), convergent for every ax.
        let mut coef = x.powi(j as i32 + 1);
        let mut sum = 0.0;
        for m in 0..200u32 {
            let term = coef / f64::from(j + m + 1);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            coef *= ax / f64::from(m + 1);
        }
        return (-tau * x).exp() * sum;
    }
    // j!/(−a)^{j+1} [e^{−τx} − e^{−βx} Σ_{i≤j} (−ax)^i / i!]
    let mut partial = 0.0;
    let mut term = 1.0;
    let mut fact = 1.0;
    for i in 0..=j {
        if i > 0 {
            term *= -ax / f64::from(i);
            fact *= f64::from(i);
        }
        partial += term;
    }
    fact / (-a).powi(j as i32 + 1) * ((-tau * x).exp() - (-beta * x).exp() * partial)
}

/// `P(n, y)` for integer `n`: series below the mode, complement above it.
fn lower_regularized(n: u32, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y < f64::from(n) + 1.0 {
        let mut lead = (-y).exp();
        for i in 1..=n {
            lead *= y / f64::from(i);
        }
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..500u32 {
            term *= y / f64::from(n + m);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        lead * sum
    } else {
        1.0 - GammaClaims::poisson_partial(n, y)
    }
}

/// Exponential claims with rate `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialClaims {
    rate: f64,
}

impl ExponentialClaims {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(RuinError::invalid(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl ClaimDistribution for ExponentialClaims {
    fn moments(&self) -> [f64; 5] {
        let mut m = [0.0; 5];
        let mut acc = 1.0;
        for (k, slot) in m.iter_mut().enumerate() {
            acc *= (k + 1) as f64 / self.rate;
            *slot = acc;
        }
        m
    }

    fn mgf_sup(&self) -> f64 {
        self.rate
    }

    fn mgf_minus_one_unchecked(&self, r: f64) -> f64 {
        r / (self.rate - r)
    }

    fn laplace_c(&self, s: Complex64) -> Complex64 {
        self.rate / (s + self.rate)
    }

    fn equilibrium_laplace_c(&self, s: Complex64) -> Complex64 {
        self.rate / (s + self.rate)
    }

    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-self.rate * x).exp()
        }
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    fn ladder_convolution(&self, x: f64, tau: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            weighted_kernel(0, self.rate, tau, x)
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Exp::new(self.rate).expect("validated rate").sample(rng)
    }
}

/// Gamma claims with shape `k` and rate `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaClaims {
    shape: f64,
    rate: f64,
    integer_shape: Option<u32>,
}

impl GammaClaims {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(RuinError::invalid(format!("gamma shape must be positive, got {shape}")));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(RuinError::invalid(format!("gamma rate must be positive, got {rate}")));
        }
        let integer_shape =
            (shape.fract() == 0.0 && shape <= MAX_INTEGER_SHAPE).then_some(shape as u32);
        Ok(Self { shape, rate, integer_shape })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `Σ_{j<k} e^{−y} y^j / j!` for integer `k`.
    fn poisson_partial(k: u32, y: f64) -> f64 {
        let mut term = (-y).exp();
        let mut sum = 0.0;
        for j in 0..k {
            if j > 0 {
                term *= y / f64::from(j);
            }
            sum += term;
        }
        sum
    }
}

impl ClaimDistribution for GammaClaims {
    fn moments(&self) -> [f64; 5] {
        let mut m = [0.0; 5];
        let mut acc = 1.0;
        for (j, slot) in m.iter_mut().enumerate() {
            acc *= (self.shape + j as f64) / self.rate;
            *slot = acc;
        }
        m
    }

    fn mgf_sup(&self) -> f64 {
        self.rate
    }

    fn mgf_minus_one_unchecked(&self, r: f64) -> f64 {
        (-self.shape * (-r / self.rate).ln_1p()).exp_m1()
    }

    fn laplace_c(&self, s: Complex64) -> Complex64 {
        (-self.shape * (s / self.rate + 1.0).ln()).exp()
    }

    fn equilibrium_laplace_c(&self, s: Complex64) -> Complex64 {
        let z = s / self.rate;
        // (1 − (1+z)^{−k}) / z
        let g = if z.norm() < 0.1 {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut coef = self.shape; // (k)_n / n! at n = 1
            let mut zp = Complex64::new(1.0, 0.0);
            for n in 1..40 {
                let term = zp * coef;
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
                coef *= -(self.shape + n as f64) / (n as f64 + 1.0);
                zp *= z;
            }
            sum
        } else {
            (Complex64::new(1.0, 0.0) - self.laplace_c(s)) / z
        };
        g / (self.rate * self.mean())
    }

    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let y = self.rate * x;
        match self.integer_shape {
            Some(k) => Self::poisson_partial(k, y),
            None => gamma_ur(self.shape, y),
        }
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let y = self.rate * x;
        match self.integer_shape {
            Some(k) => (1..=k).map(|n| lower_regularized(n, y)).sum::<f64>() / f64::from(k),
            None => x * gamma_ur(self.shape, y) / self.mean() + gamma_lr(self.shape + 1.0, y),
        }
    }

    fn ladder_convolution(&self, x: f64, tau: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.integer_shape {
            Some(k) => {
                let mut coef = 1.0;
                let mut sum = 0.0;
                for j in 0..k {
                    if j > 0 {
                        coef *= self.rate / f64::from(j);
                    }
                    sum += coef * weighted_kernel(j, self.rate, tau, x);
                }
                sum
            }
            None => quad::integrate(|t| (-tau * (x - t)).exp() * self.tail(t), 0.0, x, QUAD_TOL * 0.1).value,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, 1.0 / self.rate).expect("validated parameters").sample(rng)
    }
}

/// Finite mixture of exponentials `Σ wᵢ βᵢ e^{−βᵢ x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedExponentialClaims {
    weights: Vec<f64>,
    rates: Vec<f64>,
    moments: [f64; 5],
}

impl MixedExponentialClaims {
    /// Weights must be nonnegative and sum to one within `1e-6`; they are
    /// renormalised to sum to one exactly.
    pub fn new(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != rates.len() {
            return Err(RuinError::invalid(format!(
                "mixture needs matching nonempty weight and rate lists, got {} and {}",
                weights.len(),
                rates.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(RuinError::invalid(format!("mixture weight must be nonnegative, got {w}")));
        }
        if let Some(b) = rates.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(RuinError::invalid(format!("mixture rate must be positive, got {b}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(RuinError::invalid(format!("mixture weights sum to {total}, expected 1")));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut moments = [0.0; 5];
        let mut fact = 1.0;
        for (j, slot) in moments.iter_mut().enumerate() {
            fact *= (j + 1) as f64;
            *slot = fact * weights.iter().zip(&rates).map(|(w, b)| w / b.powi(j as i32 + 1)).sum::<f64>();
        }
        Ok(Self { weights, rates, moments })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().copied().zip(self.rates.iter().copied())
    }
}

impl ClaimDistribution for MixedExponentialClaims {
    fn moments(&self) -> [f64; 5] {
        self.moments
    }

    fn mgf_sup(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn mgf_minus_one_unchecked(&self, r: f64) -> f64 {
        self.components().map(|(w, b)| w * r / (b - r)).sum()
    }

    fn laplace_c(&self, s: Complex64) -> Complex64 {
        self.components().map(|(w, b)| w * b / (s + b)).sum()
    }

    fn equilibrium_laplace_c(&self, s: Complex64) -> Complex64 {
        self.components().map(|(w, b)| w / (s + b)).sum::<Complex64>() / self.mean()
    }

    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.components().map(|(w, b)| w * (-b * x).exp()).sum()
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.components().map(|(w, b)| -w * (-b * x).exp_m1() / b).sum::<f64>() / self.mean()
    }

    fn ladder_convolution(&self, x: f64, tau: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.components().map(|(w, b)| w * weighted_kernel(0, b, tau, x)).sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pick: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = *self.rates.last().expect("nonempty mixture");
        for (w, b) in self.components() {
            acc += w;
            if pick < acc {
                chosen = b;
                break;
            }
        }
        Exp::new(chosen).expect("validated rate").sample(rng)
    }
}

/// The claim families the model and CLI understand.
#[derive(Debug, Clone, PartialEq)]
pub enum Claims {
    Exponential(ExponentialClaims),
    Gamma(GammaClaims),
    Mixture(MixedExponentialClaims),
}

impl Claims {
    pub fn exponential(rate: f64) -> Result<Self> {
        ExponentialClaims::new(rate).map(Claims::Exponential)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        GammaClaims::new(shape, rate).map(Claims::Gamma)
    }

    pub fn mixture(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        MixedExponentialClaims::new(weights, rates).map(Claims::Mixture)
    }

    /// Weights and rates when the law is a (possibly one-term) exponential mixture.
    pub fn as_exponential_mixture(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Claims::Exponential(e) => Some((vec![1.0], vec![e.rate()])),
            Claims::Gamma(g) if g.shape() == 1.0 => Some((vec![1.0], vec![g.rate()])),
            Claims::Mixture(m) => Some((m.weights().to_vec(), m.rates().to_vec())),
            Claims::Gamma(_) => None,
        }
    }
}

macro_rules! delegate {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            Claims::Exponential($d) => $e,
            Claims::Gamma($d) => $e,
            Claims::Mixture($d) => $e,
        }
    };
}

impl ClaimDistribution for Claims {
    fn moments(&self) -> [f64; 5] {
        delegate!(self, d => d.moments())
    }
    fn mgf_sup(&self) -> f64 {
        delegate!(self, d => d.mgf_sup())
    }
    fn mgf_minus_one_unchecked(&self, r: f64) -> f64 {
        delegate!(self, d => d.mgf_minus_one_unchecked(r))
    }
    fn laplace_c(&self, s: Complex64) -> Complex64 {
        delegate!(self, d => d.laplace_c(s))
    }
    fn equilibrium_laplace_c(&self, s: Complex64) -> Complex64 {
        delegate!(self, d => d.equilibrium_laplace_c(s))
    }
    fn tail(&self, x: f64) -> f64 {
        delegate!(self, d => d.tail(x))
    }
    fn equilibrium_cdf(&self, x: f64) -> f64 {
        delegate!(self, d => d.equilibrium_cdf(x))
    }
    fn ladder_convolution(&self, x: f64, tau: f64) -> f64 {
        delegate!(self, d => d.ladder_convolution(x, tau))
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        delegate!(self, d => d.sample(rng))
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Claims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claims::Exponential(e) => write!(f, "exp:rate={}", e.rate()),
            Claims::Gamma(g) => write!(f, "gamma:shape={},rate={}", g.shape(), g.rate()),
            Claims::Mixture(m) => write!(f, "mexp:w={};b={}", join(m.weights()), join(m.rates())),
        }
    }
}

fn parse_number(key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| RuinError::Parse(format!("`{key}` expects a number, got `{raw}`")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(|v| parse_number(key, v)).collect()
}

impl FromStr for Claims {
    type Err = RuinError;

    /// Parses `exp:rate=1`, `gamma:shape=2,rate=2` or `mexp:w=..,..;b=..,..`.
    fn from_str(spec: &str) -> Result<Self> {
        let (family, params) = spec
            .trim()
            .split_once(':')
            .ok_or_else(|| RuinError::Parse(format!("claims spec `{spec}` lacks `family:`")))?;
        match family.trim() {
            "exp" => {
                let mut rate = None;
                for pair in params.split(',') {
                    match pair.split_once('=') {
                        Some((k, v)) if k.trim() == "rate" => rate = Some(parse_number("rate", v)?),
                        _ => return Err(RuinError::Parse(format!("unexpected exp parameter `{pair}`"))),
                    }
                }
                let rate = rate.ok_or_else(|| RuinError::Parse("exp needs rate=".into()))?;
                Claims::exponential(rate)
            }
            "gamma" => {
                let (mut shape, mut rate) = (None, None);
                for pair in params.split(',') {
                    match pair.split_once('=').map(|(k, v)| (k.trim(), v)) {
                        Some(("shape", v)) => shape = Some(parse_number("shape", v)?),
                        Some(("rate", v)) => rate = Some(parse_number("rate", v)?),
                        _ => return Err(RuinError::Parse(format!("unexpected gamma parameter `{pair}`"))),
                    }
                }
                match (shape, rate) {
                    (Some(k), Some(b)) => Claims::gamma(k, b),
                    _ => Err(RuinError::Parse("gamma needs shape= and rate=".into())),
                }
            }
            "mexp" => {
                let (mut w, mut b) = (None, None);
                for part in params.split(';') {
                    match part.split_once('=').map(|(k, v)| (k.trim(), v)) {
                        Some(("w", v)) => w = Some(parse_list("w", v)?),
                        Some(("b", v)) => b = Some(parse_list("b", v)?),
                        _ => return Err(RuinError::Parse(format!("unexpected mexp parameter `{part}`"))),
                    }
                }
                match (w, b) {
                    (Some(w), Some(b)) => Claims::mixture(w, b),
                    _ => Err(RuinError::Parse("mexp needs w= and b=".into())),
                }
            }
            other => Err(RuinError::Parse(format!("unknown claim family `{other}`"))),
        }
    }
}
