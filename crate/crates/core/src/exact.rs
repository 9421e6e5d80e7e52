//! Ruin probabilities by numerical inversion of the Pollaczek–Khinchine
//! transform, and the split into ruin by oscillation and ruin by claim.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::claims::ClaimDistribution;
use crate::curve::RuinCurve;
use crate::error::{Result, RuinError};
use crate::model::PerturbedModel;

/// Numerical inverse Laplace transform used for `Ψ(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Inversion {
    /// Fixed Talbot contour.
    #[default]
    Talbot,
    /// Abate–Whitt trapezoid rule on the Bromwich line with Euler summation.
    Euler,
}

const TALBOT_NODES: usize = 20;
const TALBOT_CHECK_NODES: usize = 26;
const TALBOT_AGREEMENT: f64 = 1e-8;
const EULER_AGREEMENT: f64 = 1e-6;

/// Fixed Talbot inversion of `f` at `t > 0` with `m` contour nodes.
pub fn talbot<F: Fn(Complex64) -> Complex64>(f: F, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut sum = 0.5 * f(Complex64::new(r, 0.0)).re * (r * t).exp();
    for k in 1..m {
        let theta = k as f64 * PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        sum += ((s * t).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    r / m as f64 * sum
}

/// Abate–Whitt Euler inversion: `n` plain terms followed by an `m`-fold
/// binomial average of the partial sums.
pub fn euler<F: Fn(Complex64) -> Complex64>(f: F, t: f64, n: usize, m: usize) -> f64 {
    const A: f64 = 18.4;
    let scale = (A / 2.0).exp() / t;
    let term = |k: usize| {
        let s = Complex64::new(A / (2.0 * t), k as f64 * PI / t);
        let v = f(s).re;
        if k == 0 {
            0.5 * v
        } else if k % 2 == 1 {
            -v
        } else {
            v
        }
    };
    let mut partial = Vec::with_capacity(m + 1);
    let mut acc: f64 = (0..=n).map(term).sum();
    partial.push(acc);
    for k in 1..=m {
        acc += term(n + k);
        partial.push(acc);
    }
    let mut binom = 1.0;
    let mut avg = 0.0;
    for (k, p) in partial.iter().enumerate() {
        if k > 0 {
            binom *= (m - k + 1) as f64 / k as f64;
        }
        avg += binom * p;
    }
    scale * avg / 2f64.powi(m as i32)
}

/// `Ψ(u)` with the default contour.
pub fn exact_ruin(model: &PerturbedModel, u: f64) -> Result<f64> {
    exact_ruin_with(model, u, Inversion::Talbot)
}

pub fn exact_ruin_with(model: &PerturbedModel, u: f64, method: Inversion) -> Result<f64> {
    if !(u.is_finite() && u >= 0.0) {
        return Err(RuinError::invalid(format!("initial surplus must be nonnegative, got {u}")));
    }
    if u == 0.0 {
        return Ok(if model.sigma() > 0.0 { 1.0 } else { 1.0 - model.q() });
    }
    let f = |s: Complex64| model.pk_transform_c(s);
    let (first, second, tol) = match method {
        Inversion::Talbot => (talbot(f, u, TALBOT_NODES), talbot(f, u, TALBOT_CHECK_NODES), TALBOT_AGREEMENT),
        Inversion::Euler => (euler(f, u, 15, 11), euler(f, u, 20, 11), EULER_AGREEMENT),
    };
    if !first.is_finite() || (first - second).abs() > tol {
        return Err(RuinError::InversionFailed { u, first, second });
    }
    Ok(first.clamp(0.0, 1.0))
}

/// `Ψ` on a grid, evaluated in parallel.
pub fn exact_curve(model: &PerturbedModel, grid: &[f64]) -> Result<RuinCurve> {
    let values = grid.par_iter().map(|&u| exact_ruin(model, u)).collect::<Result<Vec<_>>>()?;
    RuinCurve::new("exact", grid.iter().copied().zip(values).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionCurves {
    /// Ruin caused by the diffusion (zero deficit).
    pub psi1: RuinCurve,
    /// Ruin caused by a claim (positive deficit).
    pub psi2: RuinCurve,
}

impl DecompositionCurves {
    pub fn total(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.psi1.points().iter().zip(self.psi2.points()).map(|(a, b)| (a.0, a.1 + b.1))
    }
}

/// Five-point Gauss–Legendre rule on `[0, 1]`.
const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_00, 0.118_463_442_528_094_54),
    (0.230_765_344_947_158_45, 0.239_314_335_249_683_23),
    (0.5, 0.284_444_444_444_444_46),
    (0.769_234_655_052_841_6, 0.239_314_335_249_683_23),
    (0.953_089_922_969_332, 0.118_463_442_528_094_54),
];

/// Solves the two renewal equations
/// `Ψ₁ = 1 − H₁ + (1−q) Ψ₁ * h₃` and `Ψ₂ = (1−q)(H₁ − H₃) + (1−q) Ψ₂ * h₃`
/// on `0, step, …, u_max` by product-trapezoid marching: `Ψ` is linear
/// between nodes and `h₃` is integrated against the hat functions.
pub fn decompose_ruin(model: &PerturbedModel, u_max: f64, step: f64) -> Result<DecompositionCurves> {
    if !(step.is_finite() && step > 0.0) || !(u_max.is_finite() && u_max > 0.0) {
        return Err(RuinError::invalid(format!("need u_max > 0 and step > 0, got {u_max} and {step}")));
    }
    let tau = model.tau()?;
    if tau * step >= 1.0 {
        return Err(RuinError::invalid(format!("step {step} too coarse for tau = {tau}; need tau*step < 1")));
    }
    let q = model.q();
    let claims = model.claims();
    let n = (u_max / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();

    // Cell j = [x_j, x_{j+1}]: a_j weights the left node, b_j the right one.
    let (a, b): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|j| {
            GAUSS5.iter().fold((0.0, 0.0), |(a, b), &(t, w)| {
                let h = (1.0 - q) * step * w * claims.h3_density((j as f64 + t) * step, tau);
                (a + (1.0 - t) * h, b + t * h)
            })
        })
        .unzip();

    let h1: Vec<f64> = grid.iter().map(|&x| -(-tau * x).exp_m1()).collect();
    let f1: Vec<f64> = h1.iter().map(|h| 1.0 - h).collect();
    let f2: Vec<f64> = grid.iter().zip(&h1).map(|(&x, h)| (1.0 - q) * (h - claims.h3_cdf(x, tau))).collect();

    let march = |forcing: &[f64]| -> Vec<f64> {
        let mut psi = vec![0.0; forcing.len()];
        psi[0] = forcing[0];
        for i in 1..forcing.len() {
            let mut conv = b[i - 1] * psi[0];
            for k in 1..i {
                conv += (a[k] + b[k - 1]) * psi[i - k];
            }
            psi[i] = (forcing[i] + conv) / (1.0 - a[0]);
        }
        psi
    };
    let (psi1, psi2) = rayon::join(|| march(&f1), || march(&f2));
    Ok(DecompositionCurves {
        psi1: RuinCurve::new("psi1", grid.iter().copied().zip(psi1).collect())?,
        psi2: RuinCurve::new("psi2", grid.iter().copied().zip(psi2).collect())?,
    })
}
