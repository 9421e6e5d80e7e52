//! Closed-form approximations of `Ψ(u)` and the exact formula for
//! mixtures of exponential claims.

use nalgebra::DMatrix;

use crate::claims::ClaimDistribution;
use crate::coefficients::renyi_coefficient;
use crate::error::{Result, RuinError};
use crate::model::PerturbedModel;

/// De Vylder's four-moment fit: a model with exponential(β) claims whose
/// surplus process shares the first four central moments with the original.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeVylderParams {
    pub lambda_star: f64,
    pub c_star: f64,
    pub sigma_star_sq: f64,
    pub beta: f64,
    pub r1: f64,
    pub r2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl DeVylderParams {
    pub fn ruin(&self, u: f64) -> f64 {
        self.c1 * (-self.r1 * u).exp() + self.c2 * (-self.r2 * u).exp()
    }
}

pub fn de_vylder_fit(model: &PerturbedModel) -> Result<DeVylderParams> {
    let m = model.claims().moments();
    let (mu1, mu2, mu3, mu4) = (m[0], m[1], m[2], m[3]);
    let lambda = model.lambda();
    let lambda_star = 32.0 * lambda * mu3.powi(4) / (3.0 * mu4.powi(3));
    let beta = 4.0 * mu3 / mu4;
    // Equal drift: c* − λ*/β = c − λμ₁.
    let c_star = model.premium() - lambda * mu1 + lambda_star / beta;
    let sigma_star_sq = lambda * (mu2 - 4.0 * mu3 * mu3 / (3.0 * mu4)) + model.sigma().powi(2);
    if !(sigma_star_sq > 0.0) {
        return Err(RuinError::FitInfeasible { sigma_star_sq });
    }
    let s2 = sigma_star_sq;
    let b = 2.0 * c_star + beta * s2;
    let disc = 4.0 * (c_star * c_star - beta * c_star * s2 + 2.0 * lambda_star * s2) + beta * beta * s2 * s2;
    if !(disc > 0.0) {
        return Err(RuinError::DegenerateRoots(format!("De Vylder discriminant {disc}")));
    }
    let root = disc.sqrt();
    let r1 = (b + root) / (2.0 * s2);
    // Product of the roots is 2(c*β − λ*)/σ*²; this avoids cancellation in r₂.
    let r2 = 2.0 * (c_star * beta - lambda_star) / (s2 * r1);
    if !(r2 > 0.0) {
        return Err(RuinError::DegenerateRoots(format!("De Vylder roots {r1}, {r2}")));
    }
    let c1 = (r1 - beta) * r2 / (beta * (r1 - r2));
    let c2 = (r2 - beta) * r1 / (beta * (r2 - r1));
    Ok(DeVylderParams { lambda_star, c_star, sigma_star_sq, beta, r1, r2, c1, c2 })
}

pub fn psi_4me(model: &PerturbedModel, u: f64) -> Result<f64> {
    Ok(de_vylder_fit(model)?.ruin(u))
}

/// `Ψ(u) = Σ C_k e^{−r_k u}` for exponential-mixture claims.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSolution {
    pub roots: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl MixtureSolution {
    pub fn ruin(&self, u: f64) -> f64 {
        self.roots.iter().zip(&self.coefficients).map(|(r, c)| c * (-r * u).exp()).sum()
    }
}

/// Product of `(x − a)` over `roots`, as monomial coefficients (constant first).
fn poly_from_roots(roots: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut p = vec![1.0];
    for a in roots {
        let mut next = vec![0.0; p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= a * c;
        }
        p = next;
    }
    p
}

fn horner(p: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for c in p.iter().rev() {
        d = d * x + v;
        v = v * x + c;
    }
    (v, d)
}

/// Roots and coefficients of the exact solution for claims `Σ wᵢ Exp(βᵢ)`.
pub fn mixture_solution(lambda: f64, c: f64, sigma: f64, weights: &[f64], rates: &[f64]) -> Result<MixtureSolution> {
    if !(sigma > 0.0) {
        return Err(RuinError::NoDiffusion("the exponential-mixture formula"));
    }
    if weights.len() != rates.len() || weights.is_empty() {
        return Err(RuinError::invalid("mixture weights and rates must match"));
    }
    // Merge components sharing a rate; the formula needs distinct poles.
    let mut comps: Vec<(f64, f64)> = Vec::new();
    for (&w, &b) in weights.iter().zip(rates) {
        if w == 0.0 {
            continue;
        }
        match comps.iter_mut().find(|(_, r)| (r - b).abs() < 1e-9 * b) {
            Some(slot) => slot.0 += w,
            None => comps.push((w, b)),
        }
    }
    let n = comps.len();
    let s2 = sigma * sigma;
    // Cleared denominators: −2λ Σ_j w_j Π_{i≠j}(r − βᵢ) − (2c − σ²r) Π_i (r − βᵢ) = 0.
    let full = poly_from_roots(comps.iter().map(|c| c.1));
    let mut poly = vec![0.0; n + 2];
    for (j, (w, _)) in comps.iter().enumerate() {
        let part = poly_from_roots(comps.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, c)| c.1));
        for (k, v) in part.iter().enumerate() {
            poly[k] -= 2.0 * lambda * w * v;
        }
    }
    for (k, v) in full.iter().enumerate() {
        poly[k] -= 2.0 * c * v;
        poly[k + 1] += s2 * v;
    }
    let degree = n + 1;
    let lead = poly[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -poly[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let mut roots = Vec::with_capacity(degree);
    for z in eig.iter() {
        if z.im.abs() > 1e-8 * z.re.abs().max(1e-12) {
            return Err(RuinError::DegenerateRoots(format!("complex root {z}")));
        }
        let mut r = z.re;
        for _ in 0..8 {
            let (v, d) = horner(&poly, r);
            if d == 0.0 {
                break;
            }
            let step = v / d;
            r -= step;
            if step.abs() <= 1e-16 * r.abs() {
                break;
            }
        }
        roots.push(r);
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    if roots.iter().any(|r| !(*r > 0.0)) {
        return Err(RuinError::DegenerateRoots(format!("nonpositive root in {roots:?}")));
    }
    if roots.windows(2).any(|w| (w[0] - w[1]).abs() <= 1e-9 * w[0]) {
        return Err(RuinError::DegenerateRoots(format!("repeated root in {roots:?}")));
    }
    let coefficients = (0..degree)
        .map(|k| {
            let rk = roots[k];
            let a: f64 = comps.iter().map(|(_, b)| (rk - b) / b).product();
            let b: f64 = (0..degree).filter(|&j| j != k).map(|j| roots[j] / (rk - roots[j])).product();
            a * b
        })
        .collect();
    Ok(MixtureSolution { roots, coefficients })
}

/// Exact `Ψ(u)` for a model whose claims are a mixture of exponentials.
pub fn mixture_exact_ruin(model: &PerturbedModel, u: f64) -> Result<f64> {
    let (w, b) = model
        .claims()
        .as_exponential_mixture()
        .ok_or_else(|| RuinError::invalid("claims are not a mixture of exponentials"))?;
    Ok(mixture_solution(model.lambda(), model.premium(), model.sigma(), &w, &b)?.ruin(u))
}

/// Source of a single-exponential approximant `A e^{−βu}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxOrder {
    Ren2,
    Pkdv3,
    Pkdv4,
    Pkdv5,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpApproximant {
    pub amplitude: f64,
    pub decay: f64,
    pub order_tag: ApproxOrder,
}

impl ExpApproximant {
    pub fn ruin(&self, u: f64) -> f64 {
        self.amplitude * (-self.decay * u).exp()
    }
}

pub fn renyi_params(model: &PerturbedModel) -> ExpApproximant {
    ExpApproximant { amplitude: 1.0 - model.q(), decay: renyi_coefficient(model), order_tag: ApproxOrder::Ren2 }
}

/// `(1 − q) e^{−R₀u}`.
pub fn renyi_approx(model: &PerturbedModel, u: f64) -> f64 {
    renyi_params(model).ruin(u)
}

/// One-exponential Padé fit of the transform matching moments up to `order`.
pub fn pkdv_params(model: &PerturbedModel, order: usize) -> Result<ExpApproximant> {
    let m = model.claims().moments();
    let lambda = model.lambda();
    let eta2 = model.sigma().powi(2) + lambda * m[1];
    let rho = model.rho();
    let (num_a, num_b, den, tag) = match order {
        3 => {
            let den = 3.0 * eta2 * eta2 + 2.0 * rho * lambda * m[2];
            (3.0 * eta2 * eta2, 6.0 * rho * eta2, den, ApproxOrder::Pkdv3)
        }
        4 => {
            let den = 2.0 * eta2 * m[2] + rho * m[3];
            (2.0 * eta2 * m[2], 4.0 * rho * m[2], den, ApproxOrder::Pkdv4)
        }
        5 => {
            let den = 5.0 * eta2 * m[3] + 2.0 * rho * m[4];
            (5.0 * eta2 * m[3], 10.0 * rho * m[3], den, ApproxOrder::Pkdv5)
        }
        other => return Err(RuinError::UnsupportedOrder(other)),
    };
    Ok(ExpApproximant { amplitude: num_a / den, decay: num_b / den, order_tag: tag })
}

pub fn pkdv_approx(model: &PerturbedModel, order: usize, u: f64) -> Result<f64> {
    Ok(pkdv_params(model, order)?.ruin(u))
}

/// Two-point Padé approximant `(k₁ cosh ζu + k₂ sinh ζu) e^{−ηu}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointPadeParams {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub k1: f64,
    pub k2: f64,
    pub zeta: f64,
    pub eta: f64,
}

impl TwoPointPadeParams {
    pub fn ruin(&self, u: f64) -> f64 {
        0.5 * (self.k1 + self.k2) * ((self.zeta - self.eta) * u).exp()
            + 0.5 * (self.k1 - self.k2) * (-(self.zeta + self.eta) * u).exp()
    }
}

pub fn two_point_pade_params(model: &PerturbedModel) -> Result<TwoPointPadeParams> {
    let tau = model.tau()?;
    let q = model.q();
    let m = model.claims().moments();
    let w = (1.0 - q) * (1.0 - q) * tau / m[0];
    let a0 = 1.0 + w * m[1] / 2.0;
    let a1 = w * m[2] / 6.0;
    let b0 = q * tau;
    let b1 = 1.0 + (a0 - 1.0) / (1.0 - q);
    let b2 = a1 / (1.0 - q);
    let discriminant = b1 * b1 - 4.0 * b0 * b2;
    if discriminant < 0.0 {
        return Err(RuinError::ComplexBranch { discriminant });
    }
    let root = discriminant.sqrt();
    Ok(TwoPointPadeParams {
        a0,
        a1,
        b0,
        b1,
        b2,
        k1: a1 / b2,
        k2: (-a1 * b1 + 2.0 * a0 * b2) / (b2 * root),
        zeta: root / (2.0 * b2),
        eta: b1 / (2.0 * b2),
    })
}

pub fn two_point_pade(model: &PerturbedModel, u: f64) -> Result<f64> {
    Ok(two_point_pade_params(model)?.ruin(u))
}

/// `|1 − approx/exact|`.
pub fn relative_error(approx: f64, exact: f64) -> Result<f64> {
    if exact == 0.0 || !exact.is_finite() {
        return Err(RuinError::UndefinedRelativeError(exact));
    }
    Ok((1.0 - approx / exact).abs())
}
