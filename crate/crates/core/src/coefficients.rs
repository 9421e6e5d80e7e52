//! Adjustment (Lundberg) coefficient, the Lundberg bound and the Renyi coefficient.

use crate::claims::ClaimDistribution;
use crate::error::{Result, RuinError};
use crate::model::PerturbedModel;
use crate::roots;

const LOWER_END: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustmentResult {
    pub r: f64,
    pub bracket: (f64, f64),
    /// `|g(R)|` at the returned root.
    pub residual: f64,
    pub iterations: usize,
}

/// Positive root of `g(r) = λ(M(r) − 1) − cr + σ²r²/2` inside `(0, mgf_sup)`.
pub fn adjustment_coefficient(model: &PerturbedModel) -> Result<AdjustmentResult> {
    let sup = model.claims().mgf_sup();
    let g = |r: f64| model.adjustment_function(r);
    let lo = LOWER_END.min(0.5 * sup);
    let g_lo = g(lo)?;
    // Walk the upper end toward the MGF singularity until g turns positive.
    let mut gap = 0.001 * sup;
    let mut hi = sup - gap;
    let mut g_hi = g(hi)?;
    let mut steps = 0;
    while !(g_hi > 0.0) && steps < 60 {
        gap *= 0.1;
        let next = sup - gap;
        if next <= hi {
            break;
        }
        hi = next;
        g_hi = g(hi)?;
        steps += 1;
    }
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(RuinError::NoRoot { lo, hi, g_lo, g_hi });
    }
    let root = roots::brent(|r| g(r).unwrap_or(f64::INFINITY), lo, hi, 1e-17, 300)?;
    Ok(AdjustmentResult { r: root.x, bracket: (lo, hi), residual: root.residual, iterations: root.iterations })
}

/// `e^{−Ru}`.
pub fn lundberg_bound(model: &PerturbedModel, u: f64) -> Result<f64> {
    Ok((-adjustment_coefficient(model)?.r * u).exp())
}

/// `R₀ = 2qμ₁/μ₂`.
pub fn renyi_coefficient(model: &PerturbedModel) -> f64 {
    let m = model.claims().moments();
    2.0 * model.q() * m[0] / m[1]
}
