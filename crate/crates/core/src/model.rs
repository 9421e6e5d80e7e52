//! The compound-Poisson surplus process perturbed by Brownian motion,
//! `V(t) = u + ct − S(t) + σW(t)`, and the transforms built from it.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::claims::{ClaimDistribution, Claims};
use crate::error::{Result, RuinError};

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedModel {
    lambda: f64,
    sigma: f64,
    premium: f64,
    theta: f64,
    claims: Claims,
}

/// Quantities derived from the model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub c: f64,
    /// Probability that the maximal loss has no claim-driven record, `1 − λμ₁/c`.
    pub q: f64,
    /// Rate of the diffusion ladder `2c/σ²`; absent for the unperturbed model.
    pub tau: Option<f64>,
    pub rho: f64,
}

/// Central moments of `V(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralMoments {
    /// The mean `u + ct − λtμ₁` (first moment, not centred).
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu4: f64,
    pub nu5: f64,
}

fn check_common(lambda: f64, sigma: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(RuinError::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(RuinError::invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    Ok(())
}

impl PerturbedModel {
    /// Builds the model from the safety loading, `c = (1+θ)λμ₁`.
    pub fn with_loading(lambda: f64, sigma: f64, theta: f64, claims: Claims) -> Result<Self> {
        check_common(lambda, sigma)?;
        let expected = lambda * claims.mean();
        if !(theta.is_finite() && theta > 0.0) {
            return Err(RuinError::NetProfit { premium: (1.0 + theta) * expected, expected });
        }
        Ok(Self { lambda, sigma, premium: (1.0 + theta) * expected, theta, claims })
    }

    /// Builds the model from the premium rate `c`.
    pub fn with_premium(lambda: f64, sigma: f64, premium: f64, claims: Claims) -> Result<Self> {
        check_common(lambda, sigma)?;
        let expected = lambda * claims.mean();
        if !(premium.is_finite() && premium > expected) {
            return Err(RuinError::NetProfit { premium, expected });
        }
        Ok(Self { lambda, sigma, premium, theta: premium / expected - 1.0, claims })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn premium(&self) -> f64 {
        self.premium
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn claims(&self) -> &Claims {
        &self.claims
    }

    pub fn q(&self) -> f64 {
        self.theta / (1.0 + self.theta)
    }

    /// `ρ = cq`, the net drift `c − λμ₁`.
    pub fn rho(&self) -> f64 {
        self.premium * self.q()
    }

    pub fn tau(&self) -> Result<f64> {
        if self.sigma > 0.0 {
            Ok(2.0 * self.premium / (self.sigma * self.sigma))
        } else {
            Err(RuinError::NoDiffusion("the diffusion ladder rate tau"))
        }
    }

    pub fn derive_params(&self) -> DerivedParams {
        DerivedParams { c: self.premium, q: self.q(), tau: self.tau().ok(), rho: self.rho() }
    }

    /// Same model with a different diffusion coefficient.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        check_common(self.lambda, sigma)?;
        Ok(Self { sigma, ..self.clone() })
    }

    pub fn central_moments(&self, u: f64, t: f64) -> CentralMoments {
        let m = self.claims.moments();
        let (l, s2) = (self.lambda, self.sigma * self.sigma);
        let var = l * t * m[1] + s2 * t;
        CentralMoments {
            nu1: u + self.premium * t - l * t * m[0],
            nu2: var,
            nu3: -l * t * m[2],
            nu4: l * t * m[3] + 3.0 * var * var,
            nu5: -l * t * m[4] - 10.0 * l * t * m[2] * var,
        }
    }

    /// Laplace exponent `κ(s) = cs − λ(1 − E[e^{−sX}]) + σ²s²/2`, so that
    /// `E[e^{s(V(t)−u)}] = e^{tκ(s)}`.
    pub fn levy_exponent(&self, s: f64) -> f64 {
        self.premium * s - self.lambda * (1.0 - self.claims.laplace(s))
            + 0.5 * self.sigma * self.sigma * s * s
    }

    /// Laplace transform `Ψ*(s) = ∫₀^∞ e^{−su} Ψ(u) du` on the complex plane.
    pub fn pk_transform_c(&self, s: Complex64) -> Complex64 {
        let q = self.q();
        let h = self.claims.equilibrium_laplace_c(s);
        if self.sigma > 0.0 {
            let tau = 2.0 * self.premium / (self.sigma * self.sigma);
            let one = Complex64::new(1.0, 0.0);
            let num = s + tau * (1.0 - q) * (one - h);
            let den = s * (s + tau - tau * (1.0 - q) * h);
            num / den
        } else {
            // (1 − q / (1 − (1−q) h₂*)) / s
            (1.0 - q) * (1.0 - h) / ((1.0 - (1.0 - q) * h) * s)
        }
    }

    /// `Ψ*(s)` for real `s > 0`.
    pub fn pk_transform(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(RuinError::invalid(format!("transform argument must be positive, got {s}")));
        }
        Ok(self.pk_transform_c(Complex64::new(s, 0.0)).re)
    }

    /// `λ(M(r) − 1) − cr + σ²r²/2`, whose positive zero is the adjustment coefficient.
    pub fn adjustment_function(&self, r: f64) -> Result<f64> {
        Ok(self.lambda * self.claims.mgf_minus_one(r)? - self.premium * r
            + 0.5 * self.sigma * self.sigma * r * r)
    }

    /// MGF of the maximal aggregate loss `L`, finite for `r` below the adjustment coefficient.
    pub fn mgf_max_loss(&self, r: f64) -> Result<f64> {
        let q = self.q();
        let mu = self.claims.mean();
        let sup = self.claims.mgf_sup();
        if r >= sup {
            return Err(RuinError::Divergent { r, radius: sup });
        }
        let inv_tau = self.sigma * self.sigma / (2.0 * self.premium);
        let ratio = if r.abs() < 1e-8 {
            let m = self.claims.moments();
            m[0] + m[1] * r / 2.0 + m[2] * r * r / 6.0
        } else {
            self.claims.mgf_minus_one_unchecked(r) / r
        };
        let den = (1.0 - r * inv_tau) * mu + (q - 1.0) * ratio;
        if !(den > 0.0) {
            return Err(RuinError::Divergent { r, radius: self.divergence_hint() });
        }
        Ok(q * mu / den)
    }

    fn divergence_hint(&self) -> f64 {
        crate::coefficients::adjustment_coefficient(self).map(|a| a.r).unwrap_or(f64::NAN)
    }
}

impl fmt::Display for PerturbedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lambda={},c={},sigma={},claims={}",
            self.lambda, self.premium, self.sigma, self.claims
        )
    }
}

/// Model parameters as collected from a spec string or separate flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelSpec {
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub premium: Option<f64>,
    pub sigma: Option<f64>,
    pub claims: Option<String>,
}

const MODEL_KEYS: [&str; 6] = ["lambda", "theta", "sigma", "c", "premium_rate", "premium-rate"];

impl ModelSpec {
    /// Parses `lambda=1,theta=0.01,sigma=1,claims=exp:rate=1`. The claims value
    /// may itself contain commas; it runs until the next model key.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut out = ModelSpec::default();
        let mut claims: Option<String> = None;
        for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let key = token.split_once('=').map(|(k, _)| k.trim());
            match key {
                Some("claims") => {
                    claims = Some(token.split_once('=').map(|(_, v)| v.to_string()).unwrap_or_default());
                }
                Some(k) if MODEL_KEYS.contains(&k) => {
                    if let Some(c) = claims.take() {
                        out.claims = Some(c);
                    }
                    let raw = token.split_once('=').map(|(_, v)| v.trim()).unwrap_or("");
                    let value: f64 = raw
                        .parse()
                        .map_err(|_| RuinError::Parse(format!("`{k}` expects a number, got `{raw}`")))?;
                    match k {
                        "lambda" => out.lambda = Some(value),
                        "theta" => out.theta = Some(value),
                        "sigma" => out.sigma = Some(value),
                        _ => out.premium = Some(value),
                    }
                }
                _ => match claims.as_mut() {
                    Some(c) => {
                        c.push(',');
                        c.push_str(token);
                    }
                    None => return Err(RuinError::Parse(format!("unexpected model token `{token}`"))),
                },
            }
        }
        if let Some(c) = claims {
            out.claims = Some(c);
        }
        Ok(out)
    }

    /// Fills unset fields from `other`.
    pub fn or(self, other: ModelSpec) -> ModelSpec {
        ModelSpec {
            lambda: self.lambda.or(other.lambda),
            theta: self.theta.or(other.theta),
            premium: self.premium.or(other.premium),
            sigma: self.sigma.or(other.sigma),
            claims: self.claims.or(other.claims),
        }
    }

    pub fn build(&self) -> Result<PerturbedModel> {
        let lambda = self.lambda.ok_or_else(|| RuinError::Parse("model needs lambda".into()))?;
        let sigma = self.sigma.ok_or_else(|| RuinError::Parse("model needs sigma".into()))?;
        let claims: Claims = self
            .claims
            .as_deref()
            .ok_or_else(|| RuinError::Parse("model needs claims".into()))?
            .parse()?;
        match (self.theta, self.premium) {
            (Some(theta), None) => PerturbedModel::with_loading(lambda, sigma, theta, claims),
            (None, Some(c)) => PerturbedModel::with_premium(lambda, sigma, c, claims),
            (Some(_), Some(_)) => Err(RuinError::Parse("give either theta or the premium rate, not both".into())),
            (None, None) => Err(RuinError::Parse("model needs theta or a premium rate".into())),
        }
    }
}

impl FromStr for PerturbedModel {
    type Err = RuinError;

    fn from_str(s: &str) -> Result<Self> {
        ModelSpec::parse(s)?.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base(sigma: f64, theta: f64) -> PerturbedModel {
        PerturbedModel::with_loading(1.0, sigma, theta, Claims::exponential(1.0).unwrap()).unwrap()
    }

    #[test]
    fn derived_parameters() {
        let p = base(1.0, 0.01).derive_params();
        assert_abs_diff_eq!(p.c, 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(p.q, 1.0 / 101.0, epsilon = 1e-16);
        assert_abs_diff_eq!(p.tau.unwrap(), 2.02, epsilon = 1e-15);
        let p = base(1.0, 1.0).derive_params();
        assert_eq!((p.c, p.q, p.tau.unwrap()), (2.0, 0.5, 4.0));
        assert!(base(0.0, 1.0).derive_params().tau.is_none());
        assert!(base(1.0, 1e-9).q() < 1e-8);
    }

    #[test]
    fn parameterisations_agree() {
        let a = base(1.0, 0.25);
        let b = PerturbedModel::with_premium(1.0, 1.0, 1.25, Claims::exponential(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(a.q(), b.q(), epsilon = 1e-15);
        assert_abs_diff_eq!(a.premium(), b.premium(), epsilon = 1e-15);
        assert!(matches!(
            PerturbedModel::with_premium(1.0, 1.0, 1.0, Claims::exponential(1.0).unwrap()),
            Err(RuinError::NetProfit { .. })
        ));
        assert!(PerturbedModel::with_loading(1.0, 1.0, 0.0, Claims::exponential(1.0).unwrap()).is_err());
    }

    #[test]
    fn central_moment_values() {
        let m = base(1.0, 0.01).central_moments(0.0, 1.0);
        assert_abs_diff_eq!(m.nu1, 0.01, epsilon = 1e-14);
        assert_abs_diff_eq!(m.nu2, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.nu3, -6.0, epsilon = 1e-14);
        let m = base(0.0, 0.01).central_moments(2.0, 3.0);
        assert_abs_diff_eq!(m.nu2, 6.0, epsilon = 1e-14);
    }

    #[test]
    fn levy_exponent_values() {
        let m = base(1.0, 0.01);
        assert_eq!(m.levy_exponent(0.0), 0.0);
        assert_abs_diff_eq!(m.levy_exponent(1.0), 1.01, epsilon = 1e-14);
        let h = 1e-6;
        assert_abs_diff_eq!(m.levy_exponent(h) / h, m.rho(), epsilon = 1e-5);
    }

    #[test]
    fn pk_transform_limits() {
        let m = base(1.0, 0.01);
        let s = 1e6;
        assert_abs_diff_eq!(s * m.pk_transform(s).unwrap(), 1.0, epsilon = 1e-3);
        assert!(m.pk_transform(0.0).is_err());
        let classical = base(0.0, 0.01);
        assert_abs_diff_eq!(s * classical.pk_transform(s).unwrap(), 1.0 - classical.q(), epsilon = 1e-3);
    }

    #[test]
    fn mgf_of_max_loss() {
        let m = base(1.0, 1.0);
        assert_eq!(m.mgf_max_loss(0.0).unwrap(), 1.0);
        let r_adj = (5.0 - 17f64.sqrt()) / 2.0;
        assert!(m.mgf_max_loss(0.9 * r_adj).unwrap().is_finite());
        assert!(matches!(m.mgf_max_loss(1.01 * r_adj), Err(RuinError::Divergent { .. })));
        assert!(matches!(m.mgf_max_loss(1.0), Err(RuinError::Divergent { .. })));
        // Continuity across the Taylor switch.
        assert_abs_diff_eq!(m.mgf_max_loss(0.9999e-8).unwrap(), m.mgf_max_loss(1.0001e-8).unwrap(), epsilon = 1e-11);
    }

    #[test]
    fn model_spec_grammar() {
        let m: PerturbedModel = "lambda=1,theta=0.01,sigma=1,claims=gamma:shape=2,rate=2".parse().unwrap();
        assert_eq!(m.claims(), &Claims::gamma(2.0, 2.0).unwrap());
        let m: PerturbedModel = "claims=mexp:w=0.5,0.5;b=1,2,lambda=2,c=3,sigma=0.5".parse().unwrap();
        assert_eq!(m.lambda(), 2.0);
        assert_eq!(m.premium(), 3.0);
        let again: PerturbedModel = m.to_string().parse().unwrap();
        assert_eq!(again, m);
        assert!("lambda=1,sigma=1,claims=exp:rate=1".parse::<PerturbedModel>().is_err());
        assert!("lambda=1,theta=x,sigma=1,claims=exp:rate=1".parse::<PerturbedModel>().is_err());
    }
}
