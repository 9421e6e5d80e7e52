use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use ruinkit::approx::{mixture_exact_ruin, pkdv_params, psi_4me, renyi_approx};
use ruinkit::bounds::panjer_bounds;
use ruinkit::claims::{h3_cdf_quadrature, ClaimDistribution, Claims};
use ruinkit::coefficients::{adjustment_coefficient, lundberg_bound, renyi_coefficient};
use ruinkit::exact::{decompose_ruin, exact_ruin};
use ruinkit::model::PerturbedModel;
use ruinkit::quad::integrate_to_infinity;

fn exp_claims() -> impl Strategy<Value = Claims> {
    (0.3f64..3.0).prop_map(|b| Claims::exponential(b).unwrap())
}

fn gamma_claims() -> impl Strategy<Value = Claims> {
    (1u32..5, 0.5f64..3.0).prop_map(|(k, b)| Claims::gamma(k as f64, b).unwrap())
}

fn real_gamma_claims() -> impl Strategy<Value = Claims> {
    (0.4f64..4.0, 0.5f64..3.0).prop_map(|(k, b)| Claims::gamma(k, b).unwrap())
}

fn mixture_claims() -> impl Strategy<Value = Claims> {
    proptest::collection::vec((0.05f64..1.0, 0.2f64..6.0), 2..4).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let weights = parts.iter().map(|p| p.0 / total).collect();
        let rates = parts.iter().map(|p| p.1).collect();
        Claims::mixture(weights, rates).unwrap()
    })
}

fn any_claims() -> impl Strategy<Value = Claims> {
    prop_oneof![exp_claims(), gamma_claims(), real_gamma_claims(), mixture_claims()]
}

fn model_with(claims: impl Strategy<Value = Claims>) -> impl Strategy<Value = PerturbedModel> {
    (0.3f64..3.0, 0.2f64..2.0, 0.05f64..1.0, claims)
        .prop_map(|(l, s, th, c)| PerturbedModel::with_loading(l, s, th, c).unwrap())
}

/// Taylor coefficients at 0 of an analytic `f` from the Cauchy integral on a circle of radius `r`.
fn taylor_coefficients(f: impl Fn(Complex64) -> Complex64, r: f64, count: usize) -> Vec<f64> {
    let n = 128;
    let values: Vec<Complex64> = (0..n).map(|k| f(Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64))).collect();
    (0..count)
        .map(|j| {
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                .sum();
            sum.re / n as f64 / r.powi(j as i32)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn moments_are_log_convex(claims in any_claims()) {
        let mut m = vec![1.0];
        m.extend(claims.moments());
        for k in 1..5 {
            prop_assert!(m[k] * m[k] <= m[k - 1] * m[k + 1] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn equilibrium_transform_matches_quadrature(claims in any_claims(), s in 0.0f64..5.0) {
        let mu = claims.mean();
        let direct = integrate_to_infinity(|x| (-s * x).exp() * claims.tail(x) / mu, 0.0, 1e-12).value;
        prop_assert!((claims.equilibrium_laplace(s) - direct).abs() < 1e-8);
        prop_assert_eq!(claims.equilibrium_laplace(0.0), 1.0);
    }

    #[test]
    fn h3_closed_form_matches_quadrature(claims in any_claims(), tau in 0.1f64..10.0) {
        for i in 0..=40 {
            let x = i as f64 * 0.5;
            let closed = claims.h3_cdf(x, tau);
            let quad = h3_cdf_quadrature(&claims, x, tau);
            prop_assert!((closed - quad).abs() < 1e-8, "x={} closed={} quad={}", x, closed, quad);
        }
    }

    #[test]
    fn h3_is_a_distribution(claims in any_claims(), tau in 0.1f64..10.0) {
        let mut prev = 0.0;
        for i in 0..=200 {
            let v = claims.h3_cdf(i as f64 * 0.1, tau);
            prop_assert!((0.0..=1.0).contains(&v) && v >= prev - 1e-14);
            prev = v;
        }
        prop_assert!(claims.h3_cdf(1e4, tau) > 1.0 - 1e-9);
    }

    #[test]
    fn unit_shape_gamma_is_exponential(beta in 0.1f64..10.0, tau in 0.1f64..10.0) {
        let g = Claims::gamma(1.0, beta).unwrap();
        let e = Claims::exponential(beta).unwrap();
        for (a, b) in g.moments().iter().zip(e.moments()) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
        for i in 0..=50 {
            let x = i as f64 * 0.2 / beta;
            prop_assert!((g.cdf(x) - e.cdf(x)).abs() <= 1e-12);
            prop_assert!((g.equilibrium_cdf(x) - e.equilibrium_cdf(x)).abs() <= 1e-12);
            prop_assert!((g.h3_cdf(x, tau) - e.h3_cdf(x, tau)).abs() <= 1e-12);
        }
        prop_assert!((g.mgf(0.5 * beta).unwrap() - e.mgf(0.5 * beta).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn central_moments_are_cumulant_consistent(model in model_with(any_claims()), t in 0.1f64..5.0) {
        // Cumulants of V(t) − u are t κ⁽ᵏ⁾(0) for the Laplace exponent κ.
        let (l, c, s2) = (model.lambda(), model.premium(), model.sigma().powi(2));
        let claims = model.claims().clone();
        let kappa = |z: Complex64| c * z + 0.5 * s2 * z * z - l * (1.0 - claims.laplace_c(z));
        let r = 0.5 * claims.mgf_sup();
        let coef = taylor_coefficients(kappa, r, 6);
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];
        let k: Vec<f64> = (0..6).map(|j| t * coef[j] * fact[j]).collect();
        let m = model.central_moments(0.0, t);
        assert_relative_eq!(m.nu1, k[1], max_relative = 1e-8, epsilon = 1e-10);
        assert_relative_eq!(m.nu2, k[2], max_relative = 1e-8);
        assert_relative_eq!(m.nu3, k[3], max_relative = 1e-8);
        assert_relative_eq!(m.nu4, k[4] + 3.0 * k[2] * k[2], max_relative = 1e-8);
        assert_relative_eq!(m.nu5, k[5] + 10.0 * k[3] * k[2], max_relative = 1e-8);
    }

    #[test]
    fn transform_is_completely_monotone(model in model_with(any_claims()), s in 0.01f64..5.0) {
        let h = 1e-3 * s;
        let f = |x: f64| model.pk_transform(x).unwrap();
        let (a, b, c) = (f(s - h), f(s), f(s + h));
        prop_assert!(b > 0.0 && b <= 1.0 / s);
        prop_assert!(c < a);
        prop_assert!(a - 2.0 * b + c > -1e-12 * b);
    }

    #[test]
    fn pkdv_matches_transform_series(model in model_with(any_claims())) {
        // Ψ*(s) = N(s) / (ρ + s N(s)); recover N's Taylor coefficients from the transform alone.
        let rho = model.rho();
        let radius = 0.25 * adjustment_coefficient(&model).unwrap().r;
        let psi = taylor_coefficients(|z| model.pk_transform_c(z), radius, 4);
        let n = taylor_coefficients(
            |z| {
                let p = model.pk_transform_c(z);
                rho * p / (1.0 - z * p)
            },
            radius,
            5,
        );
        let d = |j: usize| if j == 0 { rho } else { n[j - 1] };
        for order in 3..=5 {
            let p = pkdv_params(&model, order).unwrap();
            // A·D(s) − (s + β)·N(s) vanishes at s⁰ and at the order's matched power.
            for j in [0, order - 2] {
                let lower = if j == 0 { 0.0 } else { n[j - 1] };
                let residual = p.amplitude * d(j) - lower - p.decay * n[j];
                prop_assert!(residual.abs() <= 1e-6 * (lower.abs() + p.decay * n[j].abs()), "order {} power {}: {}", order, j, residual);
            }
        }
        // The lowest order is a plain Padé fit, so it also matches Ψ* through s¹.
        let p3 = pkdv_params(&model, 3).unwrap();
        assert_relative_eq!(p3.amplitude / p3.decay, psi[0], max_relative = 1e-6);
        assert_relative_eq!(-p3.amplitude / p3.decay.powi(2), psi[1], max_relative = 1e-6);
    }

    #[test]
    fn mean_loss_is_integral_of_ruin(model in model_with(mixture_claims())) {
        let m = model.claims().moments();
        let expected = (model.sigma().powi(2) + model.lambda() * m[1]) / (2.0 * model.rho());
        let integral = integrate_to_infinity(|u| mixture_exact_ruin(&model, u).unwrap(), 0.0, 1e-10).value;
        assert_relative_eq!(integral, expected, max_relative = 1e-6);
        assert_relative_eq!(model.pk_transform(1e-9).unwrap(), expected, max_relative = 1e-5);
    }

    #[test]
    fn renyi_against_lundberg(model in model_with(prop_oneof![exp_claims(), gamma_claims()])) {
        // (1−q)e^{−R₀u} ≤ e^{−Ru} for every u exactly when R ≤ R₀; otherwise
        // the curves cross at u* = −ln(1−q) / (R − R₀).
        let r = adjustment_coefficient(&model).unwrap().r;
        let r0 = renyi_coefficient(&model);
        let crossing = if r <= r0 { f64::INFINITY } else { -(1.0 - model.q()).ln() / (r - r0) };
        for i in 0..=200 {
            let u = i as f64 * 0.5;
            let below = renyi_approx(&model, u) <= lundberg_bound(&model, u).unwrap() * (1.0 + 1e-12);
            if (u - crossing).abs() > 1e-6 * crossing.max(1.0) {
                prop_assert_eq!(below, u < crossing, "u={} crossing={}", u, crossing);
            }
        }
    }

    #[test]
    fn adjustment_root_solves_equation(model in model_with(any_claims())) {
        let a = adjustment_coefficient(&model).unwrap();
        prop_assert!(a.r > 0.0 && a.r < model.claims().mgf_sup());
        let scale = model.premium() * a.r;
        prop_assert!(model.adjustment_function(a.r).unwrap().abs() <= 1e-9 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ruin_is_nonincreasing(model in model_with(any_claims())) {
        let psi: Vec<f64> = (0..=40).map(|i| exact_ruin(&model, i as f64 * 0.5).unwrap()).collect();
        prop_assert_eq!(psi[0], 1.0);
        for w in psi.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10 && w[1] >= 0.0);
        }
    }

    #[test]
    fn de_vylder_is_exact_for_exponential(model in model_with(exp_claims())) {
        for i in 0..=20 {
            let u = i as f64 * 5.0;
            prop_assert!((psi_4me(&model, u).unwrap() - exact_ruin(&model, u).unwrap()).abs() < 1e-7);
            prop_assert!((psi_4me(&model, u).unwrap() - mixture_exact_ruin(&model, u).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_formula_matches_inversion(model in model_with(mixture_claims())) {
        for u in [0.0, 0.3, 2.0, 10.0, 40.0] {
            prop_assert!((mixture_exact_ruin(&model, u).unwrap() - exact_ruin(&model, u).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn bounds_sandwich_inversion(model in model_with(prop_oneof![exp_claims(), gamma_claims()])) {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let b = panjer_bounds(&model, 0.05, &grid).unwrap();
        for (lo, hi) in b.lower.points().iter().zip(b.upper.points()) {
            let psi = exact_ruin(&model, lo.0).unwrap();
            prop_assert!(lo.1 <= psi + 1e-9 && psi <= hi.1 + 1e-9, "u={} {} {} {}", lo.0, lo.1, psi, hi.1);
        }
    }

    #[test]
    fn decomposition_adds_up(model in model_with(any_claims())) {
        let step = 0.02 / model.tau().unwrap().max(2.0);
        let d = decompose_ruin(&model, 400.0 * step, step).unwrap();
        for (u, total) in d.total().step_by(20) {
            prop_assert!((total - exact_ruin(&model, u).unwrap()).abs() < 1e-4);
        }
        prop_assert!(d.psi2.values().all(|v| v >= -1e-12));
    }
}

#[test]
fn reference_models_are_convex() {
    let mix = Claims::mixture(vec![0.8881815, 0.1078392, 0.0039793], vec![5.514588, 0.190206, 0.014631]).unwrap();
    for claims in [Claims::exponential(1.0).unwrap(), Claims::gamma(2.0, 2.0).unwrap(), mix] {
        for sigma in [0.5, 1.0, 2.0] {
            if matches!(claims, Claims::Gamma(_)) && sigma < 1.0 {
                continue;
            }
            let model = PerturbedModel::with_loading(1.0, sigma, 0.01, claims.clone()).unwrap();
            let psi: Vec<f64> = (0..=100).map(|i| exact_ruin(&model, i as f64 * 0.5).unwrap()).collect();
            for w in psi.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            }
        }
    }
}

#[test]
fn ruin_can_be_concave_near_the_origin() {
    // A stiff diffusion and Erlang claims give a ladder-height density that
    // rises after the initial drop, so Ψ bends the other way.
    let stiff = PerturbedModel::with_loading(1.48, 0.2, 0.05, Claims::gamma(2.0, 0.5).unwrap()).unwrap();
    let mild = PerturbedModel::with_loading(1.0, 0.5, 0.01, Claims::gamma(2.0, 2.0).unwrap()).unwrap();
    for (model, u) in [(stiff, 1.0), (mild, 1.0)] {
        let psi: Vec<f64> = [u - 0.5, u, u + 0.5].iter().map(|&x| exact_ruin(&model, x).unwrap()).collect();
        assert!(psi[0] - 2.0 * psi[1] + psi[2] < 0.0);
    }
}
