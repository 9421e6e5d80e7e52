//! Dufresne–Gerber bounds.
//!
//! The maximal aggregate loss is `L = L₀ + Σ_{i=1}^{K} Yᵢ` where `L₀` is an
//! exponential(τ) diffusion record, `K` is geometric with `P(K = k) = q(1−q)^k`
//! and the `Yᵢ` have CDF `H₃`. Rounding every summand down (up) to a lattice of
//! width `ϑ` gives a stochastically smaller (larger) variable whose law follows
//! from Panjer's recursion, hence lower (upper) bounds on `Ψ(u) = P(L > u)`.

use crate::claims::ClaimDistribution;
use crate::curve::RuinCurve;
use crate::error::{Result, RuinError};
use crate::model::PerturbedModel;

/// Extra lattice cells kept beyond the largest requested `u`.
pub const DEFAULT_EXTRA_CELLS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedLadder {
    pub lattice_width: f64,
    /// `P(⌊Y/ϑ⌋ = n)`.
    pub p_lower: Vec<f64>,
    /// `P(⌈Y/ϑ⌉ = n)`; the first entry is zero.
    pub p_upper: Vec<f64>,
    pub truncation_index: usize,
    /// Probability mass of the lower sequence beyond the truncation index.
    pub mass_deficit: f64,
}

/// Lattice probabilities of the `H₃` ladder heights on cells `0..=n_points`.
pub fn discretize_ladder(model: &PerturbedModel, lattice_width: f64, n_points: usize) -> Result<DiscretizedLadder> {
    if !(lattice_width.is_finite() && lattice_width > 0.0) {
        return Err(RuinError::invalid(format!("lattice width must be positive, got {lattice_width}")));
    }
    let tau = model.tau()?;
    let claims = model.claims();
    let edges: Vec<f64> = (0..=n_points + 1).map(|i| claims.h3_cdf(i as f64 * lattice_width, tau)).collect();
    Ok(ladder_from_edges(&edges, lattice_width))
}

fn ladder_from_edges(edges: &[f64], lattice_width: f64) -> DiscretizedLadder {
    let n = edges.len() - 2;
    let p_lower: Vec<f64> = (0..=n).map(|i| (edges[i + 1] - edges[i]).max(0.0)).collect();
    let p_upper: Vec<f64> =
        (0..=n).map(|i| if i == 0 { 0.0 } else { (edges[i] - edges[i - 1]).max(0.0) }).collect();
    let mass_deficit = (1.0 - p_lower.iter().sum::<f64>()).max(0.0);
    DiscretizedLadder { lattice_width, p_lower, p_upper, truncation_index: n, mass_deficit }
}

/// Which variable the bounds refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundTarget {
    /// `Ψ(u) = P(L > u)`, including the initial diffusion record.
    #[default]
    Ruin,
    /// The compound geometric sum of `H₃` ladders alone, without `L₀`.
    Ladder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPair {
    pub lower: RuinCurve,
    pub upper: RuinCurve,
    pub lattice_width: f64,
    pub mass_deficit: f64,
}

impl BoundPair {
    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.values().zip(self.upper.values()).map(|(l, u)| u - l)
    }
}

/// Compound geometric pmf `P(N = n)`, `n = 0..len`, for summand pmf `p`.
fn compound_geometric(q: f64, p: &[f64], len: usize) -> Vec<f64> {
    let scale = 1.0 / (1.0 - (1.0 - q) * p[0]);
    let mut g = vec![0.0; len];
    g[0] = q * scale;
    let mult = (1.0 - q) * scale;
    for n in 1..len {
        let s: f64 = (1..=n.min(p.len() - 1)).map(|i| p[i] * g[n - i]).sum();
        g[n] = mult * s;
    }
    g
}

fn convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    (0..len).map(|n| (0..=n).map(|i| a[i] * b[n - i]).sum()).collect()
}

/// `1 − Σ_{n ≤ k} f_n` for every `k`.
fn survival(f: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    f.iter()
        .map(|v| {
            acc += v;
            (1.0 - acc).clamp(0.0, 1.0)
        })
        .collect()
}

/// Bounds on `Ψ` at each grid point with the default truncation.
pub fn panjer_bounds(model: &PerturbedModel, lattice_width: f64, u_grid: &[f64]) -> Result<BoundPair> {
    panjer_bounds_with(model, lattice_width, u_grid, BoundTarget::Ruin, None)
}

/// Bounds with an explicit target and lattice truncation.
///
/// A `u` off the lattice uses the cell below it for the upper bound and the
/// cell above it for the lower bound, which keeps both bounds valid.
pub fn panjer_bounds_with(
    model: &PerturbedModel,
    lattice_width: f64,
    u_grid: &[f64],
    target: BoundTarget,
    n_cells: Option<usize>,
) -> Result<BoundPair> {
    if !(lattice_width.is_finite() && lattice_width > 0.0) {
        return Err(RuinError::invalid(format!("lattice width must be positive, got {lattice_width}")));
    }
    if let Some(u) = u_grid.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
        return Err(RuinError::invalid(format!("initial surplus must be nonnegative, got {u}")));
    }
    let cell = |u: f64| u / lattice_width;
    let snap_tol = 1e-9;
    let down = |u: f64| (cell(u) + snap_tol).floor() as usize;
    let up = |u: f64| (cell(u) - snap_tol).ceil().max(0.0) as usize;
    let u_max = u_grid.iter().copied().fold(0.0, f64::max);
    let needed = up(u_max);
    let n = n_cells.unwrap_or(needed + DEFAULT_EXTRA_CELLS);
    if n < needed {
        return Err(RuinError::Truncation { needed, available: n });
    }
    let ladder = discretize_ladder(model, lattice_width, n)?;
    let q = model.q();
    let len = needed + 1;
    let mut lower = compound_geometric(q, &ladder.p_lower, len);
    let mut upper = compound_geometric(q, &ladder.p_upper, len);
    if target == BoundTarget::Ruin {
        let tau = model.tau()?;
        let h1 = |x: f64| -(-tau * x).exp_m1();
        let l_lower: Vec<f64> =
            (0..len).map(|i| h1((i + 1) as f64 * lattice_width) - h1(i as f64 * lattice_width)).collect();
        let l_upper: Vec<f64> = (0..len)
            .map(|i| if i == 0 { 0.0 } else { h1(i as f64 * lattice_width) - h1((i - 1) as f64 * lattice_width) })
            .collect();
        lower = convolve(&lower, &l_lower, len);
        upper = convolve(&upper, &l_upper, len);
    }
    let lower_tail = survival(&lower);
    let upper_tail = survival(&upper);
    let label = match target {
        BoundTarget::Ruin => "dg",
        BoundTarget::Ladder => "dg-ladder",
    };
    let lower_curve = RuinCurve::new(
        format!("{label}-lower"),
        u_grid.iter().map(|&u| (u, lower_tail[up(u)])).collect(),
    )?;
    let upper_curve = RuinCurve::new(
        format!("{label}-upper"),
        u_grid.iter().map(|&u| (u, upper_tail[down(u)])).collect(),
    )?;
    Ok(BoundPair { lower: lower_curve, upper: upper_curve, lattice_width, mass_deficit: ladder.mass_deficit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::Claims;
    use crate::exact::exact_ruin;
    use approx::assert_abs_diff_eq;

    fn model(claims: Claims) -> PerturbedModel {
        PerturbedModel::with_loading(1.0, 1.0, 0.01, claims).unwrap()
    }

    #[test]
    fn ladder_cells() {
        let m = model(Claims::exponential(1.0).unwrap());
        let d = discretize_ladder(&m, 0.1, 50_000).unwrap();
        assert_eq!(d.p_upper[0], 0.0);
        let tau: f64 = 2.02;
        let x: f64 = 0.1;
        let h3 = (1.0 - (-tau * x).exp() - tau * (1.0 - (-x).exp())) / (1.0 - tau);
        assert_abs_diff_eq!(d.p_lower[0], h3, epsilon = 1e-14);
        assert!(d.mass_deficit < 1e-9);
        assert!(d.p_lower.iter().all(|p| *p >= 0.0));
        let short = discretize_ladder(&m, 0.1, 100).unwrap();
        assert!(short.mass_deficit > d.mass_deficit);
    }

    #[test]
    fn sandwich_exact() {
        let grid = [0.0, 0.1, 1.0, 5.0, 25.0];
        for claims in [Claims::exponential(1.0).unwrap(), Claims::gamma(2.0, 2.0).unwrap()] {
            let m = model(claims);
            let b = panjer_bounds(&m, 0.1, &grid).unwrap();
            for ((u, lo), (_, hi)) in b.lower.points().iter().zip(b.upper.points()) {
                let psi = exact_ruin(&m, *u).unwrap();
                assert!(*lo <= psi && psi <= *hi, "u={u}: {lo} <= {psi} <= {hi}");
            }
        }
    }

    #[test]
    fn width_shrinks_with_lattice() {
        let m = model(Claims::exponential(1.0).unwrap());
        let widths: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&w| panjer_bounds(&m, w, &[1.0]).unwrap().widths().next().unwrap())
            .collect();
        assert!(widths[0] > widths[1] && widths[1] > widths[2]);
    }

    #[test]
    fn refinement_is_nested() {
        let m = model(Claims::gamma(2.0, 2.0).unwrap());
        let grid = [0.4, 1.0, 3.0];
        let coarse = panjer_bounds(&m, 0.2, &grid).unwrap();
        let fine = panjer_bounds(&m, 0.1, &grid).unwrap();
        for i in 0..grid.len() {
            assert!(fine.lower.points()[i].1 >= coarse.lower.points()[i].1 - 1e-12);
            assert!(fine.upper.points()[i].1 <= coarse.upper.points()[i].1 + 1e-12);
        }
    }

    #[test]
    fn snapping_off_lattice() {
        let m = model(Claims::exponential(1.0).unwrap());
        let on = panjer_bounds(&m, 0.1, &[1.0, 1.1]).unwrap();
        let off = panjer_bounds(&m, 0.1, &[1.05]).unwrap();
        assert_eq!(off.upper.points()[0].1, on.upper.points()[0].1);
        assert_eq!(off.lower.points()[0].1, on.lower.points()[1].1);
    }

    #[test]
    fn truncation_is_reported() {
        let m = model(Claims::exponential(1.0).unwrap());
        let err = panjer_bounds_with(&m, 0.1, &[5.0], BoundTarget::Ruin, Some(10)).unwrap_err();
        assert_eq!(err, RuinError::Truncation { needed: 50, available: 10 });
    }

    #[test]
    fn ladder_target_starts_at_one_minus_q() {
        let m = model(Claims::exponential(1.0).unwrap());
        let b = panjer_bounds_with(&m, 0.1, &[0.0], BoundTarget::Ladder, None).unwrap();
        assert_abs_diff_eq!(b.upper.points()[0].1, 1.0 - m.q(), epsilon = 1e-12);
    }
}
