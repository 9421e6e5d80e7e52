use crate::error::{Result, RuinError};

/// A labelled sequence of `(u, value)` points with strictly increasing `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinCurve {
    method: String,
    points: Vec<(f64, f64)>,
}

impl RuinCurve {
    pub fn new(method: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(RuinError::invalid("curve grid must be strictly increasing"));
        }
        Ok(Self { method: method.into(), points })
    }

    /// Evaluates `f` at every grid point.
    pub fn tabulate<F>(method: impl Into<String>, grid: &[f64], f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let points = grid.iter().map(|&u| f(u).map(|v| (u, v))).collect::<Result<Vec<_>>>()?;
        Self::new(method, points)
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Value at `u` if `u` is a grid point (to within `1e-9`).
    pub fn at(&self, u: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.0 - u).abs() <= 1e-9 * u.abs().max(1.0)).map(|p| p.1)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_grid() {
        assert!(RuinCurve::new("x", vec![(1.0, 0.5), (1.0, 0.4)]).is_err());
        let c = RuinCurve::tabulate("x", &[0.0, 1.0, 2.0], |u: f64| Ok((-u).exp())).unwrap();
        assert!(c.is_nonincreasing());
        assert_eq!(c.at(1.0), Some((-1.0f64).exp()));
        assert_eq!(c.at(1.5), None);
    }
}
