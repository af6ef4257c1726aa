//! Gauss–Legendre rules mapped onto finite intervals.

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes and weights on `(a, b)`, nodes ascending. Endpoints are never nodes.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidInput(format!("invalid interval ({a}, {b})")));
        }
        let gl = GaussLegendre::new(n)
            .map_err(|_| Error::InvalidInput(format!("Gauss-Legendre rule needs at least 2 nodes, got {n}")))?;
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Ok(Self {
            nodes: pairs.iter().map(|(x, _)| mid + half * x).collect(),
            weights: pairs.iter().map(|(_, w)| half * w).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_i w_i f(x_i)` in node order.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Weighted sum of precomputed samples, in node order.
    pub fn sum(&self, samples: &[f64]) -> f64 {
        samples.iter().zip(&self.weights).map(|(s, w)| s * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn integrates_polynomials_exactly() {
        let r = Rule::gauss_legendre(5, -1.0, 2.0).unwrap();
        // Degree 9 is exact for 5 nodes.
        let exact = (2f64.powi(10) - 1.0) / 10.0;
        assert!((r.integrate(|x| x.powi(9)) - exact).abs() < 1e-11);
    }

    #[test]
    fn open_interval_and_ordering() {
        let r = Rule::gauss_legendre(129, 0.0, FRAC_PI_2).unwrap();
        assert_eq!(r.len(), 129);
        assert!(r.nodes[0] > 0.0 && *r.nodes.last().unwrap() < FRAC_PI_2);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!((r.integrate(f64::cos) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Rule::gauss_legendre(1, 0.0, 1.0).is_err());
        assert!(Rule::gauss_legendre(4, 1.0, 1.0).is_err());
    }
}
