use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ`, uniform
/// trapezoid in `φ`. Weights absorb the `1/4π` so they sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    n_polar: usize,
    n_azimuth: usize,
    nodes: Vec<SphereNode>,
}

impl SphereQuadrature {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar == 0 || n_azimuth == 0 {
            return Err(Error::Domain {
                what: "quadrature node counts must be positive",
                value: n_polar.min(n_azimuth) as f64,
            });
        }
        let (xs, ws) = gauss_legendre(n_polar);
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let dphi = 2.0 * PI / n_azimuth as f64;
        for (&x, &w) in xs.iter().zip(&ws) {
            let theta = x.acos();
            for j in 0..n_azimuth {
                nodes.push(SphereNode { theta, phi: j as f64 * dphi, weight: 0.5 * w / n_azimuth as f64 });
            }
        }
        Ok(Self { n_polar, n_azimuth, nodes })
    }

    pub fn n_polar(&self) -> usize {
        self.n_polar
    }

    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }

    pub fn nodes(&self) -> &[SphereNode] {
        &self.nodes
    }

    /// One-dimensional polar rule `Σ_i (w_i/2) f(θ_i)` for `φ`-independent integrands.
    pub fn polar_average<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let (xs, ws) = gauss_legendre(self.n_polar);
        xs.iter().zip(&ws).map(|(&x, &w)| 0.5 * w * f(x.acos())).sum()
    }
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        Self::new(64, 128).expect("default node counts are positive")
    }
}

/// Normalized surface average `(1/4π)∬ f(θ, φ) sin θ dθ dφ`.
pub fn sphere_average<F: FnMut(f64, f64) -> f64>(mut f: F, quad: &SphereQuadrature) -> Result<f64> {
    let mut acc = 0.0;
    for (index, node) in quad.nodes.iter().enumerate() {
        let v = f(node.theta, node.phi);
        if !v.is_finite() {
            return Err(Error::NonFiniteNode { index, theta: node.theta, phi: node.phi });
        }
        acc += node.weight * v;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_weights_and_symmetry() {
        for n in [1, 2, 5, 16, 64, 128] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
        }
        // three-point rule: nodes ±sqrt(3/5), weights 5/9, 8/9
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - 0.6_f64.sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_one() {
        let q = SphereQuadrature::default();
        let s: f64 = q.nodes().iter().map(|n| n.weight).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(q.nodes().len(), 64 * 128);
    }

    #[test]
    fn constant_and_second_moment() {
        let q = SphereQuadrature::default();
        assert!((sphere_average(|_, _| 1.0, &q).unwrap() - 1.0).abs() < 1e-12);
        let m = sphere_average(|t, _| t.cos().powi(2), &q).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-13);
        let m = sphere_average(|t, p| (t.sin() * p.cos()).powi(2), &q).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn polar_rule_agrees_for_axisymmetric_integrands() {
        let q = SphereQuadrature::new(24, 7).unwrap();
        let f = |t: f64| (2.0 * t).cos().exp() * t.sin();
        let a = sphere_average(|t, _| f(t), &q).unwrap();
        let b = q.polar_average(f);
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn reports_non_finite_node() {
        let q = SphereQuadrature::new(4, 4).unwrap();
        match sphere_average(|_, p| if p > 3.0 { f64::NAN } else { 0.0 }, &q) {
            Err(Error::NonFiniteNode { index, phi, .. }) => {
                assert_eq!(index, 2);
                assert!(phi > 3.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_rule() {
        assert!(SphereQuadrature::new(0, 4).is_err());
    }
}
