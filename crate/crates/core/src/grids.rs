//! Discretization geometry: the staggered radial mesh, the product quadrature
//! on the unit sphere, and the characteristic weights τ± = 2 + t ± r.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest node count accepted for an evolution run.
pub const MIN_RUN_NODES: usize = 8;

/// Cell-centered radial mesh r_j = (j + 1/2) h, j = 0..n, on [0, r_max].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n: usize,
    h: f64,
    r_max: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n: usize, r_max: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("grid.J", "node count must be positive"));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::config("grid.r_max", format!("must be finite and positive, got {r_max}")));
        }
        let h = r_max / n as f64;
        let nodes = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        Ok(Self { n, h, r_max, nodes })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// The same interval with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.n * factor, self.r_max).expect("refinement of a valid grid")
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// One node of the spherical product rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereNode {
    pub cos_theta: f64,
    pub sin_theta: f64,
    pub phi: f64,
    pub weight: f64,
}

impl SphereNode {
    /// Unit vector ω = (sinθ cosφ, sinθ sinφ, cosθ).
    pub fn direction(&self) -> [f64; 3] {
        [
            self.sin_theta * self.phi.cos(),
            self.sin_theta * self.phi.sin(),
            self.cos_theta,
        ]
    }
}

/// Gauss–Legendre in cos θ times the uniform rule in φ.
///
/// With `degree + 1` latitudes and `2 degree + 2` longitudes the rule
/// integrates products Y_ℓ^k Y_ℓ'^k' exactly for ℓ, ℓ' ≤ degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularQuadrature {
    degree: usize,
    n_theta: usize,
    n_phi: usize,
    nodes: Vec<SphereNode>,
}

impl AngularQuadrature {
    pub fn new(degree: usize) -> Self {
        let n_theta = degree + 1;
        let n_phi = 2 * degree + 2;
        let (x, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for (&ct, &wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for m in 0..n_phi {
                nodes.push(SphereNode {
                    cos_theta: ct,
                    sin_theta: st,
                    phi: m as f64 * dphi,
                    weight: wt * dphi,
                });
            }
        }
        Self { degree, n_theta, n_phi, nodes }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn nodes(&self) -> &[SphereNode] {
        &self.nodes
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

/// τ+ = 2 + t + r and τ- = 2 + t - r at a point of the (t, r) half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicWeights {
    pub plus: f64,
    pub minus: f64,
}

impl CharacteristicWeights {
    pub fn at(t: f64, r: f64) -> Self {
        Self {
            plus: 2.0 + t + r,
            minus: 2.0 + t - r,
        }
    }
}

pub fn tau_plus(t: f64, r: f64) -> f64 {
    2.0 + t + r
}

pub fn tau_minus(t: f64, r: f64) -> f64 {
    2.0 + t - r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn staggered_nodes() {
        let g = RadialGrid::new(4, 2.0).unwrap();
        assert_eq!(g.nodes(), &[0.25, 0.75, 1.25, 1.75]);
        let g = RadialGrid::new(8, 2.0).unwrap();
        assert_eq!(g.node(0), 0.125);
        assert!((g.len() as f64 * g.spacing() - g.r_max()).abs() < 1e-15);
        assert!(RadialGrid::new(0, 2.0).is_err());
        assert!(RadialGrid::new(8, -1.0).is_err());
        assert!(g.nodes().iter().all(|&r| r > 0.0));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg} got={got}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn sphere_area() {
        for degree in [0, 1, 3, 8, 16] {
            let q = AngularQuadrature::new(degree);
            assert!((q.total_weight() - 4.0 * PI).abs() < 1e-12);
            assert_eq!(q.len(), (degree + 1) * (2 * degree + 2));
        }
    }

    #[test]
    fn sphere_monomials() {
        // ∫ z² dS = 4π/3, ∫ x² y² dS = 4π/15.
        let q = AngularQuadrature::new(4);
        let z2: f64 = q.nodes().iter().map(|n| n.weight * n.direction()[2].powi(2)).sum();
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-12);
        let x2y2: f64 = q
            .nodes()
            .iter()
            .map(|n| {
                let d = n.direction();
                n.weight * d[0] * d[0] * d[1] * d[1]
            })
            .sum();
        assert!((x2y2 - 4.0 * PI / 15.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn characteristic_ordering(t in 0.0f64..100.0, frac in 0.0f64..1.0) {
            let r = frac * (t + 1.0);
            let w = CharacteristicWeights::at(t, r);
            prop_assert!(w.plus >= w.minus);
            prop_assert!(w.minus >= 1.0 - 1e-12);
            prop_assert!(w.plus * w.minus >= w.minus * w.minus);
        }
    }
}
