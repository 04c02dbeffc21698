//! Real spherical harmonics, the mode-space representation of fields on the
//! staggered grid, and the quadrature transforms between the two.
//!
//! A physical field is expanded as u(r, ω) = Σ v_ℓ^k(r)/r · Y_ℓ^k(ω). Mode
//! (ℓ, k) with |k| ≤ ℓ is stored at index ℓ² + ℓ + k.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{AngularQuadrature, RadialGrid, SphereNode};

/// λ_ℓ = ℓ(ℓ + 1), the eigenvalue of -Δ on the unit sphere.
pub fn mode_eigenvalue(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

pub fn mode_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

pub fn mode_index(l: usize, k: i64) -> usize {
    debug_assert!(k.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + k) as usize
}

/// Inverse of [`mode_index`].
pub fn mode_degree_order(index: usize) -> (usize, i64) {
    let l = (index as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= index { l + 1 } else { l };
    (l, index as i64 - (l * l + l) as i64)
}

/// Radial coefficient arrays v_ℓ^k(r_j) for all modes up to degree `l_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeField {
    l_max: usize,
    n_radial: usize,
    data: Vec<f64>,
}

impl ModeField {
    pub fn zeros(l_max: usize, n_radial: usize) -> Self {
        Self {
            l_max,
            n_radial,
            data: vec![0.0; mode_count(l_max) * n_radial],
        }
    }

    pub fn from_vec(l_max: usize, n_radial: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != mode_count(l_max) * n_radial {
            return Err(Error::Contract(format!(
                "mode data has {} entries, expected {}",
                data.len(),
                mode_count(l_max) * n_radial
            )));
        }
        Ok(Self { l_max, n_radial, data })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_modes(&self) -> usize {
        mode_count(self.l_max)
    }

    pub fn mode(&self, l: usize, k: i64) -> &[f64] {
        self.row(mode_index(l, k))
    }

    pub fn mode_mut(&mut self, l: usize, k: i64) -> &mut [f64] {
        self.row_mut(mode_index(l, k))
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.data[index * self.n_radial..(index + 1) * self.n_radial]
    }

    pub fn row_mut(&mut self, index: usize) -> &mut [f64] {
        let n = self.n_radial;
        &mut self.data[index * n..(index + 1) * n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.n_radial.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &ModeField) -> bool {
        self.l_max == other.l_max && self.n_radial == other.n_radial
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= factor);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// self - other, elementwise.
    pub fn difference(&self, other: &ModeField) -> Self {
        assert!(self.same_shape(other), "mode field shapes differ");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { l_max: self.l_max, n_radial: self.n_radial, data }
    }

    pub fn add_assign(&mut self, other: &ModeField) {
        assert!(self.same_shape(other), "mode field shapes differ");
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Values on the product of radial nodes and angular quadrature nodes,
/// stored radius-major: entry (j, q) at j·n_angular + q.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    n_radial: usize,
    n_angular: usize,
    data: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(n_radial: usize, n_angular: usize) -> Self {
        Self { n_radial, n_angular, data: vec![0.0; n_radial * n_angular] }
    }

    pub fn from_fn(
        grid: &RadialGrid,
        quad: &AngularQuadrature,
        f: impl Fn(f64, &SphereNode) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(grid.len() * quad.len());
        for &r in grid.nodes() {
            for node in quad.nodes() {
                data.push(f(r, node));
            }
        }
        Self { n_radial: grid.len(), n_angular: quad.len(), data }
    }

    pub fn from_vec(n_radial: usize, n_angular: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_radial * n_angular {
            return Err(Error::Contract(format!(
                "physical data has {} entries, expected {}",
                data.len(),
                n_radial * n_angular
            )));
        }
        Ok(Self { n_radial, n_angular, data })
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_angular..(j + 1) * self.n_angular]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let data = self.data.par_iter().map(|&x| f(x)).collect();
        Self { n_radial: self.n_radial, n_angular: self.n_angular, data }
    }
}

/// Normalized associated Legendre functions P̄_ℓ^m(cos θ) for 0 ≤ m ≤ ℓ ≤ l_max,
/// scaled so that 2π ∫ (P̄_ℓ^m)² dx = 1, without the Condon–Shortley phase.
/// Entry (ℓ, m) is stored at ℓ(ℓ+1)/2 + m.
pub fn normalized_legendre(l_max: usize, x: f64) -> Vec<f64> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; (l_max + 1) * (l_max + 2) / 2];
    let sin_theta = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_theta;
        }
        p[idx(m, m)] = pmm;
        if m < l_max {
            p[idx(m + 1, m)] = x * ((2 * m + 3) as f64).sqrt() * pmm;
        }
        for l in (m + 2)..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[idx(l, m)] = a * (x * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// Values Y_ℓ^k(ω), and the Cartesian components of R Y = ω × ∇_S Y, at one
/// point of the sphere for all modes up to `l_max`.
pub fn harmonics_at(l_max: usize, node: &SphereNode) -> (Vec<f64>, [Vec<f64>; 3]) {
    let n = mode_count(l_max);
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let x = node.cos_theta;
    let st = node.sin_theta;
    let p = normalized_legendre(l_max, x);
    let (sp, cp) = node.phi.sin_cos();
    let e_theta = [x * cp, x * sp, -st];
    let e_phi = [-sp, cp, 0.0];
    let mut y = vec![0.0; n];
    let mut rot = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for l in 0..=l_max {
        for m in 0..=l {
            let pl = p[idx(l, m)];
            let dpl = if st > 0.0 {
                let lower = if l > m {
                    let (lf, mf) = (l as f64, m as f64);
                    ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt() * p[idx(l - 1, m)]
                } else {
                    0.0
                };
                (l as f64 * x * pl - lower) / st
            } else {
                0.0
            };
            let p_over_sin = if st > 0.0 { pl / st } else { 0.0 };
            let terms: Vec<(i64, f64, f64, f64)> = if m == 0 {
                vec![(0, pl, dpl, 0.0)]
            } else {
                let s2 = std::f64::consts::SQRT_2;
                let (sm, cm) = (m as f64 * node.phi).sin_cos();
                let mf = m as f64;
                vec![
                    (m as i64, s2 * pl * cm, s2 * dpl * cm, -s2 * mf * p_over_sin * sm),
                    (-(m as i64), s2 * pl * sm, s2 * dpl * sm, s2 * mf * p_over_sin * cm),
                ]
            };
            for (k, val, d_theta, d_phi_over_sin) in terms {
                let i = mode_index(l, k);
                y[i] = val;
                for c in 0..3 {
                    rot[c][i] = e_phi[c] * d_theta - e_theta[c] * d_phi_over_sin;
                }
            }
        }
    }
    (y, rot)
}

/// Tabulated harmonics on a quadrature, with forward and inverse transforms.
#[derive(Debug, Clone)]
pub struct SphericalTransform {
    l_max: usize,
    quad: AngularQuadrature,
    /// Y[q·M + m]
    y: Vec<f64>,
    /// (R_c Y)[q·M + m] for c = 0, 1, 2
    rot: [Vec<f64>; 3],
}

impl SphericalTransform {
    /// Transform for modes up to `l_max`, evaluated on the product rule of
    /// degree `quad_degree ≥ l_max`.
    pub fn new(l_max: usize, quad_degree: usize) -> Self {
        let quad = AngularQuadrature::new(quad_degree.max(l_max));
        let n = mode_count(l_max);
        let mut y = Vec::with_capacity(quad.len() * n);
        let mut rot = [
            Vec::with_capacity(quad.len() * n),
            Vec::with_capacity(quad.len() * n),
            Vec::with_capacity(quad.len() * n),
        ];
        for node in quad.nodes() {
            let (yq, rq) = harmonics_at(l_max, node);
            y.extend_from_slice(&yq);
            for c in 0..3 {
                rot[c].extend_from_slice(&rq[c]);
            }
        }
        Self { l_max, quad, y, rot }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn quadrature(&self) -> &AngularQuadrature {
        &self.quad
    }

    pub fn n_modes(&self) -> usize {
        mode_count(self.l_max)
    }

    /// Y_m at quadrature node q.
    pub fn value(&self, q: usize, m: usize) -> f64 {
        self.y[q * self.n_modes() + m]
    }

    /// Component `c` of R Y_m at quadrature node q.
    pub fn rotation(&self, c: usize, q: usize, m: usize) -> f64 {
        self.rot[c][q * self.n_modes() + m]
    }

    /// v_m(r_j) = r_j Σ_q w_q u(r_j, ω_q) Y_m(ω_q).
    pub fn forward(&self, physical: &PhysicalField, grid: &RadialGrid) -> Result<ModeField> {
        if physical.n_radial() != grid.len() || physical.n_angular() != self.quad.len() {
            return Err(Error::Contract(format!(
                "physical field is {}×{}, transform expects {}×{}",
                physical.n_radial(),
                physical.n_angular(),
                grid.len(),
                self.quad.len()
            )));
        }
        let n_modes = self.n_modes();
        let rows: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![0.0; n_modes];
                for (q, (&u, node)) in physical.row(j).iter().zip(self.quad.nodes()).enumerate() {
                    if u == 0.0 {
                        continue;
                    }
                    let wu = node.weight * u;
                    let yq = &self.y[q * n_modes..(q + 1) * n_modes];
                    for (a, &yv) in acc.iter_mut().zip(yq) {
                        *a += wu * yv;
                    }
                }
                let r = grid.node(j);
                acc.iter_mut().for_each(|a| *a *= r);
                acc
            })
            .collect();
        let mut out = ModeField::zeros(self.l_max, grid.len());
        for (j, row) in rows.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                out.row_mut(m)[j] = v;
            }
        }
        Ok(out)
    }

    /// u(r_j, ω_q) = Σ_m v_m(r_j)/r_j · Y_m(ω_q).
    pub fn inverse(&self, modes: &ModeField, grid: &RadialGrid) -> Result<PhysicalField> {
        self.synthesize(modes, grid, &self.y)
    }

    /// Component `c` of R u = ω × ∇_S u at every (node, quadrature point).
    pub fn rotation_field(&self, modes: &ModeField, grid: &RadialGrid, c: usize) -> Result<PhysicalField> {
        self.synthesize(modes, grid, &self.rot[c])
    }

    fn synthesize(&self, modes: &ModeField, grid: &RadialGrid, table: &[f64]) -> Result<PhysicalField> {
        if modes.l_max() > self.l_max || modes.n_radial() != grid.len() {
            return Err(Error::Contract(format!(
                "mode field (l_max {}, {} nodes) does not fit transform (l_max {}, {} nodes)",
                modes.l_max(),
                modes.n_radial(),
                self.l_max,
                grid.len()
            )));
        }
        let n_modes = self.n_modes();
        let used = modes.n_modes();
        let n_ang = self.quad.len();
        let mut data = vec![0.0; grid.len() * n_ang];
        data.par_chunks_mut(n_ang).enumerate().for_each(|(j, out)| {
            let inv_r = 1.0 / grid.node(j);
            let coeffs: Vec<f64> = (0..used).map(|m| modes.row(m)[j] * inv_r).collect();
            if coeffs.iter().all(|&c| c == 0.0) {
                return;
            }
            for (q, o) in out.iter_mut().enumerate() {
                let tq = &table[q * n_modes..q * n_modes + used];
                *o = coeffs.iter().zip(tq).map(|(c, t)| c * t).sum();
            }
        });
        PhysicalField::from_vec(grid.len(), n_ang, data)
    }
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// r^ℓ Y_ℓ^k(x/|x|) as a Cartesian polynomial, for ℓ ≤ 2.
pub fn solid_harmonic(l: usize, k: i64, p: [f64; 3]) -> f64 {
    let [x, y, z] = p;
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let c2 = 0.5 * (15.0 / PI).sqrt();
    match (l, k) {
        (0, 0) => 0.5 / SQRT_PI,
        (1, -1) => c1 * y,
        (1, 0) => c1 * z,
        (1, 1) => c1 * x,
        (2, -2) => c2 * x * y,
        (2, -1) => c2 * y * z,
        (2, 0) => 0.25 * (5.0 / PI).sqrt() * (2.0 * z * z - x * x - y * y),
        (2, 1) => c2 * x * z,
        (2, 2) => 0.5 * c2 * (x * x - y * y),
        _ => panic!("solid harmonic ({l}, {k}) not tabulated"),
    }
}

/// Gradient of [`solid_harmonic`].
pub fn solid_harmonic_gradient(l: usize, k: i64, p: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = p;
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let c2 = 0.5 * (15.0 / PI).sqrt();
    let c20 = 0.25 * (5.0 / PI).sqrt();
    match (l, k) {
        (0, 0) => [0.0; 3],
        (1, -1) => [0.0, c1, 0.0],
        (1, 0) => [0.0, 0.0, c1],
        (1, 1) => [c1, 0.0, 0.0],
        (2, -2) => [c2 * y, c2 * x, 0.0],
        (2, -1) => [0.0, c2 * z, c2 * y],
        (2, 0) => [-2.0 * c20 * x, -2.0 * c20 * y, 4.0 * c20 * z],
        (2, 1) => [c2 * z, 0.0, c2 * x],
        (2, 2) => [c2 * x, -c2 * y, 0.0],
        _ => panic!("solid harmonic ({l}, {k}) not tabulated"),
    }
}
