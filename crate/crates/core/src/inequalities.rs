//! Numerical verification of the weighted Hardy and trace inequalities, the
//! classical Hardy inequality and the lower bound that characterizes the
//! operator domain, on randomly sampled compactly supported test functions.
//!
//! Every check reduces to one-dimensional radial integrals of sphere averages.
//! [`RadialProfile`] evaluates a field once on a product grid (composite
//! Simpson in r, a sphere rule in ω) and all weighted norms are read off it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::AngularQuadrature;
use crate::harmonics::{solid_harmonic, solid_harmonic_gradient};
use crate::potential::PotentialSpec;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;
/// Largest number of bump terms in a [`TestFunction`].
pub const MAX_TERMS: usize = 5;
/// Default number of Simpson subintervals on [0, k].
pub const RADIAL_INTERVALS: usize = 2048;
/// Default exactness degree of the angular rule on S².
pub const ANGULAR_DEGREE: usize = 20;
/// Number of equispaced nodes of the rule on S¹.
pub const CIRCLE_POINTS: usize = 128;
/// Relative tolerance granted to every explicit-constant inequality.
pub const RELATIVE_TOL: f64 = 1e-8;

const DIRECTION_CHUNK: usize = 32;

/// Value, gradient and Laplacian of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: [f64; MAX_DIM],
    pub laplacian: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet { value: 0.0, gradient: [0.0; MAX_DIM], laplacian: 0.0 };
}

/// A C¹ field on Rⁿ with compact support and analytic derivatives.
pub trait SmoothField: Sync {
    fn dim(&self) -> usize;
    /// Radius k with supp φ ⊂ B(k).
    fn support_radius(&self) -> f64;
    /// True when the field depends on |x| only.
    fn is_radial(&self) -> bool;
    fn jet(&self, x: &[f64]) -> Jet;
}

/// One term a·(1 − |x−c|²/w²)⁴₊·H(x) with H = 1 for l = 0 and the solid
/// harmonic r^l Y_l^k otherwise (three dimensions only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpTerm {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
    pub l: usize,
    pub k: i64,
}

impl BumpTerm {
    fn jet(&self, x: &[f64], n: usize) -> Jet {
        let mut y = [0.0; MAX_DIM];
        let mut y2 = 0.0;
        for i in 0..n {
            y[i] = x[i] - self.center[i];
            y2 += y[i] * y[i];
        }
        let w2 = self.width * self.width;
        let q = y2 / w2;
        if q >= 1.0 {
            return Jet::ZERO;
        }
        let om = 1.0 - q;
        let om2 = om * om;
        let om3 = om2 * om;
        let bump = om2 * om2;
        let mut grad_bump = [0.0; MAX_DIM];
        for i in 0..n {
            grad_bump[i] = -8.0 * y[i] * om3 / w2;
        }
        let lap_bump = -8.0 * n as f64 * om3 / w2 + 48.0 * y2 * om2 / (w2 * w2);

        let (h, grad_h) = if self.l == 0 {
            (1.0, [0.0; 3])
        } else {
            let p = [x[0], x[1], x[2]];
            (solid_harmonic(self.l, self.k, p), solid_harmonic_gradient(self.l, self.k, p))
        };
        let a = self.amplitude;
        let mut jet = Jet { value: a * bump * h, gradient: [0.0; MAX_DIM], laplacian: a * h * lap_bump };
        for i in 0..n {
            let gh = if i < 3 { grad_h[i] } else { 0.0 };
            jet.gradient[i] = a * (h * grad_bump[i] + bump * gh);
            jet.laplacian += 2.0 * a * grad_bump[i] * gh;
        }
        jet
    }
}

/// A sum of at most [`MAX_TERMS`] bump terms supported in B(k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    dim: usize,
    support: f64,
    terms: Vec<BumpTerm>,
}

impl TestFunction {
    pub fn new(dim: usize, support: f64, terms: Vec<BumpTerm>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Domain(format!("dimension must be in [2, {MAX_DIM}], got {dim}")));
        }
        if !(support.is_finite() && support > 0.0) {
            return Err(Error::Domain(format!("support radius must be positive, got {support}")));
        }
        if terms.len() > MAX_TERMS {
            return Err(Error::Domain(format!("at most {MAX_TERMS} terms, got {}", terms.len())));
        }
        for term in &terms {
            if term.center.len() != dim {
                return Err(Error::Contract(format!("center has {} coordinates, expected {dim}", term.center.len())));
            }
            if !(term.width.is_finite() && term.width > 0.0) || !term.amplitude.is_finite() {
                return Err(Error::Domain("bump width must be positive and amplitude finite".into()));
            }
            if norm(&term.center) + term.width > support * (1.0 + 1e-12) {
                return Err(Error::Domain("bump leaves the support ball".into()));
            }
            if term.l > 2 || term.k.unsigned_abs() as usize > term.l {
                return Err(Error::Domain(format!("harmonic ({}, {}) not available", term.l, term.k)));
            }
            if term.l > 0 && dim != 3 {
                return Err(Error::Domain("harmonic factors require dimension 3".into()));
            }
            if dim > 3 && (term.l > 0 || term.center.iter().any(|&c| c != 0.0)) {
                return Err(Error::Domain("dimensions above 3 take radial terms only".into()));
            }
        }
        Ok(Self { dim, support, terms })
    }

    pub fn zero(dim: usize, support: f64) -> Result<Self> {
        Self::new(dim, support, Vec::new())
    }

    pub fn terms(&self) -> &[BumpTerm] {
        &self.terms
    }

    /// True when every bump stays away from the origin (|c_i| > w_i).
    pub fn vanishes_near_origin(&self) -> bool {
        self.terms.iter().all(|t| norm(&t.center) > t.width)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.jet(x).value
    }
}

impl SmoothField for TestFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn support_radius(&self) -> f64 {
        self.support
    }

    fn is_radial(&self) -> bool {
        self.terms.iter().all(|t| t.l == 0 && t.center.iter().all(|&c| c == 0.0))
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let mut total = Jet::ZERO;
        for term in &self.terms {
            let j = term.jet(x, self.dim);
            total.value += j.value;
            total.laplacian += j.laplacian;
            for i in 0..self.dim {
                total.gradient[i] += j.gradient[i];
            }
        }
        total
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match n {
        2 => {
            let a = rng.random_range(0.0..2.0 * PI);
            vec![a.cos(), a.sin()]
        }
        3 => {
            let z: f64 = rng.random_range(-1.0..1.0);
            let a = rng.random_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            vec![s * a.cos(), s * a.sin(), z]
        }
        _ => vec![0.0; n],
    }
}

fn random_harmonic(rng: &mut ChaCha8Rng) -> (usize, i64) {
    let l = rng.random_range(0..=2usize);
    let k = rng.random_range(-(l as i64)..=l as i64);
    (l, k)
}

/// Deterministic random test function on Rⁿ supported in B(k).
///
/// In three dimensions the terms are off-center bumps carrying solid harmonics
/// of degree ≤ 2. In two dimensions the bumps avoid the origin so that φ/r is
/// square integrable. Above three dimensions the terms are centered radial
/// bumps.
pub fn sample_test_function(seed: u64, k: f64, n: usize) -> Result<TestFunction> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!("support radius must be positive, got {k}")));
    }
    if n == 2 {
        return sample_annular(seed, k, 2);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=MAX_TERMS);
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let amplitude = rng.random_range(-1.0..1.0);
        if n == 3 {
            let width = k * rng.random_range(0.2..0.9);
            let radius = (k - width) * rng.random_range(0.0..1.0);
            let center = random_direction(&mut rng, 3).into_iter().map(|c| c * radius).collect();
            let (l, hk) = random_harmonic(&mut rng);
            terms.push(BumpTerm { amplitude, center, width, l, k: hk });
        } else {
            let width = k * rng.random_range(0.2..1.0);
            terms.push(BumpTerm { amplitude, center: vec![0.0; n], width, l: 0, k: 0 });
        }
    }
    TestFunction::new(n, k, terms)
}

/// Deterministic random test function supported in B(k) and vanishing on a
/// neighborhood of the origin (n ∈ {2, 3}).
pub fn sample_annular_test_function(seed: u64, k: f64, n: usize) -> Result<TestFunction> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!("support radius must be positive, got {k}")));
    }
    if n != 2 && n != 3 {
        return Err(Error::Domain(format!("annular samples exist for n = 2, 3, got {n}")));
    }
    sample_annular(seed, k, n)
}

fn sample_annular(seed: u64, k: f64, n: usize) -> Result<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=MAX_TERMS);
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let amplitude = rng.random_range(-1.0..1.0);
        let width = k * rng.random_range(0.1..0.45);
        let radius = width + (k - 2.0 * width) * rng.random_range(0.05..1.0);
        let center = random_direction(&mut rng, n).into_iter().map(|c| c * radius).collect();
        let (l, hk) = if n == 3 { random_harmonic(&mut rng) } else { (0, 0) };
        terms.push(BumpTerm { amplitude, center, width, l, k: hk });
    }
    TestFunction::new(n, k, terms)
}

/// Surface area of the unit sphere S^{n−1}.
pub fn sphere_area(n: usize) -> f64 {
    let mut area = if n.is_multiple_of(2) { 2.0 * PI } else { 4.0 * PI };
    let mut m = if n.is_multiple_of(2) { 2 } else { 3 };
    while m < n {
        area *= 2.0 * PI / m as f64;
        m += 2;
    }
    area
}

struct SphereRule {
    directions: Vec<[f64; MAX_DIM]>,
    weights: Vec<f64>,
}

fn sphere_rule(field: &dyn SmoothField, degree: usize) -> Result<SphereRule> {
    let n = field.dim();
    let mut directions = Vec::new();
    let mut weights = Vec::new();
    match n {
        2 => {
            for q in 0..CIRCLE_POINTS {
                let a = 2.0 * PI * q as f64 / CIRCLE_POINTS as f64;
                let mut d = [0.0; MAX_DIM];
                d[0] = a.cos();
                d[1] = a.sin();
                directions.push(d);
                weights.push(2.0 * PI / CIRCLE_POINTS as f64);
            }
        }
        3 => {
            for node in AngularQuadrature::new(degree).nodes() {
                let [x, y, z] = node.direction();
                let mut d = [0.0; MAX_DIM];
                d[..3].copy_from_slice(&[x, y, z]);
                directions.push(d);
                weights.push(node.weight);
            }
        }
        _ if n <= MAX_DIM => {
            if !field.is_radial() {
                return Err(Error::Domain(format!("dimension {n} supports radial fields only")));
            }
            let mut d = [0.0; MAX_DIM];
            d[0] = 1.0;
            directions.push(d);
            weights.push(sphere_area(n));
        }
        _ => return Err(Error::Domain(format!("dimension {n} exceeds {MAX_DIM}"))),
    }
    Ok(SphereRule { directions, weights })
}

/// Composite Simpson rule on equispaced samples (odd count).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    debug_assert!(values.len() % 2 == 1);
    let last = values.len() - 1;
    let mut sum = values[0] + values[last];
    for (i, v) in values.iter().enumerate().take(last).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    sum * h / 3.0
}

fn simpson_weight(i: usize, last: usize, h: f64) -> f64 {
    let c = if i == 0 || i == last {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    };
    c * h / 3.0
}

/// x·r^e with the convention 0·r^e = 0 at r = 0.
fn radial_power(x: f64, r: f64, e: i32) -> f64 {
    if x == 0.0 {
        0.0
    } else if r == 0.0 {
        match e.cmp(&0) {
            std::cmp::Ordering::Greater => 0.0,
            std::cmp::Ordering::Equal => x,
            std::cmp::Ordering::Less => f64::INFINITY,
        }
    } else {
        x * r.powi(e)
    }
}

/// Sphere integrals of a field on the radial Simpson grid of [0, k].
///
/// The `*_density` arrays carry the volume factor r^{n−1}, so a weighted norm
/// ‖ω(r)·X‖² is `simpson(ω² · X_density)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub dim: usize,
    pub support: f64,
    pub spacing: f64,
    pub radii: Vec<f64>,
    /// ∫ φ(rω)² dω.
    pub sphere_l2: Vec<f64>,
    /// r^{n−1} ∫ φ² dω.
    pub value_density: Vec<f64>,
    /// r^{n−1} ∫ (∂_r φ)² dω.
    pub radial_density: Vec<f64>,
    /// r^{n−1} ∫ (φ/r)² dω.
    pub over_r_density: Vec<f64>,
    /// r^{n−1} ∫ (∂_r φ + φ/r)² dω.
    pub combined_density: Vec<f64>,
    /// r^{n−1} ∫ |∇φ|² dω.
    pub gradient_density: Vec<f64>,
    /// r^{n−1} ∫ (Δφ)² dω.
    pub laplacian_density: Vec<f64>,
    /// r^{n−1} ∫ φ·Δφ dω.
    pub cross_density: Vec<f64>,
    /// r^{n−1} ∫ (φ/r²)² dω.
    pub over_r2_density: Vec<f64>,
    /// Per direction: (∫ (∂_r φ)² dr, ∫ φ²/r² dr) along the ray.
    pub rays: Vec<(f64, f64)>,
}

#[derive(Clone)]
struct Accumulator {
    sphere_l2: Vec<f64>,
    radial: Vec<f64>,
    combined: Vec<f64>,
    gradient: Vec<f64>,
    laplacian: Vec<f64>,
    cross: Vec<f64>,
}

impl Accumulator {
    fn zeros(len: usize) -> Self {
        let z = vec![0.0; len];
        Self {
            sphere_l2: z.clone(),
            radial: z.clone(),
            combined: z.clone(),
            gradient: z.clone(),
            laplacian: z.clone(),
            cross: z,
        }
    }

    fn add(&mut self, other: &Accumulator) {
        let pairs = [
            (&mut self.sphere_l2, &other.sphere_l2),
            (&mut self.radial, &other.radial),
            (&mut self.combined, &other.combined),
            (&mut self.gradient, &other.gradient),
            (&mut self.laplacian, &other.laplacian),
            (&mut self.cross, &other.cross),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

impl RadialProfile {
    /// Evaluates `field` on `intervals` Simpson subintervals of [0, k] and the
    /// sphere rule of the given degree (S² only; S¹ uses [`CIRCLE_POINTS`]).
    pub fn compute(field: &dyn SmoothField, intervals: usize, angular_degree: usize) -> Result<Self> {
        if intervals < 2 || intervals % 2 == 1 {
            return Err(Error::Domain(format!("Simpson needs an even interval count >= 2, got {intervals}")));
        }
        let n = field.dim();
        let rule = sphere_rule(field, angular_degree)?;
        let k = field.support_radius();
        let h = k / intervals as f64;
        let radii: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
        let len = radii.len();

        let chunks: Vec<(Accumulator, Vec<(f64, f64)>)> = rule
            .directions
            .par_chunks(DIRECTION_CHUNK)
            .zip(rule.weights.par_chunks(DIRECTION_CHUNK))
            .map(|(dirs, weights)| {
                let mut acc = Accumulator::zeros(len);
                let mut rays = Vec::with_capacity(dirs.len());
                let mut x = [0.0; MAX_DIM];
                for (d, &w) in dirs.iter().zip(weights) {
                    let mut ray_radial = 0.0;
                    let mut ray_over = 0.0;
                    for (i, &r) in radii.iter().enumerate() {
                        for c in 0..n {
                            x[c] = r * d[c];
                        }
                        let jet = field.jet(&x[..n]);
                        let phi = jet.value;
                        let dr: f64 = (0..n).map(|c| d[c] * jet.gradient[c]).sum();
                        let grad2: f64 = jet.gradient[..n].iter().map(|g| g * g).sum();
                        let combined = r * dr + phi;
                        acc.sphere_l2[i] += w * phi * phi;
                        acc.radial[i] += w * dr * dr;
                        acc.combined[i] += w * combined * combined;
                        acc.gradient[i] += w * grad2;
                        acc.laplacian[i] += w * jet.laplacian * jet.laplacian;
                        acc.cross[i] += w * phi * jet.laplacian;
                        let sw = simpson_weight(i, len - 1, h);
                        ray_radial += sw * dr * dr;
                        ray_over += sw * radial_power(phi * phi, r, -2);
                    }
                    rays.push((ray_radial, ray_over));
                }
                (acc, rays)
            })
            .collect();

        let mut acc = Accumulator::zeros(len);
        let mut rays = Vec::with_capacity(rule.directions.len());
        for (chunk, chunk_rays) in &chunks {
            acc.add(chunk);
            rays.extend_from_slice(chunk_rays);
        }

        let e = n as i32 - 1;
        let vol = |data: &[f64], shift: i32| -> Vec<f64> {
            data.iter().zip(&radii).map(|(&x, &r)| radial_power(x, r, e + shift)).collect()
        };
        Ok(Self {
            dim: n,
            support: k,
            spacing: h,
            value_density: vol(&acc.sphere_l2, 0),
            radial_density: vol(&acc.radial, 0),
            over_r_density: vol(&acc.sphere_l2, -2),
            combined_density: vol(&acc.combined, -2),
            gradient_density: vol(&acc.gradient, 0),
            laplacian_density: vol(&acc.laplacian, 0),
            cross_density: vol(&acc.cross, 0),
            over_r2_density: vol(&acc.sphere_l2, -4),
            sphere_l2: acc.sphere_l2,
            radii,
            rays,
        })
    }

    /// (∫ (1+k−r)^power · density dr)^{1/2}.
    pub fn weighted_norm(&self, density: &[f64], power: f64) -> f64 {
        let k = self.support;
        let values: Vec<f64> = density
            .iter()
            .zip(&self.radii)
            .map(|(&d, &r)| if d == 0.0 { 0.0 } else { (1.0 + k - r).powf(power) * d })
            .collect();
        simpson(&values, self.spacing).max(0.0).sqrt()
    }

    /// (∫ density dr)^{1/2}.
    pub fn norm(&self, density: &[f64]) -> f64 {
        simpson(density, self.spacing).max(0.0).sqrt()
    }
}

/// One evaluation of an inequality lhs ≤ C·rhs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs / rhs; zero when both sides vanish.
    pub ratio: f64,
    /// The constant C, absent for implicit-constant inequalities.
    pub bound: Option<f64>,
    /// Both sides vanish.
    pub skipped: bool,
    pub holds: bool,
}

impl RatioReport {
    pub fn new(lhs: f64, rhs: f64, bound: Option<f64>) -> Self {
        let skipped = lhs == 0.0 && rhs == 0.0;
        let ratio = if skipped {
            0.0
        } else if rhs > 0.0 {
            lhs / rhs
        } else {
            f64::INFINITY
        };
        let holds = match bound {
            Some(c) => skipped || lhs <= c * rhs * (1.0 + RELATIVE_TOL),
            None => ratio.is_finite(),
        };
        Self { lhs, rhs, ratio, bound, skipped, holds }
    }

    /// lhs / (C·rhs); at most 1 + tolerance when the inequality holds.
    pub fn normalized(&self) -> f64 {
        match self.bound {
            Some(c) if !self.skipped => self.ratio / c,
            _ => self.ratio,
        }
    }
}

/// Two inequalities checked on the same function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub first: RatioReport,
    pub second: RatioReport,
}

/// ‖(1+k−r)^{(s−2)/2}φ‖ ≤ (2/(s−1))‖(1+k−r)^{s/2}∂_rφ‖ + ((n−1)/(s−1))‖(1+k−r)^{s/2}φ/r‖
/// for s > 1, constant folded into the right side.
pub fn check_weighted_l2_bound(profile: &RadialProfile, s: f64) -> Result<RatioReport> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::Domain(format!("the weighted L2 bound is checked for s > 1, got {s}")));
    }
    let n = profile.dim as f64;
    let lhs = profile.weighted_norm(&profile.value_density, s - 2.0);
    let dr = profile.weighted_norm(&profile.radial_density, s);
    let over = profile.weighted_norm(&profile.over_r_density, s);
    let rhs = 2.0 / (s - 1.0) * dr + (n - 1.0) / (s - 1.0) * over;
    Ok(RatioReport::new(lhs, rhs, Some(1.0)))
}

/// sup_r r^{(n−2)/2}(1+k+r)^{1/2}(1+k−r)^{(s−1)/2}‖φ(rω)‖_{L²(S^{n−1})} against
/// ‖(1+k−r)^{s/2}∂_rφ‖ + ‖(1+k−r)^{s/2}φ/r‖. The constant is implicit.
pub fn sup_trace_ratio(profile: &RadialProfile, s: f64) -> Result<(RatioReport, f64)> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::Domain(format!("the sup trace bound is checked for s > 1, got {s}")));
    }
    let n = profile.dim as f64;
    let k = profile.support;
    let mut lhs = 0.0;
    let mut argmax = 0.0;
    for (&r, &l2) in profile.radii.iter().zip(&profile.sphere_l2) {
        let radial = if r == 0.0 && n == 2.0 { 1.0 } else { r.powf((n - 2.0) / 2.0) };
        let v = radial * (1.0 + k + r).sqrt() * (1.0 + k - r).powf((s - 1.0) / 2.0) * l2.max(0.0).sqrt();
        if v > lhs {
            lhs = v;
            argmax = r;
        }
    }
    let rhs = profile.weighted_norm(&profile.radial_density, s) + profile.weighted_norm(&profile.over_r_density, s);
    Ok((RatioReport::new(lhs, rhs, None), argmax))
}

/// ‖(1+k−r)^{s/2}φ/r‖ ≤ 2‖(1+k−r)^{s/2}(∂_rφ + φ/r)‖ (first) and
/// ‖(1+k−r)^{s/2}∂_rφ‖ ≤ ‖(1+k−r)^{s/2}(∂_rφ + φ/r)‖ (second), n = 3, s ≥ 0.
pub fn check_hardy_weighted(profile: &RadialProfile, s: f64) -> Result<PairReport> {
    if profile.dim != 3 {
        return Err(Error::Domain(format!("weighted Hardy bounds are three-dimensional, got n = {}", profile.dim)));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Domain(format!("weighted Hardy bounds need s >= 0, got {s}")));
    }
    let combined = profile.weighted_norm(&profile.combined_density, s);
    let over = profile.weighted_norm(&profile.over_r_density, s);
    let dr = profile.weighted_norm(&profile.radial_density, s);
    Ok(PairReport {
        first: RatioReport::new(over, combined, Some(2.0)),
        second: RatioReport::new(dr, combined, Some(1.0)),
    })
}

/// ‖φ/r‖² ≤ 4‖∇φ‖² in R³; the ratio is reported as ‖φ/r‖²/‖∇φ‖².
pub fn check_hardy_classic(profile: &RadialProfile) -> Result<RatioReport> {
    if profile.dim != 3 {
        return Err(Error::Domain(format!("the Hardy inequality is checked in R³, got n = {}", profile.dim)));
    }
    let lhs = simpson(&profile.over_r_density, profile.spacing);
    let rhs = simpson(&profile.gradient_density, profile.spacing);
    Ok(RatioReport::new(lhs, rhs, Some(4.0)))
}

/// ∫ f² / r² dr ≤ 4 ∫ (f′)² dr along every ray f(r) = φ(rω) of the sphere rule,
/// for φ vanishing near the origin. Reports the ray with the largest ratio.
pub fn check_hardy_rays(profile: &RadialProfile) -> Result<RatioReport> {
    let mut worst = RatioReport::new(0.0, 0.0, Some(4.0));
    for &(radial, over) in &profile.rays {
        if !over.is_finite() {
            return Err(Error::Domain("the one-dimensional Hardy bound needs φ to vanish near the origin".into()));
        }
        let report = RatioReport::new(over, radial, Some(4.0));
        if worst.skipped || (!report.skipped && report.ratio > worst.ratio) {
            worst = report;
        }
    }
    Ok(worst)
}

/// For u vanishing near the origin and g = −Δu + χ(r)u/r²:
/// (c − 3/4)‖u/|x|²‖ ≤ ‖g‖ (first) and the empirical constant of ‖Δu‖ ≤ C‖g‖
/// (second, implicit bound).
pub fn check_domain_bound(profile: &RadialProfile, spec: &PotentialSpec) -> Result<PairReport> {
    if profile.dim != 3 {
        return Err(Error::Domain(format!("the domain bound is three-dimensional, got n = {}", profile.dim)));
    }
    if profile.over_r2_density.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("the domain bound needs u to vanish near the origin".into()));
    }
    let g_density: Vec<f64> = profile
        .radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if profile.value_density[i] == 0.0 {
                return profile.laplacian_density[i];
            }
            let v = spec.v_unchecked(r);
            profile.laplacian_density[i] - 2.0 * v * profile.cross_density[i] + v * v * profile.value_density[i]
        })
        .collect();
    let g = profile.norm(&g_density);
    let lower = spec.hardy_margin() * profile.norm(&profile.over_r2_density);
    let lap = profile.norm(&profile.laplacian_density);
    Ok(PairReport {
        first: RatioReport::new(lower, g, Some(1.0)),
        second: RatioReport::new(lap, g, None),
    })
}

/// Aggregate of one inequality family over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub name: String,
    /// The explicit constant, as printed.
    pub constant: String,
    pub samples: usize,
    pub skipped: usize,
    pub failures: usize,
    /// Largest lhs/rhs over the samples.
    pub max_ratio: f64,
    /// Largest lhs/(C·rhs) over the samples.
    pub max_normalized: f64,
    pub passed: bool,
}

impl FamilyReport {
    pub fn from_reports(name: &str, constant: &str, reports: &[RatioReport]) -> Self {
        let skipped = reports.iter().filter(|r| r.skipped).count();
        let failures = reports.iter().filter(|r| !r.holds).count();
        let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let max_normalized = reports.iter().map(|r| r.normalized()).fold(0.0, f64::max);
        Self {
            name: name.to_string(),
            constant: constant.to_string(),
            samples: reports.len(),
            skipped,
            failures,
            max_ratio,
            max_normalized,
            passed: failures == 0 && skipped < reports.len(),
        }
    }
}

/// Per-k maxima of the sup trace ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KIndependenceReport {
    pub s: f64,
    pub samples_per_k: usize,
    pub k_list: Vec<f64>,
    pub max_ratios: Vec<f64>,
    /// max over k / min over k of the per-k maxima.
    pub spread: f64,
    pub passed: bool,
}

/// The empirical constant of ‖Δu‖ ≤ C‖g‖ at two resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
    pub passed: bool,
}

/// Settings of [`verify_inequalities`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySuite {
    pub samples: usize,
    pub seed: u64,
    /// Support radii for the k-independence sweep.
    pub k_list: Vec<f64>,
    /// Samples per k in the k-independence sweep.
    pub trace_samples: usize,
    /// Exponent s of the sup trace bound.
    pub trace_s: f64,
    /// Exponents for the weighted L² bound (each > 1).
    pub l2_exponents: Vec<f64>,
    /// Exponents for the weighted Hardy bounds (each ≥ 0).
    pub hardy_exponents: Vec<f64>,
    pub potential: PotentialSpec,
    pub radial_intervals: usize,
    pub angular_degree: usize,
}

impl Default for InequalitySuite {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            k_list: vec![1.0, 2.0, 4.0, 8.0],
            trace_samples: 50,
            trace_s: 1.5,
            l2_exponents: vec![1.2, 1.5, 1.8],
            hardy_exponents: vec![0.0, 1.0, 1.8],
            potential: PotentialSpec::inverse_square(1.0).expect("a = 1 is admissible"),
            radial_intervals: RADIAL_INTERVALS,
            angular_degree: ANGULAR_DEGREE,
        }
    }
}

impl InequalitySuite {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::config("inequalities.samples", "must be positive"));
        }
        if self.trace_samples == 0 {
            return Err(Error::config("inequalities.trace_samples", "must be positive"));
        }
        if self.k_list.is_empty() || self.k_list.iter().any(|&k| !(k.is_finite() && k >= 1.0)) {
            return Err(Error::config("inequalities.k_list", "needs at least one radius, each >= 1"));
        }
        if !(self.trace_s.is_finite() && self.trace_s > 1.0) {
            return Err(Error::config("inequalities.trace_s", "must exceed 1"));
        }
        if self.l2_exponents.iter().any(|&s| !(s.is_finite() && s > 1.0)) {
            return Err(Error::config("inequalities.l2_exponents", "each exponent must exceed 1"));
        }
        if self.hardy_exponents.iter().any(|&s| !(s.is_finite() && s >= 0.0)) {
            return Err(Error::config("inequalities.hardy_exponents", "each exponent must be >= 0"));
        }
        if self.radial_intervals < 2 || self.radial_intervals % 2 == 1 {
            return Err(Error::config("inequalities.radial_intervals", "must be even and >= 2"));
        }
        Ok(())
    }
}

/// Results of the whole inequality suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub families: Vec<FamilyReport>,
    pub sup_trace: KIndependenceReport,
    pub laplacian_constant: RefinementReport,
    pub passed: bool,
}

const L2_RADII: [f64; 3] = [1.0, 2.0, 4.0];
const ANNULAR_RADIUS: f64 = 2.0;

fn profiles<F>(count: usize, make: F, intervals: usize, degree: usize) -> Result<Vec<RadialProfile>>
where
    F: Fn(usize) -> Result<TestFunction> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| make(i).and_then(|phi| RadialProfile::compute(&phi, intervals, degree)))
        .collect()
}

/// Runs every inequality family on seeded samples.
pub fn verify_inequalities(suite: &InequalitySuite) -> Result<InequalityReport> {
    suite.validate()?;
    let (m, iv, deg) = (suite.samples, suite.radial_intervals, suite.angular_degree);
    let seed = |i: usize| suite.seed.wrapping_add(i as u64);

    let by_dim: Vec<Vec<RadialProfile>> = [2usize, 3, 4]
        .iter()
        .map(|&n| profiles(m, |i| sample_test_function(seed(i), L2_RADII[i % L2_RADII.len()], n), iv, deg))
        .collect::<Result<_>>()?;
    let three = &by_dim[1];
    let annular = profiles(m, |i| sample_annular_test_function(seed(i), ANNULAR_RADIUS, 3), iv, deg)?;

    let mut l2 = Vec::new();
    for profile in by_dim.iter().flatten() {
        for &s in &suite.l2_exponents {
            l2.push(check_weighted_l2_bound(profile, s)?);
        }
    }
    let mut weighted_first = Vec::new();
    let mut weighted_second = Vec::new();
    for profile in three {
        for &s in &suite.hardy_exponents {
            let pair = check_hardy_weighted(profile, s)?;
            weighted_first.push(pair.first);
            weighted_second.push(pair.second);
        }
    }
    let classic: Vec<RatioReport> = three.iter().map(check_hardy_classic).collect::<Result<_>>()?;
    let rays: Vec<RatioReport> = annular.iter().map(check_hardy_rays).collect::<Result<_>>()?;
    let domain: Vec<PairReport> = annular.iter().map(|p| check_domain_bound(p, &suite.potential)).collect::<Result<_>>()?;
    let lower: Vec<RatioReport> = domain.iter().map(|p| p.first).collect();

    let families = vec![
        FamilyReport::from_reports("weighted_l2_bound", "2/(s-1), (n-1)/(s-1)", &l2),
        FamilyReport::from_reports("weighted_hardy", "2", &weighted_first),
        FamilyReport::from_reports("weighted_radial_derivative", "1", &weighted_second),
        FamilyReport::from_reports("hardy_3d", "4", &classic),
        FamilyReport::from_reports("hardy_1d", "1/4", &rays),
        FamilyReport::from_reports("domain_lower_bound", &format!("{}", suite.potential.hardy_margin()), &lower),
    ];

    let mut max_ratios = Vec::with_capacity(suite.k_list.len());
    for &k in &suite.k_list {
        let set = profiles(suite.trace_samples, |i| sample_test_function(seed(i), k, 3), iv, deg)?;
        let mut worst: f64 = 0.0;
        for profile in &set {
            worst = worst.max(sup_trace_ratio(profile, suite.trace_s)?.0.ratio);
        }
        max_ratios.push(worst);
    }
    let hi = max_ratios.iter().cloned().fold(0.0, f64::max);
    let lo = max_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    let sup_trace = KIndependenceReport {
        s: suite.trace_s,
        samples_per_k: suite.trace_samples,
        k_list: suite.k_list.clone(),
        max_ratios,
        spread,
        passed: spread.is_finite() && spread < 2.0,
    };

    let coarse = domain.iter().map(|p| p.second.ratio).fold(0.0, f64::max);
    let fine_profiles = profiles(m, |i| sample_annular_test_function(seed(i), ANNULAR_RADIUS, 3), 2 * iv, deg + 8)?;
    let mut fine: f64 = 0.0;
    for profile in &fine_profiles {
        fine = fine.max(check_domain_bound(profile, &suite.potential)?.second.ratio);
    }
    let relative_change = (fine - coarse).abs() / coarse;
    let laplacian_constant = RefinementReport {
        coarse,
        fine,
        relative_change,
        passed: relative_change.is_finite() && relative_change < 0.2,
    };

    let passed = families.iter().all(|f| f.passed) && sup_trace.passed && laplacian_constant.passed;
    Ok(InequalityReport { families, sup_trace, laplacian_constant, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::gauss_legendre;
    use proptest::prelude::*;

    struct Gaussian;

    impl SmoothField for Gaussian {
        fn dim(&self) -> usize {
            3
        }
        fn support_radius(&self) -> f64 {
            9.0
        }
        fn is_radial(&self) -> bool {
            true
        }
        fn jet(&self, x: &[f64]) -> Jet {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let e = (-r2 / 2.0).exp();
            let mut gradient = [0.0; MAX_DIM];
            for i in 0..3 {
                gradient[i] = -x[i] * e;
            }
            Jet { value: e, gradient, laplacian: (r2 - 3.0) * e }
        }
    }

    fn radial_bump() -> TestFunction {
        let term = BumpTerm { amplitude: 1.0, center: vec![0.0; 3], width: 1.0, l: 0, k: 0 };
        TestFunction::new(3, 1.0, vec![term]).unwrap()
    }

    /// ∫_0^1 f by 64-point Gauss–Legendre on 8 panels.
    fn gl(f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = gauss_legendre(64);
        let panels = 8;
        let mut sum = 0.0;
        for p in 0..panels {
            let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            for (xi, wi) in x.iter().zip(&w) {
                sum += wi * 0.5 * (b - a) * f(0.5 * (b - a) * xi + 0.5 * (a + b));
            }
        }
        sum
    }

    #[test]
    fn sampling_is_deterministic_and_supported() {
        for n in 2..=4 {
            let a = sample_test_function(7, 2.0, n).unwrap();
            let b = sample_test_function(7, 2.0, n).unwrap();
            assert_eq!(a, b);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..50 {
                let mut x = if n <= 3 { random_direction(&mut rng, n) } else { vec![0.0; n] };
                if n > 3 {
                    x[0] = 1.0;
                }
                let x: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
                assert_eq!(a.value(&x), 0.0);
            }
        }
    }

    #[test]
    fn sampled_functions_are_nonzero() {
        for seed in 0..100 {
            let phi = sample_test_function(seed, 1.0, 3).unwrap();
            let p = RadialProfile::compute(&phi, 256, 10).unwrap();
            assert!(p.norm(&p.value_density) > 0.0, "seed {seed}");
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let phi = sample_test_function(3, 1.5, 3).unwrap();
        let x = [0.21, -0.33, 0.17];
        let jet = phi.jet(&x);
        let h = 1e-4;
        let mut lap = -6.0 * jet.value;
        for i in 0..3 {
            let mut p = x;
            let mut m = x;
            p[i] += h;
            m[i] -= h;
            let (fp, fm) = (phi.value(&p), phi.value(&m));
            assert!((jet.gradient[i] - (fp - fm) / (2.0 * h)).abs() < 1e-6);
            lap += fp + fm;
        }
        assert!((jet.laplacian - lap / (h * h)).abs() < 1e-4 * (1.0 + jet.laplacian.abs()));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_hardy_ratio_is_four_thirds() {
        let p = RadialProfile::compute(&Gaussian, RADIAL_INTERVALS, 4).unwrap();
        let report = check_hardy_classic(&p).unwrap();
        assert!((report.ratio - 4.0 / 3.0).abs() < 1e-10, "{}", report.ratio);
        assert!(report.holds);
    }

    #[test]
    fn radial_bump_weighted_l2_matches_one_dimensional_quadrature() {
        let (s, k) = (1.5, 1.0);
        let p = RadialProfile::compute(&radial_bump(), RADIAL_INTERVALS, 8).unwrap();
        let report = check_weighted_l2_bound(&p, s).unwrap();
        let area = 4.0 * PI;
        let phi = |r: f64| (1.0 - r * r).powi(4);
        let dphi = |r: f64| -8.0 * r * (1.0 - r * r).powi(3);
        let lhs = (area * gl(|r| (1.0 + k - r).powf(s - 2.0) * phi(r).powi(2) * r * r)).sqrt();
        let dr = (area * gl(|r| (1.0 + k - r).powf(s) * dphi(r).powi(2) * r * r)).sqrt();
        let over = (area * gl(|r| (1.0 + k - r).powf(s) * phi(r).powi(2))).sqrt();
        let rhs = 2.0 / (s - 1.0) * dr + 2.0 / (s - 1.0) * over;
        assert!((report.lhs - lhs).abs() < 1e-10 * lhs);
        assert!((report.rhs - rhs).abs() < 1e-10 * rhs);
        assert!(report.holds && lhs <= rhs);
    }

    #[test]
    fn zero_function_gives_trivial_reports() {
        let zero = TestFunction::zero(3, 1.0).unwrap();
        let p = RadialProfile::compute(&zero, 64, 4).unwrap();
        let l2 = check_weighted_l2_bound(&p, 1.5).unwrap();
        assert!(l2.skipped && l2.holds && l2.lhs == 0.0);
        let pair = check_hardy_weighted(&p, 1.0).unwrap();
        assert!(pair.first.holds && pair.second.holds);
        assert!(check_hardy_classic(&p).unwrap().skipped);
        assert_eq!(sup_trace_ratio(&p, 1.5).unwrap().0.ratio, 0.0);
        let d = check_domain_bound(&p, &PotentialSpec::inverse_square(1.0).unwrap()).unwrap();
        assert!(d.first.holds && d.first.lhs == 0.0);
    }

    #[test]
    fn radial_derivative_bound_is_an_identity_at_s_zero() {
        for seed in 0..10 {
            let phi = sample_test_function(seed, 2.0, 3).unwrap();
            let p = RadialProfile::compute(&phi, RADIAL_INTERVALS, 12).unwrap();
            let pair = check_hardy_weighted(&p, 0.0).unwrap();
            assert!((pair.second.ratio - 1.0).abs() < 1e-9, "seed {seed}: {}", pair.second.ratio);
        }
    }

    #[test]
    fn sup_trace_maximum_lies_inside_support() {
        let p = RadialProfile::compute(&radial_bump(), RADIAL_INTERVALS, 8).unwrap();
        let (report, argmax) = sup_trace_ratio(&p, 1.5).unwrap();
        assert!(report.ratio.is_finite() && report.ratio > 0.0);
        assert!(argmax > 0.0 && argmax < 1.0);
    }

    #[test]
    fn hardy_rays_need_vanishing_near_origin() {
        let p = RadialProfile::compute(&radial_bump(), 64, 4).unwrap();
        assert!(check_hardy_rays(&p).is_err());
        assert!(check_domain_bound(&p, &PotentialSpec::inverse_square(1.0).unwrap()).is_err());
        let a = sample_annular_test_function(2, 2.0, 3).unwrap();
        assert!(a.vanishes_near_origin());
        let p = RadialProfile::compute(&a, 512, 12).unwrap();
        assert!(check_hardy_rays(&p).unwrap().holds);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert!(sample_test_function(0, 0.0, 3).is_err());
        assert!(sample_test_function(0, 1.0, 7).is_err());
        let p = RadialProfile::compute(&radial_bump(), 64, 4).unwrap();
        assert!(check_weighted_l2_bound(&p, 1.0).is_err());
        assert!(check_weighted_l2_bound(&p, 0.5).is_err());
        assert!(check_hardy_weighted(&p, -0.1).is_err());
        let off = BumpTerm { amplitude: 1.0, center: vec![0.5, 0.0, 0.0, 0.0], width: 0.2, l: 0, k: 0 };
        assert!(TestFunction::new(4, 1.0, vec![off]).is_err());
        let wide = BumpTerm { amplitude: 1.0, center: vec![0.5, 0.0, 0.0], width: 0.6, l: 0, k: 0 };
        assert!(TestFunction::new(3, 1.0, vec![wide]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn explicit_constants_hold(seed in 0u64..1_000_000, k in 1.0f64..6.0, s in 1.05f64..3.0) {
            let phi = sample_test_function(seed, k, 3).unwrap();
            let p = RadialProfile::compute(&phi, 512, 12).unwrap();
            prop_assert!(check_weighted_l2_bound(&p, s).unwrap().holds);
            let pair = check_hardy_weighted(&p, s - 1.05).unwrap();
            prop_assert!(pair.first.holds && pair.second.holds);
            prop_assert!(check_hardy_classic(&p).unwrap().holds);
            let a = sample_annular_test_function(seed, k, 3).unwrap();
            let pa = RadialProfile::compute(&a, 512, 12).unwrap();
            prop_assert!(check_hardy_rays(&pa).unwrap().holds);
            let spec = PotentialSpec::inverse_square(1.0 + s).unwrap();
            prop_assert!(check_domain_bound(&pa, &spec).unwrap().first.holds);
        }
    }
}
