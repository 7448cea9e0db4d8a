//! Metric distortion of maps: sampled lower bounds, the composition and
//! inversion rules, and bounds read off the differential.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, LinearMapSpectrum, Vector};
use crate::simplex::{Barycentric, EuclideanSimplex};

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum DistortionError {
    #[error("sampling domain has no interior pairs")]
    DegenerateDomain,
    #[error("distortion {0} must be below 1")]
    XiNotLessThanOne(f64),
    #[error("finite-difference step {0:e} too small for the point's scale")]
    StepTooSmall(f64),
    #[error("singular value deviation {found} exceeds the claimed bound {claimed}")]
    SpectrumBoundViolated { claimed: f64, found: f64 },
    #[error("the map moves the fixed vertex by {0:e}")]
    VertexNotFixed(f64),
}

/// Whether a distortion value is a proof or an observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// Derived from an analytic bound; safe to certify with.
    CertifiedUpper,
    /// Maximum over sampled pairs; only ever a lower bound on the truth.
    EmpiricalLower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionBound {
    pub xi: f64,
    pub kind: BoundKind,
    pub provenance: String,
    /// True when the bound rests on hypotheses the caller vouched for.
    pub conditional: bool,
}

impl DistortionBound {
    pub fn certified(xi: f64, provenance: impl Into<String>) -> Self {
        DistortionBound { xi, kind: BoundKind::CertifiedUpper, provenance: provenance.into(), conditional: false }
    }

    pub fn empirical(xi: f64, provenance: impl Into<String>) -> Self {
        DistortionBound { xi, kind: BoundKind::EmpiricalLower, provenance: provenance.into(), conditional: false }
    }

    pub fn is_certified(&self) -> bool {
        self.kind == BoundKind::CertifiedUpper
    }
}

/// Region that sample points are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Simplex(EuclideanSimplex),
    Points(Vec<Vector>),
    Ball { centre: Vector, radius: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Simplex(s) => s.ambient_dim(),
            Domain::Points(p) => p.first().map_or(0, |v| v.dim()),
            Domain::Ball { centre, .. } => centre.dim(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Simplex(s) => s.longest_edge(),
            Domain::Points(p) => {
                let mut d: f64 = 0.0;
                for i in 0..p.len() {
                    for j in i + 1..p.len() {
                        d = d.max(p[i].dist(&p[j]));
                    }
                }
                d
            }
            Domain::Ball { radius, .. } => 2.0 * radius,
        }
    }

    fn is_degenerate(&self) -> bool {
        match self {
            Domain::Simplex(s) => s.dim() == 0 || s.longest_edge() == 0.0,
            Domain::Points(p) => p.len() < 2,
            Domain::Ball { radius, .. } => *radius <= 0.0,
        }
    }

    /// One point drawn uniformly from the domain.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vector {
        match self {
            Domain::Simplex(s) => s.point_at(&uniform_barycentric(rng, s.dim() + 1)),
            Domain::Points(p) => p[rng.gen_range(0..p.len())],
            Domain::Ball { centre, radius } => {
                let n = centre.dim();
                let dir = loop {
                    let g = Vector::from_fn(n, |_| rng.sample(StandardNormal));
                    if let Some(u) = g.normalized() {
                        break u;
                    }
                };
                let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
                *centre + dir * r
            }
        }
    }
}

/// Barycentric coordinates uniform on the simplex, from normalized
/// exponential spacings.
pub fn uniform_barycentric<R: Rng>(rng: &mut R, k: usize) -> Barycentric {
    let mut out: Barycentric = (0..k).map(|_| Exp1.sample(rng)).collect::<Barycentric>();
    let s: f64 = out.iter().sum();
    for x in out.iter_mut() {
        *x /= s;
    }
    out
}

/// A map together with the region it is sampled on.
pub struct SampledMap<F> {
    pub domain: Domain,
    pub evaluator: F,
}

impl<F: Fn(&Vector) -> Vector + Sync> SampledMap<F> {
    pub fn new(domain: Domain, evaluator: F) -> Self {
        SampledMap { domain, evaluator }
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        (self.evaluator)(x)
    }
}

/// `|‖F(x) − F(y)‖ / ‖x − y‖ − 1|`, or zero when `x = y`.
#[inline]
pub fn pair_distortion(x: &Vector, y: &Vector, fx: &Vector, fy: &Vector) -> f64 {
    let d = x.dist(y);
    if d == 0.0 {
        return 0.0;
    }
    (fx.dist(fy) / d - 1.0).abs()
}

const PAIR_CHUNK: usize = 1024;

/// Largest sampled pair distortion. Pair `k` is the same for every call with
/// the same seed, so growing `pairs` never lowers the result.
pub fn measure_distortion<F>(f: &SampledMap<F>, pairs: usize, seed: u64) -> Result<DistortionBound, DistortionError>
where
    F: Fn(&Vector) -> Vector + Sync,
{
    if f.domain.is_degenerate() || pairs == 0 {
        return Err(DistortionError::DegenerateDomain);
    }
    let chunks = pairs.div_ceil(PAIR_CHUNK);
    let xi = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = PAIR_CHUNK.min(pairs - c * PAIR_CHUNK);
            let mut worst: f64 = 0.0;
            for _ in 0..n {
                let x = f.domain.sample(&mut rng);
                let y = f.domain.sample(&mut rng);
                worst = worst.max(pair_distortion(&x, &y, &f.eval(&x), &f.eval(&y)));
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(DistortionBound::empirical(xi, format!("max over {pairs} sampled pairs, seed {seed}")))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// `Π(1 + ξ_i) − 1`, the distortion of a composition of ξ_i-distortion maps.
///
/// Evaluated in double-double arithmetic and rounded once, so short inputs
/// give the correctly rounded value of the exact expression.
pub fn compose_distortion(xis: &[f64]) -> f64 {
    let (mut hi, mut lo) = (1.0f64, 0.0f64);
    for &xi in xis {
        let (bh, bl) = two_sum(1.0, xi);
        let p = hi * bh;
        let mut e = hi.mul_add(bh, -p);
        e += hi * bl + lo * bh;
        (hi, lo) = quick_two_sum(p, e);
    }
    let (s, e) = two_sum(hi, -1.0);
    s + (e + lo)
}

/// `ξ / (1 − ξ)`, the distortion of the inverse of a ξ-distortion map.
pub fn invert_distortion(xi: f64) -> Result<f64, DistortionError> {
    if !(0.0..1.0).contains(&xi) {
        return Err(DistortionError::XiNotLessThanOne(xi));
    }
    let (dh, dl) = two_sum(1.0, -xi);
    let q = xi / dh;
    // One Newton correction against the exact denominator.
    let r = (-q).mul_add(dh, xi) - q * dl;
    Ok(q + r / dh)
}

/// Central-difference Jacobian of `f` at `x`.
pub fn finite_difference_jacobian<F>(f: &F, x: &Vector, h: f64) -> Result<DMatrix<f64>, DistortionError>
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    let scale = 1.0 + x.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(h > 1e-13 * scale) {
        return Err(DistortionError::StepTooSmall(h));
    }
    let m = x.dim();
    let mut cols = Vec::with_capacity(m);
    for i in 0..m {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        let step = xp[i] - xm[i];
        if step == 0.0 {
            return Err(DistortionError::StepTooSmall(h));
        }
        cols.push((f(&xp) - f(&xm)) * (1.0 / step));
    }
    Ok(geom::columns_to_matrix(&cols))
}

/// Singular values of the finite-difference Jacobian of `f` at `x`.
pub fn spectrum_from_distortion<F>(f: &SampledMap<F>, x: &Vector, h: f64) -> Result<LinearMapSpectrum, DistortionError>
where
    F: Fn(&Vector) -> Vector + Sync,
{
    let j = finite_difference_jacobian(&f.evaluator, x, h)?;
    Ok(geom::svd_spectrum(&j))
}

/// Default finite-difference step for a domain.
pub fn default_step(domain: &Domain) -> f64 {
    1e-5 * domain.diameter().max(f64::MIN_POSITIVE)
}

/// Grid points covering a domain: a barycentric lattice of the given
/// resolution for simplices, a cubic lattice clipped to a ball, or the points
/// themselves.
pub fn grid_points(domain: &Domain, resolution: usize) -> Vec<Vector> {
    let res = resolution.max(1);
    match domain {
        Domain::Simplex(s) => {
            let k = s.dim() + 1;
            let mut out = Vec::new();
            let mut counts = vec![0usize; k];
            lattice_compositions(res, k, 0, &mut counts, &mut |c| {
                let lam: Barycentric = c.iter().map(|&n| n as f64 / res as f64).collect();
                out.push(s.point_at(&lam));
            });
            out
        }
        Domain::Points(p) => p.clone(),
        Domain::Ball { centre, radius } => {
            let n = centre.dim();
            let mut out = Vec::new();
            let steps = 2 * res + 1;
            let total = steps.pow(n as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut off = Vector::zeros(n);
                for i in 0..n {
                    off[i] = ((rem % steps) as f64 / res as f64 - 1.0) * radius;
                    rem /= steps;
                }
                if off.norm() <= *radius {
                    out.push(*centre + off);
                }
            }
            out
        }
    }
}

fn lattice_compositions(total: usize, k: usize, i: usize, counts: &mut [usize], emit: &mut dyn FnMut(&[usize])) {
    if i + 1 == k {
        counts[i] = total - counts[..i].iter().sum::<usize>();
        emit(counts);
        return;
    }
    let used: usize = counts[..i].iter().sum();
    for n in 0..=(total - used) {
        counts[i] = n;
        lattice_compositions(total, k, i + 1, counts, emit);
    }
}

/// Certifies `ξ` as a distortion bound from the singular values of the
/// differential, checked on a grid over a convex domain.
///
/// The caller vouches for convexity of the domain and injectivity onto a
/// convex image; the returned bound is marked conditional on that.
pub fn distortion_from_spectrum_bound<F>(f: &SampledMap<F>, xi: f64, resolution: usize) -> Result<DistortionBound, DistortionError>
where
    F: Fn(&Vector) -> Vector + Sync,
{
    if !(0.0..1.0).contains(&xi) {
        return Err(DistortionError::XiNotLessThanOne(xi));
    }
    let h = default_step(&f.domain);
    let mut worst: f64 = 0.0;
    for x in grid_points(&f.domain, resolution) {
        let s = spectrum_from_distortion(f, &x, h)?;
        worst = worst.max(s.max_deviation_from_one());
    }
    // Finite differences of exactly linear maps carry rounding noise.
    if worst > xi + 1e-8 {
        return Err(DistortionError::SpectrumBoundViolated { claimed: xi, found: worst });
    }
    Ok(DistortionBound {
        xi,
        kind: BoundKind::CertifiedUpper,
        provenance: format!("singular values within {xi} of 1 on a resolution-{resolution} grid"),
        conditional: true,
    })
}

/// Checks `‖F(x) − x‖ ≤ ξ‖x − p‖` on sampled points of `s`, where `p` is
/// the vertex `p_index` and `F` fixes it.
pub fn strong_displacement_check<F>(
    f: &SampledMap<F>,
    s: &EuclideanSimplex,
    p_index: usize,
    xi: f64,
    samples: usize,
) -> Result<bool, DistortionError>
where
    F: Fn(&Vector) -> Vector + Sync,
{
    let p = *s.vertex(p_index);
    let moved = f.eval(&p).dist(&p);
    if moved > 1e-9 {
        return Err(DistortionError::VertexNotFixed(moved));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let ok = |x: &Vector| f.eval(x).dist(x) <= xi * x.dist(&p) + 1e-9;
    if !s.vertices().iter().all(ok) {
        return Ok(false);
    }
    for _ in 0..samples {
        let x = s.point_at(&uniform_barycentric(&mut rng, s.dim() + 1));
        if !ok(&x) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> EuclideanSimplex {
        EuclideanSimplex::new([
            Vector::from_slice(&[0.0, 0.0]),
            Vector::from_slice(&[1.0, 0.0]),
            Vector::from_slice(&[0.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn exact_composition_and_inverse() {
        assert_eq!(compose_distortion(&[0.1, 0.2]), 0.32);
        assert_eq!(compose_distortion(&[0.0]), 0.0);
        assert_eq!(compose_distortion(&[]), 0.0);
        assert!((compose_distortion(&[0.1, 0.1, 0.1]) - 0.331).abs() < 1e-16);
        assert_eq!(invert_distortion(0.2).unwrap(), 0.25);
        assert_eq!(invert_distortion(0.5).unwrap(), 1.0);
        assert_eq!(invert_distortion(0.0).unwrap(), 0.0);
        assert!(invert_distortion(1.0).is_err());
    }

    #[test]
    fn measured_distortion_of_simple_maps() {
        let id = SampledMap::new(Domain::Simplex(tri()), |x: &Vector| *x);
        assert_eq!(measure_distortion(&id, 500, 1).unwrap().xi, 0.0);
        let scale = SampledMap::new(Domain::Simplex(tri()), |x: &Vector| *x * 1.1);
        let b = measure_distortion(&scale, 500, 1).unwrap();
        assert!((b.xi - 0.1).abs() < 1e-12);
        assert_eq!(b.kind, BoundKind::EmpiricalLower);
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let rot = SampledMap::new(Domain::Simplex(tri()), move |x: &Vector| {
            Vector::from_slice(&[c * x[0] - s * x[1], s * x[0] + c * x[1]])
        });
        assert!(measure_distortion(&rot, 500, 1).unwrap().xi < 1e-14);
    }

    #[test]
    fn degenerate_domain_is_rejected() {
        let p = EuclideanSimplex::new([Vector::from_slice(&[1.0, 1.0])]).unwrap();
        let f = SampledMap::new(Domain::Simplex(p), |x: &Vector| *x);
        assert_eq!(measure_distortion(&f, 10, 0), Err(DistortionError::DegenerateDomain));
    }

    #[test]
    fn spectrum_of_linear_maps() {
        let f = SampledMap::new(Domain::Simplex(tri()), |x: &Vector| Vector::from_slice(&[1.2 * x[0], 0.9 * x[1]]));
        let s = spectrum_from_distortion(&f, &Vector::from_slice(&[0.3, 0.3]), 1e-5).unwrap();
        assert!((s.singular_values[0] - 1.2).abs() < 1e-9 && (s.singular_values[1] - 0.9).abs() < 1e-9);
        assert!(spectrum_from_distortion(&f, &Vector::from_slice(&[0.3, 0.3]), 0.0).is_err());
    }

    #[test]
    fn spectrum_route_certifies_linear_map() {
        let ball = Domain::Ball { centre: Vector::zeros(2), radius: 1.0 };
        let f = SampledMap::new(ball, |x: &Vector| Vector::from_slice(&[1.1 * x[0], 0.95 * x[1]]));
        let b = distortion_from_spectrum_bound(&f, 0.1, 4).unwrap();
        assert!(b.is_certified() && b.conditional);
        assert!(matches!(distortion_from_spectrum_bound(&f, 0.05, 4), Err(DistortionError::SpectrumBoundViolated { .. })));
    }

    #[test]
    fn strong_displacement_on_affine_expansion() {
        let s = tri();
        let xi = 0.3;
        let f = SampledMap::new(Domain::Simplex(s.clone()), move |x: &Vector| *x * (1.0 + xi));
        assert!(strong_displacement_check(&f, &s, 0, xi, 200).unwrap());
        assert!(!strong_displacement_check(&f, &s, 0, 0.2, 200).unwrap());
        assert!(matches!(strong_displacement_check(&f, &s, 1, xi, 10), Err(DistortionError::VertexNotFixed(_))));
    }

    #[test]
    fn barycentric_lattice_counts() {
        let d = Domain::Simplex(tri());
        assert_eq!(grid_points(&d, 4).len(), 15);
    }
}
