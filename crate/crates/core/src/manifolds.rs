//! Analytic test manifolds: spheres, a torus, a circle and a pair of spheres.
//!
//! Each manifold has a closed-form closest-point projection, oriented tangent
//! frames, closed-form local feature size and local reach, and a parametric
//! Gauss-Newton projection used only to cross-check the closed forms.
//!
//! The second half of the file evaluates both sides of the submanifold bounds
//! (distance to a tangent space, tangent variation, simplex angle and
//! proximity bounds, distortion of the projections) so that callers can
//! compare measured values against the bound.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::distortion::uniform_barycentric;
use crate::geom::{gram_schmidt, sin_angle_between_flats, sin_angle_vector_flat, Flat, Vector, MAX_DIM};
use crate::simplex::{combine, thickness_of, EuclideanSimplex};

/// Distance to the medial axis below which a projection is refused.
pub const MEDIAL_TOLERANCE: f64 = 1e-8;
/// Largest distance from `M` at which a point still counts as on `M`.
pub const ON_MANIFOLD_TOLERANCE: f64 = 1e-8;
/// Slack granted to every bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

pub type Frame = SmallVec<[Vector; 4]>;

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum ManifoldError {
    #[error("invalid manifold parameters: {0}")]
    InvalidParameters(String),
    #[error("cannot parse manifold description {0:?}")]
    Parse(String),
    #[error("point dimension {found} does not match ambient dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point is within {MEDIAL_TOLERANCE} of the medial axis; projection is ambiguous")]
    OnMedialAxis,
    #[error("point is not on the manifold (distance {distance:e})")]
    PointNotOnManifold { distance: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("simplex leaves the tubular neighbourhood (sample at distance {distance:e} from M, local reach {reach:e})")]
    SimplexLeavesTube { distance: f64, reach: f64 },
    #[error("degenerate simplex (thickness {thickness:e})")]
    DegenerateSimplex { thickness: f64 },
    #[error("operation not available for this manifold: {0}")]
    Unsupported(&'static str),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A compact analytic submanifold of `R^N` without boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestManifold {
    /// Round `m`-sphere of the given radius centred at the origin, lying in
    /// the first `m + 1` coordinates of `R^ambient`.
    Sphere { dim: usize, ambient: usize, radius: f64 },
    /// Torus of revolution about the z-axis in `R^3`.
    Torus { major: f64, minor: f64 },
    /// Circle in `R^2` centred at the origin.
    Circle { radius: f64 },
    /// Two unit-type 2-spheres in `R^3` with centres `±(radius + gap/2)` on
    /// the x-axis, so that `gap` is the distance between them.
    BiSphere { radius: f64, gap: f64 },
}

/// Result of the closest-point projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionResult {
    pub point_on_m: Vector,
    pub distance: f64,
    /// Whether `x` lies on the normal segment of length `rch(x̌, M)` at its
    /// projection, where the projection is stable.
    pub inside_tube: bool,
}

/// Choice of the lower bound `R_rch` on the local reach near a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RchPolicy {
    /// `R_rch = rch(M)` everywhere.
    GlobalReach,
    /// `R_rch = (1 - eps) lfs(p)`, valid on `B(p, eps lfs(p))` for `eps <= 1/2`.
    LocalLfs(f64),
}

impl RchPolicy {
    /// `R_rch` at the vertex `p`.
    pub fn r_rch(&self, manifold: &TestManifold, p: &Vector) -> f64 {
        match *self {
            RchPolicy::GlobalReach => manifold.reach(),
            RchPolicy::LocalLfs(eps) => (1.0 - eps) * manifold.lfs(p),
        }
    }

    /// Radius of the ball around `p` on which [`RchPolicy::r_rch`] is valid.
    pub fn valid_radius(&self, manifold: &TestManifold, p: &Vector) -> f64 {
        match *self {
            RchPolicy::GlobalReach => f64::INFINITY,
            RchPolicy::LocalLfs(eps) => eps * manifold.lfs(p),
        }
    }
}

/// Reach and local feature size of a test manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachInfo {
    pub reach_global: f64,
    manifold: TestManifold,
}

impl ReachInfo {
    /// Distance from `x` to the medial axis.
    pub fn lfs_at(&self, x: &Vector) -> f64 {
        self.manifold.lfs(x)
    }

    /// Lower bound for `rch(z, M)` over `z ∈ B(centre, radius) ∩ M`.
    ///
    /// Uses `rch(z, M) >= lfs(z) >= lfs(centre) - |z - centre|` together with
    /// `rch(z, M) >= rch(M)`.
    pub fn local_reach_lower(&self, centre: &Vector, radius: f64) -> f64 {
        (self.manifold.lfs(centre) - radius).max(self.reach_global)
    }
}

impl TestManifold {
    pub fn sphere(dim: usize, ambient: usize, radius: f64) -> Result<Self, ManifoldError> {
        let m = TestManifold::Sphere { dim, ambient, radius };
        m.validate()?;
        Ok(m)
    }

    pub fn unit_sphere() -> Self {
        TestManifold::Sphere { dim: 2, ambient: 3, radius: 1.0 }
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self, ManifoldError> {
        let m = TestManifold::Torus { major, minor };
        m.validate()?;
        Ok(m)
    }

    pub fn circle(radius: f64) -> Result<Self, ManifoldError> {
        let m = TestManifold::Circle { radius };
        m.validate()?;
        Ok(m)
    }

    pub fn bisphere(radius: f64, gap: f64) -> Result<Self, ManifoldError> {
        let m = TestManifold::BiSphere { radius, gap };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ManifoldError> {
        let bad = |s: String| Err(ManifoldError::InvalidParameters(s));
        match *self {
            TestManifold::Sphere { dim, ambient, radius } => {
                if dim == 0 || ambient < dim + 1 || ambient > MAX_DIM {
                    return bad(format!("sphere dimension {dim} in R^{ambient}"));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return bad(format!("sphere radius {radius}"));
                }
            }
            TestManifold::Torus { major, minor } => {
                if !(minor > 0.0 && major > minor && major.is_finite()) {
                    return bad(format!("torus radii ({major}, {minor}) need major > minor > 0"));
                }
            }
            TestManifold::Circle { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return bad(format!("circle radius {radius}"));
                }
            }
            TestManifold::BiSphere { radius, gap } => {
                if !(radius > 0.0 && gap > 0.0 && radius.is_finite() && gap.is_finite()) {
                    return bad(format!("bisphere radius {radius}, gap {gap}"));
                }
            }
        }
        Ok(())
    }

    /// Intrinsic dimension `m`.
    pub fn dim(&self) -> usize {
        match *self {
            TestManifold::Sphere { dim, .. } => dim,
            TestManifold::Torus { .. } | TestManifold::BiSphere { .. } => 2,
            TestManifold::Circle { .. } => 1,
        }
    }

    /// Ambient dimension `N`.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            TestManifold::Sphere { ambient, .. } => ambient,
            TestManifold::Torus { .. } | TestManifold::BiSphere { .. } => 3,
            TestManifold::Circle { .. } => 2,
        }
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        match self {
            TestManifold::BiSphere { .. } => 2,
            _ => 1,
        }
    }

    /// Component index of the point of `M` nearest `x`.
    pub fn component_of(&self, x: &Vector) -> usize {
        match self {
            TestManifold::BiSphere { .. } => usize::from(x[0] > 0.0),
            _ => 0,
        }
    }

    fn bisphere_centre(radius: f64, gap: f64, component: usize) -> Vector {
        let d = radius + 0.5 * gap;
        Vector::from_slice(&[if component == 0 { -d } else { d }, 0.0, 0.0])
    }

    fn check_dim(&self, x: &Vector) -> Result<(), ManifoldError> {
        if x.dim() != self.ambient_dim() {
            return Err(ManifoldError::DimensionMismatch { expected: self.ambient_dim(), found: x.dim() });
        }
        if !x.is_finite() {
            return Err(ManifoldError::NonFinite);
        }
        Ok(())
    }

    /// Euclidean distance from `x` to `M`, from the closed form. Defined
    /// everywhere, including on the medial axis.
    pub fn residual(&self, x: &Vector) -> f64 {
        match *self {
            TestManifold::Sphere { dim, radius, .. } => {
                let head = x.as_slice()[..=dim].iter().map(|c| c * c).sum::<f64>().sqrt();
                let tail = x.as_slice()[dim + 1..].iter().map(|c| c * c).sum::<f64>();
                ((head - radius).powi(2) + tail).sqrt()
            }
            TestManifold::Torus { major, minor } => {
                let rho = x[0].hypot(x[1]);
                ((rho - major).hypot(x[2]) - minor).abs()
            }
            TestManifold::Circle { radius } => (x[0].hypot(x[1]) - radius).abs(),
            TestManifold::BiSphere { radius, gap } => (0..2)
                .map(|c| (x.dist(&Self::bisphere_centre(radius, gap, c)) - radius).abs())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Value of a defining equation `f(x) = 0` of `M`, scaled to have unit
    /// gradient on `M`.
    pub fn implicit_value(&self, x: &Vector) -> f64 {
        match *self {
            TestManifold::Sphere { dim, radius, .. } => {
                let h2: f64 = x.as_slice()[..=dim].iter().map(|c| c * c).sum();
                let t2: f64 = x.as_slice()[dim + 1..].iter().map(|c| c * c).sum();
                (h2 - radius * radius) / (2.0 * radius) + t2
            }
            TestManifold::Torus { major, minor } => {
                let rho = x[0].hypot(x[1]);
                ((rho - major).powi(2) + x[2] * x[2] - minor * minor) / (2.0 * minor)
            }
            TestManifold::Circle { radius } => (x[0] * x[0] + x[1] * x[1] - radius * radius) / (2.0 * radius),
            TestManifold::BiSphere { radius, gap } => {
                let c = Self::bisphere_centre(radius, gap, self.component_of(x));
                ((*x - c).norm_squared() - radius * radius) / (2.0 * radius)
            }
        }
    }

    fn require_on_manifold(&self, p: &Vector) -> Result<(), ManifoldError> {
        self.check_dim(p)?;
        let distance = self.residual(p);
        if distance > ON_MANIFOLD_TOLERANCE {
            return Err(ManifoldError::PointNotOnManifold { distance });
        }
        Ok(())
    }

    /// Closest point of `M` to `x`, by closed form.
    pub fn project(&self, x: &Vector) -> Result<Vector, ManifoldError> {
        self.check_dim(x)?;
        match *self {
            TestManifold::Sphere { dim, radius, .. } => {
                let head = x.as_slice()[..=dim].iter().map(|c| c * c).sum::<f64>().sqrt();
                if head < MEDIAL_TOLERANCE {
                    return Err(ManifoldError::OnMedialAxis);
                }
                let s = radius / head;
                Ok(Vector::from_fn(x.dim(), |i| if i <= dim { x[i] * s } else { 0.0 }))
            }
            TestManifold::Torus { major, minor } => {
                let rho = x[0].hypot(x[1]);
                if rho < MEDIAL_TOLERANCE {
                    return Err(ManifoldError::OnMedialAxis);
                }
                let c = Vector::from_slice(&[major * x[0] / rho, major * x[1] / rho, 0.0]);
                let w = *x - c;
                let wn = w.norm();
                if wn < MEDIAL_TOLERANCE {
                    return Err(ManifoldError::OnMedialAxis);
                }
                Ok(c + w * (minor / wn))
            }
            TestManifold::Circle { radius } => {
                let n = x.norm();
                if n < MEDIAL_TOLERANCE {
                    return Err(ManifoldError::OnMedialAxis);
                }
                Ok(*x * (radius / n))
            }
            TestManifold::BiSphere { radius, gap } => {
                if x[0].abs() < MEDIAL_TOLERANCE {
                    return Err(ManifoldError::OnMedialAxis);
                }
                let c = Self::bisphere_centre(radius, gap, self.component_of(x));
                let w = *x - c;
                let wn = w.norm();
                if wn < MEDIAL_TOLERANCE {
                    return Err(ManifoldError::OnMedialAxis);
                }
                Ok(c + w * (radius / wn))
            }
        }
    }

    /// Closest-point projection with distance and tube membership.
    pub fn closest_point(&self, x: &Vector) -> Result<ProjectionResult, ManifoldError> {
        let point_on_m = self.project(x)?;
        let distance = x.dist(&point_on_m);
        let reach = self.local_reach(&point_on_m);
        Ok(ProjectionResult { point_on_m, distance, inside_tube: distance < reach - MEDIAL_TOLERANCE })
    }

    /// Global reach `rch(M)`.
    pub fn reach(&self) -> f64 {
        match *self {
            TestManifold::Sphere { radius, .. } | TestManifold::Circle { radius } => radius,
            TestManifold::Torus { major, minor } => minor.min(major - minor),
            TestManifold::BiSphere { radius, gap } => radius.min(0.5 * gap),
        }
    }

    /// Local feature size: distance from `x` to the medial axis.
    pub fn lfs(&self, x: &Vector) -> f64 {
        match *self {
            TestManifold::Sphere { dim, .. } => x.as_slice()[..=dim].iter().map(|c| c * c).sum::<f64>().sqrt(),
            TestManifold::Torus { major, .. } => {
                let rho = x[0].hypot(x[1]);
                rho.min((rho - major).hypot(x[2]))
            }
            TestManifold::Circle { .. } => x.norm(),
            TestManifold::BiSphere { radius, gap } => {
                let c0 = x.dist(&Self::bisphere_centre(radius, gap, 0));
                let c1 = x.dist(&Self::bisphere_centre(radius, gap, 1));
                x[0].abs().min(c0).min(c1)
            }
        }
    }

    /// Local reach `rch(p, M)` at a point `p` of `M`: how far `p` can be
    /// pushed along any normal direction while still projecting back to `p`.
    pub fn local_reach(&self, p: &Vector) -> f64 {
        match *self {
            TestManifold::Sphere { radius, .. } | TestManifold::Circle { radius } => radius,
            TestManifold::Torus { major, minor } => {
                let rho = p[0].hypot(p[1]);
                let cos_v = (rho - major) / minor;
                if cos_v < 0.0 {
                    minor.min(rho / -cos_v)
                } else {
                    minor
                }
            }
            TestManifold::BiSphere { radius, gap } => {
                let c = Self::bisphere_centre(radius, gap, self.component_of(p));
                let nx = (p[0] - c[0]) / radius;
                if p[0] * nx < 0.0 {
                    radius.min(p[0].abs() / nx.abs())
                } else {
                    radius
                }
            }
        }
    }

    pub fn reach_and_lfs(&self) -> ReachInfo {
        ReachInfo { reach_global: self.reach(), manifold: *self }
    }

    /// Outward unit normal at `p` (the radial direction for spheres).
    fn outward_normal(&self, p: &Vector) -> Vector {
        match *self {
            TestManifold::Sphere { dim, radius, .. } => {
                Vector::from_fn(p.dim(), |i| if i <= dim { p[i] / radius } else { 0.0 })
            }
            TestManifold::Torus { major, minor } => {
                let rho = p[0].hypot(p[1]);
                let c = Vector::from_slice(&[major * p[0] / rho, major * p[1] / rho, 0.0]);
                (*p - c) * (1.0 / minor)
            }
            TestManifold::Circle { radius } => *p * (1.0 / radius),
            TestManifold::BiSphere { radius, gap } => {
                let c = Self::bisphere_centre(radius, gap, self.component_of(p));
                (*p - c) * (1.0 / radius)
            }
        }
    }

    /// Orthonormal tangent frame at `p ∈ M`, oriented so that
    /// `det[n, t_1, ..., t_m] > 0` for the outward normal `n` (computed in the
    /// span of the first `m + 1` coordinates for spheres).
    pub fn tangent_frame(&self, p: &Vector) -> Result<Frame, ManifoldError> {
        self.require_on_manifold(p)?;
        if matches!(self, TestManifold::Torus { .. }) && p[0].hypot(p[1]) < MEDIAL_TOLERANCE {
            return Err(ManifoldError::OnMedialAxis);
        }
        let n = self.outward_normal(p);
        let mut frame = Frame::new();
        match *self {
            TestManifold::Circle { .. } => frame.push(Vector::from_slice(&[-n[1], n[0]])),
            TestManifold::Torus { .. } => {
                let rho = p[0].hypot(p[1]);
                let eu = Vector::from_slice(&[-p[1] / rho, p[0] / rho, 0.0]);
                let t2 = cross(&n, &eu);
                frame.push(eu);
                frame.push(t2);
            }
            TestManifold::BiSphere { .. } | TestManifold::Sphere { dim: 2, ambient: 3, .. } => {
                let t1 = cross(&least_aligned_axis(&n), &n).normalized().expect("axis not parallel to normal");
                let t2 = cross(&n, &t1);
                frame.push(t1);
                frame.push(t2);
            }
            TestManifold::Sphere { dim, ambient, .. } => {
                let head = dim + 1;
                let axes: SmallVec<[Vector; 8]> = (0..head).map(|i| Vector::unit(ambient, i)).collect();
                let mut basis = gram_schmidt(&[n], &axes, 1e-8);
                basis.truncate(dim);
                let mut cols: SmallVec<[Vector; 4]> = SmallVec::new();
                cols.push(n.resized(head));
                cols.extend(basis.iter().map(|b| b.resized(head)));
                if determinant(&cols) < 0.0 {
                    basis[0] = -basis[0];
                }
                frame.extend(basis);
            }
        }
        Ok(frame)
    }

    /// Orthonormal frame of the normal space at `p ∈ M`; the first vector is
    /// the outward normal.
    pub fn normal_frame(&self, p: &Vector) -> Result<Frame, ManifoldError> {
        self.require_on_manifold(p)?;
        let mut frame = Frame::new();
        frame.push(self.outward_normal(p));
        if let TestManifold::Sphere { dim, ambient, .. } = *self {
            frame.extend((dim + 1..ambient).map(|i| Vector::unit(ambient, i)));
        }
        Ok(frame)
    }

    /// Tangent space `T_pM` as an affine flat through `p`.
    pub fn tangent_flat(&self, p: &Vector) -> Result<Flat, ManifoldError> {
        let frame = self.tangent_frame(p)?;
        Ok(Flat::from_orthonormal(*p, frame.to_vec()).expect("tangent frame is orthonormal"))
    }

    /// Normal space `N_pM` as an affine flat through `p`.
    pub fn normal_flat(&self, p: &Vector) -> Result<Flat, ManifoldError> {
        let frame = self.normal_frame(p)?;
        Ok(Flat::from_orthonormal(*p, frame.to_vec()).expect("normal frame is orthonormal"))
    }

    /// A random point of `M`. Spheres and circles are sampled uniformly, the
    /// torus uniformly by area, the bisphere uniformly on a random component.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match *self {
            TestManifold::Sphere { dim, ambient, radius } => loop {
                let g = Vector::from_fn(ambient, |i| if i <= dim { rng.sample::<f64, _>(StandardNormal) } else { 0.0 });
                if let Some(u) = g.normalized() {
                    return u * radius;
                }
            },
            TestManifold::Circle { radius } => {
                let a = rng.gen_range(0.0..TAU);
                Vector::from_slice(&[radius * a.cos(), radius * a.sin()])
            }
            TestManifold::Torus { major, minor } => loop {
                let u = rng.gen_range(0.0..TAU);
                let v = rng.gen_range(0.0..TAU);
                if rng.gen::<f64>() * (major + minor) <= major + minor * v.cos() {
                    return torus_point(major, minor, u, v);
                }
            },
            TestManifold::BiSphere { radius, gap } => {
                let c = Self::bisphere_centre(radius, gap, usize::from(rng.gen::<bool>()));
                let unit = TestManifold::Sphere { dim: 2, ambient: 3, radius }.sample_point(rng);
                c + unit
            }
        }
    }

    /// A random point of `M ∩ B(p, radius)`, obtained by projecting a uniform
    /// point of the ambient ball and rejecting results outside the ball.
    pub fn sample_near<R: Rng + ?Sized>(&self, p: &Vector, radius: f64, rng: &mut R) -> Vector {
        let n = self.ambient_dim();
        for _ in 0..1000 {
            let dir = Vector::from_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
            let Some(dir) = dir.normalized() else { continue };
            let len = radius * rng.gen::<f64>().powf(1.0 / n as f64);
            if let Ok(q) = self.project(&(*p + dir * len)) {
                if q.dist(p) <= radius {
                    return q;
                }
            }
        }
        *p
    }

    /// Number of parameters of the chart used by the Gauss-Newton fallback,
    /// or `None` if no parametrization is provided.
    fn parameter_count(&self) -> Option<usize> {
        match *self {
            TestManifold::Circle { .. } => Some(1),
            TestManifold::Sphere { dim: 1, .. } => Some(1),
            TestManifold::Sphere { dim: 2, .. } => Some(2),
            TestManifold::Torus { .. } | TestManifold::BiSphere { .. } => Some(2),
            TestManifold::Sphere { .. } => None,
        }
    }

    fn parametrize(&self, component: usize, theta: &[f64]) -> Vector {
        match *self {
            TestManifold::Circle { radius } => Vector::from_slice(&[radius * theta[0].cos(), radius * theta[0].sin()]),
            TestManifold::Sphere { ambient, radius, dim: 1 } => {
                Vector::from_fn(ambient, |i| match i {
                    0 => radius * theta[0].cos(),
                    1 => radius * theta[0].sin(),
                    _ => 0.0,
                })
            }
            TestManifold::Sphere { ambient, radius, .. } => {
                let (a, b) = (theta[0], theta[1]);
                Vector::from_fn(ambient, |i| match i {
                    0 => radius * a.sin() * b.cos(),
                    1 => radius * a.sin() * b.sin(),
                    2 => radius * a.cos(),
                    _ => 0.0,
                })
            }
            TestManifold::Torus { major, minor } => torus_point(major, minor, theta[0], theta[1]),
            TestManifold::BiSphere { radius, gap } => {
                let c = Self::bisphere_centre(radius, gap, component);
                let (a, b) = (theta[0], theta[1]);
                c + Vector::from_slice(&[radius * a.sin() * b.cos(), radius * a.sin() * b.sin(), radius * a.cos()])
            }
        }
    }

    /// Closest point by Gauss-Newton on a parametrization from a grid of
    /// starting parameters. Independent of the closed forms; used to
    /// cross-check them. Returns `None` for spheres of dimension above 2.
    pub fn newton_closest_point(&self, x: &Vector) -> Option<Vector> {
        let k = self.parameter_count()?;
        const GRID: usize = 8;
        let mut best: Option<(f64, Vector)> = None;
        for component in 0..self.components() {
            let starts = GRID.pow(k as u32);
            for s in 0..starts {
                let mut theta = [0.0f64; 2];
                let mut idx = s;
                for t in theta.iter_mut().take(k) {
                    *t = (idx % GRID) as f64 / GRID as f64 * TAU + 0.1;
                    idx /= GRID;
                }
                let q = self.gauss_newton(component, x, &mut theta[..k]);
                let d = q.dist(x);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, q));
                }
            }
        }
        best.map(|(_, q)| q)
    }

    fn gauss_newton(&self, component: usize, x: &Vector, theta: &mut [f64]) -> Vector {
        let k = theta.len();
        let h = 1e-6;
        for _ in 0..60 {
            let p = self.parametrize(component, theta);
            let r = p - *x;
            let mut jac = [Vector::zeros(x.dim()), Vector::zeros(x.dim())];
            for j in 0..k {
                let mut tp = [0.0; 2];
                let mut tm = [0.0; 2];
                tp[..k].copy_from_slice(theta);
                tm[..k].copy_from_slice(theta);
                tp[j] += h;
                tm[j] -= h;
                jac[j] = (self.parametrize(component, &tp[..k]) - self.parametrize(component, &tm[..k])) * (0.5 / h);
            }
            // Normal equations (JᵀJ) δ = -Jᵀ r with a small damping term.
            let g: SmallVec<[f64; 2]> = (0..k).map(|j| jac[j].dot(&r)).collect();
            let step: [f64; 2] = if k == 1 {
                let a = jac[0].norm_squared() + 1e-14;
                [-g[0] / a, 0.0]
            } else {
                let a = jac[0].norm_squared() + 1e-14;
                let b = jac[0].dot(&jac[1]);
                let c = jac[1].norm_squared() + 1e-14;
                let det = a * c - b * b;
                if det.abs() < 1e-20 {
                    break;
                }
                [(-c * g[0] + b * g[1]) / det, (b * g[0] - a * g[1]) / det]
            };
            let mut size = 0.0f64;
            for j in 0..k {
                let s = step[j].clamp(-0.5, 0.5);
                theta[j] += s;
                size = size.max(s.abs());
            }
            if size < 1e-15 {
                break;
            }
        }
        self.parametrize(component, theta)
    }

    /// Geodesic distance between two points of a round sphere or circle.
    pub fn geodesic_distance(&self, x: &Vector, y: &Vector) -> Result<f64, ManifoldError> {
        let radius = match *self {
            TestManifold::Sphere { radius, .. } | TestManifold::Circle { radius } => radius,
            _ => return Err(ManifoldError::Unsupported("geodesic distance is only closed-form on round spheres")),
        };
        self.require_on_manifold(x)?;
        self.require_on_manifold(y)?;
        let chord = x.dist(y);
        Ok(2.0 * radius * (0.5 * chord / radius).min(1.0).asin())
    }

    /// `(chord, 2R sin(ℓ/2R))` for the geodesic length `ℓ` between `x` and
    /// `y` on a round sphere; the two agree.
    pub fn chord_from_geodesic_check(&self, x: &Vector, y: &Vector) -> Result<(f64, f64), ManifoldError> {
        let ell = self.geodesic_distance(x, y)?;
        let radius = self.reach();
        Ok((x.dist(y), 2.0 * radius * (ell / (2.0 * radius)).sin()))
    }
}

fn torus_point(major: f64, minor: f64, u: f64, v: f64) -> Vector {
    let rho = major + minor * v.cos();
    Vector::from_slice(&[rho * u.cos(), rho * u.sin(), minor * v.sin()])
}

fn cross(a: &Vector, b: &Vector) -> Vector {
    Vector::from_slice(&[a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])
}

fn least_aligned_axis(n: &Vector) -> Vector {
    let i = (0..n.dim()).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap_or(0);
    Vector::unit(n.dim(), i)
}

/// Determinant of the square matrix whose columns are `cols`.
fn determinant(cols: &[Vector]) -> f64 {
    let n = cols.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| cols[j][i]).determinant()
}

impl fmt::Display for TestManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TestManifold::Sphere { dim, ambient, radius } => write!(f, "sphere:{dim},{ambient},{radius}"),
            TestManifold::Torus { major, minor } => write!(f, "torus:{major},{minor}"),
            TestManifold::Circle { radius } => write!(f, "circle:{radius}"),
            TestManifold::BiSphere { radius, gap } => write!(f, "bisphere:{radius},{gap}"),
        }
    }
}

impl FromStr for TestManifold {
    type Err = ManifoldError;

    /// Parses `sphere:m,N,radius`, `torus:R,r`, `circle:radius` and
    /// `bisphere:radius,gap`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ManifoldError::Parse(s.to_string());
        let (kind, args) = s.trim().split_once(':').ok_or_else(err)?;
        let nums: Vec<&str> = args.split(',').map(str::trim).collect();
        let float = |i: usize| nums.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or_else(err);
        let int = |i: usize| nums.get(i).and_then(|v| v.parse::<usize>().ok()).ok_or_else(err);
        let (manifold, expected) = match kind.trim() {
            "sphere" => (TestManifold::Sphere { dim: int(0)?, ambient: int(1)?, radius: float(2)? }, 3),
            "torus" => (TestManifold::Torus { major: float(0)?, minor: float(1)? }, 2),
            "circle" => (TestManifold::Circle { radius: float(0)? }, 1),
            "bisphere" => (TestManifold::BiSphere { radius: float(0)?, gap: float(1)? }, 2),
            _ => return Err(err()),
        };
        if nums.len() != expected {
            return Err(err());
        }
        manifold.validate()?;
        Ok(manifold)
    }
}

// ---------------------------------------------------------------------------
// Bound evaluations
// ---------------------------------------------------------------------------

/// Both sides of the two distance-to-tangent-space bounds at `x` for `y`:
/// `(sin∠([x,y], T_xM), |x-y| / 2rch(x), dist(y, T_xM), |x-y|² / 2rch(x))`.
pub fn dist_to_tangent_bounds_check(
    manifold: &TestManifold,
    x: &Vector,
    y: &Vector,
) -> Result<(f64, f64, f64, f64), ManifoldError> {
    manifold.require_on_manifold(y)?;
    let tangent = manifold.tangent_flat(x)?;
    let reach = manifold.local_reach(x);
    let d = x.dist(y);
    let sin = sin_angle_vector_flat(&(*y - *x), &tangent);
    Ok((sin, d / (2.0 * reach), tangent.distance(y), d * d / (2.0 * reach)))
}

/// Both sides of the tangent variation bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVariation {
    pub sin_angle: f64,
    pub sin_bound: f64,
    pub angle: f64,
    pub angle_bound: f64,
}

/// Tangent variation between `x, y ∈ M` against `R_rch`.
///
/// The ball of the hypothesis is the smallest ball containing `x` and `y`.
/// It must lie in the tube (up to [`BOUND_SLACK`]) and `r_rch` must not exceed
/// the certified lower bound on the local reach over it.
pub fn tangent_variation_check(
    manifold: &TestManifold,
    x: &Vector,
    y: &Vector,
    r_rch: f64,
) -> Result<TangentVariation, ManifoldError> {
    let tx = manifold.tangent_flat(x)?;
    let ty = manifold.tangent_flat(y)?;
    let centre = (*x + *y) * 0.5;
    let radius = 0.5 * x.dist(y);
    let info = manifold.reach_and_lfs();
    if radius > info.lfs_at(&centre) + BOUND_SLACK {
        return Err(ManifoldError::HypothesisViolated(format!(
            "ball of radius {radius} around the midpoint leaves the tube (lfs {})",
            info.lfs_at(&centre)
        )));
    }
    let lower = info.local_reach_lower(&centre, radius);
    if r_rch > lower + BOUND_SLACK {
        return Err(ManifoldError::HypothesisViolated(format!(
            "R_rch = {r_rch} exceeds the local reach lower bound {lower}"
        )));
    }
    let extremes = crate::geom::principal_angle_extremes(tx.basis(), ty.basis());
    let d = x.dist(y);
    Ok(TangentVariation {
        sin_angle: extremes.sin_max,
        sin_bound: d / r_rch,
        angle: extremes.angle(),
        angle_bound: FRAC_PI_2 * d / r_rch,
    })
}

/// `(sin∠(aff σ, K), 2η/(tL))` where `η` is the largest distance from a
/// vertex of `σ` to `K`.
pub fn whitney_angle_bound_check(s: &EuclideanSimplex, k: &Flat) -> Result<(f64, f64), ManifoldError> {
    if s.dim() == 0 {
        return Ok((0.0, 0.0));
    }
    if s.dim() > k.dim() {
        return Err(ManifoldError::DimensionMismatch { expected: k.dim(), found: s.dim() });
    }
    let (t, l, _) = thickness_of(s.vertices());
    if t < crate::simplex::DEGENERACY_TOLERANCE {
        return Err(ManifoldError::DegenerateSimplex { thickness: t });
    }
    let hull = s.affine_hull().map_err(|_| ManifoldError::DegenerateSimplex { thickness: t })?;
    let sin = sin_angle_between_flats(&hull, k).expect("dimensions checked");
    let eta = s.vertices().iter().map(|v| k.distance(v)).fold(0.0, f64::max);
    Ok((sin, 2.0 * eta / (t * l)))
}

/// Sampled distances of a simplex with vertices on `M` to `M` and to the
/// tangent spaces at projected points, with the corresponding bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProximityReport {
    /// Largest sampled `d_M(x)`.
    pub max_distance_to_m: f64,
    /// Largest sampled `dist(y, T_x̌M)` over pairs `x, y ∈ σ`.
    pub max_tangent_distance: f64,
    /// `2L²/R_rch`, bounding both of the above.
    pub distance_bound: f64,
    /// Largest sampled `|p - x̌|` over vertices `p`.
    pub max_vertex_to_projection: f64,
    /// `2L`.
    pub vertex_bound: f64,
}

/// Samples `samples` points of `σ` (vertices included) and measures how far
/// the simplex strays from `M`.
pub fn simplex_manifold_proximity(
    manifold: &TestManifold,
    s: &EuclideanSimplex,
    r_rch: f64,
    samples: usize,
    seed: u64,
) -> Result<ProximityReport, ManifoldError> {
    for v in s.vertices() {
        manifold.require_on_manifold(v)?;
    }
    let l = s.longest_edge();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vector> = s.vertices().to_vec();
    points.push(s.barycentre());
    while points.len() < samples.max(s.vertices().len() + 1) {
        let lambda = uniform_barycentric(&mut rng, s.dim() + 1);
        points.push(combine(s.vertices(), &lambda));
    }
    let mut report = ProximityReport {
        max_distance_to_m: 0.0,
        max_tangent_distance: 0.0,
        distance_bound: 2.0 * l * l / r_rch,
        max_vertex_to_projection: 0.0,
        vertex_bound: 2.0 * l,
    };
    for x in &points {
        let proj = manifold.closest_point(x).map_err(|e| match e {
            ManifoldError::OnMedialAxis => ManifoldError::SimplexLeavesTube { distance: f64::NAN, reach: 0.0 },
            other => other,
        })?;
        if !proj.inside_tube {
            return Err(ManifoldError::SimplexLeavesTube {
                distance: proj.distance,
                reach: manifold.local_reach(&proj.point_on_m),
            });
        }
        report.max_distance_to_m = report.max_distance_to_m.max(proj.distance);
        let tangent = manifold.tangent_flat(&proj.point_on_m)?;
        for v in s.vertices() {
            report.max_tangent_distance = report.max_tangent_distance.max(tangent.distance(v));
            report.max_vertex_to_projection = report.max_vertex_to_projection.max(v.dist(&proj.point_on_m));
        }
    }
    Ok(report)
}

/// Where the tangent space is taken in [`simplex_tangent_angle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TangentAngleMode {
    /// `T_pM` at the vertex `p`; bound `L/(t rch(p, M))`.
    AtVertex,
    /// `T_x̌M` for sampled `x ∈ σ`; bound `3L/(t R_rch)`.
    AlongProjection { samples: usize, seed: u64 },
}

/// Measured sine of the angle between `σ` and a tangent space, with the
/// applicable bound.
pub fn simplex_tangent_angle(
    manifold: &TestManifold,
    s: &EuclideanSimplex,
    p_index: usize,
    mode: TangentAngleMode,
    r_rch: f64,
) -> Result<(f64, f64), ManifoldError> {
    for v in s.vertices() {
        manifold.require_on_manifold(v)?;
    }
    if s.dim() > manifold.dim() {
        return Err(ManifoldError::DimensionMismatch { expected: manifold.dim(), found: s.dim() });
    }
    let (t, l, _) = thickness_of(s.vertices());
    if s.dim() > 0 && t < crate::simplex::DEGENERACY_TOLERANCE {
        return Err(ManifoldError::DegenerateSimplex { thickness: t });
    }
    if s.dim() == 0 {
        return Ok((0.0, 0.0));
    }
    let hull = s.affine_hull().map_err(|_| ManifoldError::DegenerateSimplex { thickness: t })?;
    let p = *s.vertex(p_index);
    match mode {
        TangentAngleMode::AtVertex => {
            let tangent = manifold.tangent_flat(&p)?;
            let sin = sin_angle_between_flats(&hull, &tangent).expect("dimensions checked");
            Ok((sin, l / (t * manifold.local_reach(&p))))
        }
        TangentAngleMode::AlongProjection { samples, seed } => {
            // Every projected point lies within 2L of p.
            let radius = 2.0 * l;
            let info = manifold.reach_and_lfs();
            if radius >= r_rch || radius > info.lfs_at(&p) {
                return Err(ManifoldError::HypothesisViolated(format!(
                    "ball of radius 2L = {radius} must be inside the tube and smaller than R_rch = {r_rch}"
                )));
            }
            let lower = info.local_reach_lower(&p, radius);
            if r_rch > lower + BOUND_SLACK {
                return Err(ManifoldError::HypothesisViolated(format!(
                    "R_rch = {r_rch} exceeds the local reach lower bound {lower}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for i in 0..samples.max(1) {
                let x = if i == 0 {
                    s.barycentre()
                } else {
                    combine(s.vertices(), &uniform_barycentric(&mut rng, s.dim() + 1))
                };
                let xc = manifold.project(&x)?;
                let tangent = manifold.tangent_flat(&xc)?;
                worst = worst.max(sin_angle_between_flats(&hull, &tangent).expect("dimensions checked"));
            }
            Ok((worst, 3.0 * l / (t * r_rch)))
        }
    }
}

/// Sampled distortion of the orthogonal projection onto `T_pM` restricted to
/// `B(p, ρ R_rch) ∩ M`, against `4ρ²`.
pub fn chart_projection_distortion(
    manifold: &TestManifold,
    p: &Vector,
    rho: f64,
    r_rch: f64,
    pairs: usize,
    seed: u64,
) -> Result<(f64, f64), ManifoldError> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(ManifoldError::HypothesisViolated(format!("ρ = {rho} must lie in (0, 1/2)")));
    }
    let radius = rho * r_rch;
    let lower = manifold.reach_and_lfs().local_reach_lower(p, radius);
    if r_rch > lower + BOUND_SLACK {
        return Err(ManifoldError::HypothesisViolated(format!(
            "R_rch = {r_rch} exceeds the local reach lower bound {lower}"
        )));
    }
    let tangent = manifold.tangent_flat(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = manifold.sample_near(p, radius, &mut rng);
        let y = manifold.sample_near(p, radius, &mut rng);
        let d = x.dist(&y);
        if d < 1e-12 {
            continue;
        }
        let dp = tangent.project_point(&x).dist(&tangent.project_point(&y));
        worst = worst.max(((dp - d) / d).abs());
    }
    Ok((worst, 4.0 * rho * rho))
}

/// Sampled distortion of the orthogonal projection onto `T_pM` restricted to
/// `σ`, against `(L/(t rch(p, M)))²`. Requires `L < t rch(p, M)`.
pub fn simplex_projection_distortion(
    manifold: &TestManifold,
    s: &EuclideanSimplex,
    p_index: usize,
    pairs: usize,
    seed: u64,
) -> Result<(f64, f64), ManifoldError> {
    let p = *s.vertex(p_index);
    manifold.require_on_manifold(&p)?;
    let (t, l, _) = thickness_of(s.vertices());
    let reach = manifold.local_reach(&p);
    if l >= t * reach {
        return Err(ManifoldError::HypothesisViolated(format!("L = {l} is not below t·rch(p) = {}", t * reach)));
    }
    let tangent = manifold.tangent_flat(&p)?;
    let worst = sampled_simplex_distortion(s, pairs, seed, |x| Ok(tangent.project_point(x)))?;
    Ok((worst, (l / (t * reach)).powi(2)))
}

/// `(|y̌ - x̌|, (1 - a/R_rch)⁻¹ |y - x|)` with `a = max(d_M(x), d_M(y))` and
/// `R_rch = min(rch(x̌), rch(y̌))`. Requires `a < R_rch`.
pub fn projection_lipschitz_check(
    manifold: &TestManifold,
    x: &Vector,
    y: &Vector,
) -> Result<(f64, f64), ManifoldError> {
    let px = manifold.closest_point(x)?;
    let py = manifold.closest_point(y)?;
    let a = px.distance.max(py.distance);
    let r_rch = manifold.local_reach(&px.point_on_m).min(manifold.local_reach(&py.point_on_m));
    if a >= r_rch {
        return Err(ManifoldError::HypothesisViolated(format!("a = {a} is not below R_rch = {r_rch}")));
    }
    Ok((px.point_on_m.dist(&py.point_on_m), x.dist(y) / (1.0 - a / r_rch)))
}

/// Sampled distortion of the closest-point projection restricted to `σ`,
/// against `12L²/(t² R_rch²)`. Requires `L < t R_rch / 3` and `R_rch` to be a
/// valid local reach lower bound on the ball `B(p_0, 2L)`.
pub fn closest_point_simplex_distortion(
    manifold: &TestManifold,
    s: &EuclideanSimplex,
    r_rch: f64,
    pairs: usize,
    seed: u64,
) -> Result<(f64, f64), ManifoldError> {
    for v in s.vertices() {
        manifold.require_on_manifold(v)?;
    }
    let (t, l, _) = thickness_of(s.vertices());
    if l >= t * r_rch / 3.0 {
        return Err(ManifoldError::HypothesisViolated(format!("L = {l} is not below t·R_rch/3 = {}", t * r_rch / 3.0)));
    }
    let p = *s.vertex(0);
    let radius = 2.0 * l;
    let info = manifold.reach_and_lfs();
    if radius >= r_rch || r_rch > info.local_reach_lower(&p, radius) + BOUND_SLACK {
        return Err(ManifoldError::HypothesisViolated(format!(
            "R_rch = {r_rch} is not a local reach lower bound on B(p, 2L)"
        )));
    }
    let worst = sampled_simplex_distortion(s, pairs, seed, |x| manifold.project(x))?;
    Ok((worst, 12.0 * l * l / (t * t * r_rch * r_rch)))
}

fn sampled_simplex_distortion(
    s: &EuclideanSimplex,
    pairs: usize,
    seed: u64,
    mut f: impl FnMut(&Vector) -> Result<Vector, ManifoldError>,
) -> Result<f64, ManifoldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = s.dim() + 1;
    let mut worst = 0.0f64;
    for i in 0..pairs {
        // Vertex pairs first; they are where the distortion usually peaks.
        let (x, y) = if i < k * (k - 1) / 2 {
            let (a, b) = nth_pair(k, i);
            (*s.vertex(a), *s.vertex(b))
        } else {
            (
                combine(s.vertices(), &uniform_barycentric(&mut rng, k)),
                combine(s.vertices(), &uniform_barycentric(&mut rng, k)),
            )
        };
        let d = x.dist(&y);
        if d < 1e-12 {
            continue;
        }
        let df = f(&x)?.dist(&f(&y)?);
        worst = worst.max(((df - d) / d).abs());
    }
    Ok(worst)
}

fn nth_pair(k: usize, mut i: usize) -> (usize, usize) {
    for a in 0..k {
        let row = k - a - 1;
        if i < row {
            return (a, a + 1 + i);
        }
        i -= row;
    }
    (0, 1)
}

/// Angle, in radians, of a point on the circle or of the first two
/// coordinates; used by mesh generators and tests.
pub fn polar_angle(x: &Vector) -> f64 {
    let a = x[1].atan2(x[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs)
    }

    #[test]
    fn sphere_projection_examples() {
        let s = TestManifold::unit_sphere();
        let r = s.closest_point(&v(&[2.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.point_on_m[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.distance, 1.0, epsilon = 1e-15);
        assert_eq!(s.closest_point(&v(&[0.0, 0.0, 0.0])), Err(ManifoldError::OnMedialAxis));
    }

    #[test]
    fn torus_projection_through_tube_circle() {
        let t = TestManifold::torus(2.0, 1.0).unwrap();
        let r = t.closest_point(&v(&[3.5, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.point_on_m.dist(&v(&[3.0, 0.0, 0.0])), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.distance, 0.5, epsilon = 1e-15);
        assert_eq!(t.project(&v(&[0.0, 0.0, 1.0])), Err(ManifoldError::OnMedialAxis));
        assert_eq!(t.project(&v(&[0.0, 2.0, 0.0])), Err(ManifoldError::OnMedialAxis));
    }

    #[test]
    fn tangent_flat_examples() {
        let s = TestManifold::unit_sphere();
        let t = s.tangent_flat(&v(&[1.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(t.distance(&v(&[1.0, 0.3, -0.2])), 0.0, epsilon = 1e-15);
        let n = s.normal_flat(&v(&[1.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(n.basis()[0][0].abs(), 1.0, epsilon = 1e-15);

        let torus = TestManifold::torus(2.0, 1.0).unwrap();
        let n = torus.normal_flat(&v(&[3.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(n.basis()[0].dot(&v(&[1.0, 0.0, 0.0])), 1.0, epsilon = 1e-15);

        let c = TestManifold::circle(1.0).unwrap();
        let t = c.tangent_flat(&v(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(t.basis()[0][0].abs(), 1.0, epsilon = 1e-15);

        assert!(matches!(s.tangent_flat(&v(&[1.1, 0.0, 0.0])), Err(ManifoldError::PointNotOnManifold { .. })));
    }

    #[test]
    fn frames_are_oriented_and_complementary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [
            TestManifold::unit_sphere(),
            TestManifold::torus(2.0, 1.0).unwrap(),
            TestManifold::circle(1.5).unwrap(),
            TestManifold::bisphere(1.0, 2.0).unwrap(),
            TestManifold::sphere(3, 5, 2.0).unwrap(),
        ] {
            for _ in 0..50 {
                let p = m.sample_point(&mut rng);
                let t = m.tangent_frame(&p).unwrap();
                let n = m.normal_frame(&p).unwrap();
                assert_eq!(t.len(), m.dim());
                assert_eq!(t.len() + n.len(), m.ambient_dim());
                let mut all: Vec<Vector> = t.to_vec();
                all.extend(n.iter().copied());
                assert!(crate::geom::orthonormality_defect(&all) < 1e-12);
                let head = m.dim() + 1;
                let mut cols = vec![n[0].resized(head)];
                cols.extend(t.iter().map(|x| x.resized(head)));
                if m.ambient_dim() == head {
                    assert!(determinant(&cols) > 0.0, "{m}");
                }
            }
        }
    }

    #[test]
    fn reach_values() {
        assert_eq!(TestManifold::unit_sphere().reach(), 1.0);
        assert_eq!(TestManifold::torus(2.0, 1.0).unwrap().reach(), 1.0);
        assert_eq!(TestManifold::torus(3.0, 1.0).unwrap().reach(), 1.0);
        assert_eq!(TestManifold::torus(1.5, 1.0).unwrap().reach(), 0.5);
        let b = TestManifold::bisphere(1.0, 2.0).unwrap();
        assert_eq!(b.reach(), 1.0);
        assert_abs_diff_eq!(b.lfs(&v(&[-1.0, 0.0, 0.0])), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.local_reach(&v(&[-1.0, 0.0, 0.0])), 1.0, epsilon = 1e-15);
        let narrow = TestManifold::bisphere(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(narrow.local_reach(&v(&[-0.25, 0.0, 0.0])), 0.25, epsilon = 1e-15);
        // Inner equator of a fat torus: the z-axis is closer than the core.
        let fat = TestManifold::torus(1.5, 1.0).unwrap();
        assert_abs_diff_eq!(fat.local_reach(&v(&[0.5, 0.0, 0.0])), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fat.lfs(&v(&[0.5, 0.0, 0.0])), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["sphere:2,3,1", "torus:2,1", "circle:1", "bisphere:1,2"] {
            let m: TestManifold = s.parse().unwrap();
            assert_eq!(m.to_string().parse::<TestManifold>().unwrap(), m);
        }
        assert!("torus:1,2".parse::<TestManifold>().is_err());
        assert!("torus:2".parse::<TestManifold>().is_err());
        assert!("cube:1".parse::<TestManifold>().is_err());
    }

    #[test]
    fn newton_agrees_with_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [
            TestManifold::unit_sphere(),
            TestManifold::torus(2.0, 1.0).unwrap(),
            TestManifold::circle(1.0).unwrap(),
            TestManifold::bisphere(1.0, 1.0).unwrap(),
        ] {
            for _ in 0..20 {
                let p = m.sample_point(&mut rng);
                let n = m.normal_frame(&p).unwrap()[0];
                let x = p + n * rng.gen_range(-0.4..0.4);
                let closed = m.project(&x).unwrap();
                let newton = m.newton_closest_point(&x).unwrap();
                assert!(closed.dist(&newton) < 1e-7, "{m}: {closed:?} vs {newton:?}");
            }
        }
    }

    #[test]
    fn dist_to_tangent_equality_on_sphere() {
        let s = TestManifold::unit_sphere();
        let x = v(&[1.0, 0.0, 0.0]);
        let a: f64 = 2.0 * (0.1f64).asin();
        let y = v(&[a.cos(), a.sin(), 0.0]);
        let (l1, r1, l2, r2) = dist_to_tangent_bounds_check(&s, &x, &y).unwrap();
        assert_abs_diff_eq!(l1, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(r1, 0.1, epsilon = 1e-12);
        assert!(l2 <= r2 + 1e-15);
        assert_eq!(dist_to_tangent_bounds_check(&s, &x, &x).unwrap(), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn tangent_variation_quarter_turn() {
        let s = TestManifold::unit_sphere();
        let tv = tangent_variation_check(&s, &v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0]), 1.0).unwrap();
        assert_abs_diff_eq!(tv.sin_angle, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tv.sin_bound, 2f64.sqrt(), epsilon = 1e-12);
        assert!(tangent_variation_check(&s, &v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0]), 1.5).is_err());
    }

    #[test]
    fn whitney_lifted_vertex() {
        let k = Flat::linear(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        let flat = EuclideanSimplex::new([v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        assert_eq!(whitney_angle_bound_check(&flat, &k).unwrap(), (0.0, 0.0));
        let lifted = EuclideanSimplex::new([v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.01])]).unwrap();
        let (lhs, rhs) = whitney_angle_bound_check(&lifted, &k).unwrap();
        assert!(lhs > 0.0 && lhs <= rhs);
    }

    #[test]
    fn proximity_on_small_sphere_triangle() {
        let s = TestManifold::unit_sphere();
        let a = v(&[0.0, 0.0, 1.0]);
        let frame = s.tangent_frame(&a).unwrap();
        let c = 0.1 / 3f64.sqrt();
        let pts: Vec<Vector> = (0..3)
            .map(|i| {
                let th = TAU * i as f64 / 3.0;
                s.project(&(a + frame[0] * (c * th.cos()) + frame[1] * (c * th.sin()))).unwrap()
            })
            .collect();
        let tri = EuclideanSimplex::new(pts).unwrap();
        let rep = simplex_manifold_proximity(&s, &tri, 1.0, 500, 1).unwrap();
        let l = tri.longest_edge();
        assert!(rep.max_distance_to_m <= 2.0 * l * l);
        assert!(rep.max_distance_to_m < l * l / 4.0);
        assert!(rep.max_vertex_to_projection < rep.vertex_bound);
    }

    #[test]
    fn geodesic_chord_identity() {
        let s = TestManifold::unit_sphere();
        let (c, g) = s.chord_from_geodesic_check(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(c, g, epsilon = 1e-15);
        let t = TestManifold::torus(2.0, 1.0).unwrap();
        assert!(t.geodesic_distance(&v(&[3.0, 0.0, 0.0]), &v(&[3.0, 0.0, 0.0])).is_err());
    }
}
