//! Fixed-capacity vectors, affine flats and angles between them.
//!
//! Everything here works in ambient dimension at most [`MAX_DIM`]. Vectors are
//! `Copy` so the hot loops elsewhere in the crate stay allocation free.

use std::fmt;
use std::ops::{Add, AddAssign, Deref, DerefMut, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 16;

/// Numerical tolerances shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Algebraic identities such as complement angles and exact bounds.
    pub algebraic: f64,
    /// Geometric predicates: points on a manifold, equalities of lengths.
    pub geometric: f64,
    /// Allowed drift of `basisᵀ·basis` from the identity.
    pub orthonormality: f64,
    /// Thickness below which a simplex counts as degenerate.
    pub degeneracy: f64,
    /// Barycentric slack for inside tests (negative means strict).
    pub inside: f64,
    /// Distance below which a point counts as on the medial axis.
    pub medial: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-10,
            geometric: 1e-8,
            orthonormality: 1e-12,
            degeneracy: 1e-12,
            inside: -1e-9,
            medial: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("spanning vectors are rank deficient (rank {rank} < {wanted})")]
    RankDeficient { rank: usize, wanted: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("zero vector has no direction")]
    ZeroVector,
}

/// A point or direction in `R^n` with `n <= MAX_DIM`.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    len: usize,
    coords: [f64; MAX_DIM],
}

impl Vector {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM, "dimension {n} exceeds MAX_DIM");
        Vector { len: n, coords: [0.0; MAX_DIM] }
    }

    /// Copies `xs`; panics if it is longer than [`MAX_DIM`].
    pub fn from_slice(xs: &[f64]) -> Self {
        let mut v = Vector::zeros(xs.len());
        v.coords[..xs.len()].copy_from_slice(xs);
        v
    }

    pub fn try_from_slice(xs: &[f64]) -> Result<Self, GeomError> {
        if xs.len() > MAX_DIM {
            return Err(GeomError::DimensionTooLarge(xs.len()));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Vector::from_slice(xs))
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Vector::zeros(n);
        v.coords[i] = 1.0;
        v
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut v = Vector::zeros(n);
        for i in 0..n {
            v.coords[i] = f(i);
        }
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.len]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.len]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut s = 0.0;
        for i in 0..self.len {
            s += self.coords[i] * other.coords[i];
        }
        s
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn dist(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut s = 0.0;
        for i in 0..self.len {
            let d = self.coords[i] - other.coords[i];
            s += d * d;
        }
        s.sqrt()
    }

    /// `self += a * x`
    #[inline]
    pub fn axpy(&mut self, a: f64, x: &Vector) {
        debug_assert_eq!(self.len, x.len);
        for i in 0..self.len {
            self.coords[i] += a * x.coords[i];
        }
    }

    /// Unit vector in the same direction, or `None` for a zero vector.
    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    /// First `n` coordinates, or the vector padded with zeros up to `n`.
    pub fn resized(&self, n: usize) -> Vector {
        let mut v = Vector::zeros(n);
        let k = n.min(self.len);
        v.coords[..k].copy_from_slice(&self.coords[..k]);
        v
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        self.as_slice()
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(mut self, rhs: Vector) -> Vector {
        self += rhs;
        self
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(mut self, rhs: Vector) -> Vector {
        self -= rhs;
        self
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.len, rhs.len);
        for i in 0..self.len {
            self.coords[i] += rhs.coords[i];
        }
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.len, rhs.len);
        for i in 0..self.len {
            self.coords[i] -= rhs.coords[i];
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(mut self, a: f64) -> Vector {
        for i in 0..self.len {
            self.coords[i] *= a;
        }
        self
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        self * -1.0
    }
}

/// Orthonormalizes `vectors` against `existing` and each other with modified
/// Gram-Schmidt, running the projection pass twice. Vectors whose residual
/// falls below `rel_tol` times their original norm are dropped.
pub fn gram_schmidt(existing: &[Vector], vectors: &[Vector], rel_tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        let mut w = *v;
        for _ in 0..2 {
            for b in existing.iter().chain(out.iter()) {
                let c = w.dot(b);
                w.axpy(-c, b);
            }
        }
        let n = w.norm();
        if n > rel_tol * n0 {
            out.push(w * (1.0 / n));
        }
    }
    out
}

/// Largest deviation of `basisᵀ·basis` from the identity.
pub fn orthonormality_defect(basis: &[Vector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.dot(b) - target).abs());
        }
    }
    worst
}

/// An affine subspace `base + span(basis)` with an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Flat {
    base: Vector,
    basis: Vec<Vector>,
}

impl Flat {
    /// Flat through `base` spanned by `vectors`, which must be independent.
    pub fn from_spanning(base: Vector, vectors: &[Vector]) -> Result<Flat, GeomError> {
        for v in vectors {
            if v.dim() != base.dim() {
                return Err(GeomError::DimensionMismatch { expected: base.dim(), found: v.dim() });
            }
        }
        let basis = gram_schmidt(&[], vectors, 1e-12);
        if basis.len() < vectors.len() {
            return Err(GeomError::RankDeficient { rank: basis.len(), wanted: vectors.len() });
        }
        Ok(Flat { base, basis })
    }

    /// Flat with an (approximately) orthonormal basis. The basis is
    /// re-orthonormalized if its drift exceeds `1e-10`.
    pub fn from_orthonormal(base: Vector, basis: Vec<Vector>) -> Result<Flat, GeomError> {
        if orthonormality_defect(&basis) > 1e-10 {
            return Flat::from_spanning(base, &basis);
        }
        Ok(Flat { base, basis })
    }

    /// Affine hull of `points`; the first point is the base.
    pub fn affine_hull(points: &[Vector]) -> Result<Flat, GeomError> {
        let base = points[0];
        let dirs: SmallVec<[Vector; 4]> = points[1..].iter().map(|p| *p - base).collect();
        Flat::from_spanning(base, &dirs)
    }

    /// Linear subspace spanned by `vectors`.
    pub fn linear(ambient: usize, vectors: &[Vector]) -> Result<Flat, GeomError> {
        Flat::from_spanning(Vector::zeros(ambient), vectors)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &Vector {
        &self.base
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Same directions through a different base point.
    pub fn translated_to(&self, base: Vector) -> Flat {
        Flat { base, basis: self.basis.clone() }
    }

    /// Coordinates of the projection of `x` in the flat's basis.
    #[inline]
    pub fn coordinates(&self, x: &Vector) -> Vector {
        let d = *x - self.base;
        Vector::from_fn(self.basis.len(), |i| d.dot(&self.basis[i]))
    }

    /// Point of the flat with the given coordinates.
    pub fn point_at(&self, coords: &Vector) -> Vector {
        let mut p = self.base;
        for (i, b) in self.basis.iter().enumerate() {
            p.axpy(coords[i], b);
        }
        p
    }

    /// Orthogonal projection of a direction onto the flat's linear part.
    #[inline]
    pub fn project_vector(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.dim());
        for b in &self.basis {
            out.axpy(v.dot(b), b);
        }
        out
    }

    /// Orthogonal projection of a point onto the flat.
    #[inline]
    pub fn project_point(&self, x: &Vector) -> Vector {
        self.base + self.project_vector(&(*x - self.base))
    }

    /// Euclidean distance from `x` to the flat.
    pub fn distance(&self, x: &Vector) -> f64 {
        let d = *x - self.base;
        (d - self.project_vector(&d)).norm()
    }

    /// Orthogonal complement through the same base point.
    pub fn orthogonal_complement(&self) -> Flat {
        let n = self.ambient_dim();
        let units: Vec<Vector> = (0..n).map(|i| Vector::unit(n, i)).collect();
        let comp = gram_schmidt(&self.basis, &units, 1e-8);
        Flat { base: self.base, basis: comp }
    }
}

/// Eigenvalues of a small symmetric matrix stored row-major, ascending.
pub fn symmetric_eigenvalues(g: &[f64], n: usize) -> SmallVec<[f64; 4]> {
    let mut out: SmallVec<[f64; 4]> = SmallVec::new();
    match n {
        0 => {}
        1 => out.push(g[0]),
        2 => {
            let (a, b, c) = (g[0], 0.5 * (g[1] + g[2]), g[3]);
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            out.push(mean - rad);
            out.push(mean + rad);
        }
        _ => {
            let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (g[i * n + j] + g[j * n + i]));
            let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| a.total_cmp(b));
            out.extend(ev);
        }
    }
    out
}

/// Sines and cosines describing the largest principal angle from `k` to `l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalAngleExtremes {
    /// Largest singular value of `(I - P_L) B_K`.
    pub sin_max: f64,
    /// Smallest singular value of `B_Kᵀ B_L`.
    pub cos_min: f64,
}

impl PrincipalAngleExtremes {
    pub fn angle(&self) -> f64 {
        self.sin_max.atan2(self.cos_min)
    }
}

/// Extreme principal angle between `span(k)` and `span(l)`, both given by
/// orthonormal bases with `k.len() <= l.len()`.
pub fn principal_angle_extremes(k: &[Vector], l: &[Vector]) -> PrincipalAngleExtremes {
    let kd = k.len();
    if kd == 0 {
        return PrincipalAngleExtremes { sin_max: 0.0, cos_min: 1.0 };
    }
    // Residuals of the K basis after projecting onto L.
    let mut resid: SmallVec<[Vector; 4]> = SmallVec::new();
    let mut coupling = [[0.0f64; MAX_DIM]; MAX_DIM];
    for (i, kv) in k.iter().enumerate() {
        let mut r = *kv;
        for (j, lv) in l.iter().enumerate() {
            let c = kv.dot(lv);
            coupling[i][j] = c;
            r.axpy(-c, lv);
        }
        resid.push(r);
    }
    let mut rr: SmallVec<[f64; 16]> = SmallVec::from_elem(0.0, kd * kd);
    let mut cc: SmallVec<[f64; 16]> = SmallVec::from_elem(0.0, kd * kd);
    for i in 0..kd {
        for j in 0..kd {
            rr[i * kd + j] = resid[i].dot(&resid[j]);
            let mut s = 0.0;
            for t in 0..l.len() {
                s += coupling[i][t] * coupling[j][t];
            }
            cc[i * kd + j] = s;
        }
    }
    let sin2 = symmetric_eigenvalues(&rr, kd);
    let cos2 = symmetric_eigenvalues(&cc, kd);
    PrincipalAngleExtremes {
        sin_max: sin2.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        cos_min: cos2.first().copied().unwrap_or(1.0).max(0.0).sqrt(),
    }
}

/// Largest principal angle from `k` to `l`, in `[0, π/2]`.
///
/// Requires `dim k <= dim l`; the result is the smallest `θ` with every unit
/// vector of `k` within angle `θ` of `l`, and is symmetric for equal
/// dimensions. Base points are ignored. Computed as `atan2(sin, cos)` so that
/// angles near `0` and near `π/2` are both resolved accurately.
pub fn angle_between_flats(k: &Flat, l: &Flat) -> Result<f64, GeomError> {
    check_angle_dims(k, l)?;
    Ok(principal_angle_extremes(k.basis(), l.basis()).angle())
}

/// Sine of [`angle_between_flats`].
pub fn sin_angle_between_flats(k: &Flat, l: &Flat) -> Result<f64, GeomError> {
    check_angle_dims(k, l)?;
    Ok(principal_angle_extremes(k.basis(), l.basis()).sin_max)
}

fn check_angle_dims(k: &Flat, l: &Flat) -> Result<(), GeomError> {
    if k.ambient_dim() != l.ambient_dim() {
        return Err(GeomError::DimensionMismatch { expected: l.ambient_dim(), found: k.ambient_dim() });
    }
    if k.dim() > l.dim() {
        return Err(GeomError::DimensionMismatch { expected: l.dim(), found: k.dim() });
    }
    Ok(())
}

/// Angle between the line spanned by `v` and the linear part of `flat`;
/// `π/2` when `v` is orthogonal to it.
pub fn angle_vector_flat(v: &Vector, flat: &Flat) -> Result<f64, GeomError> {
    let u = v.normalized().ok_or(GeomError::ZeroVector)?;
    Ok(principal_angle_extremes(&[u], flat.basis()).angle())
}

/// Sine of the angle between the line spanned by `v` and `flat`; zero for a
/// zero vector.
#[inline]
pub fn sin_angle_vector_flat(v: &Vector, flat: &Flat) -> f64 {
    let n = v.norm();
    if n == 0.0 {
        return 0.0;
    }
    let mut r = *v;
    for b in flat.basis() {
        r.axpy(-v.dot(b), b);
    }
    (r.norm() / n).min(1.0)
}

/// Orthogonal projection of `x` onto `flat`.
pub fn orthogonal_project(x: &Vector, flat: &Flat) -> Vector {
    flat.project_point(x)
}

/// Both sides of an angle identity between a flat and a complement.
///
/// For `dim k == dim l` returns `(∠(l⊥, k⊥), ∠(k, l))`. For a hyperplane `l`
/// and `dim k == 1` returns `(∠(k, l⊥), π/2 - ∠(k, l))`; the first case
/// takes precedence when both apply.
pub fn complement_angle_identity_check(k: &Flat, l: &Flat) -> Result<(f64, f64), GeomError> {
    if k.dim() == l.dim() {
        let lhs = angle_between_flats(&l.orthogonal_complement(), &k.orthogonal_complement())?;
        return Ok((lhs, angle_between_flats(k, l)?));
    }
    if l.dim() + 1 == l.ambient_dim() && k.dim() == 1 {
        let normal = l.orthogonal_complement();
        let lhs = angle_between_flats(k, &normal)?;
        return Ok((lhs, std::f64::consts::FRAC_PI_2 - angle_between_flats(k, l)?));
    }
    Err(GeomError::DimensionMismatch { expected: l.dim(), found: k.dim() })
}

/// Singular values of a linear map, largest first.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMapSpectrum {
    pub singular_values: Vec<f64>,
    pub operator_norm: f64,
    pub min_singular: f64,
}

impl LinearMapSpectrum {
    pub fn from_values(mut singular_values: Vec<f64>) -> Self {
        singular_values.sort_by(|x, y| y.total_cmp(x));
        let operator_norm = singular_values.first().copied().unwrap_or(0.0);
        let min_singular = singular_values.last().copied().unwrap_or(0.0);
        LinearMapSpectrum { singular_values, operator_norm, min_singular }
    }

    /// `max |s_i - 1|`.
    pub fn max_deviation_from_one(&self) -> f64 {
        self.singular_values.iter().fold(0.0f64, |acc, s| acc.max((s - 1.0).abs()))
    }
}

pub fn svd_spectrum(a: &DMatrix<f64>) -> LinearMapSpectrum {
    LinearMapSpectrum::from_values(a.clone().singular_values().iter().copied().collect())
}

/// Matrix whose columns are the given vectors.
pub fn columns_to_matrix(cols: &[Vector]) -> DMatrix<f64> {
    let rows = cols.first().map_or(0, |c| c.dim());
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}
