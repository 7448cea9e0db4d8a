//! Euclidean simplices: edge lengths, altitudes, thickness and barycentric
//! coordinates for simplices sitting in a possibly higher-dimensional space.

use nalgebra::DMatrix;
use smallvec::SmallVec;
use thiserror::Error;

use crate::geom::{self, Flat, Vector, MAX_DIM};

/// Thickness below which a simplex is treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum SimplexError {
    #[error("a simplex needs at least one vertex")]
    Empty,
    #[error("vertices live in different dimensions")]
    DimensionMismatch,
    #[error("simplex of dimension {dim} cannot sit in R^{ambient}")]
    TooManyVertices { dim: usize, ambient: usize },
    #[error("vertex index {index} out of range for a {dim}-simplex")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("altitudes are undefined for a 0-simplex")]
    ZeroDimensional,
    #[error("degenerate simplex (thickness {thickness:e})")]
    DegenerateSimplex { thickness: f64 },
    #[error("point is {distance:e} away from the affine hull")]
    PointOffAffineHull { distance: f64 },
    #[error("simplex of dimension {dim} is not full-dimensional in R^{ambient}")]
    NotFullDimensional { dim: usize, ambient: usize },
    #[error("distortion {0} outside [0, 1]")]
    XiOutOfRange(f64),
}

/// How to treat points that are not on the simplex's affine hull.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HullMode {
    /// Project onto the hull first.
    #[default]
    Project,
    /// Reject points farther than the geometric tolerance.
    Strict,
}

pub type Vertices = SmallVec<[Vector; 4]>;
pub type Barycentric = SmallVec<[f64; 4]>;

/// A closed simplex given by its vertex list. For full-dimensional simplices
/// the vertex order fixes the orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanSimplex {
    vertices: Vertices,
}

/// Size and shape measures of one simplex.
#[derive(Clone, Debug, PartialEq)]
#[allow(non_snake_case)]
pub struct QualityMeasures {
    pub longest_edge_L: f64,
    pub shortest_edge: f64,
    pub min_altitude_a: f64,
    pub thickness_t: f64,
    pub diameter: f64,
    pub per_vertex_altitudes: Vec<f64>,
}

impl EuclideanSimplex {
    pub fn new(vertices: impl IntoIterator<Item = Vector>) -> Result<Self, SimplexError> {
        let vertices: Vertices = vertices.into_iter().collect();
        let first = vertices.first().ok_or(SimplexError::Empty)?;
        let n = first.dim();
        if vertices.iter().any(|v| v.dim() != n) {
            return Err(SimplexError::DimensionMismatch);
        }
        if vertices.len() > n + 1 {
            return Err(SimplexError::TooManyVertices { dim: vertices.len() - 1, ambient: n });
        }
        Ok(EuclideanSimplex { vertices })
    }

    /// Combinatorial dimension `j`.
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Vector {
        &self.vertices[i]
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    /// `(shortest, longest)` edge length; `(0, 0)` for a vertex.
    pub fn edge_length_range(&self) -> (f64, f64) {
        edge_length_range(&self.vertices)
    }

    pub fn longest_edge(&self) -> f64 {
        self.edge_length_range().1
    }

    pub fn barycentre(&self) -> Vector {
        let mut c = Vector::zeros(self.ambient_dim());
        let w = 1.0 / self.vertices.len() as f64;
        for v in &self.vertices {
            c.axpy(w, v);
        }
        c
    }

    /// `Σ λ_i v_i`.
    pub fn point_at(&self, lambda: &[f64]) -> Vector {
        combine(&self.vertices, lambda)
    }

    pub fn affine_hull(&self) -> Result<Flat, SimplexError> {
        Flat::affine_hull(&self.vertices)
            .map_err(|_| SimplexError::DegenerateSimplex { thickness: self.thickness() })
    }

    /// Distance from vertex `i` to the affine hull of the opposite facet.
    pub fn altitude(&self, i: usize) -> Result<f64, SimplexError> {
        if self.dim() == 0 {
            return Err(SimplexError::ZeroDimensional);
        }
        if i > self.dim() {
            return Err(SimplexError::IndexOutOfRange { index: i, dim: self.dim() });
        }
        Ok(vertex_altitude(&self.vertices, i))
    }

    /// Minimum altitude over `j` times the longest edge; 1 for a vertex.
    pub fn thickness(&self) -> f64 {
        thickness_of(&self.vertices).0
    }

    pub fn quality(&self) -> QualityMeasures {
        let (s, l) = self.edge_length_range();
        if self.dim() == 0 {
            return QualityMeasures {
                longest_edge_L: 0.0,
                shortest_edge: 0.0,
                min_altitude_a: 0.0,
                thickness_t: 1.0,
                diameter: 0.0,
                per_vertex_altitudes: vec![0.0],
            };
        }
        let alts: Vec<f64> = (0..=self.dim()).map(|i| vertex_altitude(&self.vertices, i)).collect();
        let a = alts.iter().copied().fold(f64::INFINITY, f64::min);
        QualityMeasures {
            longest_edge_L: l,
            shortest_edge: s,
            min_altitude_a: a,
            thickness_t: thickness_from(a, self.dim(), l),
            diameter: l,
            per_vertex_altitudes: alts,
        }
    }

    /// Barycentric coordinates of `x` (after projecting onto the affine hull
    /// in [`HullMode::Project`]).
    pub fn barycentric_coordinates(&self, x: &Vector, mode: HullMode) -> Result<Barycentric, SimplexError> {
        let t = self.thickness();
        if t < DEGENERACY_TOLERANCE {
            return Err(SimplexError::DegenerateSimplex { thickness: t });
        }
        let (lambda, off) = barycentric_least_squares(&self.vertices, x);
        if mode == HullMode::Strict {
            let scale = self.longest_edge().max(1.0);
            if off > 1e-8 * scale {
                return Err(SimplexError::PointOffAffineHull { distance: off });
            }
        }
        Ok(lambda)
    }

    /// `3 ξ L / t`: how far a ξ-distortion map fixing the vertices can move a
    /// point of the simplex.
    pub fn trilateration_displacement_bound(&self, xi: f64) -> Result<f64, SimplexError> {
        if !self.is_full_dimensional() {
            return Err(SimplexError::NotFullDimensional { dim: self.dim(), ambient: self.ambient_dim() });
        }
        if !(0.0..=1.0).contains(&xi) {
            return Err(SimplexError::XiOutOfRange(xi));
        }
        if xi == 0.0 {
            return Ok(0.0);
        }
        let q = self.quality();
        Ok(3.0 * xi * q.longest_edge_L / q.thickness_t)
    }

    /// `(‖(Pᵀ)⁻¹‖, 1/(√m t L))` where the columns of `P` are the edge vectors
    /// from vertex 0.
    pub fn matrix_p_inverse_norm_check(&self) -> Result<(f64, f64), SimplexError> {
        if !self.is_full_dimensional() {
            return Err(SimplexError::NotFullDimensional { dim: self.dim(), ambient: self.ambient_dim() });
        }
        let q = self.quality();
        if q.thickness_t < DEGENERACY_TOLERANCE {
            return Err(SimplexError::DegenerateSimplex { thickness: q.thickness_t });
        }
        let m = self.dim();
        let p = DMatrix::from_fn(m, m, |i, j| self.vertices[j + 1][i] - self.vertices[0][i]);
        let spectrum = geom::svd_spectrum(&p);
        let actual = 1.0 / spectrum.min_singular;
        let bound = 1.0 / ((m as f64).sqrt() * q.thickness_t * q.longest_edge_L);
        Ok((actual, bound))
    }
}

/// `Σ λ_i v_i` over a vertex slice.
#[inline]
pub fn combine(vertices: &[Vector], lambda: &[f64]) -> Vector {
    let mut p = Vector::zeros(vertices[0].dim());
    for (v, &l) in vertices.iter().zip(lambda) {
        p.axpy(l, v);
    }
    p
}

/// `(shortest, longest)` pairwise distance among `vertices`.
#[inline]
pub fn edge_length_range(vertices: &[Vector]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            let d = vertices[i].dist(&vertices[j]);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    if vertices.len() < 2 {
        lo = 0.0;
    }
    (lo, hi)
}

#[inline]
fn thickness_from(a: f64, j: usize, l: f64) -> f64 {
    if l == 0.0 {
        0.0
    } else {
        (a / (j as f64 * l)).min(1.0)
    }
}

/// Distance from `vertices[i]` to the affine hull of the other vertices.
#[inline]
pub fn vertex_altitude(vertices: &[Vector], i: usize) -> f64 {
    let j = vertices.len() - 1;
    let o = if i == 0 { 1 } else { 0 };
    let origin = vertices[o];
    let mut basis = [Vector::zeros(0); MAX_DIM];
    let mut k = 0;
    for (idx, v) in vertices.iter().enumerate() {
        if idx == i || idx == o {
            continue;
        }
        let d = *v - origin;
        let n0 = d.norm();
        let mut w = d;
        for _ in 0..2 {
            for b in &basis[..k] {
                let c = w.dot(b);
                w.axpy(-c, b);
            }
        }
        let n = w.norm();
        if n > 1e-14 * n0 && n > 0.0 {
            basis[k] = w * (1.0 / n);
            k += 1;
        }
    }
    debug_assert!(k < j.max(1));
    let mut r = vertices[i] - origin;
    for _ in 0..2 {
        for b in &basis[..k] {
            let c = r.dot(b);
            r.axpy(-c, b);
        }
    }
    r.norm()
}

/// `(thickness, longest edge, shortest edge)` without allocating.
#[inline]
pub fn thickness_of(vertices: &[Vector]) -> (f64, f64, f64) {
    let j = vertices.len() - 1;
    let (s, l) = edge_length_range(vertices);
    if j == 0 {
        return (1.0, 0.0, 0.0);
    }
    if j == 1 {
        return (thickness_from(l, 1, l), l, s);
    }
    if j == 2 {
        // Altitude onto each edge is twice the area over that edge's length.
        let (u, w) = (vertices[1] - vertices[0], vertices[2] - vertices[0]);
        let (uu, ww, uw) = (u.dot(&u), w.dot(&w), u.dot(&w));
        let twice_area = (uu * ww - uw * uw).max(0.0).sqrt();
        return (thickness_from(twice_area / l, 2, l), l, s);
    }
    let mut a = f64::INFINITY;
    for i in 0..=j {
        a = a.min(vertex_altitude(vertices, i));
    }
    (thickness_from(a, j, l), l, s)
}

/// Least-squares barycentric coordinates of `x` against the edge vectors of
/// `vertices`, plus the distance from `x` to the affine hull.
#[inline]
pub fn barycentric_least_squares(vertices: &[Vector], x: &Vector) -> (Barycentric, f64) {
    let j = vertices.len() - 1;
    let v0 = vertices[0];
    // Modified Gram-Schmidt QR of the edge matrix, R stored column-wise.
    let mut q = [Vector::zeros(0); MAX_DIM];
    let mut r = [[0.0f64; MAX_DIM]; MAX_DIM];
    for c in 0..j {
        let mut w = vertices[c + 1] - v0;
        for _ in 0..2 {
            for (k, qk) in q[..c].iter().enumerate() {
                let d = w.dot(qk);
                r[k][c] += d;
                w.axpy(-d, qk);
            }
        }
        let n = w.norm();
        r[c][c] = n;
        q[c] = if n > 0.0 { w * (1.0 / n) } else { w };
    }
    let d = *x - v0;
    let mut rhs = [0.0f64; MAX_DIM];
    let mut resid = d;
    for c in 0..j {
        rhs[c] = d.dot(&q[c]);
        resid.axpy(-rhs[c], &q[c]);
    }
    let mut mu = [0.0f64; MAX_DIM];
    for c in (0..j).rev() {
        let mut s = rhs[c];
        for k in c + 1..j {
            s -= r[c][k] * mu[k];
        }
        mu[c] = s / r[c][c];
    }
    let mut out: Barycentric = SmallVec::with_capacity(j + 1);
    let sum: f64 = mu[..j].iter().sum();
    out.push(1.0 - sum);
    out.extend_from_slice(&mu[..j]);
    (out, resid.norm())
}

/// Euclidean distance from `x` to the closed simplex spanned by `vertices`.
pub fn distance_to_simplex(x: &Vector, vertices: &[Vector]) -> f64 {
    if vertices.len() == 1 {
        return x.dist(&vertices[0]);
    }
    let (lam, off) = barycentric_least_squares(vertices, x);
    if lam.iter().all(|&l| l >= 0.0) && lam.iter().all(|l| l.is_finite()) {
        return off;
    }
    let mut best = f64::INFINITY;
    for drop in 0..vertices.len() {
        if lam[drop] >= 0.0 && lam[drop].is_finite() {
            continue;
        }
        let face: Vertices = vertices.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, v)| *v).collect();
        best = best.min(distance_to_simplex(x, &face));
    }
    best
}

/// Signed volume factor `det[v1-v0, …, vm-v0]` of a full-dimensional simplex.
pub fn orientation_determinant(vertices: &[Vector]) -> f64 {
    let m = vertices.len() - 1;
    debug_assert_eq!(vertices[0].dim(), m);
    match m {
        0 => 1.0,
        1 => vertices[1][0] - vertices[0][0],
        2 => {
            let (a, b) = (vertices[1] - vertices[0], vertices[2] - vertices[0]);
            a[0] * b[1] - a[1] * b[0]
        }
        3 => {
            let (a, b, c) = (vertices[1] - vertices[0], vertices[2] - vertices[0], vertices[3] - vertices[0]);
            a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0])
        }
        _ => DMatrix::from_fn(m, m, |i, j| vertices[j + 1][i] - vertices[0][i]).determinant(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(pts: &[&[f64]]) -> EuclideanSimplex {
        EuclideanSimplex::new(pts.iter().map(|p| Vector::from_slice(p))).unwrap()
    }

    #[test]
    fn right_triangle_measures() {
        let t = s(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert!((t.altitude(0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((t.thickness() - 0.25).abs() < 1e-15);
        let lam = t.barycentric_coordinates(&Vector::from_slice(&[0.25, 0.25]), HullMode::Strict).unwrap();
        assert!((lam[0] - 0.5).abs() < 1e-15 && (lam[1] - 0.25).abs() < 1e-15 && (lam[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn equilateral_and_regular_tetrahedron() {
        let h = 3f64.sqrt() / 2.0;
        let tri = s(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h]]);
        assert!((tri.thickness() - 3f64.sqrt() / 4.0).abs() < 1e-15);
        let tet = s(&[
            &[1.0, 1.0, 1.0],
            &[1.0, -1.0, -1.0],
            &[-1.0, 1.0, -1.0],
            &[-1.0, -1.0, 1.0],
        ]);
        let edge = 8f64.sqrt();
        for i in 0..4 {
            assert!((tet.altitude(i).unwrap() / edge - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_and_zero_dimensional() {
        let flat = s(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]]);
        assert!(flat.altitude(1).unwrap() < 1e-15);
        assert!(matches!(
            flat.barycentric_coordinates(&Vector::zeros(2), HullMode::Project),
            Err(SimplexError::DegenerateSimplex { .. })
        ));
        let point = s(&[&[3.0, 4.0]]);
        assert_eq!(point.thickness(), 1.0);
        assert_eq!(point.altitude(0), Err(SimplexError::ZeroDimensional));
        assert!(matches!(flat.altitude(3), Err(SimplexError::IndexOutOfRange { .. })));
    }

    #[test]
    fn strict_mode_rejects_off_hull_points() {
        let tri = s(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let above = Vector::from_slice(&[0.2, 0.2, 0.5]);
        assert!(matches!(
            tri.barycentric_coordinates(&above, HullMode::Strict),
            Err(SimplexError::PointOffAffineHull { .. })
        ));
        let lam = tri.barycentric_coordinates(&above, HullMode::Project).unwrap();
        assert!((lam[1] - 0.2).abs() < 1e-15 && (lam[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn trilateration_bound_values() {
        let h = 3f64.sqrt();
        let tri = s(&[&[0.0, 0.0], &[2.0, 0.0], &[1.0, h]]);
        assert_eq!(tri.trilateration_displacement_bound(0.0).unwrap(), 0.0);
        let b = tri.trilateration_displacement_bound(0.5).unwrap();
        assert!((b - 3.0 * 0.5 * 2.0 / (3f64.sqrt() / 4.0)).abs() < 1e-12);
        assert!(tri.trilateration_displacement_bound(1.5).is_err());
        let edge = s(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert!(matches!(edge.trilateration_displacement_bound(0.1), Err(SimplexError::NotFullDimensional { .. })));
    }

    #[test]
    fn p_inverse_norm_bound_and_homogeneity() {
        let std2 = s(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let (a, b) = std2.matrix_p_inverse_norm_check().unwrap();
        assert!(a <= b + 1e-10);
        let big = s(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]]);
        let (a2, b2) = big.matrix_p_inverse_norm_check().unwrap();
        assert!((a2 - a / 2.0).abs() < 1e-14 && (b2 - b / 2.0).abs() < 1e-14);
    }

    #[test]
    fn distance_to_triangle() {
        let t = [Vector::from_slice(&[0.0, 0.0]), Vector::from_slice(&[1.0, 0.0]), Vector::from_slice(&[0.0, 1.0])];
        assert_eq!(distance_to_simplex(&Vector::from_slice(&[0.2, 0.2]), &t), 0.0);
        assert!((distance_to_simplex(&Vector::from_slice(&[-1.0, -1.0]), &t) - 2f64.sqrt()).abs() < 1e-15);
        assert!((distance_to_simplex(&Vector::from_slice(&[1.0, 1.0]), &t) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((distance_to_simplex(&Vector::from_slice(&[0.5, -2.0]), &t) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn orientation_sign() {
        let ccw = [Vector::from_slice(&[0.0, 0.0]), Vector::from_slice(&[1.0, 0.0]), Vector::from_slice(&[0.0, 1.0])];
        assert!(orientation_determinant(&ccw) > 0.0);
        let cw = [ccw[0], ccw[2], ccw[1]];
        assert!(orientation_determinant(&cw) < 0.0);
    }
}
