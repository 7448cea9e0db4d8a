//! Degree of piecewise-linear maps from a complex in `R^m` to `R^m`, by
//! signed preimage counting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::complex::{GeometricComplex, VertexId};
use crate::geom::Vector;
use crate::simplex::{self, Vertices};

/// Barycentric slack for preimage interiority.
pub const PREIMAGE_TOLERANCE: f64 = 1e-10;
/// Query points closer than this to the skeleton image are ill-posed.
pub const SKELETON_TOLERANCE: f64 = 1e-8;
/// Largest random offset applied when searching for a generic query point.
pub const PERTURBATION: f64 = 1e-7;
pub const MAX_PERTURBATION_TRIES: usize = 100;

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum DegreeError {
    #[error("source complex must be full-dimensional (m = {m}, N = {n})")]
    NotFullDimensional { m: usize, n: usize },
    #[error("expected {expected} vertex images, found {found}")]
    ImageCount { expected: usize, found: usize },
    #[error("vertex image {0} has the wrong dimension")]
    ImageDimension(usize),
    #[error("image of simplex {0} is degenerate")]
    DegenerateImage(usize),
    #[error("query point is {0:e} from the image of the (m-1)-skeleton")]
    PointOnSkeletonImage(f64),
    #[error("map is not simplexwise positive")]
    NotSimplexwisePositive,
    #[error("could not place samples off the skeleton image")]
    SamplingFailed,
}

/// A simplexwise affine map given by the images of the vertices.
#[derive(Clone, Debug)]
pub struct OrientedPLMap {
    source: GeometricComplex,
    images: Vec<Vector>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeResult {
    pub value: i64,
    #[serde(skip)]
    pub preimage_points: Vec<Vector>,
    pub signs: Vec<i8>,
    pub simplices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityReport {
    pub negative: Vec<usize>,
    pub degenerate: Vec<usize>,
}

impl PositivityReport {
    pub fn passes(&self) -> bool {
        self.negative.is_empty() && self.degenerate.is_empty()
    }
}

/// Preimage counts found on one connected region of the scan grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentCount {
    pub cells: usize,
    pub count: usize,
    /// A cell centre belonging to the region.
    pub sample: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub components: Vec<ComponentCount>,
    /// Cells whose count differed from their region's first count.
    pub violations: usize,
}

impl ScanReport {
    pub fn passes(&self) -> bool {
        self.violations == 0
    }
}

impl OrientedPLMap {
    pub fn new(source: GeometricComplex, images: Vec<Vector>) -> Result<Self, DegreeError> {
        let (m, n) = (source.dimension(), source.ambient_dim());
        if m != n {
            return Err(DegreeError::NotFullDimensional { m, n });
        }
        if images.len() != source.num_vertices() {
            return Err(DegreeError::ImageCount { expected: source.num_vertices(), found: images.len() });
        }
        if let Some(i) = images.iter().position(|v| v.dim() != m) {
            return Err(DegreeError::ImageDimension(i));
        }
        Ok(OrientedPLMap { source, images })
    }

    /// Map obtained by applying `f` to every vertex.
    pub fn from_fn(source: GeometricComplex, f: impl Fn(&Vector) -> Vector) -> Result<Self, DegreeError> {
        let images = source.vertices().map(|v| f(&v)).collect();
        OrientedPLMap::new(source, images)
    }

    pub fn source(&self) -> &GeometricComplex {
        &self.source
    }

    pub fn images(&self) -> &[Vector] {
        &self.images
    }

    pub fn dimension(&self) -> usize {
        self.source.dimension()
    }

    fn image_vertices(&self, t: usize) -> Vertices {
        self.source.top(t).iter().map(|&v| self.images[v as usize]).collect()
    }

    /// Image of a source point lying in top simplex `t`.
    pub fn eval_in(&self, t: usize, x: &Vector) -> Vector {
        let (lam, _) = self.source.barycentric_in_top(t, x);
        simplex::combine(&self.image_vertices(t), &lam)
    }

    /// `+1` if the affine restriction to top simplex `t` preserves the
    /// orientation of `R^m`, `−1` if it reverses it.
    pub fn simplex_sign(&self, t: usize) -> Result<i8, DegreeError> {
        let src = self.source.top_vertices(t);
        let img = self.image_vertices(t);
        let ds = simplex::orientation_determinant(&src);
        let di = simplex::orientation_determinant(&img);
        let scale = simplex::edge_length_range(&img).1.max(f64::MIN_POSITIVE);
        if di.abs() <= 1e-12 * scale.powi(self.dimension() as i32) || ds == 0.0 {
            return Err(DegreeError::DegenerateImage(t));
        }
        Ok(if (ds > 0.0) == (di > 0.0) { 1 } else { -1 })
    }

    /// Distance from `y` to the image of the `(m−1)`-skeleton.
    pub fn skeleton_image_distance(&self, y: &Vector) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.source.num_top_simplices() {
            let img = self.image_vertices(t);
            for drop in 0..img.len() {
                let facet: Vertices = img.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, v)| *v).collect();
                best = best.min(simplex::distance_to_simplex(y, &facet));
            }
        }
        best
    }

    /// Distance from `y` to the image of the boundary complex.
    pub fn boundary_image_distance(&self, boundary: &[Vec<VertexId>], y: &Vector) -> f64 {
        boundary
            .iter()
            .map(|f| {
                let verts: Vertices = f.iter().map(|&v| self.images[v as usize]).collect();
                simplex::distance_to_simplex(y, &verts)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn preimages(&self, y: &Vector) -> Result<DegreeResult, DegreeError> {
        let mut res = DegreeResult { value: 0, preimage_points: Vec::new(), signs: Vec::new(), simplices: Vec::new() };
        for t in 0..self.source.num_top_simplices() {
            let img = self.image_vertices(t);
            let (lam, _) = simplex::barycentric_least_squares(&img, y);
            if lam.iter().all(|&l| l > PREIMAGE_TOLERANCE) {
                let sign = self.simplex_sign(t)?;
                let src = self.source.top_vertices(t);
                res.preimage_points.push(simplex::combine(&src, &lam));
                res.signs.push(sign);
                res.simplices.push(t);
                res.value += sign as i64;
            }
        }
        Ok(res)
    }

    /// Signed count of the preimages of `y`.
    pub fn degree_at_point(&self, y: &Vector) -> Result<DegreeResult, DegreeError> {
        let d = self.skeleton_image_distance(y);
        if d < SKELETON_TOLERANCE {
            return Err(DegreeError::PointOnSkeletonImage(d));
        }
        self.preimages(y)
    }

    /// Degree at a generic point near `y`: the query is moved by random
    /// offsets of size up to [`PERTURBATION`] until it is off the skeleton
    /// image.
    pub fn degree_near_point(&self, y: &Vector, seed: u64) -> Result<DegreeResult, DegreeError> {
        if self.skeleton_image_distance(y) >= SKELETON_TOLERANCE {
            return self.preimages(y);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_PERTURBATION_TRIES {
            let z = *y + Vector::from_fn(y.dim(), |_| rng.gen_range(-PERTURBATION..PERTURBATION));
            if self.skeleton_image_distance(&z) >= SKELETON_TOLERANCE {
                return self.preimages(&z);
            }
        }
        Err(DegreeError::PointOnSkeletonImage(0.0))
    }

    /// Degree restricted to the given top simplices.
    pub fn degree_on(&self, tops: &[usize], y: &Vector) -> Result<i64, DegreeError> {
        let mut d = 0;
        for &t in tops {
            let img = self.image_vertices(t);
            let (lam, _) = simplex::barycentric_least_squares(&img, y);
            if lam.iter().all(|&l| l > PREIMAGE_TOLERANCE) {
                d += self.simplex_sign(t)? as i64;
            }
        }
        Ok(d)
    }

    /// Lists the top simplices whose restriction reverses orientation or
    /// collapses.
    pub fn check_simplexwise_positive(&self) -> PositivityReport {
        let mut rep = PositivityReport { negative: Vec::new(), degenerate: Vec::new() };
        for t in 0..self.source.num_top_simplices() {
            match self.simplex_sign(t) {
                Ok(1) => {}
                Ok(_) => rep.negative.push(t),
                Err(_) => rep.degenerate.push(t),
            }
        }
        rep
    }

    /// Counts preimages over a grid covering the image, groups grid cells
    /// into regions separated by the boundary image, and checks that the
    /// count is constant on each region.
    pub fn locally_constant_degree_scan(&self, resolution: usize) -> Result<ScanReport, DegreeError> {
        if !self.check_simplexwise_positive().passes() {
            return Err(DegreeError::NotSimplexwisePositive);
        }
        let m = self.dimension();
        if m == 0 || resolution < 2 {
            return Err(DegreeError::SamplingFailed);
        }
        let boundary: Vec<Vec<VertexId>> = self
            .source
            .boundary_complex()
            .map_err(|_| DegreeError::SamplingFailed)?
            .of_dimension(m - 1)
            .map(|k| k.to_vec())
            .collect();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for v in &self.images {
            for i in 0..m {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        for i in 0..m {
            let pad = 0.1 * (hi[i] - lo[i]).max(1e-6);
            lo[i] -= pad;
            hi[i] += pad;
        }
        let cell: Vec<f64> = (0..m).map(|i| (hi[i] - lo[i]) / resolution as f64).collect();
        let half_diag = 0.5 * cell.iter().map(|c| c * c).sum::<f64>().sqrt();
        let total = resolution.pow(m as u32);
        let centre = |idx: usize| {
            let mut rem = idx;
            Vector::from_fn(m, |i| {
                let k = rem % resolution;
                rem /= resolution;
                lo[i] + (k as f64 + 0.5) * cell[i]
            })
        };
        // Cells touching the boundary image separate regions. The slack
        // catches boundary points lying exactly on a cell face, which the
        // padding makes common in dimension one.
        let reach = half_diag * (1.0 + 1e-9);
        let blocked: Vec<bool> =
            (0..total).map(|c| self.boundary_image_distance(&boundary, &centre(c)) <= reach).collect();
        let mut region = vec![usize::MAX; total];
        let mut components = Vec::new();
        let mut violations = 0;
        for start in 0..total {
            if blocked[start] || region[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut stack = vec![start];
            region[start] = id;
            let mut first: Option<usize> = None;
            let mut cells = 0;
            while let Some(c) = stack.pop() {
                cells += 1;
                let y = centre(c);
                let count = self.degree_near_point(&y, c as u64).map_err(|_| DegreeError::SamplingFailed)?.signs.len();
                match first {
                    None => first = Some(count),
                    Some(f) if f != count => violations += 1,
                    _ => {}
                }
                let mut stride = 1;
                for _ in 0..m {
                    let k = (c / stride) % resolution;
                    if k > 0 {
                        let nb = c - stride;
                        if !blocked[nb] && region[nb] == usize::MAX {
                            region[nb] = id;
                            stack.push(nb);
                        }
                    }
                    if k + 1 < resolution {
                        let nb = c + stride;
                        if !blocked[nb] && region[nb] == usize::MAX {
                            region[nb] = id;
                            stack.push(nb);
                        }
                    }
                    stride *= resolution;
                }
            }
            components.push(ComponentCount { cells, count: first.unwrap_or(0), sample: centre(start).to_vec() });
        }
        if components.is_empty() {
            return Err(DegreeError::SamplingFailed);
        }
        Ok(ScanReport { components, violations })
    }
}

/// Standard fixtures for degree computations.
pub mod fixtures {
    use std::f64::consts::TAU;

    use super::OrientedPLMap;
    use crate::complex::{ComplexBuilder, GeometricComplex};
    use crate::geom::Vector;

    /// Fan of `n` triangles around the origin, inscribed in the unit circle,
    /// with counter-clockwise triangles.
    pub fn disk_fan(n: u32) -> GeometricComplex {
        let mut b = ComplexBuilder::new(2, 2);
        b.add_vertex(&[0.0, 0.0]);
        for k in 0..n {
            let a = TAU * k as f64 / n as f64;
            b.add_vertex(&[a.cos(), a.sin()]);
        }
        for k in 0..n {
            b.add_simplex(&[0, 1 + k, 1 + (k + 1) % n]);
        }
        b.build().expect("fan is well formed")
    }

    /// Annulus between radii 1 and 2 with `sectors` angular sectors, each
    /// split into two counter-clockwise triangles.
    pub fn annulus(sectors: u32) -> GeometricComplex {
        let mut b = ComplexBuilder::new(2, 2);
        for k in 0..sectors {
            let a = TAU * k as f64 / sectors as f64;
            b.add_vertex(&[a.cos(), a.sin()]);
            b.add_vertex(&[2.0 * a.cos(), 2.0 * a.sin()]);
        }
        for k in 0..sectors {
            let (i0, o0) = (2 * k, 2 * k + 1);
            let (i1, o1) = (2 * ((k + 1) % sectors), 2 * ((k + 1) % sectors) + 1);
            b.add_simplex(&[i0, o0, o1]).add_simplex(&[i0, o1, i1]);
        }
        b.build().expect("annulus is well formed")
    }

    /// Identity on [`disk_fan`].
    pub fn identity_disk(n: u32) -> OrientedPLMap {
        OrientedPLMap::from_fn(disk_fan(n), |x| *x).expect("dimensions agree")
    }

    /// The map doubling the polar angle on [`annulus`]; it wraps twice.
    pub fn angle_doubling(sectors: u32) -> OrientedPLMap {
        OrientedPLMap::from_fn(annulus(sectors), |x| {
            let r = x.norm();
            let a = 2.0 * x[1].atan2(x[0]);
            Vector::from_slice(&[r * a.cos(), r * a.sin()])
        })
        .expect("dimensions agree")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs)
    }

    #[test]
    fn signs_of_linear_maps() {
        let fan = disk_fan(6);
        let id = OrientedPLMap::from_fn(fan.clone(), |x| *x).unwrap();
        assert!((0..6).all(|t| id.simplex_sign(t) == Ok(1)));
        let refl = OrientedPLMap::from_fn(fan.clone(), |x| v(&[x[0], -x[1]])).unwrap();
        assert!((0..6).all(|t| refl.simplex_sign(t) == Ok(-1)));
        let rot = OrientedPLMap::from_fn(fan, |x| v(&[-x[1], x[0]])).unwrap();
        assert!((0..6).all(|t| rot.simplex_sign(t) == Ok(1)));
    }

    #[test]
    fn degrees_on_fixtures() {
        let id = identity_disk(12);
        let d = id.degree_at_point(&v(&[0.1, 0.05])).unwrap();
        assert_eq!((d.value, d.preimage_points.len()), (1, 1));
        assert_eq!(id.degree_at_point(&v(&[3.0, 0.1])).unwrap().value, 0);
        let dbl = angle_doubling(16);
        let d = dbl.degree_at_point(&v(&[1.5, 0.1])).unwrap();
        assert_eq!((d.value, d.preimage_points.len()), (2, 2));
        assert_eq!(dbl.degree_at_point(&v(&[0.1, 0.1])).unwrap().value, 0);
        assert_eq!(dbl.degree_at_point(&v(&[5.0, 0.1])).unwrap().value, 0);
    }

    #[test]
    fn skeleton_queries_are_rejected_then_perturbed() {
        let id = identity_disk(12);
        assert!(matches!(id.degree_at_point(&v(&[0.5, 0.0])), Err(DegreeError::PointOnSkeletonImage(_))));
        assert_eq!(id.degree_near_point(&v(&[0.5, 0.0]), 3).unwrap().value, 1);
    }

    #[test]
    fn flipped_and_collapsed_triangles_are_reported() {
        let fan = disk_fan(6);
        // Pull vertex 1 across the edge from the centre to vertex 2 so that
        // only the first triangle turns over.
        let mut images: Vec<Vector> = fan.vertices().collect();
        images[1] = v(&[0.2, 0.9]);
        let folded = OrientedPLMap::new(fan.clone(), images).unwrap();
        let rep = folded.check_simplexwise_positive();
        assert_eq!(rep.negative, vec![0]);
        assert!(matches!(folded.locally_constant_degree_scan(20), Err(DegreeError::NotSimplexwisePositive)));
        let mut images: Vec<Vector> = fan.vertices().collect();
        images[0] = (images[1] + images[2]) * 0.5;
        let collapsed = OrientedPLMap::new(fan, images).unwrap();
        assert_eq!(collapsed.check_simplexwise_positive().degenerate, vec![0]);
    }

    #[test]
    fn additivity_over_simplices() {
        let dbl = angle_doubling(16);
        let y = v(&[-0.3, 1.41]);
        let whole = dbl.degree_at_point(&y).unwrap().value;
        let parts: i64 = (0..32).map(|t| dbl.degree_on(&[t], &y).unwrap()).sum();
        assert_eq!(whole, parts);
    }

    #[test]
    fn scans_are_locally_constant() {
        let id = identity_disk(12).locally_constant_degree_scan(40).unwrap();
        assert!(id.passes());
        let counts: Vec<usize> = id.components.iter().map(|c| c.count).collect();
        assert!(counts.contains(&1) && counts.contains(&0));
        let dbl = angle_doubling(16).locally_constant_degree_scan(40).unwrap();
        assert!(dbl.passes());
        let counts: Vec<usize> = dbl.components.iter().map(|c| c.count).collect();
        assert!(counts.contains(&2) && counts.contains(&0));
    }

    #[test]
    fn interval_scan_separates_at_grid_aligned_boundary() {
        // With 48 cells and 10% padding the boundary images fall exactly on
        // cell faces.
        let src = GeometricComplex::from_parts(1, 1, &[v(&[-1.0]), v(&[0.0]), v(&[1.0])], &[vec![0, 1], vec![1, 2]], None, true)
            .unwrap();
        let map = OrientedPLMap::new(src, vec![v(&[-1.0]), v(&[0.3]), v(&[1.0])]).unwrap();
        let scan = map.locally_constant_degree_scan(48).unwrap();
        assert!(scan.passes());
        let counts: Vec<usize> = scan.components.iter().map(|c| c.count).collect();
        assert_eq!(counts, vec![0, 1, 0]);
    }
}
