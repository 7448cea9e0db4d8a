//! Charts of a complex inscribed in a test manifold.
//!
//! For a vertex `p` the chart projects the star of `p` orthogonally onto the
//! tangent space `T_pM`. The chart map `F_p` lifts a point of the projected
//! star back to the ambient simplex by barycentric coordinates, applies the
//! closest-point projection onto `M` and projects the result to `T_pM` again.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::complex::{ComplexError, GeometricComplex, VertexId};
use crate::distortion::{compose_distortion, uniform_barycentric, DistortionBound};
use crate::geom::{Flat, Vector};
use crate::manifolds::{ManifoldError, RchPolicy, TestManifold, BOUND_SLACK};
use crate::simplex::{
    barycentric_least_squares, combine, orientation_determinant, thickness_of, Barycentric, Vertices,
};

/// Barycentric slack for point-in-chart tests; boundary hits count as inside.
pub const CHART_INSIDE_TOLERANCE: f64 = 1e-9;
/// Largest allowed `L₀²/(t₀²R_rch²)` for the certified chart bounds.
pub const MAX_SIZE_RATIO: f64 = 1.0 / 256.0;
/// Aggregate constant bounding the composed chart distortion by `19 q`.
pub const AGGREGATE_CONSTANT: f64 = 19.0;
/// Fraction `eps` for [`RchPolicy::LocalLfs`] such that `U_p` stays inside
/// the validity ball whenever the size ratio is at most 1/256.
pub const LFS_VALID_FRACTION: f64 = 9.0 / 137.0;

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum AtlasError {
    #[error("star of vertex {0} is not a full star (its link is not a sphere)")]
    StarNotFull(VertexId),
    #[error("projected star of vertex {vertex} is not embedded: top simplices {first} and {second} overlap")]
    ProjectedStarNotEmbedded { vertex: VertexId, first: u32, second: u32 },
    #[error("top simplex {simplex} in the star of vertex {vertex} projects to a degenerate simplex")]
    DegenerateProjection { vertex: VertexId, simplex: u32 },
    #[error("point is outside the projected star of vertex {0}")]
    PointOutsideChart(VertexId),
    #[error("precondition violated: {which} ({lhs} > {rhs})")]
    PreconditionViolated { which: String, lhs: f64, rhs: f64 },
    #[error("charts are only implemented for dimensions 1 and 2, not {0}")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Edge-length range and thickness of a set of simplices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StarQuality {
    /// Longest edge.
    pub l0: f64,
    /// Shortest edge.
    pub s0: f64,
    /// Least thickness.
    pub t0: f64,
}

/// The chart at one vertex.
#[derive(Clone, Debug)]
pub struct Chart {
    pub vertex_p: VertexId,
    /// `R_rch` at `p`.
    pub r_rch: f64,
    /// `(L₀/R_rch)(1 + 2L₀/R_rch)` with the star's longest edge `L₀`.
    pub rho: f64,
    /// Radius `ρ R_rch` of the coordinate patch `U_p = B(p, r) ∩ M`.
    pub u_p_radius: f64,
    pub tangent: Flat,
    /// The star projected into `R^m`, with local vertex ids in increasing
    /// order of the global ids and the parity of the original simplices.
    pub projected_star: GeometricComplex,
    /// Global id of each local vertex.
    pub star_vertex_ids: Vec<VertexId>,
    /// Ambient coordinates of each local vertex.
    pub star_points: Vec<Vector>,
    /// Global index of each projected top simplex.
    pub star_top_ids: Vec<u32>,
    /// Local id of `p`.
    pub centre: VertexId,
    /// Quality of the star in the ambient space.
    pub quality: StarQuality,
    /// Quality of the projected star.
    pub projected_quality: StarQuality,
    /// Largest distance from `p̂` to a projected star vertex.
    pub projected_radius: f64,
}

/// Certified distortion bounds of the maps composing `F_p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartDistortion {
    /// Inverse of the projected secant map.
    pub xi_phi_inv_hat: DistortionBound,
    /// Closest-point projection restricted to a simplex.
    pub xi_h: DistortionBound,
    /// Tangent projection of the patch `U_p`.
    pub xi_phi: DistortionBound,
    /// Composition of the three.
    pub xi_total: DistortionBound,
    /// `q = L₀²/(t₀²R_rch²)`.
    pub size_ratio: f64,
    /// `19 q`, a ceiling for `xi_total`.
    pub aggregate_ceiling: f64,
}

impl Chart {
    pub fn dimension(&self) -> usize {
        self.projected_star.dimension()
    }

    /// Projected position of `p` (the origin of the chart).
    pub fn p_hat(&self) -> Vector {
        Vector::zeros(self.dimension())
    }

    /// Tangent coordinates of an ambient point, relative to `p`.
    #[inline]
    pub fn to_chart(&self, x: &Vector) -> Vector {
        self.tangent.coordinates(x)
    }

    /// Vertices of projected top `k` in sorted local order.
    pub fn projected_vertices(&self, k: usize) -> Vertices {
        self.projected_star.top_vertices(k)
    }

    /// Ambient vertices of projected top `k`, matching [`Chart::projected_vertices`].
    pub fn ambient_vertices(&self, k: usize) -> Vertices {
        self.projected_star.top(k).iter().map(|&v| self.star_points[v as usize]).collect()
    }

    /// Lowest projected top simplex containing `x`, with barycentric
    /// coordinates.
    pub fn locate(&self, x: &Vector) -> Option<(usize, Barycentric)> {
        (0..self.projected_star.num_top_simplices()).find_map(|k| {
            let lam = local_barycentric(&self.projected_vertices(k), x);
            lam.iter().all(|&l| l >= -CHART_INSIDE_TOLERANCE).then_some((k, lam))
        })
    }

    /// Whether `x` lies in the carrier of the projected star, boundary
    /// included.
    pub fn contains(&self, x: &Vector) -> bool {
        if x.norm() > self.projected_radius * (1.0 + 1e-9) + 1e-12 {
            return false;
        }
        self.locate(x).is_some()
    }

    /// `F_p` on projected top `k` at barycentric coordinates `lam`.
    pub fn evaluate_in(&self, manifold: &TestManifold, k: usize, lam: &[f64]) -> Result<Vector, AtlasError> {
        let lifted = combine(&self.ambient_vertices(k), lam);
        let on_m = manifold.project(&lifted)?;
        Ok(self.to_chart(&on_m))
    }

    /// Secant map image of the ambient point with barycentric coordinates
    /// `lam` in projected top `k`.
    pub fn secant_in(&self, k: usize, lam: &[f64]) -> Vector {
        combine(&self.projected_vertices(k), lam)
    }

    /// `H = π_M ∘ ι` at the point of projected top `k` with coordinates `lam`.
    pub fn lift_to_manifold(&self, manifold: &TestManifold, k: usize, lam: &[f64]) -> Result<Vector, AtlasError> {
        Ok(manifold.project(&combine(&self.ambient_vertices(k), lam))?)
    }

    /// Local ids of the vertices of the projected star's boundary facets.
    pub fn boundary_facets(&self) -> Vec<SmallVec<[VertexId; 4]>> {
        let mut out = Vec::new();
        for k in 0..self.projected_star.num_top_simplices() {
            let row = self.projected_star.top(k);
            if let Some(pos) = row.iter().position(|&v| v == self.centre) {
                let facet: SmallVec<[VertexId; 4]> =
                    row.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &v)| v).collect();
                out.push(facet);
            }
        }
        out
    }
}

/// `F_p` at a point of the projected star.
pub fn evaluate_fp(chart: &Chart, manifold: &TestManifold, x: &Vector) -> Result<Vector, AtlasError> {
    let (k, lam) = chart.locate(x).ok_or(AtlasError::PointOutsideChart(chart.vertex_p))?;
    chart.evaluate_in(manifold, k, &lam)
}

/// Barycentric coordinates of `x` in a full-dimensional simplex, closed form
/// for dimensions 1 and 2.
#[inline]
pub fn local_barycentric(vertices: &[Vector], x: &Vector) -> Barycentric {
    match vertices.len() {
        2 => {
            let t = (x[0] - vertices[0][0]) / (vertices[1][0] - vertices[0][0]);
            SmallVec::from_slice(&[1.0 - t, t])
        }
        3 => {
            let (a, b, c) = (vertices[0], vertices[1], vertices[2]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
            SmallVec::from_slice(&[1.0 - l1 - l2, l1, l2])
        }
        _ => barycentric_least_squares(vertices, x).0,
    }
}

fn quality_of(simplices: impl Iterator<Item = Vertices>) -> StarQuality {
    let mut q = StarQuality { l0: 0.0, s0: f64::INFINITY, t0: f64::INFINITY };
    for v in simplices {
        let (t, l, s) = thickness_of(&v);
        q.l0 = q.l0.max(l);
        q.s0 = q.s0.min(s);
        q.t0 = q.t0.min(t);
    }
    q
}

/// Builds the chart at `p`: projects the star of `p` onto `T_pM`, checks
/// that the projection is an embedding of a full star, and sets the patch
/// radius `r = ρ R_rch`.
pub fn build_chart(
    manifold: &TestManifold,
    complex: &GeometricComplex,
    p: VertexId,
    policy: RchPolicy,
) -> Result<Chart, AtlasError> {
    let m = complex.dimension();
    if !(1..=2).contains(&m) {
        return Err(AtlasError::UnsupportedDimension(m));
    }
    if (p as usize) >= complex.num_vertices() {
        return Err(ComplexError::UnknownVertex(p).into());
    }
    if !complex.is_full_star(p)? {
        return Err(AtlasError::StarNotFull(p));
    }
    let pp = complex.vertex(p);
    let frame = manifold.tangent_frame(&pp)?;
    let tangent = Flat::from_orthonormal(pp, frame.to_vec()).expect("tangent frame is orthonormal");

    let star_top_ids: Vec<u32> = complex.star_tops_of(p).to_vec();
    let mut star_vertex_ids: Vec<VertexId> =
        star_top_ids.iter().flat_map(|&t| complex.top(t as usize).iter().copied()).collect();
    star_vertex_ids.sort_unstable();
    star_vertex_ids.dedup();
    let local = |g: VertexId| star_vertex_ids.binary_search(&g).expect("star vertex") as VertexId;
    let star_points: Vec<Vector> = star_vertex_ids.iter().map(|&g| complex.vertex(g)).collect();
    let mut coords = Vec::with_capacity(star_points.len() * m);
    for x in &star_points {
        coords.extend_from_slice(tangent.coordinates(x).as_slice());
    }
    let mut rows = Vec::with_capacity(star_top_ids.len() * (m + 1));
    let mut parity = Vec::with_capacity(star_top_ids.len());
    for &t in &star_top_ids {
        rows.extend(complex.top(t as usize).iter().map(|&g| local(g)));
        parity.push(complex.parity(t as usize));
    }
    let projected_star =
        GeometricComplex::from_flat(m, m, coords, &rows, Some(&parity), complex.is_oriented())?;

    let projected_radius = projected_star.vertices().map(|v| v.norm()).fold(0.0, f64::max);
    let quality = quality_of(star_top_ids.iter().map(|&t| complex.top_vertices(t as usize)));
    let projected_quality = quality_of((0..star_top_ids.len()).map(|k| projected_star.top_vertices(k)));

    // Embedding: every projected simplex nondegenerate and no two with
    // overlapping interiors.
    let scale = quality.l0.max(f64::MIN_POSITIVE);
    let verts: Vec<Vertices> = (0..star_top_ids.len()).map(|k| projected_star.top_vertices(k)).collect();
    for (k, v) in verts.iter().enumerate() {
        if orientation_determinant(v).abs() <= 1e-12 * scale.powi(m as i32) {
            return Err(AtlasError::DegenerateProjection { vertex: p, simplex: star_top_ids[k] });
        }
    }
    for a in 0..verts.len() {
        for b in a + 1..verts.len() {
            if interiors_overlap(&verts[a], &verts[b], 1e-10 * scale * scale) {
                return Err(AtlasError::ProjectedStarNotEmbedded {
                    vertex: p,
                    first: star_top_ids[a],
                    second: star_top_ids[b],
                });
            }
        }
    }

    let centre = local(p);
    let r_rch = policy.r_rch(manifold, &pp);
    let ratio = quality.l0 / r_rch;
    let rho = ratio * (1.0 + 2.0 * ratio);
    Ok(Chart {
        vertex_p: p,
        r_rch,
        rho,
        u_p_radius: rho * r_rch,
        tangent,
        projected_star,
        star_vertex_ids,
        star_points,
        star_top_ids,
        centre,
        quality,
        projected_quality,
        projected_radius,
    })
}

/// Separating-axis test for the interiors of two simplices in `R^1` or `R^2`.
/// `tol` is in units of squared length.
fn interiors_overlap(a: &[Vector], b: &[Vector], tol: f64) -> bool {
    if a[0].dim() == 1 {
        let (a0, a1) = (a[0][0].min(a[1][0]), a[0][0].max(a[1][0]));
        let (b0, b1) = (b[0][0].min(b[1][0]), b[0][0].max(b[1][0]));
        return a1.min(b1) - a0.max(b0) > tol.sqrt();
    }
    for poly in [a, b] {
        for i in 0..poly.len() {
            let e = poly[(i + 1) % poly.len()] - poly[i];
            let axis = [-e[1], e[0]];
            let proj = |pts: &[Vector]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let d = axis[0] * p[0] + axis[1] * p[1];
                    (lo.min(d), hi.max(d))
                })
            };
            let (alo, ahi) = proj(a);
            let (blo, bhi) = proj(b);
            if ahi <= blo + tol || bhi <= alo + tol {
                return false;
            }
        }
    }
    true
}

/// Certified distortion of `F_p` from the chart's local constants.
///
/// With `q = L₀²/(t₀²R_rch²)` over the ambient star:
/// the inverse secant map has distortion `q/(1-q)`, the closest-point
/// projection on a simplex `12q`, and the tangent projection of `U_p`
/// `4ρ²`. Requires `q <= 1/256` and that `U_p` fits inside the ball on which
/// `R_rch` is valid.
pub fn certified_chart_distortion(
    chart: &Chart,
    manifold: &TestManifold,
    policy: RchPolicy,
) -> Result<ChartDistortion, AtlasError> {
    let StarQuality { l0, t0, .. } = chart.quality;
    let r = chart.r_rch;
    let q = (l0 / (t0 * r)).powi(2);
    if q > MAX_SIZE_RATIO {
        return Err(AtlasError::PreconditionViolated {
            which: "L₀²/(t₀²R_rch²) <= 1/256".into(),
            lhs: q,
            rhs: MAX_SIZE_RATIO,
        });
    }
    let p = &chart.star_points[chart.centre as usize];
    let valid = policy.valid_radius(manifold, p);
    if chart.u_p_radius > valid + BOUND_SLACK {
        return Err(AtlasError::PreconditionViolated {
            which: "patch radius ρR_rch within the validity ball of R_rch".into(),
            lhs: chart.u_p_radius,
            rhs: valid,
        });
    }
    let xi1 = q / (1.0 - q);
    let xi2 = 12.0 * q;
    let xi3 = 4.0 * chart.rho * chart.rho;
    let total = compose_distortion(&[xi1, xi2, xi3]);
    Ok(ChartDistortion {
        xi_phi_inv_hat: DistortionBound::certified(xi1, "tangent projection of a simplex, inverted: q/(1-q)"),
        xi_h: DistortionBound::certified(xi2, "closest-point projection of a simplex: 12 L²/(t²R²)"),
        xi_phi: DistortionBound::certified(xi3, "tangent projection of the patch: 4ρ²"),
        xi_total: DistortionBound::certified(total, "composition (1+ξ₁)(1+ξ₂)(1+ξ₃) - 1"),
        size_ratio: q,
        aggregate_ceiling: AGGREGATE_CONSTANT * q,
    })
}

/// Largest sampled distortion of `F_p` over pairs drawn inside each projected
/// top simplex (`pairs` per simplex).
pub fn empirical_chart_distortion(
    chart: &Chart,
    manifold: &TestManifold,
    pairs: usize,
    seed: u64,
) -> Result<DistortionBound, AtlasError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(chart.vertex_p).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let k = chart.dimension() + 1;
    let mut worst = 0.0f64;
    for t in 0..chart.projected_star.num_top_simplices() {
        let proj = chart.projected_vertices(t);
        let amb = chart.ambient_vertices(t);
        for _ in 0..pairs {
            let (la, lb) = (uniform_barycentric(&mut rng, k), uniform_barycentric(&mut rng, k));
            let (xa, xb) = (combine(&proj, &la), combine(&proj, &lb));
            let d = xa.dist(&xb);
            if d < 1e-12 * chart.quality.l0 {
                continue;
            }
            let fa = chart.to_chart(&manifold.project(&combine(&amb, &la))?);
            let fb = chart.to_chart(&manifold.project(&combine(&amb, &lb))?);
            worst = worst.max((fa.dist(&fb) - d).abs() / d);
        }
    }
    Ok(DistortionBound::empirical(worst, format!("{pairs} sampled pairs per simplex")))
}

/// Uniform hash grid over the vertices of a complex, for ball queries.
pub struct VertexGrid {
    cell: f64,
    dims: usize,
    keys: Vec<u64>,
    ids: Vec<VertexId>,
    coords: Vec<[f64; 3]>,
}

impl VertexGrid {
    /// Grid with the given cell size over the first three coordinates.
    pub fn new(complex: &GeometricComplex, cell: f64) -> Self {
        let dims = complex.ambient_dim().min(3);
        let coords: Vec<[f64; 3]> = complex
            .vertices()
            .map(|v| {
                let mut c = [0.0; 3];
                c[..dims].copy_from_slice(&v.as_slice()[..dims]);
                c
            })
            .collect();
        let mut order: Vec<(u64, VertexId)> =
            coords.iter().enumerate().map(|(i, c)| (Self::key_of(Self::cell_of(c, cell)), i as VertexId)).collect();
        order.sort_unstable();
        VertexGrid {
            cell,
            dims,
            keys: order.iter().map(|o| o.0).collect(),
            ids: order.iter().map(|o| o.1).collect(),
            coords,
        }
    }

    fn cell_of(c: &[f64; 3], cell: f64) -> [i64; 3] {
        [(c[0] / cell).floor() as i64, (c[1] / cell).floor() as i64, (c[2] / cell).floor() as i64]
    }

    fn key_of(c: [i64; 3]) -> u64 {
        // 21 bits per axis.
        let f = |x: i64| (x + (1 << 20)) as u64 & ((1 << 21) - 1);
        (f(c[0]) << 42) | (f(c[1]) << 21) | f(c[2])
    }

    /// Calls `f` on every vertex within `radius` of `x` (first three
    /// coordinates; callers re-check the full distance in higher dimension).
    pub fn for_each_within(&self, x: &Vector, radius: f64, mut f: impl FnMut(VertexId)) {
        let mut c = [0.0; 3];
        c[..self.dims].copy_from_slice(&x.as_slice()[..self.dims]);
        let lo = Self::cell_of(&[c[0] - radius, c[1] - radius, c[2] - radius], self.cell);
        let hi = Self::cell_of(&[c[0] + radius, c[1] + radius, c[2] + radius], self.cell);
        let r2 = radius * radius;
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let key = Self::key_of([i, j, k]);
                    let start = self.keys.partition_point(|&q| q < key);
                    for idx in start..self.keys.len() {
                        if self.keys[idx] != key {
                            break;
                        }
                        let id = self.ids[idx];
                        let p = &self.coords[id as usize];
                        let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
                        if d2 <= r2 {
                            f(id);
                        }
                    }
                }
            }
        }
    }
}

/// Vertices `q` of the complex with `|q - p| < radius` whose tangent
/// projection lands in the projected star of `p` without being a star vertex.
///
/// When `radius <= local_reach/14` only vertices within `1.001` times the
/// projected star radius need to be examined: for `q ∈ M` with
/// `|q - p| < rch(p, M)/14` the normal component of `q - p` is at most
/// `|q - p|/28`, so the tangent component is at least `0.9993 |q - p|`.
pub fn chart_vertex_sanity(
    chart: &Chart,
    complex: &GeometricComplex,
    grid: &VertexGrid,
    radius: f64,
    local_reach: f64,
) -> Vec<VertexId> {
    let p = chart.star_points[chart.centre as usize];
    let search = if radius <= local_reach / 14.0 {
        radius.min(1.001 * chart.projected_radius + 1e-12)
    } else {
        radius
    };
    let mut bad = Vec::new();
    grid.for_each_within(&p, search, |q| {
        if chart.star_vertex_ids.binary_search(&q).is_ok() {
            return;
        }
        let x = complex.vertex(q);
        if x.dist(&p) >= radius {
            return;
        }
        if chart.contains(&chart.to_chart(&x)) {
            bad.push(q);
        }
    });
    bad.sort_unstable();
    bad
}

/// Vertex sanity over all vertices, with search radius `radius(p)`.
/// Returns the violating ordered pairs `(p, q)`.
pub fn vertex_sanity_check(
    manifold: &TestManifold,
    complex: &GeometricComplex,
    policy: RchPolicy,
    radius: impl Fn(&Vector) -> f64 + Sync,
) -> Result<Vec<(VertexId, VertexId)>, AtlasError> {
    use rayon::prelude::*;
    let cell = crate::meshgen::mesh_stats(complex).l_max.max(1e-12);
    let grid = VertexGrid::new(complex, cell);
    let per_vertex: Result<Vec<Vec<(VertexId, VertexId)>>, AtlasError> = (0..complex.num_vertices() as VertexId)
        .into_par_iter()
        .map(|p| {
            let chart = build_chart(manifold, complex, p, policy)?;
            let x = complex.vertex(p);
            let r = radius(&x);
            Ok(chart_vertex_sanity(&chart, complex, &grid, r, manifold.local_reach(&x)).into_iter().map(|q| (p, q)).collect())
        })
        .collect();
    Ok(per_vertex?.into_iter().flatten().collect())
}
