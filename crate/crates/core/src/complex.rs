//! Pure simplicial complexes with vertex coordinates.
//!
//! Top simplices are stored as sorted vertex-id rows; an orientation parity
//! per top simplex records whether the sorted order is positively oriented.
//! All faces are implicit: a face exists when some top simplex contains it.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::geom::Vector;
use crate::simplex::{self, Barycentric, EuclideanSimplex, Vertices};

pub type VertexId = u32;
/// Sorted vertex ids of a simplex.
pub type SimplexKey = SmallVec<[VertexId; 4]>;

/// Barycentric slack accepted as "inside".
pub const INSIDE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum ComplexError {
    #[error("simplex {0:?} is not in the complex")]
    UnknownSimplex(Vec<VertexId>),
    #[error("vertex {0} is not in the complex")]
    UnknownVertex(VertexId),
    #[error("complex is not pure: vertex {0} lies in no top simplex")]
    NotPure(VertexId),
    #[error("no skeleton of dimension {0}")]
    BadDimension(usize),
    #[error("point is not in any top simplex of the star of vertex {0}")]
    PointOutsideStar(VertexId),
    #[error("simplex {index} has {found} vertices, expected {expected}")]
    WrongSimplexSize { index: usize, found: usize, expected: usize },
    #[error("simplex {index} refers to vertex {vertex} but there are {count} vertices")]
    VertexOutOfRange { index: usize, vertex: usize, count: usize },
    #[error("simplex {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("simplex {0} appears twice")]
    DuplicateSimplex(usize),
    #[error("vertex {0} has {1} coordinates, expected {2}")]
    CoordinateCount(usize, usize, usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("dimension {m} does not fit ambient dimension {n}")]
    BadAmbient { m: usize, n: usize },
}

/// A pure `m`-dimensional complex realized in `R^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricComplex {
    m: usize,
    n: usize,
    coords: Vec<f64>,
    tops: Vec<VertexId>,
    parity: Vec<i8>,
    oriented: bool,
    star_offsets: Vec<u32>,
    star_tops: Vec<u32>,
}

/// Collects vertices and top simplices before building a complex.
#[derive(Clone, Debug, Default)]
pub struct ComplexBuilder {
    m: usize,
    n: usize,
    coords: Vec<f64>,
    rows: Vec<VertexId>,
    oriented: bool,
}

impl ComplexBuilder {
    pub fn new(m: usize, n: usize) -> Self {
        ComplexBuilder { m, n, oriented: true, ..Default::default() }
    }

    pub fn add_vertex(&mut self, x: &[f64]) -> VertexId {
        debug_assert_eq!(x.len(), self.n);
        self.coords.extend_from_slice(x);
        (self.coords.len() / self.n.max(1) - 1) as VertexId
    }

    /// Adds a top simplex; its vertex order gives its orientation.
    pub fn add_simplex(&mut self, vs: &[VertexId]) -> &mut Self {
        debug_assert_eq!(vs.len(), self.m + 1);
        self.rows.extend_from_slice(vs);
        self
    }

    /// Marks the orientation as unknown.
    pub fn unoriented(&mut self) -> &mut Self {
        self.oriented = false;
        self
    }

    pub fn build(self) -> Result<GeometricComplex, ComplexError> {
        GeometricComplex::from_flat(self.m, self.n, self.coords, &self.rows, None, self.oriented)
    }
}

/// Sign of the permutation that sorts `vs`, and the sorted ids.
pub fn sort_with_parity(vs: &[VertexId]) -> (SimplexKey, i8) {
    let mut key: SimplexKey = vs.iter().copied().collect();
    let mut sign = 1i8;
    for i in 1..key.len() {
        let mut j = i;
        while j > 0 && key[j - 1] > key[j] {
            key.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (key, sign)
}

impl GeometricComplex {
    /// Builds a complex from vertex coordinates and top simplices. Each row
    /// is oriented by its given order unless `orientation` overrides the
    /// parity relative to the sorted row.
    pub fn from_parts(
        m: usize,
        n: usize,
        vertices: &[Vector],
        simplices: &[Vec<usize>],
        orientation: Option<&[i8]>,
        oriented: bool,
    ) -> Result<GeometricComplex, ComplexError> {
        if m > n || n > crate::geom::MAX_DIM {
            return Err(ComplexError::BadAmbient { m, n });
        }
        let mut coords = Vec::with_capacity(vertices.len() * n);
        for (i, v) in vertices.iter().enumerate() {
            if v.dim() != n {
                return Err(ComplexError::CoordinateCount(i, v.dim(), n));
            }
            coords.extend_from_slice(v.as_slice());
        }
        let mut rows = Vec::with_capacity(simplices.len() * (m + 1));
        for (i, s) in simplices.iter().enumerate() {
            if s.len() != m + 1 {
                return Err(ComplexError::WrongSimplexSize { index: i, found: s.len(), expected: m + 1 });
            }
            if let Some(&bad) = s.iter().find(|&&v| v >= vertices.len()) {
                return Err(ComplexError::VertexOutOfRange { index: i, vertex: bad, count: vertices.len() });
            }
            rows.extend(s.iter().map(|&v| v as VertexId));
        }
        GeometricComplex::from_flat(m, n, coords, &rows, orientation, oriented)
    }

    /// Builds a complex from flat coordinate and row arrays; `rows` holds
    /// `m + 1` vertex ids per top simplex.
    pub fn from_flat(
        m: usize,
        n: usize,
        coords: Vec<f64>,
        rows: &[VertexId],
        orientation: Option<&[i8]>,
        oriented: bool,
    ) -> Result<GeometricComplex, ComplexError> {
        if m > n || n == 0 || n > crate::geom::MAX_DIM {
            return Err(ComplexError::BadAmbient { m, n });
        }
        let nv = coords.len() / n;
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(ComplexError::NonFinite(i / n));
        }
        let k = m + 1;
        let count = rows.len() / k;
        if rows.len() % k != 0 {
            return Err(ComplexError::WrongSimplexSize { index: count, found: rows.len() % k, expected: k });
        }
        let mut tops = Vec::with_capacity(rows.len());
        let mut parity = Vec::with_capacity(count);
        for (i, s) in rows.chunks(k).enumerate() {
            if let Some(&bad) = s.iter().find(|&&v| v as usize >= nv) {
                return Err(ComplexError::VertexOutOfRange { index: i, vertex: bad as usize, count: nv });
            }
            let (key, sign) = sort_with_parity(s);
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(ComplexError::RepeatedVertex(i));
            }
            tops.extend_from_slice(&key);
            parity.push(match orientation {
                Some(o) => o[i].signum(),
                None => sign,
            });
        }
        let mut c = GeometricComplex {
            m,
            n,
            coords,
            tops,
            parity,
            oriented,
            star_offsets: Vec::new(),
            star_tops: Vec::new(),
        };
        c.index_stars();
        for v in 0..nv as VertexId {
            let st = c.star_tops_of(v);
            for (a, &i) in st.iter().enumerate() {
                for &j in &st[a + 1..] {
                    if c.top(i as usize) == c.top(j as usize) {
                        return Err(ComplexError::DuplicateSimplex(j as usize));
                    }
                }
            }
        }
        Ok(c)
    }

    fn index_stars(&mut self) {
        let nv = self.num_vertices();
        let mut counts = vec![0u32; nv + 1];
        for &v in &self.tops {
            counts[v as usize + 1] += 1;
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut data = vec![0u32; self.tops.len()];
        for (s, row) in self.tops.chunks(self.m + 1).enumerate() {
            for &v in row {
                data[fill[v as usize] as usize] = s as u32;
                fill[v as usize] += 1;
            }
        }
        self.star_offsets = counts;
        self.star_tops = data;
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.coords.len() / self.n
        }
    }

    pub fn num_top_simplices(&self) -> usize {
        self.parity.len()
    }

    /// Whether the parities carry a real orientation.
    pub fn is_oriented(&self) -> bool {
        self.oriented
    }

    #[inline]
    pub fn vertex(&self, v: VertexId) -> Vector {
        let i = v as usize * self.n;
        Vector::from_slice(&self.coords[i..i + self.n])
    }

    #[inline]
    pub fn vertex_coords(&self, v: VertexId) -> &[f64] {
        let i = v as usize * self.n;
        &self.coords[i..i + self.n]
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vector> + '_ {
        self.coords.chunks(self.n).map(Vector::from_slice)
    }

    /// Sorted vertex ids of top simplex `i`.
    #[inline]
    pub fn top(&self, i: usize) -> &[VertexId] {
        &self.tops[i * (self.m + 1)..(i + 1) * (self.m + 1)]
    }

    pub fn tops(&self) -> impl Iterator<Item = &[VertexId]> + '_ {
        self.tops.chunks(self.m + 1)
    }

    /// `+1` if the sorted order of top simplex `i` is positively oriented.
    #[inline]
    pub fn parity(&self, i: usize) -> i8 {
        self.parity[i]
    }

    pub fn parities(&self) -> &[i8] {
        &self.parity
    }

    /// Vertex ids of top simplex `i` in positive order.
    pub fn oriented_top(&self, i: usize) -> SimplexKey {
        let mut k: SimplexKey = self.top(i).iter().copied().collect();
        if self.parity[i] < 0 && k.len() >= 2 {
            k.swap(0, 1);
        }
        k
    }

    /// Coordinates of the vertices of top simplex `i` in sorted order.
    #[inline]
    pub fn top_vertices(&self, i: usize) -> Vertices {
        self.top(i).iter().map(|&v| self.vertex(v)).collect()
    }

    pub fn top_simplex(&self, i: usize) -> EuclideanSimplex {
        EuclideanSimplex::new(self.top_vertices(i)).expect("stored simplices are well formed")
    }

    /// Indices of the top simplices containing vertex `v`.
    #[inline]
    pub fn star_tops_of(&self, v: VertexId) -> &[u32] {
        let (a, b) = (self.star_offsets[v as usize] as usize, self.star_offsets[v as usize + 1] as usize);
        &self.star_tops[a..b]
    }

    /// Indices of the top simplices having `key` as a face.
    pub fn cofaces(&self, key: &[VertexId]) -> Vec<u32> {
        if key.is_empty() {
            return (0..self.num_top_simplices() as u32).collect();
        }
        self.star_tops_of(key[0])
            .iter()
            .copied()
            .filter(|&t| is_subset(key, self.top(t as usize)))
            .collect()
    }

    pub fn contains(&self, key: &[VertexId]) -> bool {
        match key.first() {
            None => true,
            Some(&v) if (v as usize) < self.num_vertices() => {
                self.star_tops_of(v).iter().any(|&t| is_subset(key, self.top(t as usize)))
            }
            _ => false,
        }
    }

    fn check_key(&self, key: &[VertexId]) -> Result<SimplexKey, ComplexError> {
        let (k, _) = sort_with_parity(key);
        if k.is_empty() || !self.contains(&k) {
            return Err(ComplexError::UnknownSimplex(key.to_vec()));
        }
        Ok(k)
    }

    /// Every simplex having `key` as a face, together with their faces.
    pub fn star(&self, key: &[VertexId]) -> Result<SubcomplexView<'_>, ComplexError> {
        let k = self.check_key(key)?;
        let tops: Vec<u32> = self.cofaces(&k);
        Ok(SubcomplexView::closure_of_tops(self, &tops))
    }

    /// Whether `x` lies in the relative interior of some simplex having
    /// `key` as a face.
    pub fn open_star_membership(&self, key: &[VertexId], x: &Vector) -> Result<bool, ComplexError> {
        let k = self.check_key(key)?;
        for t in self.cofaces(&k) {
            let row = self.top(t as usize);
            let verts = self.top_vertices(t as usize);
            let (lam, off) = simplex::barycentric_least_squares(&verts, x);
            if off > 1e-9 * (1.0 + x.norm()) {
                continue;
            }
            if lam.iter().any(|&l| l < -INSIDE_TOLERANCE) {
                continue;
            }
            let key_positive = row.iter().zip(lam.iter()).all(|(v, &l)| !k.contains(v) || l > INSIDE_TOLERANCE);
            if key_positive {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// First vertex that lies in no top simplex, if any.
    pub fn first_isolated_vertex(&self) -> Option<VertexId> {
        (0..self.num_vertices() as VertexId).find(|&v| self.star_tops_of(v).is_empty())
    }

    /// `(m−1)`-faces of exactly one top simplex, with their faces.
    pub fn boundary_complex(&self) -> Result<SubcomplexView<'_>, ComplexError> {
        if let Some(v) = self.first_isolated_vertex() {
            return Err(ComplexError::NotPure(v));
        }
        let facets: Vec<SimplexKey> = (0..self.num_vertices() as VertexId)
            .into_par_iter()
            .flat_map_iter(|v| {
                self.facet_counts_at(v).into_iter().filter(|(_, c)| *c == 1).map(|(f, _)| f)
            })
            .collect();
        let mut view = SubcomplexView::empty(self);
        for f in facets {
            view.insert_with_faces(&f);
        }
        Ok(view)
    }

    /// Coface counts of the `(m−1)`-faces whose smallest vertex is `v`.
    fn facet_counts_at(&self, v: VertexId) -> SmallVec<[(SimplexKey, usize); 16]> {
        let mut out: SmallVec<[(SimplexKey, usize); 16]> = SmallVec::new();
        if self.m == 0 {
            return out;
        }
        for &t in self.star_tops_of(v) {
            let row = self.top(t as usize);
            for drop in 0..row.len() {
                if row[drop] == v {
                    continue;
                }
                let f: SimplexKey = row.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &u)| u).collect();
                if f[0] != v {
                    continue;
                }
                match out.iter_mut().find(|(g, _)| *g == f) {
                    Some(e) => e.1 += 1,
                    None => out.push((f, 1)),
                }
            }
        }
        out
    }

    /// All simplices of dimension at most `k`.
    pub fn skeleton(&self, k: usize) -> Result<SubcomplexView<'_>, ComplexError> {
        if k > self.m {
            return Err(ComplexError::BadDimension(k));
        }
        let mut view = SubcomplexView::empty(self);
        for row in self.tops() {
            for_each_face(row, &mut |f| {
                if f.len() <= k + 1 {
                    view.simplices.insert(f.iter().copied().collect());
                }
            });
        }
        for v in 0..self.num_vertices() as VertexId {
            view.simplices.insert(SmallVec::from_slice(&[v]));
        }
        Ok(view)
    }

    /// Purity, coface counts and vertex links.
    pub fn is_manifold_complex(&self) -> ManifoldCheckResult {
        let nv = self.num_vertices();
        let isolated: Vec<VertexId> = (0..nv as VertexId).filter(|&v| self.star_tops_of(v).is_empty()).collect();
        let per_vertex: Vec<(Vec<SimplexKey>, usize, Option<LinkKind>)> = (0..nv as VertexId)
            .into_par_iter()
            .map(|v| {
                let counts = self.facet_counts_at(v);
                let over: Vec<SimplexKey> = counts.iter().filter(|(_, c)| *c > 2).map(|(f, _)| f.clone()).collect();
                let boundary = counts.iter().filter(|(_, c)| *c == 1).count();
                let link = if self.m <= 3 && !self.star_tops_of(v).is_empty() { Some(self.link_kind(v)) } else { None };
                (over, boundary, link)
            })
            .collect();
        let mut overfull = Vec::new();
        let mut boundary_facets = 0;
        let mut bad_links = Vec::new();
        for (v, (over, b, link)) in per_vertex.into_iter().enumerate() {
            overfull.extend(over);
            boundary_facets += b;
            if let Some(LinkKind::Invalid) = link {
                bad_links.push(v as VertexId);
            }
        }
        let partial = self.m > 3;
        ManifoldCheckResult {
            pure: isolated.is_empty(),
            isolated_vertices: isolated,
            overfull_facets: overfull,
            link_failures: bad_links,
            boundary_facets,
            partial,
        }
    }

    /// Shape of the link of `v` among the top simplices of its star.
    pub fn link_kind(&self, v: VertexId) -> LinkKind {
        let faces: Vec<SimplexKey> = self
            .star_tops_of(v)
            .iter()
            .map(|&t| self.top(t as usize).iter().copied().filter(|&u| u != v).collect())
            .collect();
        classify_link(self.m, &faces)
    }

    /// Whether the star of `p` is a full star: its carrier is a manifold
    /// with boundary and `p` is interior.
    pub fn is_full_star(&self, p: VertexId) -> Result<bool, ComplexError> {
        if p as usize >= self.num_vertices() {
            return Err(ComplexError::UnknownVertex(p));
        }
        if self.star_tops_of(p).is_empty() {
            return Ok(false);
        }
        Ok(self.link_kind(p) == LinkKind::Sphere)
    }

    /// Whether `x` has barycentric coordinate above `1/(m+1) − δ` with
    /// respect to `p` in a top simplex of the star of `p` containing it.
    pub fn shrunken_star_contains(&self, p: VertexId, x: &Vector, delta: f64) -> Result<bool, ComplexError> {
        if p as usize >= self.num_vertices() {
            return Err(ComplexError::UnknownVertex(p));
        }
        let threshold = 1.0 / (self.m as f64 + 1.0) - delta;
        let mut found = false;
        for &t in self.star_tops_of(p) {
            let row = self.top(t as usize);
            let verts = self.top_vertices(t as usize);
            let (lam, off) = simplex::barycentric_least_squares(&verts, x);
            if off > 1e-9 * (1.0 + x.norm()) || lam.iter().any(|&l| l < -INSIDE_TOLERANCE) {
                continue;
            }
            found = true;
            let i = row.iter().position(|&u| u == p).expect("star simplex contains p");
            if lam[i] > threshold {
                return Ok(true);
            }
        }
        if found {
            Ok(false)
        } else {
            Err(ComplexError::PointOutsideStar(p))
        }
    }

    /// Barycentric coordinates of `x` in top simplex `t`, and the distance
    /// to its affine hull.
    pub fn barycentric_in_top(&self, t: usize, x: &Vector) -> (Barycentric, f64) {
        simplex::barycentric_least_squares(&self.top_vertices(t), x)
    }

    /// Copy with some vertices moved.
    pub fn with_vertex_coords(&self, changes: &[(VertexId, Vector)]) -> GeometricComplex {
        let mut c = self.clone();
        for (v, x) in changes {
            let i = *v as usize * self.n;
            c.coords[i..i + self.n].copy_from_slice(x.as_slice());
        }
        c
    }

    /// Copy with the orientation of top simplex `i` reversed.
    pub fn with_flipped_parity(&self, i: usize) -> GeometricComplex {
        let mut c = self.clone();
        c.parity[i] = -c.parity[i];
        c
    }

    /// Rows as `usize` vectors in sorted order, for serialization.
    pub fn top_rows(&self) -> Vec<Vec<usize>> {
        self.tops().map(|r| r.iter().map(|&v| v as usize).collect()).collect()
    }
}

/// Topological type of a vertex link in dimension at most 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LinkKind {
    /// Closed `(m−1)`-sphere: an interior vertex.
    Sphere,
    /// `(m−1)`-ball: a boundary vertex.
    Ball,
    /// Anything else.
    Invalid,
}

/// Classifies a link given by its top faces (each of size `m`).
pub fn classify_link(m: usize, faces: &[SimplexKey]) -> LinkKind {
    match m {
        0 => LinkKind::Sphere,
        1 => match faces.len() {
            1 => LinkKind::Ball,
            2 if faces[0] != faces[1] => LinkKind::Sphere,
            _ => LinkKind::Invalid,
        },
        2 => {
            // A graph: must be a single cycle or a single path.
            let mut deg: HashMap<VertexId, usize> = HashMap::new();
            for e in faces {
                *deg.entry(e[0]).or_default() += 1;
                *deg.entry(e[1]).or_default() += 1;
            }
            if deg.values().any(|&d| d > 2) || !connected(faces) {
                return LinkKind::Invalid;
            }
            let ends = deg.values().filter(|&&d| d == 1).count();
            match ends {
                0 => LinkKind::Sphere,
                2 => LinkKind::Ball,
                _ => LinkKind::Invalid,
            }
        }
        3 => {
            // A surface: edges in at most two triangles, vertex links are
            // paths or cycles, connected, Euler characteristic 2 or 1.
            let mut edges: HashMap<(VertexId, VertexId), usize> = HashMap::new();
            let mut verts: BTreeSet<VertexId> = BTreeSet::new();
            for f in faces {
                for (a, b) in [(f[0], f[1]), (f[0], f[2]), (f[1], f[2])] {
                    *edges.entry((a, b)).or_default() += 1;
                }
                verts.extend(f.iter().copied());
            }
            if edges.values().any(|&c| c > 2) || !connected(faces) {
                return LinkKind::Invalid;
            }
            for &v in &verts {
                let sub: Vec<SimplexKey> =
                    faces.iter().filter(|f| f.contains(&v)).map(|f| f.iter().copied().filter(|&u| u != v).collect()).collect();
                if classify_link(2, &sub) == LinkKind::Invalid {
                    return LinkKind::Invalid;
                }
            }
            let chi = verts.len() as i64 - edges.len() as i64 + faces.len() as i64;
            let open = edges.values().any(|&c| c == 1);
            match (open, chi) {
                (false, 2) => LinkKind::Sphere,
                (true, 1) => LinkKind::Ball,
                _ => LinkKind::Invalid,
            }
        }
        _ => LinkKind::Invalid,
    }
}

fn connected(faces: &[SimplexKey]) -> bool {
    if faces.is_empty() {
        return false;
    }
    let mut seen = vec![false; faces.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for (j, g) in faces.iter().enumerate() {
            if !seen[j] && g.iter().any(|v| faces[i].contains(v)) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[inline]
fn is_subset(small: &[VertexId], big: &[VertexId]) -> bool {
    small.iter().all(|v| big.contains(v))
}

/// Calls `f` on every nonempty face of a sorted row, the row included.
pub fn for_each_face(row: &[VertexId], f: &mut dyn FnMut(&[VertexId])) {
    let k = row.len();
    let mut buf: SmallVec<[VertexId; 4]> = SmallVec::new();
    for mask in 1u32..(1 << k) {
        buf.clear();
        for (i, &v) in row.iter().enumerate() {
            if mask & (1 << i) != 0 {
                buf.push(v);
            }
        }
        f(&buf);
    }
}

/// Result of the manifold test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifoldCheckResult {
    pub pure: bool,
    pub isolated_vertices: Vec<VertexId>,
    /// `(m−1)`-faces with more than two cofaces.
    pub overfull_facets: Vec<SimplexKey>,
    /// Vertices whose link is neither a sphere nor a ball.
    pub link_failures: Vec<VertexId>,
    /// Number of `(m−1)`-faces with exactly one coface.
    pub boundary_facets: usize,
    /// Links were not checked (dimension above 3).
    pub partial: bool,
}

impl ManifoldCheckResult {
    /// Manifold, possibly with boundary.
    pub fn is_manifold(&self) -> bool {
        self.pure && self.overfull_facets.is_empty() && self.link_failures.is_empty()
    }

    pub fn boundary_empty(&self) -> bool {
        self.boundary_facets == 0
    }

    /// Manifold without boundary.
    pub fn is_closed_manifold(&self) -> bool {
        self.is_manifold() && self.boundary_empty()
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if !self.pure {
            parts.push(format!("{} isolated vertices", self.isolated_vertices.len()));
        }
        if !self.overfull_facets.is_empty() {
            parts.push(format!("{} facets with more than two cofaces", self.overfull_facets.len()));
        }
        if !self.link_failures.is_empty() {
            parts.push(format!("{} vertices with non-manifold links", self.link_failures.len()));
        }
        if self.boundary_facets > 0 {
            parts.push(format!("{} boundary facets", self.boundary_facets));
        }
        if self.partial {
            parts.push("links unchecked above dimension 3".to_string());
        }
        if parts.is_empty() {
            "closed manifold".to_string()
        } else {
            parts.join(", ")
        }
    }
}

/// A face-closed set of simplices of a parent complex.
#[derive(Clone, Debug)]
pub struct SubcomplexView<'a> {
    pub parent: &'a GeometricComplex,
    pub simplices: BTreeSet<SimplexKey>,
}

impl<'a> SubcomplexView<'a> {
    pub fn empty(parent: &'a GeometricComplex) -> Self {
        SubcomplexView { parent, simplices: BTreeSet::new() }
    }

    pub fn closure_of_tops(parent: &'a GeometricComplex, tops: &[u32]) -> Self {
        let mut view = SubcomplexView::empty(parent);
        for &t in tops {
            view.insert_with_faces(parent.top(t as usize));
        }
        view
    }

    pub fn insert_with_faces(&mut self, key: &[VertexId]) {
        let set = &mut self.simplices;
        for_each_face(key, &mut |f| {
            set.insert(f.iter().copied().collect());
        });
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn contains(&self, key: &[VertexId]) -> bool {
        self.simplices.contains(&SimplexKey::from_slice(key))
    }

    /// Simplices of dimension `k`.
    pub fn of_dimension(&self, k: usize) -> impl Iterator<Item = &SimplexKey> + '_ {
        self.simplices.iter().filter(move |s| s.len() == k + 1)
    }

    pub fn count_of_dimension(&self, k: usize) -> usize {
        self.of_dimension(k).count()
    }

    /// Whether every face of every member is a member.
    pub fn is_closed(&self) -> bool {
        self.simplices.iter().all(|s| {
            let mut ok = true;
            for_each_face(s, &mut |f| ok &= self.simplices.contains(&SimplexKey::from_slice(f)));
            ok
        })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Hexagonal fan: centre 0 and ring 1..=6 in the plane.
    pub fn hex_fan() -> GeometricComplex {
        let mut b = ComplexBuilder::new(2, 2);
        b.add_vertex(&[0.0, 0.0]);
        for k in 0..6 {
            let a = std::f64::consts::PI / 3.0 * k as f64;
            b.add_vertex(&[a.cos(), a.sin()]);
        }
        for k in 0..6u32 {
            b.add_simplex(&[0, 1 + k, 1 + (k + 1) % 6]);
        }
        b.build().unwrap()
    }

    pub fn icosahedron() -> GeometricComplex {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, phi, 0.0], [1.0, phi, 0.0], [-1.0, -phi, 0.0], [1.0, -phi, 0.0],
            [0.0, -1.0, phi], [0.0, 1.0, phi], [0.0, -1.0, -phi], [0.0, 1.0, -phi],
            [phi, 0.0, -1.0], [phi, 0.0, 1.0], [-phi, 0.0, -1.0], [-phi, 0.0, 1.0],
        ];
        let faces: [[u32; 3]; 20] = [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        let mut b = ComplexBuilder::new(2, 3);
        for p in raw {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            b.add_vertex(&[p[0] / n, p[1] / n, p[2] / n]);
        }
        for f in faces {
            b.add_simplex(&f);
        }
        b.build().unwrap()
    }

    pub fn bowtie() -> GeometricComplex {
        let mut b = ComplexBuilder::new(2, 2);
        for p in [[0.0, 0.0], [1.0, 0.5], [1.0, -0.5], [-1.0, 0.5], [-1.0, -0.5]] {
            b.add_vertex(&p);
        }
        b.add_simplex(&[0, 2, 1]).add_simplex(&[0, 3, 4]);
        b.build().unwrap()
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
    fn fan_star_and_skeleton_counts() {
        let c = hex_fan();
        let st = c.star(&[0]).unwrap();
        assert!(st.is_closed());
        assert_eq!((st.count_of_dimension(2), st.count_of_dimension(1), st.count_of_dimension(0)), (6, 12, 7));
        let sk = c.skeleton(1).unwrap();
        assert_eq!((sk.count_of_dimension(0), sk.count_of_dimension(1), sk.count_of_dimension(2)), (7, 12, 0));
        assert_eq!(c.skeleton(0).unwrap().len(), 7);
        assert_eq!(c.skeleton(2).unwrap().len(), 25);
        assert!(matches!(c.skeleton(3), Err(ComplexError::BadDimension(3))));
        let single = c.star(&[0, 1, 2]).unwrap();
        assert_eq!(single.len(), 7);
        assert!(c.star(&[1, 3]).is_err());
    }

    #[test]
    fn fan_boundary_and_manifold_checks() {
        let c = hex_fan();
        let b = c.boundary_complex().unwrap();
        assert_eq!((b.count_of_dimension(1), b.count_of_dimension(0)), (6, 6));
        assert!(!b.contains(&[0]));
        let r = c.is_manifold_complex();
        assert!(r.is_manifold() && !r.boundary_empty());
        assert!(c.is_full_star(0).unwrap());
        assert!(!c.is_full_star(1).unwrap());
    }

    #[test]
    fn icosahedron_is_closed() {
        let c = icosahedron();
        assert!(c.boundary_complex().unwrap().is_empty());
        assert!(c.is_manifold_complex().is_closed_manifold());
        assert!((0..12).all(|p| c.is_full_star(p).unwrap()));
    }

    #[test]
    fn bowtie_fails_link_check() {
        let c = bowtie();
        let r = c.is_manifold_complex();
        assert!(!r.is_manifold());
        assert_eq!(r.link_failures, vec![0]);
        assert!(!c.is_full_star(0).unwrap());
    }

    #[test]
    fn open_star_queries() {
        let c = hex_fan();
        assert!(c.open_star_membership(&[0], &v(&[0.0, 0.0])).unwrap());
        assert!(!c.open_star_membership(&[0], &v(&[1.0, 0.0])).unwrap());
        assert!(c.open_star_membership(&[0], &v(&[0.5, 0.0])).unwrap());
        assert!(!c.open_star_membership(&[0], &v(&[0.75, 0.4330127018922193])).unwrap());
    }

    #[test]
    fn shrunken_star_queries() {
        let c = hex_fan();
        assert!(c.shrunken_star_contains(0, &v(&[0.0, 0.0]), 0.1).unwrap());
        let bc = c.top_simplex(0).barycentre();
        assert!(c.shrunken_star_contains(0, &bc, 1e-6).unwrap());
        assert!(!c.shrunken_star_contains(0, &v(&[0.75, 0.4330127018922193]), 0.1).unwrap());
        assert!(matches!(c.shrunken_star_contains(0, &v(&[5.0, 0.0]), 0.1), Err(ComplexError::PointOutsideStar(0))));
    }

    #[test]
    fn parity_tracks_vertex_order() {
        let c = hex_fan();
        let (_, s) = sort_with_parity(&[2, 0, 1]);
        assert_eq!(s, 1);
        let (_, s) = sort_with_parity(&[1, 0, 2]);
        assert_eq!(s, -1);
        // The last fan triangle [0, 6, 1] sorts to [0, 1, 6] by one swap.
        assert_eq!(c.parity(5), -1);
        assert_eq!(c.oriented_top(5).as_slice(), &[1, 0, 6]);
    }

    #[test]
    fn boundary_of_boundary_is_empty() {
        let c = hex_fan();
        let b = c.boundary_complex().unwrap();
        // Each vertex of the boundary cycle lies on exactly two boundary edges.
        for vtx in b.of_dimension(0) {
            let n = b.of_dimension(1).filter(|e| e.contains(&vtx[0])).count();
            assert_eq!(n, 2);
        }
    }

    #[test]
    fn malformed_input_is_rejected() {
        let verts = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert!(matches!(
            GeometricComplex::from_parts(2, 2, &verts, &[vec![0, 1, 5]], None, true),
            Err(ComplexError::VertexOutOfRange { .. })
        ));
        assert!(matches!(
            GeometricComplex::from_parts(2, 2, &verts, &[vec![0, 1, 1]], None, true),
            Err(ComplexError::RepeatedVertex(0))
        ));
        assert!(matches!(
            GeometricComplex::from_parts(2, 2, &verts, &[vec![0, 1, 2], vec![2, 1, 0]], None, true),
            Err(ComplexError::DuplicateSimplex(1))
        ));
    }
}
