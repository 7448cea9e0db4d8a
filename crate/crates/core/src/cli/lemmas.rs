//! Randomized sweeps checking each supporting bound on the analytic test
//! manifolds.
//!
//! Every case draws a configuration satisfying the hypotheses of one bound,
//! measures the bounded quantity and records `(lhs, rhs)`. A case violates
//! the bound when `lhs > rhs (1 + REL_TOLERANCE) + ABS_TOLERANCE`. Cases whose
//! hypotheses cannot be met after [`MAX_ATTEMPTS`] draws are skipped.

use std::f64::consts::TAU;
use std::ops::Range;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::atlas::{build_chart, local_barycentric, Chart};
use crate::degree::{DegreeError, OrientedPLMap};
use crate::distortion::{
    compose_distortion, finite_difference_jacobian, invert_distortion, uniform_barycentric,
};
use crate::geom::{svd_spectrum, Vector};
use crate::manifolds::{
    chart_projection_distortion, closest_point_simplex_distortion, dist_to_tangent_bounds_check,
    projection_lipschitz_check, simplex_manifold_proximity, simplex_projection_distortion, simplex_tangent_angle,
    tangent_variation_check, whitney_angle_bound_check, ReachInfo, RchPolicy, TangentAngleMode, TestManifold,
};
use crate::meshgen::{generate, Generator, MeshRecipe};
use crate::simplex::{combine, orientation_determinant, thickness_of, EuclideanSimplex, Vertices};

pub const REL_TOLERANCE: f64 = 1e-9;
pub const ABS_TOLERANCE: f64 = 1e-12;
/// Allowance for the truncation and rounding error of central differences.
pub const JACOBIAN_TOLERANCE: f64 = 1e-6;
pub const MAX_ATTEMPTS: usize = 50;
/// Least thickness of the random simplices.
const MIN_THICKNESS: f64 = 0.1;
/// Least separation of the random pairs in the tangent-distance sweep,
/// relative to the reach.
pub const MIN_PAIR_DISTANCE: f64 = 0.01;
/// Least edge length of the random simplices, relative to their draw radius.
const MIN_EDGE_FRACTION: f64 = 0.1;

/// Name and one-line statement of every sweep, in run order.
pub const LEMMAS: &[(&str, &str)] = &[
    ("trilateration", "a ξ-distortion map fixing the vertices of σ moves x by at most 3ξL/t"),
    ("distortion-calculus", "compositions are Π(1+ξ)−1 distortions, inverses ξ/(1−ξ)"),
    ("differential-spectrum", "singular values of the differential of a ξ-distortion map lie in [1−ξ, 1+ξ]"),
    ("tangent-distance", "sin∠([x,y], T_x) ≤ |x−y|/2rch and d(y, T_x) ≤ |x−y|²/2rch"),
    ("tangent-variation", "sin∠(T_x, T_y) ≤ |x−y|/R and ∠ ≤ π|x−y|/2R"),
    ("whitney-angle", "sin∠(aff σ, K) ≤ 2η/(tL)"),
    ("simplex-proximity", "a simplex with vertices on M stays within 2L²/R of M and of its tangent spaces"),
    ("simplex-tangent-angle", "sin∠(σ, T_p) ≤ L/(t rch(p)) and sin∠(σ, T_x̌) ≤ 3L/(tR)"),
    ("chart-projection", "tangent projection of B(p, ρR) ∩ M is a 4ρ²-distortion map"),
    ("simplex-projection", "tangent projection restricted to σ is an (L/(t rch(p)))²-distortion map"),
    ("projection-lipschitz", "|y̌−x̌| ≤ |y−x|/(1 − a/R) near M"),
    ("closest-point-distortion", "closest-point projection restricted to σ is a 12L²/(t²R²)-distortion map"),
    ("strong-displacement", "|dF − I| ≤ ξ on convex ω fixing p gives |F(x) − x| ≤ ξ|x − p|"),
    ("cogent-degree", "signed preimage count equals the winding number of the boundary image"),
    ("local-constancy", "a simplexwise positive map has constant preimage count off the boundary image"),
];

pub fn lemma_names() -> impl Iterator<Item = &'static str> {
    LEMMAS.iter().map(|(n, _)| *n)
}

/// The manifolds every sweep runs on.
pub fn sweep_manifolds() -> Vec<TestManifold> {
    vec![
        TestManifold::unit_sphere(),
        TestManifold::torus(2.0, 1.0).expect("valid torus"),
        TestManifold::circle(1.0).expect("valid circle"),
    ]
}

/// Result of one sweep of one bound on one manifold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaOutcome {
    pub lemma: String,
    pub manifold: String,
    /// Cases whose hypotheses held and were measured.
    pub cases: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Least `(rhs − lhs)/rhs` over all measurements with `rhs > 0`.
    pub worst_slack: f64,
    /// `(lhs, rhs)` of the least-slack measurement.
    pub worst: (f64, f64),
}

impl LemmaOutcome {
    pub fn passes(&self) -> bool {
        self.violations == 0 && self.cases > 0
    }
}

/// Fixed per-manifold data shared by the cases.
pub struct SweepContext {
    pub manifold: TestManifold,
    pub info: ReachInfo,
    pub reach: f64,
    /// Charts of a coarse fixed mesh, the domains of the degree sweeps.
    pub charts: Vec<Chart>,
}

impl SweepContext {
    pub fn new(manifold: TestManifold) -> Self {
        let generator = match manifold {
            TestManifold::Torus { .. } => Generator::TorusGrid(24, 10),
            TestManifold::Circle { .. } => Generator::PolyCircle(32),
            TestManifold::Sphere { dim: 1, .. } => Generator::PolyCircle(32),
            _ => Generator::Icosphere(2),
        };
        let charts = generate(&MeshRecipe::new(manifold, generator))
            .ok()
            .map(|mesh| {
                (0..mesh.complex.num_vertices() as u32)
                    .filter_map(|p| build_chart(&manifold, &mesh.complex, p, RchPolicy::GlobalReach).ok())
                    .collect()
            })
            .unwrap_or_default();
        SweepContext { manifold, info: manifold.reach_and_lfs(), reach: manifold.reach(), charts }
    }

    fn dim(&self) -> usize {
        self.manifold.dim()
    }
}

type Measurements = Vec<(f64, f64)>;
type CaseFn = fn(&SweepContext, &mut ChaCha8Rng) -> Option<Measurements>;

fn case_fn(name: &str) -> Option<CaseFn> {
    Some(match name {
        "trilateration" => trilateration,
        "distortion-calculus" => distortion_calculus,
        "differential-spectrum" => differential_spectrum,
        "tangent-distance" => tangent_distance,
        "tangent-variation" => tangent_variation,
        "whitney-angle" => whitney_angle,
        "simplex-proximity" => simplex_proximity,
        "simplex-tangent-angle" => simplex_tangent_angle_case,
        "chart-projection" => chart_projection,
        "simplex-projection" => simplex_projection,
        "projection-lipschitz" => projection_lipschitz,
        "closest-point-distortion" => closest_point_distortion,
        "strong-displacement" => strong_displacement,
        "cogent-degree" => cogent_degree,
        "local-constancy" => local_constancy,
        _ => return None,
    })
}

pub fn is_violation(lhs: f64, rhs: f64) -> bool {
    !(lhs <= rhs * (1.0 + REL_TOLERANCE) + ABS_TOLERANCE)
}

#[derive(Clone, Copy)]
struct Tally {
    cases: usize,
    skipped: usize,
    violations: usize,
    worst_slack: f64,
    worst: (f64, f64),
}

impl Tally {
    const EMPTY: Tally = Tally { cases: 0, skipped: 0, violations: 0, worst_slack: f64::INFINITY, worst: (0.0, 0.0) };

    fn merge(mut self, other: Tally) -> Tally {
        self.cases += other.cases;
        self.skipped += other.skipped;
        self.violations += other.violations;
        // Ties keep the pair with the larger lhs so the result does not
        // depend on the reduction order.
        if other.worst_slack < self.worst_slack
            || (other.worst_slack == self.worst_slack && other.worst.0 > self.worst.0)
        {
            self.worst_slack = other.worst_slack;
            self.worst = other.worst;
        }
        self
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one case. The run seed is hashed first so that different run
/// seeds give disjoint case streams rather than a permutation of one.
fn case_seed(seed: u64, lemma: usize, manifold: usize, case: usize) -> u64 {
    splitmix(splitmix(seed) ^ ((lemma as u64) << 48) ^ ((manifold as u64) << 40) ^ case as u64)
}

/// Runs `cases` randomized cases of the named sweep. Returns `None` for an
/// unknown name.
pub fn run_lemma(name: &str, ctx: &SweepContext, manifold_index: usize, cases: usize, seed: u64) -> Option<LemmaOutcome> {
    let lemma_index = LEMMAS.iter().position(|(n, _)| *n == name)?;
    let case = case_fn(name)?;
    let tally = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, lemma_index, manifold_index, i));
            let Some(measured) = (0..MAX_ATTEMPTS).find_map(|_| case(ctx, &mut rng)) else {
                return Tally { skipped: 1, ..Tally::EMPTY };
            };
            let mut t = Tally { cases: 1, ..Tally::EMPTY };
            if measured.iter().any(|&(l, r)| is_violation(l, r)) {
                t.violations = 1;
            }
            for (l, r) in measured {
                if r > 0.0 {
                    let slack = (r - l) / r;
                    if slack < t.worst_slack {
                        t.worst_slack = slack;
                        t.worst = (l, r);
                    }
                }
            }
            t
        })
        .reduce(|| Tally::EMPTY, Tally::merge);
    Some(LemmaOutcome {
        lemma: name.to_string(),
        manifold: ctx.manifold.to_string(),
        cases: tally.cases,
        skipped: tally.skipped,
        violations: tally.violations,
        worst_slack: tally.worst_slack,
        worst: tally.worst,
    })
}

/// Runs the named sweeps on every manifold of [`sweep_manifolds`].
pub fn run_lemmas(names: &[&str], cases: usize, seed: u64) -> Vec<LemmaOutcome> {
    let contexts: Vec<SweepContext> = sweep_manifolds().into_iter().map(SweepContext::new).collect();
    let mut out = Vec::new();
    for name in names {
        for (i, ctx) in contexts.iter().enumerate() {
            if let Some(o) = run_lemma(name, ctx, i, cases, seed) {
                out.push(o);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random configurations
// ---------------------------------------------------------------------------

/// A top-dimensional simplex with vertices on `M` within a random multiple
/// of the reach from its first vertex, or `None` if it is too thin.
fn inscribed(ctx: &SweepContext, rng: &mut ChaCha8Rng, relative_size: Range<f64>) -> Option<EuclideanSimplex> {
    let size = ctx.reach * rng.gen_range(relative_size);
    let p = ctx.manifold.sample_point(rng);
    let mut verts = vec![p];
    for _ in 0..ctx.dim() {
        verts.push(ctx.manifold.sample_near(&p, size, rng));
    }
    // Much shorter edges put the measured distortions below the rounding
    // error of the projections.
    let (t, _, shortest) = thickness_of(&verts);
    if t < MIN_THICKNESS || shortest < MIN_EDGE_FRACTION * size {
        return None;
    }
    EuclideanSimplex::new(verts).ok()
}

fn random_lambda(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    uniform_barycentric(rng, k).to_vec()
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let g = Vector::from_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        if let Some(u) = g.normalized() {
            return u;
        }
    }
}

/// `x + c u sin(a·x)/|a|`: its perturbation term is `c`-Lipschitz, so the map
/// is a `c`-distortion map.
struct Wiggle {
    c: f64,
    u: Vector,
    a: Vector,
    a_norm: f64,
}

impl Wiggle {
    fn random(rng: &mut ChaCha8Rng, n: usize, c: f64, scale: f64) -> Self {
        let a = random_unit(rng, n) * (rng.gen_range(0.5..4.0) / scale);
        Wiggle { c, u: random_unit(rng, n), a_norm: a.norm(), a }
    }

    fn offset(&self, x: &Vector) -> Vector {
        self.u * (self.c * self.a.dot(x).sin() / self.a_norm)
    }

    fn apply(&self, x: &Vector) -> Vector {
        *x + self.offset(x)
    }
}

/// A simplex with vertices on `M` small enough for the chart bounds, its
/// image `σ̂` in the tangent coordinates at its first vertex, and the
/// certified distortion of `x̂ ↦ tangent coordinates of π_M(σ(x̂))`.
struct ChartSimplex {
    ambient: Vertices,
    projected: Vertices,
    tangent: crate::geom::Flat,
    xi: f64,
}

impl ChartSimplex {
    fn draw(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<ChartSimplex> {
        let r = ctx.reach;
        let s = inscribed(ctx, rng, 0.002..0.03)?;
        let (t, l, _) = thickness_of(s.vertices());
        let q = (l / (t * r)).powi(2);
        if q > crate::atlas::MAX_SIZE_RATIO {
            return None;
        }
        let tangent = ctx.manifold.tangent_flat(s.vertex(0)).ok()?;
        let projected: Vertices = s.vertices().iter().map(|v| tangent.coordinates(v)).collect();
        let (tp, _, _) = thickness_of(&projected);
        if tp < crate::simplex::DEGENERACY_TOLERANCE {
            return None;
        }
        let rho = (l / r) * (1.0 + 2.0 * l / r);
        let xi = compose_distortion(&[q / (1.0 - q), 12.0 * q, 4.0 * rho * rho]);
        Some(ChartSimplex { ambient: s.vertices().iter().copied().collect(), projected, tangent, xi })
    }

    fn eval(&self, m: &TestManifold, x: &Vector) -> Option<Vector> {
        let lam = local_barycentric(&self.projected, x);
        let on_m = m.project(&combine(&self.ambient, &lam)).ok()?;
        Some(self.tangent.coordinates(&on_m))
    }
}

// ---------------------------------------------------------------------------
// Cases
// ---------------------------------------------------------------------------

fn trilateration(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let cs = ChartSimplex::draw(ctx, rng)?;
    let (t, l, _) = thickness_of(&cs.projected);
    let rhs = 3.0 * cs.xi * l / t;
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let x = combine(&cs.projected, &random_lambda(rng, cs.projected.len()));
        worst = worst.max(x.dist(&cs.eval(&ctx.manifold, &x)?));
    }
    Some(vec![(worst, rhs)])
}

fn distortion_calculus(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let n = ctx.manifold.ambient_dim();
    let k = rng.gen_range(2..=4);
    let maps: Vec<Wiggle> = (0..k)
        .map(|_| {
            let c = rng.gen_range(0.0..0.3);
            Wiggle::random(rng, n, c, ctx.reach)
        })
        .collect();
    let xis: Vec<f64> = maps.iter().map(|w| w.c).collect();
    let composed = compose_distortion(&xis);
    let inverse = invert_distortion(xis[0]).ok()?;

    let x = ctx.manifold.sample_point(rng);
    let y = ctx.manifold.sample_near(&x, ctx.reach * rng.gen_range(0.01..2.0), rng);
    let d = x.dist(&y);
    if d < 1e-9 {
        return None;
    }
    let (mut gx, mut gy) = (x, y);
    for w in &maps {
        gx = w.apply(&gx);
        gy = w.apply(&gy);
    }
    let composite = (gx.dist(&gy) / d - 1.0).abs();
    let (fx, fy) = (maps[0].apply(&x), maps[0].apply(&y));
    let fd = fx.dist(&fy);
    // The inverse of F sends (fx, fy) back to (x, y).
    let inverted = (d / fd - 1.0).abs();

    // Sum over non-empty subsets of the products of their members.
    let subset_sum: f64 = (1u32..(1 << k))
        .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).map(|i| xis[i]).product::<f64>())
        .sum();
    let rounding = 8.0 * f64::EPSILON * (1.0 + subset_sum);
    Some(vec![(composite, composed), (inverted, inverse), ((composed - subset_sum).abs(), rounding)])
}

fn differential_spectrum(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let cs = ChartSimplex::draw(ctx, rng)?;
    let k = cs.projected.len();
    // Interior point, away from the facets where the pieces change.
    let mut lam = random_lambda(rng, k);
    for l in &mut lam {
        *l = 0.1 / k as f64 + 0.9 * *l;
    }
    let x = combine(&cs.projected, &lam);
    let (_, l, _) = thickness_of(&cs.projected);
    let m = &ctx.manifold;
    let f = |z: &Vector| cs.eval(m, z).unwrap_or(*z);
    let j = finite_difference_jacobian(&f, &x, 1e-4 * l).ok()?;
    let dev = svd_spectrum(&j).max_deviation_from_one();
    Some(vec![(dev, cs.xi + JACOBIAN_TOLERANCE)])
}

fn tangent_distance(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    // The bounds are attained on spheres; closer pairs put the equality
    // case below the rounding error of the measured distance.
    let x = ctx.manifold.sample_point(rng);
    let y = ctx.manifold.sample_near(&x, ctx.reach * rng.gen_range(0.01..2.0), rng);
    if x.dist(&y) < MIN_PAIR_DISTANCE * ctx.reach {
        return None;
    }
    let (sin, sin_bound, dist, dist_bound) = dist_to_tangent_bounds_check(&ctx.manifold, &x, &y).ok()?;
    Some(vec![(sin, sin_bound), (dist, dist_bound)])
}

fn tangent_variation(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let x = ctx.manifold.sample_point(rng);
    let y = ctx.manifold.sample_near(&x, ctx.reach * rng.gen_range(0.0..1.0), rng);
    let centre = (x + y) * 0.5;
    let radius = 0.5 * x.dist(&y);
    let r_rch = ctx.info.local_reach_lower(&centre, radius);
    if radius >= r_rch {
        return None;
    }
    let v = tangent_variation_check(&ctx.manifold, &x, &y, r_rch).ok()?;
    Some(vec![(v.sin_angle, v.sin_bound), (v.angle, v.angle_bound)])
}

fn whitney_angle(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let s = inscribed(ctx, rng, 0.01..0.5)?;
    // Tangent space at the projected barycentre or at a vertex.
    let base = if rng.gen::<bool>() { ctx.manifold.project(&s.barycentre()).ok()? } else { *s.vertex(0) };
    let k = ctx.manifold.tangent_flat(&base).ok()?;
    let (sin, bound) = whitney_angle_bound_check(&s, &k).ok()?;
    Some(vec![(sin, bound)])
}

fn simplex_proximity(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let s = inscribed(ctx, rng, 0.01..0.3)?;
    let r = simplex_manifold_proximity(&ctx.manifold, &s, ctx.reach, 6, rng.gen()).ok()?;
    Some(vec![
        (r.max_distance_to_m, r.distance_bound),
        (r.max_tangent_distance, r.distance_bound),
        (r.max_vertex_to_projection, r.vertex_bound),
    ])
}

fn simplex_tangent_angle_case(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let s = inscribed(ctx, rng, 0.01..0.2)?;
    let p_index = rng.gen_range(0..=s.dim());
    let at_vertex = simplex_tangent_angle(&ctx.manifold, &s, p_index, TangentAngleMode::AtVertex, ctx.reach).ok()?;
    let l = s.longest_edge();
    let r_rch = ctx.info.local_reach_lower(s.vertex(p_index), 2.0 * l);
    let along = simplex_tangent_angle(
        &ctx.manifold,
        &s,
        p_index,
        TangentAngleMode::AlongProjection { samples: 4, seed: rng.gen() },
        r_rch,
    )
    .ok()?;
    Some(vec![at_vertex, along])
}

fn chart_projection(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let p = ctx.manifold.sample_point(rng);
    let rho = rng.gen_range(0.01..0.49);
    let r = chart_projection_distortion(&ctx.manifold, &p, rho, ctx.reach, 8, rng.gen()).ok()?;
    Some(vec![r])
}

fn simplex_projection(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let s = inscribed(ctx, rng, 0.01..0.3)?;
    let p_index = rng.gen_range(0..=s.dim());
    Some(vec![simplex_projection_distortion(&ctx.manifold, &s, p_index, 6, rng.gen()).ok()?])
}

fn off_manifold(ctx: &SweepContext, rng: &mut ChaCha8Rng, z: &Vector) -> Option<Vector> {
    let normals = ctx.manifold.normal_frame(z).ok()?;
    let mut dir = Vector::zeros(z.dim());
    for nv in normals.iter() {
        dir.axpy(rng.sample::<f64, _>(StandardNormal), nv);
    }
    let dir = dir.normalized()?;
    Some(*z + dir * (ctx.reach * rng.gen_range(-0.9..0.9)))
}

fn projection_lipschitz(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let z1 = ctx.manifold.sample_point(rng);
    let z2 = ctx.manifold.sample_near(&z1, ctx.reach * rng.gen_range(0.0..1.0), rng);
    let x = off_manifold(ctx, rng, &z1)?;
    let y = off_manifold(ctx, rng, &z2)?;
    if x.dist(&y) < 1e-9 {
        return None;
    }
    Some(vec![projection_lipschitz_check(&ctx.manifold, &x, &y).ok()?])
}

fn closest_point_distortion(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let s = inscribed(ctx, rng, 0.005..0.1)?;
    Some(vec![closest_point_simplex_distortion(&ctx.manifold, &s, ctx.reach, 6, rng.gen()).ok()?])
}

fn strong_displacement(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let cs = ChartSimplex::draw(ctx, rng)?;
    let m = ctx.dim();
    let (_, l, _) = thickness_of(&cs.projected);
    // F(x) = p + A(x − p) + wiggle(x − p) with p = σ̂_0 = 0, so
    // |dF − I| ≤ |A − I| + c.
    let amp = rng.gen_range(0.0..0.3);
    let e = nalgebra::DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal) * amp);
    let e_norm = svd_spectrum(&e).operator_norm;
    let c = rng.gen_range(0.0..0.2);
    let w = Wiggle::random(rng, m, c, l);
    let xi = e_norm + w.c;
    let p = cs.projected[0];
    let f = |x: &Vector| {
        let d = *x - p;
        let ed = e.clone() * nalgebra::DVector::from_column_slice(d.as_slice());
        *x + Vector::from_slice(ed.as_slice()) + w.offset(&d)
    };
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let x = combine(&cs.projected, &random_lambda(rng, m + 1));
        let d = x.dist(&p);
        if d > 1e-12 * l {
            worst = worst.max(f(&x).dist(&x) / d);
        }
    }
    Some(vec![(worst, xi)])
}

/// A random chart of the fixed mesh with vertex images moved by up to
/// a random multiple of the shortest projected edge.
fn perturbed_chart_map(ctx: &SweepContext, rng: &mut ChaCha8Rng, amplitude: Range<f64>) -> Option<OrientedPLMap> {
    let amplitude = rng.gen_range(amplitude);
    if ctx.charts.is_empty() {
        return None;
    }
    let chart = &ctx.charts[rng.gen_range(0..ctx.charts.len())];
    let src = &chart.projected_star;
    let m = src.dimension();
    let step = amplitude * chart.projected_quality.s0;
    let images = src
        .vertices()
        .map(|v| v + random_unit(rng, m) * (step * rng.gen::<f64>()))
        .collect();
    OrientedPLMap::new(src.clone(), images).ok()
}

/// Degree by an independent route: the winding number of the boundary image
/// around `y` for surfaces, the endpoint signs for curves.
fn boundary_degree(map: &OrientedPLMap, y: &Vector) -> Option<i64> {
    let src = map.source();
    let img = map.images();
    if src.dimension() == 1 {
        let (mut lo, mut hi) = (0usize, 0usize);
        for v in 0..src.num_vertices() {
            if src.vertex_coords(v as u32)[0] < src.vertex_coords(lo as u32)[0] {
                lo = v;
            }
            if src.vertex_coords(v as u32)[0] > src.vertex_coords(hi as u32)[0] {
                hi = v;
            }
        }
        let sign = |v: usize| (img[v][0] - y[0]).signum() as i64;
        return Some((sign(hi) - sign(lo)) / 2);
    }
    // Directed edges of the positively oriented triangles; interior edges
    // appear once in each direction and cancel.
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for t in 0..src.num_top_simplices() {
        let row = src.top(t);
        let (a, mut b, mut c) = (row[0], row[1], row[2]);
        if orientation_determinant(&src.top_vertices(t)) < 0.0 {
            std::mem::swap(&mut b, &mut c);
        }
        edges.extend([(a, b), (b, c), (c, a)]);
    }
    let mut winding = 0.0;
    for &(a, b) in &edges {
        if edges.contains(&(b, a)) {
            continue;
        }
        let u = img[a as usize] - *y;
        let v = img[b as usize] - *y;
        winding += (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
    }
    let turns = winding / TAU;
    ((turns - turns.round()).abs() < 1e-6).then(|| turns.round() as i64)
}

fn cogent_degree(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    // Large perturbations fold the map, giving degrees other than 0 and 1.
    let map = perturbed_chart_map(ctx, rng, 0.0..3.0)?;
    let m = map.dimension();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for v in map.images() {
        for i in 0..m {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    let y = Vector::from_fn(m, |i| {
        let pad = 0.1 * (hi[i] - lo[i]);
        rng.gen_range(lo[i] - pad..hi[i] + pad)
    });
    let degree = match map.degree_at_point(&y) {
        Ok(d) => d.value,
        Err(DegreeError::PointOnSkeletonImage(_) | DegreeError::DegenerateImage(_)) => return None,
        Err(_) => return None,
    };
    let oracle = boundary_degree(&map, &y)?;
    Some(vec![((degree - oracle).abs() as f64, 0.0)])
}

fn local_constancy(ctx: &SweepContext, rng: &mut ChaCha8Rng) -> Option<Measurements> {
    let map = perturbed_chart_map(ctx, rng, 0.0..0.5)?;
    if !map.check_simplexwise_positive().passes() {
        return None;
    }
    let resolution = if map.dimension() == 1 { 48 } else { 12 };
    let scan = map.locally_constant_degree_scan(resolution).ok()?;
    Some(vec![(scan.violations as f64, 0.0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_has_a_case() {
        for name in lemma_names() {
            assert!(case_fn(name).is_some(), "{name}");
        }
        assert!(case_fn("no-such-bound").is_none());
    }

    #[test]
    fn violation_rule() {
        assert!(!is_violation(1.0, 1.0));
        assert!(!is_violation(0.0, 0.0));
        assert!(is_violation(1.0 + 1e-6, 1.0));
        assert!(is_violation(f64::NAN, 1.0));
    }

    #[test]
    fn small_sweeps_pass_everywhere() {
        let names: Vec<&str> = lemma_names().collect();
        for o in run_lemmas(&names, 200, 3) {
            assert!(o.passes(), "{o:?}");
            assert!(o.cases >= 150, "{o:?}");
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let a = run_lemmas(&["trilateration", "cogent-degree"], 100, 11);
        let b = run_lemmas(&["trilateration", "cogent-degree"], 100, 11);
        assert_eq!(a, b);
    }

    #[test]
    fn winding_matches_identity_degree() {
        let ctx = SweepContext::new(TestManifold::unit_sphere());
        let chart = &ctx.charts[0];
        let map = OrientedPLMap::new(chart.projected_star.clone(), chart.projected_star.vertices().collect()).unwrap();
        let inside = Vector::from_slice(&[1e-3, 2e-3]);
        let outside = Vector::from_slice(&[10.0, 0.0]);
        assert_eq!(boundary_degree(&map, &inside), Some(1));
        assert_eq!(boundary_degree(&map, &outside), Some(0));
    }
}
