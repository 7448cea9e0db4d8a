//! Homeomorphism certification: evaluates the checkable criteria for a
//! complex inscribed in a test manifold and reports a margin for each.
//!
//! Every mode walks the vertices once, building one chart at a time, so the
//! memory cost stays at one chart per worker thread.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::atlas::{
    build_chart, certified_chart_distortion, chart_vertex_sanity, empirical_chart_distortion, local_barycentric,
    AtlasError, Chart, StarQuality, VertexGrid, LFS_VALID_FRACTION,
};
use crate::complex::{GeometricComplex, VertexId};
use crate::distortion::{finite_difference_jacobian, grid_points, uniform_barycentric, Domain};
use crate::geom::{sin_angle_between_flats, svd_spectrum, Flat, Vector};
use crate::manifolds::{RchPolicy, TestManifold};
use crate::meshgen::{mesh_constants, mesh_stats, MeshConstants, MeshError, SizeScale};
use crate::simplex::{combine, orientation_determinant, EuclideanSimplex};

/// Largest number of witnesses kept per criterion.
pub const MAX_WITNESSES: usize = 64;
/// Largest allowed distance from a vertex to the manifold.
pub const VERTEX_ON_MANIFOLD: f64 = 1e-8;

#[derive(Clone, Debug, Error, PartialEq)]
#[non_exhaustive]
pub enum CertifyError {
    #[error("input is not a closed manifold complex: {0}")]
    InputNotManifold(String),
    #[error("vertex {vertex} is {distance:e} from the manifold")]
    VerticesOffManifold { vertex: VertexId, distance: f64 },
    #[error("component {0} of the manifold contains no vertex")]
    ComponentWithoutVertex(usize),
    #[error("complex has dimension {complex} in R^{ambient}, manifold has dimension {manifold} in R^{manifold_ambient}")]
    DimensionMismatch { complex: usize, ambient: usize, manifold: usize, manifold_ambient: usize },
    #[error("delta {delta} is outside the admissible window (0, {window}]")]
    DeltaOutOfWindow { delta: f64, window: f64 },
    #[error("finite-difference Jacobian is not finite at vertex {0}")]
    NumericallyUnstableJacobian(VertexId),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
}

impl From<MeshError> for CertifyError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::VerticesOffManifold { vertex, distance } => CertifyError::VerticesOffManifold { vertex, distance },
            other => CertifyError::InputNotManifold(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertificationMode {
    GenericMetric,
    SubmanifoldLfs,
    SubmanifoldReach,
    DifferentialControl,
}

/// Offending object attached to a failed criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Vertex(VertexId),
    Simplex(u32),
    /// Vertex `q` found inside the projected star of `p`.
    VertexPair(VertexId, VertexId),
    Point(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub witnesses: Vec<Witness>,
}

impl CriterionResult {
    /// `lhs < rhs`.
    pub fn strict(name: &str, lhs: f64, rhs: f64, witnesses: Vec<Witness>) -> Self {
        CriterionResult { name: name.into(), holds: lhs < rhs, lhs, rhs, margin: rhs - lhs, witnesses }
    }

    /// `lhs <= rhs`.
    pub fn non_strict(name: &str, lhs: f64, rhs: f64, witnesses: Vec<Witness>) -> Self {
        CriterionResult { name: name.into(), holds: lhs <= rhs, lhs, rhs, margin: rhs - lhs, witnesses }
    }

    /// Zero violations allowed; `lhs` is the violation count.
    pub fn count(name: &str, tally: Tally) -> Self {
        CriterionResult::non_strict(name, tally.failures as f64, 0.0, tally.witnesses)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    /// Names of the criteria that failed; witnesses are in the criteria.
    Refuted { failed: Vec<String> },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub mode: CertificationMode,
    pub verdict: Verdict,
    pub criteria: Vec<CriterionResult>,
    /// Mesh constants, in the submanifold modes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<MeshConstants>,
}

impl CertificationReport {
    pub fn criterion(&self, name: &str) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One `name,lhs,rhs,margin` row per criterion, with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,lhs,rhs,margin\n");
        for c in &self.criteria {
            let _ = writeln!(s, "{},{:e},{:e},{:e}", c.name, c.lhs, c.rhs, c.margin);
        }
        s
    }
}

/// Whether local quality constants are taken per star or over the whole mesh.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum ConstantsScope {
    #[default]
    Local,
    Global,
}

/// Distortion threshold the generic verdict is based on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum GenericBound {
    /// `s₀t₀²/(12 L₀)`, valid in every dimension.
    #[default]
    Uniform,
    /// `m s₀t₀²/(6(m+1) L₀)`.
    DimensionSharp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyConfig {
    pub seed: u64,
    /// Top simplices sampled for the consequence checks (all if fewer).
    pub consequence_simplices: usize,
    /// Points per sampled simplex.
    pub consequence_points: usize,
    /// Skip the consequence checks.
    pub skip_consequences: bool,
    pub scope: ConstantsScope,
    pub generic_bound: GenericBound,
    /// `R_rch` choice for the generic and differential modes.
    pub rch_policy: RchPolicy,
    /// Sampled pairs per simplex when a chart has no certified bound.
    pub empirical_pairs: usize,
    /// Barycentric lattice resolution for Jacobians.
    pub jacobian_grid: usize,
    /// Accept a Jacobian grid check as certified.
    pub trust_jacobian_grid: bool,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            seed: 0,
            consequence_simplices: 20_000,
            consequence_points: 4,
            skip_consequences: false,
            scope: ConstantsScope::Local,
            generic_bound: GenericBound::Uniform,
            rch_policy: RchPolicy::GlobalReach,
            empirical_pairs: 50,
            jacobian_grid: 3,
            trust_jacobian_grid: false,
        }
    }
}

/// Violation count with the first few witnesses in vertex order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tally {
    pub failures: usize,
    pub witnesses: Vec<Witness>,
}

impl Tally {
    fn fail(&mut self, w: Witness) {
        self.failures += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.failures += other.failures;
        let room = MAX_WITNESSES.saturating_sub(self.witnesses.len());
        self.witnesses.extend(other.witnesses.into_iter().take(room));
        self
    }
}

/// Largest `lhs/rhs` seen over charts, with its vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Worst {
    ratio: f64,
    lhs: f64,
    rhs: f64,
    vertex: VertexId,
}

impl Worst {
    const NONE: Worst = Worst { ratio: f64::NEG_INFINITY, lhs: 0.0, rhs: 0.0, vertex: 0 };

    fn of(lhs: f64, rhs: f64, vertex: VertexId) -> Worst {
        Worst { ratio: lhs / rhs, lhs, rhs, vertex }
    }

    fn max(self, other: Worst) -> Worst {
        if other.ratio > self.ratio {
            other
        } else {
            self
        }
    }
}

/// Per-chart findings folded over the vertices.
#[derive(Clone, Debug)]
struct Sweep {
    embedding: Tally,
    positivity: Tally,
    sanity: Tally,
    certified: Tally,
    /// Main and secondary thresholds for distortion-type criteria.
    first: (Worst, Tally),
    second: (Worst, Tally),
    /// Global mode: the extremes of the chart quantities.
    xi_max: f64,
    quality: StarQuality,
    charts: usize,
}

impl Sweep {
    fn empty() -> Sweep {
        Sweep {
            embedding: Tally::default(),
            positivity: Tally::default(),
            sanity: Tally::default(),
            certified: Tally::default(),
            first: (Worst::NONE, Tally::default()),
            second: (Worst::NONE, Tally::default()),
            xi_max: 0.0,
            quality: StarQuality { l0: 0.0, s0: f64::INFINITY, t0: f64::INFINITY },
            charts: 0,
        }
    }

    fn merge(self, o: Sweep) -> Sweep {
        Sweep {
            embedding: self.embedding.merge(o.embedding),
            positivity: self.positivity.merge(o.positivity),
            sanity: self.sanity.merge(o.sanity),
            certified: self.certified.merge(o.certified),
            first: (self.first.0.max(o.first.0), self.first.1.merge(o.first.1)),
            second: (self.second.0.max(o.second.0), self.second.1.merge(o.second.1)),
            xi_max: self.xi_max.max(o.xi_max),
            quality: StarQuality {
                l0: self.quality.l0.max(o.quality.l0),
                s0: self.quality.s0.min(o.quality.s0),
                t0: self.quality.t0.min(o.quality.t0),
            },
            charts: self.charts + o.charts,
        }
    }
}

// ---------------------------------------------------------------------------
// Preconditions
// ---------------------------------------------------------------------------

fn check_inputs(manifold: &TestManifold, complex: &GeometricComplex) -> Result<(), CertifyError> {
    if complex.dimension() != manifold.dim() || complex.ambient_dim() != manifold.ambient_dim() {
        return Err(CertifyError::DimensionMismatch {
            complex: complex.dimension(),
            ambient: complex.ambient_dim(),
            manifold: manifold.dim(),
            manifold_ambient: manifold.ambient_dim(),
        });
    }
    // Charts are only built for curves and surfaces.
    if !(1..=2).contains(&complex.dimension()) {
        return Err(AtlasError::UnsupportedDimension(complex.dimension()).into());
    }
    let check = complex.is_manifold_complex();
    if !check.is_closed_manifold() {
        return Err(CertifyError::InputNotManifold(check.summary()));
    }
    let off = (0..complex.num_vertices() as VertexId)
        .into_par_iter()
        .map(|v| (v, manifold.residual(&complex.vertex(v))))
        .find_first(|&(_, d)| !(d <= VERTEX_ON_MANIFOLD));
    if let Some((vertex, distance)) = off {
        return Err(CertifyError::VerticesOffManifold { vertex, distance });
    }
    let mut seen = vec![false; manifold.components()];
    for x in complex.vertices() {
        seen[manifold.component_of(&x)] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(CertifyError::ComponentWithoutVertex(c));
    }
    Ok(())
}

/// Signs `parity · sign(det)` of the projected top simplices disagree.
/// Returns the global ids of the simplices in the minority, or `None` if all
/// agree. Unoriented complexes always agree.
pub fn chart_positivity_violations(chart: &Chart) -> Option<Vec<u32>> {
    let star = &chart.projected_star;
    if !star.is_oriented() {
        return None;
    }
    let signs: Vec<i8> = (0..star.num_top_simplices())
        .map(|k| {
            let d = orientation_determinant(&star.top_vertices(k));
            star.parity(k) * if d > 0.0 { 1 } else { -1 }
        })
        .collect();
    let plus = signs.iter().filter(|&&s| s > 0).count();
    if plus == signs.len() || plus == 0 {
        return None;
    }
    let minority = if 2 * plus < signs.len() { 1 } else { -1 };
    Some(signs.iter().zip(&chart.star_top_ids).filter(|(&s, _)| s == minority).map(|(_, &t)| t).collect())
}

fn record_chart_failure(sweep: &mut Sweep, p: VertexId, e: AtlasError) -> Result<(), CertifyError> {
    match e {
        AtlasError::StarNotFull(_) | AtlasError::ProjectedStarNotEmbedded { .. } | AtlasError::DegenerateProjection { .. } => {
            sweep.embedding.fail(Witness::Vertex(p));
            Ok(())
        }
        other => Err(other.into()),
    }
}

fn record_positivity(sweep: &mut Sweep, chart: &Chart) {
    if let Some(bad) = chart_positivity_violations(chart) {
        sweep.positivity.failures += 1;
        for t in bad {
            if sweep.positivity.witnesses.len() < MAX_WITNESSES {
                sweep.positivity.witnesses.push(Witness::Simplex(t));
            }
        }
    }
}

fn record_sanity(sweep: &mut Sweep, p: VertexId, bad: Vec<VertexId>) {
    for q in bad {
        sweep.sanity.fail(Witness::VertexPair(p, q));
    }
}

fn finish(mode: CertificationMode, criteria: Vec<CriterionResult>, inconclusive: Option<String>, constants: Option<MeshConstants>) -> CertificationReport {
    // Informational criteria and missing certified inputs do not refute.
    let failed: Vec<String> = criteria
        .iter()
        .filter(|c| !c.holds && c.name != CERTIFIED_INPUTS && !c.name.ends_with(INFO_SUFFIX))
        .map(|c| c.name.clone())
        .collect();
    let verdict = if !failed.is_empty() {
        Verdict::Refuted { failed }
    } else if let Some(reason) = inconclusive {
        Verdict::Inconclusive { reason }
    } else {
        Verdict::Certified
    };
    CertificationReport { mode, verdict, criteria, constants }
}

pub const STAR_EMBEDDING: &str = "star_embedding";
pub const SAMPLING_QUALITY: &str = "sampling_quality";
pub const VERTEX_SANITY: &str = "vertex_sanity";
pub const SIMPLEXWISE_POSITIVITY: &str = "simplexwise_positivity";
pub const CONSEQUENCE_DISTANCE: &str = "consequence_distance";
pub const CONSEQUENCE_ANGLE: &str = "consequence_angle";
pub const DISTORTION: &str = "distortion";
pub const DISTORTION_DIMENSION_SHARP: &str = "distortion_dimension_sharp";
pub const CERTIFIED_INPUTS: &str = "certified_inputs";
pub const DIFFERENTIAL_BOUND: &str = "differential_bound";
pub const DIFFERENTIAL_EMBEDDING: &str = "differential_embedding";
/// Suffix of criteria reported for information only.
pub const INFO_SUFFIX: &str = "_info";

// ---------------------------------------------------------------------------
// Submanifold modes
// ---------------------------------------------------------------------------

/// Sampling-condition variant for [`certify_submanifold`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SubmanifoldMode {
    /// Sizes relative to `lfs(p)`; `ε₀ <= √μ₀ t₀²/18`, sanity radius `lfs(p)/15`.
    Lfs,
    /// Sizes relative to `rch(M)`; `ε₀ <= √μ₀ t₀²/16`, sanity radius `rch(M)/14`.
    Reach,
}

impl SubmanifoldMode {
    pub fn scale(self) -> SizeScale {
        match self {
            SubmanifoldMode::Lfs => SizeScale::LocalFeatureSize,
            SubmanifoldMode::Reach => SizeScale::Reach,
        }
    }

    /// Denominator in the sampling threshold `√μ₀ t₀²/c`.
    pub fn threshold_divisor(self) -> f64 {
        match self {
            SubmanifoldMode::Lfs => 18.0,
            SubmanifoldMode::Reach => 16.0,
        }
    }

    /// Divisor of the length scale giving the vertex sanity radius.
    pub fn sanity_divisor(self) -> f64 {
        match self {
            SubmanifoldMode::Lfs => 15.0,
            SubmanifoldMode::Reach => 14.0,
        }
    }

    /// Bound on `d_M(x)/(ε₀² scale(x̌))`.
    pub fn distance_consequence(self) -> f64 {
        match self {
            SubmanifoldMode::Lfs => 7.0 / 3.0,
            SubmanifoldMode::Reach => 2.0,
        }
    }

    /// Bound on `sin∠(σ, T_x̌M)` as a multiple of `ε₀/t₀`.
    pub fn angle_consequence(self) -> f64 {
        match self {
            SubmanifoldMode::Lfs => 13.0 / 4.0,
            SubmanifoldMode::Reach => 3.0,
        }
    }

    fn report_mode(self) -> CertificationMode {
        match self {
            SubmanifoldMode::Lfs => CertificationMode::SubmanifoldLfs,
            SubmanifoldMode::Reach => CertificationMode::SubmanifoldReach,
        }
    }

    fn policy(self) -> RchPolicy {
        match self {
            SubmanifoldMode::Lfs => RchPolicy::LocalLfs(LFS_VALID_FRACTION),
            SubmanifoldMode::Reach => RchPolicy::GlobalReach,
        }
    }
}

/// Sampling threshold `√μ₀ t₀²/c`.
pub fn sampling_threshold(mode: SubmanifoldMode, mu0: f64, t0: f64) -> f64 {
    mu0.sqrt() * t0 * t0 / mode.threshold_divisor()
}

/// Certifies that the closest-point projection maps `|A|` homeomorphically
/// onto `M`, using the sampling conditions in the given mode.
pub fn certify_submanifold(
    manifold: &TestManifold,
    complex: &GeometricComplex,
    mode: SubmanifoldMode,
    config: &CertifyConfig,
) -> Result<CertificationReport, CertifyError> {
    check_inputs(manifold, complex)?;
    let constants = mesh_constants(complex, manifold, mode.scale())?;
    let reach = manifold.reach();
    let policy = mode.policy();
    let grid = VertexGrid::new(complex, mesh_stats(complex).l_max.max(1e-12));

    let sweep = (0..complex.num_vertices() as VertexId)
        .into_par_iter()
        .fold(Sweep::empty, |mut sweep, p| -> Sweep {
            let x = complex.vertex(p);
            match build_chart(manifold, complex, p, policy) {
                Err(e) => {
                    // Non-geometric errors cannot occur after check_inputs.
                    record_chart_failure(&mut sweep, p, e).expect("chart construction");
                }
                Ok(chart) => {
                    sweep.charts += 1;
                    record_positivity(&mut sweep, &chart);
                    let (scale, local_reach) = match mode {
                        SubmanifoldMode::Lfs => (manifold.lfs(&x), manifold.local_reach(&x)),
                        SubmanifoldMode::Reach => (reach, manifold.local_reach(&x)),
                    };
                    let radius = scale / mode.sanity_divisor();
                    record_sanity(&mut sweep, p, chart_vertex_sanity(&chart, complex, &grid, radius, local_reach));
                }
            }
            sweep
        })
        .reduce(Sweep::empty, Sweep::merge);

    let mut criteria = vec![CriterionResult::count(STAR_EMBEDDING, sweep.embedding)];
    let threshold = sampling_threshold(mode, constants.mu0, constants.t0);
    let mut quality_witnesses = vec![Witness::Vertex(constants.eps0_vertex)];
    if constants.eps0 > threshold {
        quality_witnesses.push(Witness::Simplex(constants.thinnest as u32));
    }
    criteria.push(CriterionResult::non_strict(SAMPLING_QUALITY, constants.eps0, threshold, quality_witnesses));
    criteria.push(CriterionResult::count(VERTEX_SANITY, sweep.sanity));
    criteria.push(CriterionResult::count(SIMPLEXWISE_POSITIVITY, sweep.positivity));
    if !config.skip_consequences {
        let (dist, angle) = consequence_checks(manifold, complex, mode, &constants, config);
        criteria.push(dist);
        criteria.push(angle);
    }
    Ok(finish(mode.report_mode(), criteria, None, Some(constants)))
}

/// Samples points of the complex and checks the distance and angle bounds
/// implied by a certified triangulation.
pub fn consequence_checks(
    manifold: &TestManifold,
    complex: &GeometricComplex,
    mode: SubmanifoldMode,
    constants: &MeshConstants,
    config: &CertifyConfig,
) -> (CriterionResult, CriterionResult) {
    let n = complex.num_top_simplices();
    let mut tops: Vec<usize> = if n <= config.consequence_simplices {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xc0de);
        (0..config.consequence_simplices).map(|_| rng.gen_range(0..n)).collect()
    };
    tops.push(constants.thinnest);
    tops.sort_unstable();
    tops.dedup();
    let eps0 = constants.eps0;
    let reach = manifold.reach();
    let angle_bound = mode.angle_consequence() * eps0 / constants.t0;
    let per_top: Vec<(f64, f64, u32)> = tops
        .par_iter()
        .map(|&t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(t as u64));
            let verts = complex.top_vertices(t);
            let hull = Flat::affine_hull(&verts).ok();
            let mut worst_d: f64 = 0.0;
            let mut worst_s: f64 = 0.0;
            let k = verts.len();
            let bary: SmallVec<[f64; 4]> = SmallVec::from_elem(1.0 / k as f64, k);
            for i in 0..=config.consequence_points {
                let lam = if i == 0 { bary.clone() } else { uniform_barycentric(&mut rng, k) };
                let x = combine(&verts, &lam);
                let Ok(proj) = manifold.closest_point(&x) else {
                    worst_d = f64::INFINITY;
                    continue;
                };
                let scale = match mode {
                    SubmanifoldMode::Lfs => manifold.lfs(&proj.point_on_m),
                    SubmanifoldMode::Reach => reach,
                };
                worst_d = worst_d.max(proj.distance / (eps0 * eps0 * scale));
                let s = match (&hull, manifold.tangent_flat(&proj.point_on_m)) {
                    (Some(h), Ok(tan)) => sin_angle_between_flats(h, &tan).unwrap_or(1.0),
                    _ => 1.0,
                };
                worst_s = worst_s.max(s);
            }
            (worst_d, worst_s, t as u32)
        })
        .collect();
    let mut dist_tally = Tally::default();
    let mut angle_tally = Tally::default();
    let (mut max_d, mut max_s) = (0.0f64, 0.0f64);
    for &(d, s, t) in &per_top {
        max_d = max_d.max(d);
        max_s = max_s.max(s);
        if !(d <= mode.distance_consequence()) {
            dist_tally.fail(Witness::Simplex(t));
        }
        if !(s <= angle_bound) {
            angle_tally.fail(Witness::Simplex(t));
        }
    }
    (
        CriterionResult::non_strict(CONSEQUENCE_DISTANCE, max_d, mode.distance_consequence(), dist_tally.witnesses),
        CriterionResult::non_strict(CONSEQUENCE_ANGLE, max_s, angle_bound, angle_tally.witnesses),
    )
}

// ---------------------------------------------------------------------------
// Generic metric mode
// ---------------------------------------------------------------------------

/// `s₀t₀²/(12 L₀)`.
pub fn uniform_distortion_threshold(q: StarQuality) -> f64 {
    q.s0 * q.t0 * q.t0 / (12.0 * q.l0)
}

/// `m s₀t₀²/(6(m+1) L₀)`.
pub fn dimension_sharp_threshold(m: usize, q: StarQuality) -> f64 {
    let m = m as f64;
    m * q.s0 * q.t0 * q.t0 / (6.0 * (m + 1.0) * q.l0)
}

/// Certifies `H = π_M` restricted to `|A|` through charts at every vertex:
/// projected stars embedded, chart maps with certified distortion below the
/// threshold, vertex sanity inside each patch `U_p`, and consistent
/// orientation.
pub fn certify_generic(
    manifold: &TestManifold,
    complex: &GeometricComplex,
    config: &CertifyConfig,
) -> Result<CertificationReport, CertifyError> {
    check_inputs(manifold, complex)?;
    let m = complex.dimension();
    let policy = config.rch_policy;
    let grid = VertexGrid::new(complex, mesh_stats(complex).l_max.max(1e-12));
    let local = config.scope == ConstantsScope::Local;

    let sweep = (0..complex.num_vertices() as VertexId)
        .into_par_iter()
        .fold(Sweep::empty, |mut sweep, p| -> Sweep {
            let x = complex.vertex(p);
            let chart = match build_chart(manifold, complex, p, policy) {
                Ok(c) => c,
                Err(e) => {
                    record_chart_failure(&mut sweep, p, e).expect("chart construction");
                    return sweep;
                }
            };
            sweep.charts += 1;
            record_positivity(&mut sweep, &chart);
            record_sanity(
                &mut sweep,
                p,
                chart_vertex_sanity(&chart, complex, &grid, chart.u_p_radius, manifold.local_reach(&x)),
            );
            let xi = match certified_chart_distortion(&chart, manifold, policy) {
                Ok(d) => d.xi_total.xi,
                Err(_) => {
                    sweep.certified.fail(Witness::Vertex(p));
                    empirical_chart_distortion(&chart, manifold, config.empirical_pairs, config.seed)
                        .map(|b| b.xi)
                        .unwrap_or(f64::INFINITY)
                }
            };
            let q = chart.projected_quality;
            sweep.xi_max = sweep.xi_max.max(xi);
            sweep.quality = StarQuality {
                l0: sweep.quality.l0.max(q.l0),
                s0: sweep.quality.s0.min(q.s0),
                t0: sweep.quality.t0.min(q.t0),
            };
            if local {
                let (a, b) = (uniform_distortion_threshold(q), dimension_sharp_threshold(m, q));
                sweep.first.0 = sweep.first.0.max(Worst::of(xi, a, p));
                sweep.second.0 = sweep.second.0.max(Worst::of(xi, b, p));
                if !(xi < a) {
                    sweep.first.1.fail(Witness::Vertex(p));
                }
                if !(xi < b) {
                    sweep.second.1.fail(Witness::Vertex(p));
                }
            }
            sweep
        })
        .reduce(Sweep::empty, Sweep::merge);

    let (uniform, sharp) = if local {
        (
            CriterionResult::strict(DISTORTION, sweep.first.0.lhs, sweep.first.0.rhs, sweep.first.1.witnesses),
            CriterionResult::strict(DISTORTION_DIMENSION_SHARP, sweep.second.0.lhs, sweep.second.0.rhs, sweep.second.1.witnesses),
        )
    } else {
        (
            CriterionResult::strict(DISTORTION, sweep.xi_max, uniform_distortion_threshold(sweep.quality), vec![]),
            CriterionResult::strict(DISTORTION_DIMENSION_SHARP, sweep.xi_max, dimension_sharp_threshold(m, sweep.quality), vec![]),
        )
    };
    // The verdict rests on the selected bound; the other is informational.
    let (mut uniform, mut sharp) = (uniform, sharp);
    match config.generic_bound {
        GenericBound::Uniform => sharp.name.push_str(INFO_SUFFIX),
        GenericBound::DimensionSharp => uniform.name.push_str(INFO_SUFFIX),
    }
    let certified_inputs = CriterionResult::count(CERTIFIED_INPUTS, sweep.certified);
    let inconclusive = (!certified_inputs.holds)
        .then(|| format!("{} charts have only empirical distortion bounds", certified_inputs.lhs));
    let criteria = vec![
        CriterionResult::count(STAR_EMBEDDING, sweep.embedding),
        certified_inputs,
        uniform,
        sharp,
        CriterionResult::count(VERTEX_SANITY, sweep.sanity),
        CriterionResult::count(SIMPLEXWISE_POSITIVITY, sweep.positivity),
    ];
    Ok(finish(CertificationMode::GenericMetric, criteria, inconclusive, None))
}

// ---------------------------------------------------------------------------
// Differential control
// ---------------------------------------------------------------------------

/// Largest `‖J - I‖` of finite-difference Jacobians of `F_p` on a barycentric
/// grid in each projected simplex.
pub fn chart_jacobian_deviation(chart: &Chart, manifold: &TestManifold, resolution: usize) -> Result<f64, CertifyError> {
    let h = 1e-5 * chart.projected_quality.l0;
    let mut worst: f64 = 0.0;
    for k in 0..chart.projected_star.num_top_simplices() {
        let verts = chart.projected_vertices(k);
        let f = |x: &Vector| {
            let lam = local_barycentric(&verts, x);
            chart.evaluate_in(manifold, k, &lam).unwrap_or(Vector::from_slice(&[f64::NAN; 4][..x.dim()]))
        };
        let simplex = EuclideanSimplex::new(verts.iter().copied()).expect("nonempty");
        for x in grid_points(&Domain::Simplex(simplex), resolution) {
            let mut j = finite_difference_jacobian(&f, &x, h).map_err(|_| CertifyError::NumericallyUnstableJacobian(chart.vertex_p))?;
            for i in 0..x.dim() {
                j[(i, i)] -= 1.0;
            }
            let dev = svd_spectrum(&j).operator_norm;
            if !dev.is_finite() {
                return Err(CertifyError::NumericallyUnstableJacobian(chart.vertex_p));
            }
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

/// Differential-control variant: compares `max ‖dF_p - I‖` with
/// `s₀t₀/(2L₀)` and with `m t₀`. A grid check is empirical, so the verdict
/// is at best Inconclusive unless `trust_jacobian_grid` is set.
pub fn certify_differential_control(
    manifold: &TestManifold,
    complex: &GeometricComplex,
    config: &CertifyConfig,
) -> Result<CertificationReport, CertifyError> {
    check_inputs(manifold, complex)?;
    let m = complex.dimension() as f64;
    let policy = config.rch_policy;
    let grid = VertexGrid::new(complex, mesh_stats(complex).l_max.max(1e-12));
    let per_vertex: Vec<Result<Sweep, CertifyError>> = (0..complex.num_vertices() as VertexId)
        .into_par_iter()
        .map(|p| {
            let mut sweep = Sweep::empty();
            let chart = match build_chart(manifold, complex, p, policy) {
                Ok(c) => c,
                Err(e) => {
                    record_chart_failure(&mut sweep, p, e)?;
                    return Ok(sweep);
                }
            };
            sweep.charts = 1;
            let x = complex.vertex(p);
            record_positivity(&mut sweep, &chart);
            record_sanity(&mut sweep, p, chart_vertex_sanity(&chart, complex, &grid, chart.u_p_radius, manifold.local_reach(&x)));
            let dev = chart_jacobian_deviation(&chart, manifold, config.jacobian_grid)?;
            let q = chart.projected_quality;
            let (a, b) = (q.s0 * q.t0 / (2.0 * q.l0), m * q.t0);
            sweep.first.0 = Worst::of(dev, a, p);
            sweep.second.0 = Worst::of(dev, b, p);
            if !(dev < a) {
                sweep.first.1.fail(Witness::Vertex(p));
            }
            if !(dev < b) {
                sweep.second.1.fail(Witness::Vertex(p));
            }
            Ok(sweep)
        })
        .collect();
    let mut sweep = Sweep::empty();
    for s in per_vertex {
        sweep = sweep.merge(s?);
    }
    let criteria = vec![
        CriterionResult::count(STAR_EMBEDDING, sweep.embedding),
        CriterionResult::strict(DIFFERENTIAL_BOUND, sweep.first.0.lhs, sweep.first.0.rhs, sweep.first.1.witnesses),
        CriterionResult::strict(DIFFERENTIAL_EMBEDDING, sweep.second.0.lhs, sweep.second.0.rhs, sweep.second.1.witnesses),
        CriterionResult::count(VERTEX_SANITY, sweep.sanity),
        CriterionResult::count(SIMPLEXWISE_POSITIVITY, sweep.positivity),
    ];
    let inconclusive = (!config.trust_jacobian_grid).then(|| "Jacobian bounds come from a finite-difference grid".to_string());
    Ok(finish(CertificationMode::DifferentialControl, criteria, inconclusive, None))
}

// ---------------------------------------------------------------------------
// Single-chart checks
// ---------------------------------------------------------------------------

/// A map on a full-dimensional complex in `R^m`, given piecewise by its
/// value at barycentric coordinates in each top simplex. Each piece may be
/// evaluated slightly outside its simplex.
pub struct PiecewiseMap<'a> {
    pub domain: &'a GeometricComplex,
    pub piece: &'a (dyn Fn(usize, &[f64]) -> Vector + Sync),
}

impl PiecewiseMap<'_> {
    pub fn eval_piece(&self, k: usize, x: &Vector) -> Vector {
        let lam = local_barycentric(&self.domain.top_vertices(k), x);
        (self.piece)(k, &lam)
    }
}

/// `F_p` as a [`PiecewiseMap`] piece function.
pub fn chart_piece<'a>(chart: &'a Chart, manifold: &'a TestManifold) -> impl Fn(usize, &[f64]) -> Vector + Sync + 'a {
    move |k, lam| chart.evaluate_in(manifold, k, lam).unwrap_or_else(|_| chart.secant_in(k, lam))
}

/// `(1/6)(m/(m+1)) t₀²`.
pub fn point_covered_once_threshold(m: usize, t0: f64) -> f64 {
    let m = m as f64;
    m / (6.0 * (m + 1.0)) * t0 * t0
}

/// Admissible `δ` window `1/(m+1) - 6L₀ξ/(m s₀t₀²)`.
pub fn boundary_separation_window(m: usize, xi: f64, q: StarQuality) -> f64 {
    let mf = m as f64;
    1.0 / (mf + 1.0) - 6.0 * q.l0 * xi / (mf * q.s0 * q.t0 * q.t0)
}

/// All preimages of `y` under the map, found by Newton iteration from
/// several starts in every top simplex, deduplicated.
pub fn enumerate_preimages(map: &PiecewiseMap<'_>, y: &Vector) -> Vec<(usize, Vector)> {
    let dom = map.domain;
    let m = dom.dimension();
    let scale = mesh_stats(dom).l_max;
    let mut found: Vec<(usize, Vector)> = Vec::new();
    for k in 0..dom.num_top_simplices() {
        let verts = dom.top_vertices(k);
        let bary = combine(&verts, &SmallVec::<[f64; 4]>::from_elem(1.0 / (m + 1) as f64, m + 1));
        let starts = std::iter::once(bary).chain(verts.iter().map(|v| (*v + bary) * 0.5));
        for mut x in starts {
            let f = |z: &Vector| map.eval_piece(k, z);
            let mut converged = false;
            for _ in 0..60 {
                let r = f(&x) - *y;
                if r.norm() <= 1e-13 * scale.max(1.0) {
                    converged = true;
                    break;
                }
                let Ok(j) = finite_difference_jacobian(&f, &x, 1e-7 * scale) else { break };
                let Some(step) = j.lu().solve(&nalgebra::DVector::from_column_slice(r.as_slice())) else { break };
                for i in 0..m {
                    x[i] -= step[i];
                }
                if !x.is_finite() {
                    break;
                }
            }
            if !converged {
                continue;
            }
            let lam = local_barycentric(&verts, &x);
            if lam.iter().all(|&l| l >= -1e-9) && !found.iter().any(|(_, z)| z.dist(&x) <= 1e-8 * scale) {
                found.push((k, x));
            }
        }
    }
    found
}

/// Counts the preimages of `F(b)` for the barycentre `b` of the largest top
/// simplex; the criterion holds when there is exactly one.
pub fn point_covered_once_check(map: &PiecewiseMap<'_>) -> CriterionResult {
    let dom = map.domain;
    let k = (0..dom.num_top_simplices())
        .max_by(|&a, &b| {
            let va = orientation_determinant(&dom.top_vertices(a)).abs();
            let vb = orientation_determinant(&dom.top_vertices(b)).abs();
            va.total_cmp(&vb).then(b.cmp(&a))
        })
        .expect("nonempty domain");
    let b = dom.top_simplex(k).barycentre();
    let y = map.eval_piece(k, &b);
    let pre = enumerate_preimages(map, &y);
    let holds = pre.len() == 1;
    CriterionResult {
        name: "point_covered_once".into(),
        holds,
        lhs: pre.len() as f64,
        rhs: 1.0,
        margin: 1.0 - pre.len() as f64,
        witnesses: if holds { vec![] } else { pre.into_iter().map(|(_, x)| Witness::Point(x.to_vec())).collect() },
    }
}

/// Samples `V_p` (barycentric coordinate of `p̂` above `1/(m+1) - δ`) and the
/// boundary of the star of `p̂`, and reports the least distance between
/// their images. `delta` defaults to half the admissible window.
pub fn boundary_separation_check(
    map: &PiecewiseMap<'_>,
    centre: VertexId,
    xi: f64,
    quality: StarQuality,
    delta: Option<f64>,
    resolution: usize,
) -> Result<CriterionResult, CertifyError> {
    let dom = map.domain;
    let m = dom.dimension();
    let window = boundary_separation_window(m, xi, quality);
    let delta = delta.unwrap_or(window / 2.0);
    if !(delta > 0.0 && delta <= window) {
        return Err(CertifyError::DeltaOutOfWindow { delta, window });
    }
    let floor = 1.0 / (m + 1) as f64 - delta;
    let res = resolution.max(2);
    let mut inner = Vec::new();
    let mut boundary = Vec::new();
    for &k in dom.star_tops_of(centre) {
        let k = k as usize;
        let row = dom.top(k);
        let pos = row.iter().position(|&v| v == centre).expect("star top contains centre");
        let verts = dom.top_vertices(k);
        let simplex = EuclideanSimplex::new(verts.iter().copied()).expect("nonempty");
        for x in grid_points(&Domain::Simplex(simplex), res) {
            let lam = local_barycentric(&verts, &x);
            if lam[pos] > floor {
                inner.push((map.piece)(k, &lam));
            } else if lam[pos].abs() < 1e-12 {
                boundary.push((map.piece)(k, &lam));
            }
        }
    }
    let min = inner
        .par_iter()
        .map(|a| boundary.iter().map(|b| a.dist(b)).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min);
    Ok(CriterionResult::strict("boundary_separation", 0.0, min, vec![]))
}

// ---------------------------------------------------------------------------
// Homeomorphism probes
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub failures: usize,
    /// Injectivity: largest domain distance among colliding pairs.
    /// Surjectivity: largest residual `|π_M(x) - z|` of the preimages found.
    pub worst: f64,
}

impl ProbeReport {
    pub fn passes(&self) -> bool {
        self.failures == 0
    }
}

/// Points of `|A|` whose closest point on `M` is `z`, searched among the top
/// simplices with a vertex near `z`.
pub fn preimages_on_complex(
    manifold: &TestManifold,
    complex: &GeometricComplex,
    grid: &VertexGrid,
    search: f64,
    z: &Vector,
) -> Vec<(u32, Vector)> {
    let m = complex.dimension();
    let Ok(frame) = manifold.tangent_frame(z) else { return vec![] };
    let mut tops: Vec<u32> = Vec::new();
    grid.for_each_within(z, search, |v| tops.extend_from_slice(complex.star_tops_of(v)));
    tops.sort_unstable();
    tops.dedup();
    let mut out = Vec::new();
    for t in tops {
        let verts = complex.top_vertices(t as usize);
        // T^T (Σ λ_i v_i - z) = 0 and Σ λ_i = 1.
        let a = nalgebra::DMatrix::from_fn(m + 1, m + 1, |i, j| if i < m { frame[i].dot(&verts[j]) } else { 1.0 });
        let b = nalgebra::DVector::from_fn(m + 1, |i, _| if i < m { frame[i].dot(z) } else { 1.0 });
        let Some(lam) = a.lu().solve(&b) else { continue };
        if lam.iter().all(|&l| l >= -1e-9) {
            out.push((t, combine(&verts, lam.as_slice())));
        }
    }
    out
}

/// Samples points `x` of `|A|` and looks for other points of `|A|` with the
/// same closest point on `M`. A collision is a preimage `y` with
/// `|π_M(y) - π_M(x)| < 1e-9` and `|y - x| >= 1e-6`.
pub fn injectivity_probe(manifold: &TestManifold, complex: &GeometricComplex, samples: usize, seed: u64) -> ProbeReport {
    let l_max = mesh_stats(complex).l_max;
    let grid = VertexGrid::new(complex, l_max.max(1e-12));
    let k = complex.dimension() + 1;
    let n = complex.num_top_simplices();
    let results: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64));
            let t = rng.gen_range(0..n);
            let x = combine(&complex.top_vertices(t), &uniform_barycentric(&mut rng, k));
            let z = manifold.project(&x).ok()?;
            let mut worst: Option<f64> = None;
            for (_, y) in preimages_on_complex(manifold, complex, &grid, 1.5 * l_max, &z) {
                let d = y.dist(&x);
                if d >= 1e-6 && manifold.project(&y).map_or(false, |w| w.dist(&z) < 1e-9) {
                    worst = Some(worst.unwrap_or(0.0).max(d));
                }
            }
            worst
        })
        .collect();
    ProbeReport {
        samples,
        failures: results.iter().filter(|r| r.is_some()).count(),
        worst: results.iter().flatten().fold(0.0, |a, &b| a.max(b)),
    }
}

/// Samples points `z` of `M` and checks that some point of `|A|` projects to
/// within `1e-7` of `z`.
pub fn surjectivity_probe(manifold: &TestManifold, complex: &GeometricComplex, samples: usize, seed: u64) -> ProbeReport {
    let l_max = mesh_stats(complex).l_max;
    let grid = VertexGrid::new(complex, l_max.max(1e-12));
    let results: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x51_7cc1).wrapping_add(i as u64));
            let z = manifold.sample_point(&mut rng);
            preimages_on_complex(manifold, complex, &grid, 1.5 * l_max, &z)
                .iter()
                .filter_map(|(_, y)| manifold.project(y).ok().map(|w| w.dist(&z)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    ProbeReport {
        samples,
        failures: results.iter().filter(|&&r| !(r < 1e-7)).count(),
        worst: results.iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::fixtures;
    use crate::meshgen::{generate, Generator, MeshRecipe, Mutation};

    fn ico(level: u32) -> GeometricComplex {
        generate(&MeshRecipe::new(TestManifold::unit_sphere(), Generator::Icosphere(level))).unwrap().complex
    }

    fn fast() -> CertifyConfig {
        CertifyConfig { consequence_simplices: 500, ..CertifyConfig::default() }
    }

    #[test]
    fn coarse_icosahedron_fails_sampling_quality() {
        let s = TestManifold::unit_sphere();
        let r = certify_submanifold(&s, &ico(0), SubmanifoldMode::Reach, &fast()).unwrap();
        let q = r.criterion(SAMPLING_QUALITY).unwrap();
        assert!(!q.holds);
        assert!((q.lhs - 1.0515).abs() < 1e-4);
        assert!(matches!(r.verdict, Verdict::Refuted { ref failed } if failed.contains(&SAMPLING_QUALITY.to_string())));
        assert!(r.criterion(STAR_EMBEDDING).unwrap().holds);
        assert!(r.criterion(SIMPLEXWISE_POSITIVITY).unwrap().holds);
        assert!(r.criterion(VERTEX_SANITY).unwrap().holds);
    }

    #[test]
    fn bisphere_with_one_component_is_rejected() {
        let b = TestManifold::bisphere(1.0, 0.5).unwrap();
        let c = ico(1);
        let shifted: Vec<(VertexId, Vector)> =
            (0..c.num_vertices() as VertexId).map(|v| (v, c.vertex(v) + Vector::from_slice(&[1.25, 0.0, 0.0]))).collect();
        let one = c.with_vertex_coords(&shifted);
        assert_eq!(
            certify_submanifold(&b, &one, SubmanifoldMode::Reach, &fast()).unwrap_err(),
            CertifyError::ComponentWithoutVertex(0)
        );
    }

    #[test]
    fn off_manifold_and_non_manifold_inputs() {
        let s = TestManifold::unit_sphere();
        let c = ico(1);
        let moved = c.with_vertex_coords(&[(3, c.vertex(3) * 1.01)]);
        assert!(matches!(
            certify_submanifold(&s, &moved, SubmanifoldMode::Reach, &fast()),
            Err(CertifyError::VerticesOffManifold { vertex: 3, .. })
        ));
        let open = fixtures::hex_fan();
        assert!(matches!(
            certify_generic(&TestManifold::sphere(2, 2, 1.0).unwrap_or(s), &open, &fast()),
            Err(CertifyError::InputNotManifold(_)) | Err(CertifyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn three_manifolds_are_rejected_not_charted() {
        // Boundary of a 4-simplex with vertices on the unit 3-sphere.
        let s3 = TestManifold::sphere(3, 4, 1.0).unwrap();
        let mut b = crate::complex::ComplexBuilder::new(3, 4);
        for i in 0..4 {
            b.add_vertex(Vector::unit(4, i).as_slice());
        }
        b.add_vertex(&[-0.5; 4]);
        for skip in 0..5u32 {
            let row: Vec<VertexId> = (0..5).filter(|&v| v != skip).collect();
            b.add_simplex(&row);
        }
        let c = b.build().unwrap();
        for result in [
            certify_submanifold(&s3, &c, SubmanifoldMode::Reach, &fast()),
            certify_generic(&s3, &c, &fast()),
            certify_differential_control(&s3, &c, &fast()),
        ] {
            assert_eq!(result.unwrap_err(), CertifyError::Atlas(AtlasError::UnsupportedDimension(3)));
        }
    }

    #[test]
    fn flipped_simplex_fails_positivity_only() {
        let s = TestManifold::circle(1.0).unwrap();
        let recipe = MeshRecipe::new(s, Generator::PolyCircle(128)).with_mutation(Mutation::FlipOrientation { simplex: 5 });
        let c = generate(&recipe).unwrap().complex;
        let r = certify_submanifold(&s, &c, SubmanifoldMode::Reach, &fast()).unwrap();
        let pos = r.criterion(SIMPLEXWISE_POSITIVITY).unwrap();
        assert!(!pos.holds);
        assert_eq!(pos.witnesses, vec![Witness::Simplex(5), Witness::Simplex(5)]);
        assert_eq!(r.verdict, Verdict::Refuted { failed: vec![SIMPLEXWISE_POSITIVITY.into()] });
    }

    #[test]
    fn polygon_certifies_and_probes_pass() {
        let s = TestManifold::circle(1.0).unwrap();
        let c = generate(&MeshRecipe::new(s, Generator::PolyCircle(128))).unwrap().complex;
        for mode in [SubmanifoldMode::Reach, SubmanifoldMode::Lfs] {
            let r = certify_submanifold(&s, &c, mode, &fast()).unwrap();
            assert!(r.verdict.is_certified(), "{}", r.to_json());
        }
        assert!(injectivity_probe(&s, &c, 2000, 1).passes());
        assert!(surjectivity_probe(&s, &c, 2000, 1).passes());
    }

    #[test]
    fn strict_threshold_at_equality() {
        let c = CriterionResult::strict(DISTORTION, 0.25, 0.25, vec![]);
        assert!(!c.holds);
        assert_eq!(c.margin, 0.0);
        assert!(CriterionResult::non_strict(SAMPLING_QUALITY, 0.25, 0.25, vec![]).holds);
    }

    #[test]
    fn report_serializes() {
        let s = TestManifold::unit_sphere();
        let r = certify_submanifold(&s, &ico(0), SubmanifoldMode::Reach, &fast()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["mode"], "SubmanifoldReach");
        assert_eq!(v["verdict"]["status"], "refuted");
        assert!(v["criteria"].as_array().unwrap().iter().all(|c| c.get("margin").is_some()));
        assert!(r.to_csv().starts_with("name,lhs,rhs,margin\n"));
    }

    #[test]
    fn differential_mode_is_inconclusive_on_fine_mesh() {
        let s = TestManifold::circle(1.0).unwrap();
        let c = generate(&MeshRecipe::new(s, Generator::PolyCircle(256))).unwrap().complex;
        let r = certify_differential_control(&s, &c, &fast()).unwrap();
        assert!(matches!(r.verdict, Verdict::Inconclusive { .. }), "{}", r.to_json());
        let d = r.criterion(DIFFERENTIAL_BOUND).unwrap();
        assert!(d.holds && d.lhs < d.rhs);
    }

    #[test]
    fn identity_map_checks() {
        let disk = fixtures::hex_fan();
        let id = |k: usize, lam: &[f64]| combine(&disk.top_vertices(k), lam);
        let map = PiecewiseMap { domain: &disk, piece: &id };
        let once = point_covered_once_check(&map);
        assert!(once.holds && once.lhs == 1.0);
        let q = StarQuality { l0: 1.0, s0: 1.0, t0: 3f64.sqrt() / 4.0 };
        let sep = boundary_separation_check(&map, 0, 0.0, q, None, 8).unwrap();
        assert!(sep.holds && sep.rhs > 0.1);
        assert!(matches!(
            boundary_separation_check(&map, 0, 0.0, q, Some(0.5), 8),
            Err(CertifyError::DeltaOutOfWindow { .. })
        ));
    }

    #[test]
    fn folded_map_has_two_preimages() {
        let disk = fixtures::hex_fan();
        // z -> z²/|z| wraps the disk twice around.
        let fold = |k: usize, lam: &[f64]| {
            let x = combine(&disk.top_vertices(k), lam);
            let r = x.norm();
            if r == 0.0 {
                return x;
            }
            Vector::from_slice(&[(x[0] * x[0] - x[1] * x[1]) / r, 2.0 * x[0] * x[1] / r])
        };
        let map = PiecewiseMap { domain: &disk, piece: &fold };
        let once = point_covered_once_check(&map);
        assert!(!once.holds);
        assert_eq!(once.lhs, 2.0);
    }
}
