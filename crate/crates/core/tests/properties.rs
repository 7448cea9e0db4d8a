use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tricert::atlas::build_chart;
use tricert::complex::sort_with_parity;
use tricert::degree::fixtures::{angle_doubling, identity_disk};
use tricert::distortion::{compose_distortion, invert_distortion, measure_distortion, Domain, SampledMap};
use tricert::geom::{angle_between_flats, complement_angle_identity_check, orthogonal_project, svd_spectrum, Flat, Vector};
use tricert::manifolds::{projection_lipschitz_check, RchPolicy, TestManifold};
use tricert::meshgen::{generate, Generator, MeshRecipe};
use tricert::simplex::{combine, EuclideanSimplex, HullMode};

fn vector(n: usize, scale: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-scale..scale, n).prop_map(|xs| Vector::from_slice(&xs))
}

fn vectors(count: usize, n: usize, scale: f64) -> impl Strategy<Value = Vec<Vector>> {
    prop::collection::vec(vector(n, scale), count)
}

/// Ambient dimension with `k` random spanning vectors of a subspace.
fn subspace_pair() -> impl Strategy<Value = (usize, Vec<Vector>, Vec<Vector>)> {
    (2usize..=8).prop_flat_map(|n| (1..n).prop_flat_map(move |k| (Just(n), vectors(k, n, 1.0), vectors(k, n, 1.0))))
}

fn thick_enough(vertices: &[Vector]) -> bool {
    EuclideanSimplex::new(vertices.iter().copied()).is_ok_and(|s| s.thickness() > 1e-3)
}

fn manifold(index: usize) -> TestManifold {
    match index {
        0 => TestManifold::unit_sphere(),
        1 => TestManifold::torus(2.0, 1.0).unwrap(),
        _ => TestManifold::circle(1.0).unwrap(),
    }
}

proptest! {
    #[test]
    fn flat_angle_is_symmetric((n, a, b) in subspace_pair()) {
        let (Ok(k), Ok(l)) = (Flat::linear(n, &a), Flat::linear(n, &b)) else { return Ok(()) };
        prop_assume!(k.dim() == l.dim());
        let kl = angle_between_flats(&k, &l).unwrap();
        let lk = angle_between_flats(&l, &k).unwrap();
        prop_assert!((kl - lk).abs() <= 1e-10, "{kl} vs {lk}");
    }

    #[test]
    fn complements_make_the_same_angle((n, a, b) in subspace_pair()) {
        let (Ok(k), Ok(l)) = (Flat::linear(n, &a), Flat::linear(n, &b)) else { return Ok(()) };
        prop_assume!(k.dim() == l.dim());
        let (direct, complement) = complement_angle_identity_check(&k, &l).unwrap();
        prop_assert!((direct - complement).abs() <= 1e-9, "{direct} vs {complement}");
    }

    #[test]
    fn projection_is_idempotent_and_contracting(
        (n, a, _) in subspace_pair(),
        xs in vectors(2, 8, 10.0),
        base in vector(8, 5.0),
    ) {
        let Ok(l) = Flat::from_spanning(base.resized(n), &a) else { return Ok(()) };
        let (x, y) = (xs[0].resized(n), xs[1].resized(n));
        let px = orthogonal_project(&x, &l);
        prop_assert!(orthogonal_project(&px, &l).dist(&px) <= 1e-12 * (1.0 + px.norm()));
        let py = orthogonal_project(&y, &l);
        prop_assert!(px.dist(&py) <= x.dist(&y) + 1e-12);
    }

    #[test]
    fn thickness_is_scale_and_order_invariant(
        n in 2usize..=7,
        pts in vectors(8, 7, 1.0),
        j in 1usize..=6,
        scale in 1e-3f64..1e3,
        rotate in 0usize..7,
    ) {
        prop_assume!(j <= n);
        let vertices: Vec<Vector> = pts[..=j].iter().map(|p| p.resized(n)).collect();
        prop_assume!(thick_enough(&vertices));
        let s = EuclideanSimplex::new(vertices.iter().copied()).unwrap();
        let t = s.thickness();
        prop_assert!((0.0..=1.0).contains(&t));
        let scaled = EuclideanSimplex::new(vertices.iter().map(|v| *v * scale)).unwrap();
        prop_assert!((scaled.thickness() - t).abs() <= 1e-12, "{} vs {t}", scaled.thickness());
        let mut permuted = vertices.clone();
        permuted.rotate_left(rotate % (j + 1));
        permuted.swap(0, j);
        let p = EuclideanSimplex::new(permuted).unwrap();
        prop_assert!((p.thickness() - t).abs() <= 1e-12);
        let (lo, hi) = s.edge_length_range();
        prop_assert_eq!(p.edge_length_range(), (lo, hi));
    }

    #[test]
    fn barycentric_coordinates_reconstruct_the_point(
        n in 1usize..=7,
        pts in vectors(7, 7, 1.0),
        j in 1usize..=6,
        weights in prop::collection::vec(0.0f64..1.0, 7),
    ) {
        prop_assume!(j <= n);
        let vertices: Vec<Vector> = pts[..=j].iter().map(|p| p.resized(n)).collect();
        prop_assume!(thick_enough(&vertices));
        let total: f64 = weights[..=j].iter().sum();
        prop_assume!(total > 1e-6);
        let lambda: Vec<f64> = weights[..=j].iter().map(|w| w / total).collect();
        let s = EuclideanSimplex::new(vertices.iter().copied()).unwrap();
        let x = combine(&vertices, &lambda);
        let got = s.barycentric_coordinates(&x, HullMode::Strict).unwrap();
        prop_assert!((got.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(combine(&vertices, &got).dist(&x) <= 1e-9);
    }

    #[test]
    fn composition_grows_with_each_factor(xis in prop::collection::vec(0.0f64..2.0, 1..8), extra in 0.0f64..1.0) {
        let base = compose_distortion(&xis);
        prop_assert!(base >= xis.iter().copied().fold(0.0, f64::max));
        let mut more = xis.clone();
        more.push(extra);
        prop_assert!(compose_distortion(&more) >= base);
        // Order does not matter.
        let mut reversed = xis.clone();
        reversed.reverse();
        prop_assert_eq!(compose_distortion(&reversed), base);
    }

    #[test]
    fn inverse_of_a_linear_map_stays_within_the_inverted_bound(
        entries in prop::collection::vec(-0.3f64..0.3, 9),
        seed in any::<u64>(),
    ) {
        let a = DMatrix::from_fn(3, 3, |i, j| entries[3 * i + j] + if i == j { 1.0 } else { 0.0 });
        let spectrum = svd_spectrum(&a);
        let xi = spectrum.max_deviation_from_one();
        prop_assume!(xi < 0.9);
        let inverse = a.clone().try_inverse().unwrap();
        let apply = |m: &DMatrix<f64>, x: &Vector| {
            let v = m * nalgebra::DVector::from_column_slice(x.as_slice());
            Vector::from_slice(v.as_slice())
        };
        let ball = Domain::Ball { centre: Vector::zeros(3), radius: 1.0 };
        let forward = measure_distortion(&SampledMap::new(ball.clone(), |x: &Vector| apply(&a, x)), 1000, seed).unwrap();
        prop_assert!(forward.xi <= xi + 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images: Vec<Vector> = (0..200).map(|_| apply(&a, &ball.sample(&mut rng))).collect();
        let backward =
            measure_distortion(&SampledMap::new(Domain::Points(images), |y: &Vector| apply(&inverse, y)), 1000, seed)
                .unwrap();
        prop_assert!(backward.xi <= invert_distortion(xi).unwrap() + 1e-9);
    }

    #[test]
    fn more_pairs_never_lower_the_measurement(pairs in 1usize..3000, extra in 1usize..3000, seed in any::<u64>()) {
        let map = SampledMap::new(Domain::Ball { centre: Vector::zeros(2), radius: 1.0 }, |x: &Vector| {
            Vector::from_slice(&[x[0] + 0.1 * x[1].sin(), x[1]])
        });
        let few = measure_distortion(&map, pairs, seed).unwrap().xi;
        let many = measure_distortion(&map, pairs + extra, seed).unwrap().xi;
        prop_assert!(many >= few);
    }

    #[test]
    fn sorting_parity_is_the_permutation_sign(ids in prop::collection::hash_set(0u32..1000, 1..=4)) {
        let ids: Vec<u32> = ids.into_iter().collect();
        let (sorted, parity) = sort_with_parity(&ids);
        let mut expected = sorted.to_vec();
        expected.sort_unstable();
        prop_assert_eq!(sorted.to_vec(), expected);
        let inversions = (0..ids.len()).flat_map(|i| (i + 1..ids.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| ids[i] > ids[j])
            .count();
        prop_assert_eq!(parity, if inversions % 2 == 0 { 1 } else { -1 });
    }

    #[test]
    fn degree_is_the_sum_over_simplices(y in vector(2, 2.5), doubling in any::<bool>()) {
        let map = if doubling { angle_doubling(12) } else { identity_disk(8) };
        let Ok(whole) = map.degree_at_point(&y) else { return Ok(()) };
        let parts: i64 = (0..map.source().num_top_simplices()).map(|t| map.degree_on(&[t], &y).unwrap()).sum();
        prop_assert_eq!(whole.value, parts);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closest_point_fixes_points_on_the_manifold(which in 0usize..3, seed in any::<u64>()) {
        let m = manifold(which);
        let p = m.sample_point(&mut ChaCha8Rng::seed_from_u64(seed));
        let q = m.closest_point(&p).unwrap();
        prop_assert!(q.point_on_m.dist(&p) <= 1e-10);
    }

    #[test]
    fn local_feature_size_is_one_lipschitz(which in 0usize..3, seed in any::<u64>(), radius in 0.0f64..0.5) {
        let m = manifold(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = m.sample_point(&mut rng);
        let y = m.sample_near(&x, radius, &mut rng);
        prop_assert!((m.lfs(&x) - m.lfs(&y)).abs() <= x.dist(&y) + 1e-9);
    }

    #[test]
    fn projection_stretch_is_bounded_in_the_tube(
        which in 0usize..3,
        seed in any::<u64>(),
        offsets in prop::collection::vec(-0.4f64..0.4, 6),
    ) {
        let m = manifold(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m.ambient_dim();
        let x = m.sample_point(&mut rng) + Vector::from_slice(&offsets[..n]);
        let y = m.sample_point(&mut rng) + Vector::from_slice(&offsets[3..3 + n]) * 0.5;
        let Ok((lhs, rhs)) = projection_lipschitz_check(&m, &x, &y) else { return Ok(()) };
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "{lhs} > {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn charts_keep_barycentric_coordinates_and_quality(vertex in 0u32..642, seed in any::<u64>()) {
        let sphere = TestManifold::unit_sphere();
        let mesh = generate(&MeshRecipe::new(sphere, Generator::Icosphere(3))).unwrap().complex;
        let chart = build_chart(&sphere, &mesh, vertex, RchPolicy::GlobalReach).unwrap();
        let q = (chart.quality.l0 / (chart.quality.t0 * chart.r_rch)).powi(2);
        prop_assert!(chart.projected_quality.t0 >= (1.0 - q) * chart.quality.t0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..chart.projected_star.num_top_simplices() {
            let lam = tricert::distortion::uniform_barycentric(&mut rng, 3);
            let ambient = combine(&chart.ambient_vertices(k), &lam);
            let projected = combine(&chart.projected_vertices(k), &lam);
            prop_assert!(chart.to_chart(&ambient).dist(&projected) <= 1e-10);
        }
    }
}
