use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::mesh::{GeoForest, Point, RootLayout};

fn square_pair() -> GeoForest {
    let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
    GeoForest::from_triangles(v, &[[0, 1, 2], [0, 2, 3]]).unwrap()
}

fn space(forest: GeoForest) -> Arc<FeSpace> {
    Arc::new(FeSpace::new(Arc::new(forest)))
}

fn random_refine(forest: &mut GeoForest, rng: &mut ChaCha8Rng, rounds: usize, frac: f64) {
    for _ in 0..rounds {
        let picks: Vec<_> = forest.leaves().filter(|_| rng.gen_bool(frac)).collect();
        forest.refine(&picks).unwrap();
    }
}

fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
    Point::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi))
}

#[test]
fn two_triangle_square_dofs() {
    let s = space(square_pair());
    assert_eq!(s.n_dofs(), 9);
    assert_eq!(s.boundary_dofs().len(), 8);
    let interior: Vec<_> = (0..9).filter(|&d| !s.is_boundary(d)).collect();
    assert_eq!(interior.len(), 1);
    let p = s.node_coords()[interior[0]];
    assert!((p.x - 0.5).abs() < 1e-15 && (p.y - 0.5).abs() < 1e-15);
}

#[test]
fn single_triangle_dofs() {
    let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
    let s = space(GeoForest::from_triangles(v, &[[0, 1, 2]]).unwrap());
    assert_eq!(s.n_dofs(), 6);
    assert_eq!(s.boundary_dofs().len(), 6);
}

/// Counts distinct P2 nodes by hashing rounded coordinates of every node of
/// every cell.
fn hashed_node_count(s: &FeSpace) -> (usize, usize) {
    let key = |p: Point| ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64);
    let mut all = HashSet::new();
    for c in s.cells() {
        let v = c.vertices;
        for p in [v[0], v[1], v[2], Point::midpoint(v[0], v[1]), Point::midpoint(v[1], v[2]), Point::midpoint(v[2], v[0])] {
            all.insert(key(p));
        }
    }
    let on_edge = |p: &(i64, i64)| p.0 == 0 || p.1 == 0 || p.0 == 1_000_000_000 || p.1 == 1_000_000_000;
    let boundary = all.iter().filter(|p| on_edge(p)).count();
    (all.len(), boundary)
}

#[test]
fn uniform_dof_count_matches_hash_oracle() {
    for n in [1, 2, 3, 5, 8] {
        for layout in [RootLayout::Diagonal, RootLayout::UnionJack] {
            let s = space(GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, n, layout).unwrap());
            let (count, boundary) = hashed_node_count(&s);
            assert_eq!(s.n_dofs(), count);
            assert_eq!(s.n_dofs(), (2 * n + 1) * (2 * n + 1));
            assert_eq!(s.boundary_dofs().len(), boundary);
            assert_eq!(boundary, 8 * n);
        }
    }
}

#[test]
fn adapted_dof_count_matches_hash_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut f = GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 3, RootLayout::Diagonal).unwrap();
    random_refine(&mut f, &mut rng, 4, 0.2);
    let s = space(f);
    let (count, boundary) = hashed_node_count(&s);
    assert_eq!(s.n_dofs(), count);
    assert_eq!(s.boundary_dofs().len(), boundary);
}

#[test]
fn reproduces_linears_and_quadratics() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut f = GeoForest::rectangle(-1.0, 1.0, -1.0, 1.0, 4, RootLayout::UnionJack).unwrap();
    random_refine(&mut f, &mut rng, 3, 0.25);
    let s = space(f);
    let lin = FeFunction::interpolate(s.clone(), |p| p.x);
    let quad = FeFunction::interpolate(s.clone(), |p| p.x * p.x + p.y * p.y);
    for _ in 0..500 {
        let p = random_point(&mut rng, -1.0, 1.0);
        let (v, g) = lin.evaluate_with_gradient(p).unwrap();
        assert!((v - p.x).abs() < 1e-13);
        assert!((g.x - 1.0).abs() < 1e-11 && g.y.abs() < 1e-11);
        let (q, gq) = quad.evaluate_with_gradient(p).unwrap();
        assert!((q - (p.x * p.x + p.y * p.y)).abs() < 1e-13);
        assert!((gq.x - 2.0 * p.x).abs() < 1e-11 && (gq.y - 2.0 * p.y).abs() < 1e-11);
    }
    assert!(lin.evaluate(Point::new(1.5, 0.0)).is_err());
}

#[test]
fn interpolation_error_is_third_order() {
    let pi = std::f64::consts::PI;
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for n in [4, 8, 16] {
        let s = space(GeoForest::rectangle(0.0, pi, 0.0, pi, n, RootLayout::Diagonal).unwrap());
        let u = FeFunction::interpolate(s, |p| p.x.sin());
        let mut err: f64 = 0.0;
        let m = 97;
        for i in 0..=m {
            for j in 0..=m {
                let p = Point::new(pi * i as f64 / m as f64, pi * j as f64 / m as f64);
                err = err.max((u.evaluate(p).unwrap() - p.x.sin()).abs());
            }
        }
        errors.push(err);
        hs.push(pi / n as f64);
    }
    // least-squares slope of log(err) against log(h)
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 3.0).abs() < 0.3, "slope {slope}, errors {errors:?}");
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut f = GeoForest::rectangle(-2.0, 2.0, -2.0, 2.0, 6, RootLayout::Diagonal).unwrap();
    random_refine(&mut f, &mut rng, 2, 0.3);
    let s = space(f);
    let u = FeFunction::interpolate(s, |p| (p.x * 1.3).sin() * (0.7 * p.y).cos() + p.x * p.y);
    let h = 1e-6;
    let mut checked = 0;
    while checked < 200 {
        let p = random_point(&mut rng, -1.9, 1.9);
        let (c, l) = u.space().locate(p).unwrap();
        // keep the stencil inside one cell, where the function is smooth
        if l.iter().any(|&v| v < 1e-3) {
            continue;
        }
        let probe = |q: Point| {
            let (c2, _) = u.space().locate(q).unwrap();
            (c2 == c).then(|| u.evaluate(q).unwrap())
        };
        let (Some(xp), Some(xm), Some(yp), Some(ym)) = (
            probe(Point::new(p.x + h, p.y)),
            probe(Point::new(p.x - h, p.y)),
            probe(Point::new(p.x, p.y + h)),
            probe(Point::new(p.x, p.y - h)),
        ) else {
            continue;
        };
        let (_, g) = u.evaluate_with_gradient(p).unwrap();
        let fd = Point::new((xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h));
        let scale = 1.0 + g.norm();
        assert!((fd - g).norm() < 1e-6 * scale, "{p:?}: {g:?} vs {fd:?}");
        checked += 1;
    }
}

#[test]
fn transfer_to_same_space_is_identity() {
    let s = space(GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 3, RootLayout::Diagonal).unwrap());
    let u = FeFunction::interpolate_dirichlet(s.clone(), |p| (3.0 * p.x).sin() * p.y);
    let v = u.transfer(&s).unwrap();
    assert_eq!(u.coeffs(), v.coeffs());
    let s2 = space(GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 3, RootLayout::Diagonal).unwrap());
    for (a, b) in u.transfer(&s2).unwrap().coeffs().iter().zip(u.coeffs()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn transfer_under_refinement_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut forest = GeoForest::rectangle(-1.0, 1.0, -1.0, 1.0, 4, RootLayout::UnionJack).unwrap();
    let g = |p: Point| (2.0 * p.x).sin() * (1.0 - p.y * p.y) + p.x.exp() * (1.0 - p.x * p.x);
    let mut u = FeFunction::interpolate_dirichlet(space(forest.clone()), g);
    let mut exact_rounds = 0;
    for _ in 0..3 {
        let picks: Vec<_> = forest.leaves().filter(|&l| forest.hanging_vertex(l).is_none() && rng.gen_bool(0.3)).collect();
        let old = forest.clone();
        forest.refine(&picks).unwrap();
        // spaces are nested when every split leaf was untwinned in the old closure
        let nested = old.leaves().filter(|&l| !forest.is_leaf(l)).all(|l| old.hanging_vertex(l).is_none());
        let v = u.transfer(&space(forest.clone())).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let p = random_point(&mut rng, -1.0, 1.0);
            worst = worst.max((u.evaluate(p).unwrap() - v.evaluate(p).unwrap()).abs());
        }
        if nested {
            assert!(worst <= 1e-12, "max diff {worst}");
            exact_rounds += 1;
        }
        u = v;
    }
    assert!(exact_rounds > 0);
}

#[test]
fn transfer_refine_then_coarsen_bounded_by_interpolation_error() {
    let g = |p: Point| (3.0 * p.x).sin() * (2.0 * p.y).cos() * (1.0 - p.x * p.x) * (1.0 - p.y * p.y);
    let coarse_forest = GeoForest::rectangle(-1.0, 1.0, -1.0, 1.0, 4, RootLayout::Diagonal).unwrap();
    let mut fine_forest = coarse_forest.clone();
    let all: Vec<_> = fine_forest.leaves().collect();
    fine_forest.refine(&all).unwrap();
    let coarse = space(coarse_forest);
    let fine = space(fine_forest);
    let u_fine = FeFunction::interpolate_dirichlet(fine, g);
    let back = u_fine.transfer(&coarse).unwrap();
    let direct = FeFunction::interpolate_dirichlet(coarse, g);
    // coarse nodes are fine nodes, so the round trip equals the coarse interpolant
    for (a, b) in back.coeffs().iter().zip(direct.coeffs()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn transfer_rejects_foreign_forest() {
    let a = space(GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 2, RootLayout::Diagonal).unwrap());
    let b = space(GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 3, RootLayout::Diagonal).unwrap());
    let u = FeFunction::zeros(a);
    assert!(u.transfer(&b).is_err());
}

#[test]
fn quadrature_norm_matches_analytic() {
    let s = space(GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 4, RootLayout::Diagonal).unwrap());
    // x(1-x) is reproduced exactly; its square integrates to 1/30 per unit length
    let u = FeFunction::interpolate(s.clone(), |p| p.x * (1.0 - p.x));
    assert!((u.l2_norm_squared() - 1.0 / 30.0).abs() < 1e-14);
    let area = s.integrate(|_, _, _, w| w);
    assert!((area - 1.0).abs() < 1e-14);
}

#[test]
fn probe_csv_has_header_and_rows() {
    let s = space(square_pair());
    let u = FeFunction::interpolate(s, |p| p.x + p.y);
    let mut buf = Vec::new();
    u.write_probe_csv(&mut buf, 3, 2).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "x,y,value");
    assert_eq!(lines.len(), 7);
    let last: Vec<f64> = lines[6].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((last[2] - 2.0).abs() < 1e-13);
}
