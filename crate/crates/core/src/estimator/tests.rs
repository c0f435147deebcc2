use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::mesh::RootLayout;

fn space_on(forest: GeoForest) -> Arc<FeSpace> {
    Arc::new(FeSpace::new(Arc::new(forest)))
}

fn adapted(seed: u64) -> GeoForest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = GeoForest::rectangle(-1.0, 1.0, -1.0, 1.0, 4, RootLayout::UnionJack).unwrap();
    for _ in 0..3 {
        let picks: Vec<_> = f.leaves().filter(|_| rng.gen_bool(0.3)).collect();
        f.refine(&picks).unwrap();
    }
    f
}

fn square_pair() -> GeoForest {
    let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
    GeoForest::from_triangles(v, &[[0, 1, 2], [0, 2, 3]]).unwrap()
}

#[test]
fn vanishes_on_linear_and_quadratic_functions() {
    let s = space_on(adapted(1));
    for f in [|p: Point| 3.0 * p.x - 2.0 * p.y, |p: Point| p.x * p.x - 0.5 * p.x * p.y + 2.0 * p.y * p.y] {
        let u = FeFunction::interpolate(s.clone(), f);
        let eta = compute_indicator(&s, &[&u]);
        assert!(eta.max <= 1e-12, "max {}", eta.max);
        assert_eq!(eta.leaves.len(), s.forest().n_active());
    }
    let s = space_on(square_pair());
    let u = FeFunction::interpolate(s.clone(), |p| p.x * p.x);
    assert!(compute_indicator(&s, &[&u]).max <= 1e-12);
}

#[test]
fn kink_across_diagonal() {
    // u = g·dist(x, diagonal) below the diagonal, 0 above: the normal
    // derivative jumps by g across the shared edge of length √2
    let g = 1.7;
    let s = space_on(square_pair());
    let u = FeFunction::interpolate(s.clone(), |p| g * (p.x - p.y).max(0.0) / 2f64.sqrt());
    let eta = compute_indicator(&s, &[&u]);
    let len = 2f64.sqrt();
    let expect = (0.5 * len * g * g * len).sqrt();
    for v in &eta.cells {
        assert!((v - expect).abs() < 1e-13, "{v} vs {expect}");
    }
}

#[test]
fn scales_with_the_function_and_sums_components() {
    let s = space_on(adapted(2));
    let u = FeFunction::interpolate_dirichlet(s.clone(), |p| (3.0 * p.x).sin() * (2.0 * p.y).cos());
    let mut v = u.clone();
    v.scale(-2.5);
    let a = compute_indicator(&s, &[&u]);
    let b = compute_indicator(&s, &[&v]);
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert!((2.5 * x - y).abs() <= 1e-12 * y + 1e-13 * b.max);
    }
    let both = compute_indicator(&s, &[&u, &v]);
    for ((x, y), z) in a.cells.iter().zip(&b.cells).zip(&both.cells) {
        assert!(((x * x + y * y).sqrt() - z).abs() <= 1e-12 * z + 1e-13 * both.max);
    }
}

#[test]
fn twin_cells_combine_into_their_leaf() {
    let s = space_on(adapted(3));
    let u = FeFunction::interpolate_dirichlet(s.clone(), |p| (p.x * p.y * 4.0).sin());
    let eta = compute_indicator(&s, &[&u]);
    for &(leaf, v) in &eta.leaves {
        let cells = s.mesh().cells_of_leaf(leaf);
        let expect = cells.map(|c| eta.cells[c].powi(2)).sum::<f64>().sqrt();
        assert!((v - expect).abs() <= 1e-14 * expect);
    }
}

#[test]
fn decreases_under_uniform_refinement() {
    let g = |p: Point| (1.0 - p.x * p.x) * (1.0 - p.y * p.y) * (2.0 * p.x + p.y).exp();
    let mut forest = GeoForest::rectangle(-1.0, 1.0, -1.0, 1.0, 2, RootLayout::Diagonal).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..4 {
        let s = space_on(forest.clone());
        let u = FeFunction::interpolate(s.clone(), g);
        let total = compute_indicator(&s, &[&u]).total;
        assert!(total < last, "{total} !< {last}");
        last = total;
        let all: Vec<_> = forest.leaves().collect();
        forest.refine(&all).unwrap();
    }
}

fn field(forest: &GeoForest, values: impl Fn(usize, ElementId) -> f64) -> IndicatorField {
    let leaves: Vec<_> = forest.leaves().enumerate().map(|(i, l)| (l, values(i, l))).collect();
    let max = leaves.iter().fold(0.0f64, |m, &(_, v)| m.max(v));
    let total = leaves.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
    IndicatorField { cells: Vec::new(), leaves, max, total }
}

#[test]
fn uniform_field_refines_everything() {
    let mut f = GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 2, RootLayout::Diagonal).unwrap();
    let all: Vec<_> = f.leaves().collect();
    f.refine(&all).unwrap();
    let eta = field(&f, |_, _| 0.3);
    let m = mark(&f, &eta, 0.5, 0.05, usize::MAX, 0);
    assert_eq!(m.refine.len(), f.n_active());
    assert!(m.coarsen.is_empty());
    // the dof cap truncates the set
    let m = mark(&f, &eta, 0.5, 0.05, 100 + 5 * DOFS_PER_REFINEMENT, 100);
    assert_eq!(m.refine.len(), 5);
}

#[test]
fn single_spike() {
    let mut f = GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 2, RootLayout::Diagonal).unwrap();
    let all: Vec<_> = f.leaves().collect();
    f.refine(&all).unwrap();
    let spike = f.leaves().nth(5).unwrap();
    let eta = field(&f, |_, l| if l == spike { 1.0 } else { 1e-9 });
    let m = mark(&f, &eta, 0.5, 0.05, usize::MAX, 0);
    assert_eq!(m.refine, vec![spike]);
    let spike_parent = f.element(spike).parent.unwrap();
    assert!(!m.coarsen.contains(&spike_parent));
    // every other complete quadruple is coarsened
    assert_eq!(m.coarsen.len(), f.roots().len() - 1);
}

#[test]
fn marking_matches_linear_scan_and_is_monotone() {
    let f = adapted(4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let values: Vec<f64> = (0..f.n_active()).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
    let eta = field(&f, |i, _| values[i]);
    let mut previous: Vec<ElementId> = Vec::new();
    for alpha in [0.9, 0.7, 0.5, 0.3, 0.1] {
        let m = mark(&f, &eta, alpha, 0.05, usize::MAX, 0);
        let mut oracle: Vec<_> = eta.leaves.iter().filter(|(_, v)| *v >= alpha * eta.max).map(|(l, _)| *l).collect();
        oracle.sort_unstable();
        assert_eq!(m.refine, oracle);
        assert!(previous.iter().all(|l| m.refine.contains(l)));
        for p in &m.coarsen {
            for c in f.element(*p).children.unwrap() {
                assert!(!m.refine.contains(&c));
                let v = eta.leaves.iter().find(|(l, _)| *l == c).unwrap().1;
                assert!(v <= 0.05 * eta.max);
            }
        }
        previous = m.refine;
    }
}

#[test]
fn applied_marks_merge_quadruples_and_split_the_spike() {
    let mut f = GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 2, RootLayout::Diagonal).unwrap();
    let all: Vec<_> = f.leaves().collect();
    f.refine(&all).unwrap();
    let spike = f.leaves().nth(5).unwrap();
    let eta = field(&f, |_, l| if l == spike { 1.0 } else { 1e-9 });
    let m = mark(&f, &eta, 0.5, 0.05, usize::MAX, 0);
    let (next, counts) = apply_marks(&f, &m).unwrap();
    assert_eq!(counts, AdaptCounts { refined: 1, coarsened: m.coarsen.len() });
    assert!(counts.coarsened > 0);
    // one quadruple kept and split, the rest merged back to roots
    let roots = f.roots().len();
    assert_eq!(next.n_active(), (roots - 1) + 3 + 4);
    let area: f64 = next.leaves().map(|l| next.area(l)).sum();
    assert!((area - 1.0).abs() < 1e-14);
}

#[test]
fn mirror_closure_adds_images_and_drops_unpaired_coarsening() {
    let mut f = GeoForest::rectangle(-1.0, 1.0, -1.0, 1.0, 2, RootLayout::UnionJack).unwrap();
    let all: Vec<_> = f.leaves().collect();
    f.refine(&all).unwrap();
    let flip = |p: Point| Point::new(-p.x, p.y);
    let key = |f: &GeoForest, id: ElementId| {
        let mut t = f.triangle(id).map(|p| (p.x, p.y));
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t
    };
    let leaf = f.leaves().find(|&l| f.triangle(l).iter().all(|p| p.x > 0.0)).unwrap();
    let parent = f.roots()[0];
    let marks = Marks { refine: vec![leaf], coarsen: vec![parent] };
    let closed = mirror_closed_marks(&f, &marks, flip);
    assert_eq!(closed.refine.len(), 2);
    let image = closed.refine.iter().copied().find(|&l| l != leaf).unwrap();
    let mut mirrored = f.triangle(leaf).map(|p| (-p.x, p.y));
    mirrored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(key(&f, image), mirrored);
    // the root quadruple's mirror image was not marked
    assert!(closed.coarsen.is_empty());
    let both = Marks { refine: vec![], coarsen: f.roots().to_vec() };
    assert_eq!(mirror_closed_marks(&f, &both, flip).coarsen, both.coarsen);
}
