use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fe::{reference_table, FeFunction, FeSpace};
use crate::mesh::{GeoForest, Point, RootLayout};

fn space_on(forest: GeoForest) -> Arc<FeSpace> {
    Arc::new(FeSpace::new(Arc::new(forest)))
}

fn adapted_space(seed: u64) -> Arc<FeSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = GeoForest::rectangle(-1.0, 2.0, -1.0, 1.0, 4, RootLayout::Diagonal).unwrap();
    for _ in 0..3 {
        let picks: Vec<_> = f.leaves().filter(|_| rng.gen_bool(0.25)).collect();
        f.refine(&picks).unwrap();
    }
    space_on(f)
}

struct Quadratic;

impl ElementKernel for Quadratic {
    fn reaction(&self, _: usize, _: usize, x: Point) -> f64 {
        1.0 + x.x * x.x + 0.5 * x.y
    }

    fn source(&self, _: usize, _: usize, x: Point) -> f64 {
        x.x.cos()
    }
}

const RAW: AssemblyOptions = AssemblyOptions { dirichlet: false, parallel: false };

#[test]
fn triplets_merge_duplicates() {
    let m = CsrMatrix::from_triplets(3, vec![(2, 0, 1.0), (0, 0, 2.0), (2, 0, 0.5), (1, 2, -1.0), (0, 0, 1.0)]);
    assert_eq!(m.nnz(), 3);
    assert_eq!(m.get(0, 0), 3.0);
    assert_eq!(m.get(2, 0), 1.5);
    assert_eq!(m.get(1, 2), -1.0);
    assert_eq!(m.get(1, 1), 0.0);
    assert_eq!(m.row_offsets(), &[0, 1, 2, 3]);
}

#[test]
fn identity_converges_in_one_iteration() {
    let system = SparseSystem { matrix: CsrMatrix::identity(5), rhs: vec![1.0, -2.0, 3.0, 0.5, 4.0] };
    let mut x = vec![0.0; 5];
    let stats = cg_solve(&system, &mut x, CgOptions::default()).unwrap();
    assert_eq!(stats.iterations, 1);
    assert_eq!(x, system.rhs);
}

#[test]
fn two_by_two_system() {
    let matrix = CsrMatrix::from_triplets(2, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
    let system = SparseSystem { matrix, rhs: vec![1.0, 2.0] };
    let mut x = vec![0.0; 2];
    cg_solve(&system, &mut x, CgOptions::default()).unwrap();
    assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
    assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
}

#[test]
fn iteration_limit_reports_residual() {
    let s = adapted_space(1);
    let system = assemble(&s, &Quadratic, AssemblyOptions::default());
    let mut x = vec![0.0; s.n_dofs()];
    match cg_solve(&system, &mut x, CgOptions { max_iter: Some(2), ..CgOptions::default() }) {
        Err(LinalgError::NotConverged { iterations, residual }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 0.0);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn mass_matrix_sums_to_area() {
    let s = adapted_space(2);
    let m = mass_matrix(&s);
    assert!((m.sum() - 6.0).abs() < 1e-10 * 6.0);
    assert!(m.asymmetry() < 1e-12);
}

#[test]
fn stiffness_annihilates_linears_at_interior_dofs() {
    let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
    let s = space_on(GeoForest::from_triangles(v, &[[0, 1, 2], [0, 2, 3]]).unwrap());
    let k = assemble(&s, &ConstantKernel { diffusion: 0.5, reaction: 0.0 }, RAW);
    let u = FeFunction::interpolate(s.clone(), |p| p.x + p.y);
    let ku = k.matrix.mul_vec(u.coeffs());
    for d in 0..s.n_dofs() {
        if !s.is_boundary(d) {
            assert!(ku[d].abs() < 1e-14);
        }
    }
    let s = adapted_space(3);
    let k = assemble(&s, &ConstantKernel { diffusion: 0.5, reaction: 0.0 }, RAW);
    let u = FeFunction::interpolate(s.clone(), |p| 2.0 * p.x - 3.0 * p.y);
    let ku = k.matrix.mul_vec(u.coeffs());
    for d in 0..s.n_dofs() {
        if !s.is_boundary(d) {
            assert!(ku[d].abs() < 1e-12);
        }
    }
}

#[test]
fn quadratic_form_matches_direct_quadrature() {
    let s = adapted_space(4);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let coeffs: Vec<f64> = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u = FeFunction::new(s.clone(), coeffs).unwrap();
    let system = assemble(&s, &Quadratic, RAW);
    let form = system.matrix.quadratic_form(u.coeffs());

    let table = reference_table();
    let mut direct = 0.0;
    let mut load = 0.0;
    for c in 0..s.n_cells() {
        let geo = s.cell(c);
        for (l, w) in table.rule.points.iter().zip(&table.rule.weights) {
            let x = geo.point(*l);
            let (v, g) = u.eval_in_cell(c, *l);
            direct += w * geo.area * (0.5 * g.dot(g) + Quadratic.reaction(0, 0, x) * v * v);
            load += w * geo.area * x.x.cos() * v;
        }
    }
    assert!((form - direct).abs() < 1e-10 * direct.abs());
    let bu: f64 = system.rhs.iter().zip(u.coeffs()).map(|(a, b)| a * b).sum();
    assert!((bu - load).abs() < 1e-10 * load.abs().max(1.0));
}

#[test]
fn plan_matches_triplet_assembly() {
    let s = adapted_space(5);
    let a = assemble(&s, &Quadratic, AssemblyOptions::default());
    let plan = AssemblyPlan::new(&s);
    let b = plan.assemble(&s, &Quadratic, AssemblyOptions::default());
    assert_eq!(a.matrix.row_offsets(), b.matrix.row_offsets());
    assert_eq!(a.matrix.col_indices(), b.matrix.col_indices());
    for (x, y) in a.matrix.values().iter().zip(b.matrix.values()) {
        assert!((x - y).abs() < 1e-14 * (1.0 + x.abs()));
    }
    assert_eq!(a.rhs, b.rhs);
    assert!(a.matrix.asymmetry() < 1e-12);
}

#[test]
fn assembly_is_deterministic() {
    let s = adapted_space(6);
    let seq = assemble(&s, &Quadratic, AssemblyOptions::default());
    let again = assemble(&s, &Quadratic, AssemblyOptions::default());
    let par = assemble(&s, &Quadratic, AssemblyOptions { dirichlet: true, parallel: true });
    assert_eq!(seq, again);
    assert_eq!(seq, par);
    let plan = AssemblyPlan::new(&s);
    let p1 = plan.assemble(&s, &Quadratic, AssemblyOptions::default());
    let p2 = plan.assemble(&s, &Quadratic, AssemblyOptions { dirichlet: true, parallel: true });
    assert_eq!(p1, p2);
}

#[test]
fn dirichlet_rows_are_eliminated() {
    let s = adapted_space(7);
    let sys = assemble(&s, &Quadratic, AssemblyOptions::default());
    for &d in s.boundary_dofs() {
        assert_eq!(sys.rhs[d], 0.0);
        for (j, v) in sys.matrix.row(d) {
            assert_eq!(v, if j == d { 1.0 } else { 0.0 });
            assert_eq!(sys.matrix.get(j, d), if j == d { 1.0 } else { 0.0 });
        }
    }
    assert!(sys.matrix.diagonal().iter().all(|&v| v > 0.0));
}

#[test]
fn cg_on_mass_matrix_and_energy_decrease() {
    let s = space_on(GeoForest::rectangle(0.0, 1.0, 0.0, 1.0, 2, RootLayout::Diagonal).unwrap());
    let n = s.n_dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let system = SparseSystem { matrix: mass_matrix(&s), rhs };
    let mut x = vec![0.0; n];
    let stats = cg_solve(&system, &mut x, CgOptions::default()).unwrap();
    assert!(stats.iterations <= n);
    assert!(stats.residual <= 1e-10 * stats.initial_residual);

    let s = adapted_space(10);
    let system = assemble(&s, &Quadratic, AssemblyOptions::default());
    let energy = |x: &[f64]| {
        0.5 * system.matrix.quadratic_form(x) - x.iter().zip(&system.rhs).map(|(a, b)| a * b).sum::<f64>()
    };
    let mut energies = Vec::new();
    let mut x = vec![0.0; s.n_dofs()];
    let mut record = |x: &[f64]| energies.push(energy(x));
    cg_solve_observed(&system, &mut x, CgOptions::default(), Some(&mut record)).unwrap();
    assert!(energies.len() > 3);
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-14 * w[0].abs());
    }
    let r: Vec<f64> = system.matrix.mul_vec(&x).iter().zip(&system.rhs).map(|(a, b)| a - b).collect();
    assert!(r.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8);
}
