use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::assembly::{assemble_nonlocal_block, BoundaryMesh};
use crate::linalg::LinearOperator;
use crate::geometry::{snowflake, VertexSet};
use crate::mesh::{build_quasi_uniform_mesh, unit_square_mesh, CurveEdge, MeshOptions, Region, TAG_INNER};
use crate::scalar::{gauss_legendre_unit, Point};

fn level_mesh(level: i64, h: f64) -> (PrefractalCurve<f64>, Triangulation<f64>) {
    let c = snowflake::<f64>(level).unwrap();
    let tri = build_quasi_uniform_mesh(&c, h, Region::Interior, &MeshOptions::default()).unwrap();
    (c, tri)
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn l2m_norm_of_zero_and_one() {
    let (c, tri) = level_mesh(0, 1.0 / 4.0);
    let ns = NormSystem::new(&tri, &c).unwrap();
    assert_eq!(norm_l2_m(&vec![0.0; ns.dim()], &ns), 0.0);
    let one = vec![1.0; ns.dim()];
    let want = (3f64.sqrt() / 4.0 + 3.0).sqrt();
    assert!(rel(norm_l2_m(&one, &ns), want) < 1e-13);
}

#[test]
fn l2m_norm_of_linear_field_on_square() {
    let tri = unit_square_mesh::<f64>(6);
    let c = snowflake::<f64>(0).unwrap();
    let ns = NormSystem::new(&tri, &c).unwrap();
    let x: Vec<f64> = tri.nodes.iter().map(|p| p[0]).collect();
    assert!(rel(norm_l2_m(&x, &ns), (1.0f64 / 3.0).sqrt()) < 1e-13);
}

#[test]
fn v_norm_of_constants_is_boundary_mass() {
    let (c, tri) = level_mesh(1, 1.0 / 6.0);
    let ns = NormSystem::new(&tri, &c).unwrap();
    assert_eq!(norm_v(&vec![0.0; ns.dim()], &ns), 0.0);
    let v = vec![-2.5; ns.dim()];
    assert!(rel(norm_v(&v, &ns), c.total_length().sqrt() * 2.5) < 1e-10);
}

#[test]
fn v_norm_decomposes_and_matches_gram() {
    let (c, tri) = level_mesh(1, 1.0 / 6.0);
    let ns = NormSystem::new(&tri, &c).unwrap();
    let v = random_vec(ns.dim(), 3);
    let s = &ns.system;
    let parts = s.bulk_stiffness.quad_form(&v)
        + s.tangential_stiffness.quad_form(&v)
        + s.boundary_mass.quad_form(&v)
        + s.nonlocal_quad_form(&v);
    let n = norm_v(&v, &ns);
    assert!(rel(n * n, parts) < 1e-12);
    assert!(rel(n * n, s.a.quad_form(&v)) < 1e-12);
    let h1 = norm_h1_curve(&v, &ns);
    assert!(rel(h1 * h1, s.tangential_stiffness.quad_form(&v) + s.boundary_mass.quad_form(&v)) < 1e-12);
}

#[test]
fn norms_are_homogeneous_and_subadditive() {
    let (c, tri) = level_mesh(1, 1.0 / 6.0);
    let ns = NormSystem::new(&tri, &c).unwrap();
    let norms: [fn(&[f64], &NormSystem<f64>) -> f64; 3] = [norm_l2_m, norm_v, norm_h1_curve];
    for seed in 0..10 {
        let u = random_vec(ns.dim(), 2 * seed);
        let w = random_vec(ns.dim(), 2 * seed + 1);
        let sum: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = u.iter().map(|a| -3.5 * a).collect();
        for f in norms {
            assert!(rel(f(&scaled, &ns), 3.5 * f(&u, &ns)) < 1e-12);
            assert!(f(&sum, &ns) <= f(&u, &ns) + f(&w, &ns) + 1e-12);
        }
    }
}

#[test]
fn eoc_examples() {
    assert!((eoc(&[2.0, 1.0], &[4.0, 1.0]).unwrap()[0] - 2.0).abs() < 1e-15);
    assert!((eoc(&[2.0, 1.0], &[2.0, 1.0]).unwrap()[0] - 1.0).abs() < 1e-15);
    assert!(eoc(&[2.0, 1.0, 1.5], &[4.0, 1.0, 0.5]).is_err());
    assert!(eoc(&[2.0, 2.0], &[4.0, 1.0]).is_err());
    assert!(eoc(&[2.0, 1.0], &[4.0, 0.0]).is_err());
    let h = [0.1, 0.05, 0.025, 0.0125];
    let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
    assert!((eoc_fit(&h, &e).unwrap() - 1.5).abs() < 1e-12);
}

fn record(h: f64, dt: f64, e: f64) -> ErrorRecord {
    ErrorRecord {
        h,
        dt,
        mu: Some(0.3),
        mesh_kind: MeshKind::Graded,
        err_l2m: e * e,
        err_v: e,
        err_v_final: e,
        err_h1_curve: e,
        err_weighted: None,
        dofs: 10,
        seconds: 0.5,
    }
}

#[test]
fn eoc_csv_layout_and_duplicates() {
    let recs = vec![record(0.2, 0.1, 0.4), record(0.1, 0.05, 0.2)];
    let mut out = Vec::new();
    write_eoc_csv(&recs, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,dt,mu,mesh_kind,err_L2m,err_V,eoc_L2m,eoc_V,dofs,seconds");
    let cols: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(cols[3], "graded");
    assert_eq!(cols[6], "2.0000");
    assert_eq!(cols[7], "1.0000");
    let dup = vec![record(0.2, 0.1, 0.4), record(0.2, 0.1, 0.3)];
    assert!(write_eoc_csv(&dup, Vec::new()).is_err());
}

#[test]
fn weighted_seminorm_of_linear_function_is_zero() {
    let (c, tri) = level_mesh(1, 1.0 / 6.0);
    let v = weighted_h2_seminorm(|_| [[0.0; 2]; 2], &tri, &c, 0.3, VertexSet::All).unwrap();
    assert_eq!(v, 0.0);
    for bad in [0.0, 1.0, -0.2] {
        assert!(weighted_h2_seminorm(|_| [[0.0; 2]; 2], &tri, &c, bad, VertexSet::All).is_err());
    }
}

/// `∫ r^{γ} dx` over the triangle `(c, p, q)`, `r = |x − c|`, in polar
/// coordinates around `c`.
fn radial_fan_integral(c: Point<f64>, p: Point<f64>, q: Point<f64>, gamma: f64) -> f64 {
    let (a0, a1) = ((p[1] - c[1]).atan2(p[0] - c[0]), (q[1] - c[1]).atan2(q[0] - c[0]));
    let mut span = a1 - a0;
    while span <= -PI {
        span += 2.0 * PI;
    }
    while span > PI {
        span -= 2.0 * PI;
    }
    // distance from c to the line pq along direction φ
    let d = [q[0] - p[0], q[1] - p[1]];
    let nrm = [d[1], -d[0]];
    let off = (nrm[0] * (p[0] - c[0]) + nrm[1] * (p[1] - c[1])).abs();
    let (x, w) = gauss_legendre_unit(40);
    let mut sum = 0.0;
    for sub in 0..8 {
        let lo = a0 + span * sub as f64 / 8.0;
        let len = span / 8.0;
        for (xi, wi) in x.iter().zip(&w) {
            let phi = lo + len * xi;
            let r_max = off / (nrm[0] * phi.cos() + nrm[1] * phi.sin()).abs();
            sum += wi * len.abs() * r_max.powf(gamma + 2.0) / (gamma + 2.0);
        }
    }
    sum
}

#[test]
fn weighted_seminorm_of_quadratic_matches_voronoi_oracle() {
    let (c, tri) = level_mesh(0, 1.0);
    assert_eq!(tri.num_triangles(), 1);
    let got = weighted_h2_seminorm(|_| [[2.0, 0.0], [0.0, 0.0]], &tri, &c, 0.3, VertexSet::All).unwrap();
    // the Voronoi cell of each vertex is the kite spanned by the two
    // adjacent edge midpoints and the centroid
    let v = &c.vertices;
    let g = tri.centroid(0);
    let mid = |a: Point<f64>, b: Point<f64>| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let mut want = 0.0;
    for k in 0..3 {
        let (a, b, d) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
        want += radial_fan_integral(a, mid(a, b), g, 0.6) + radial_fan_integral(a, g, mid(a, d), 0.6);
    }
    want *= 4.0;
    assert!(rel(got * got, want) < 1e-6, "{} vs {want}", got * got);
}

#[test]
fn corner_singularity_seminorm_matches_radial_oracle_and_blows_up() {
    let (c, tri) = level_mesh(1, 1.0 / 3.0);
    let vi = c.reentrant[0];
    let corner = c.vertices[vi];
    let node = tri.nodes.iter().position(|p| crate::scalar::dist(*p, corner) < 1e-12).unwrap();
    let fan: Vec<[usize; 3]> = tri.triangles.iter().copied().filter(|t| t.contains(&node)).collect();
    assert_eq!(fan.len(), 4);
    let sub = Triangulation {
        nodes: tri.nodes.clone(),
        tags: vec![TAG_INNER; fan.len()],
        triangles: fan.clone(),
        curve_edges: Vec::new(),
        outer_edges: Vec::new(),
        grading: None,
        target_h: tri.target_h,
    };
    let alpha = 0.75;
    // u = Im z^α: |D²u|² = 2 α² (α − 1)² r^{2α − 4}
    let hess = move |x: Point<f64>| {
        let (dx, dy) = (x[0] - corner[0], x[1] - corner[1]);
        let r = dx.hypot(dy);
        let phi = dy.atan2(dx);
        let m = alpha * (alpha - 1.0) * r.powf(alpha - 2.0);
        let ang = (alpha - 2.0) * phi;
        let (re, im) = (m * ang.cos(), m * ang.sin());
        [[im, re], [re, -im]]
    };
    let mut last = 0.0;
    for sigma in [0.45, 0.35, 0.3, 0.27, 0.26] {
        let got = weighted_h2_seminorm_at(hess, &sub, sigma, &[corner]).unwrap();
        let gamma = 2.0 * sigma + 2.0 * alpha - 4.0;
        let k = 2.0 * alpha * alpha * (alpha - 1.0) * (alpha - 1.0);
        let want: f64 = fan
            .iter()
            .map(|t| {
                let i = t.iter().position(|&n| n == node).unwrap();
                let (p, q) = (tri.nodes[t[(i + 1) % 3]], tri.nodes[t[(i + 2) % 3]]);
                k * radial_fan_integral(corner, p, q, gamma)
            })
            .sum();
        assert!(rel(got * got, want) < 1e-6, "sigma {sigma}: {} vs {want}", got * got);
        assert!(got.is_finite() && got > last);
        last = got;
    }
}

fn straight_line(n: usize) -> BoundaryMesh<f64> {
    BoundaryMesh {
        points: (0..=n).map(|i| [i as f64, 0.0]).collect(),
        edges: (0..n).map(|i| [i, i + 1]).collect(),
        segment: (0..n).collect(),
    }
}

fn compare_with_assembler(bm: &BoundaryMesh<f64>, tol: f64) {
    let active = vec![true; bm.edges.len()];
    let oracle = nonlocal_oracle_matrix(bm, &active).unwrap();
    let (block, dofs) = assemble_nonlocal_block(bm, &active, 6).unwrap();
    for (a, &i) in dofs.iter().enumerate() {
        for (b, &j) in dofs.iter().enumerate() {
            let (x, y) = (block[(a, b)], oracle[(i, j)]);
            assert!(rel(x, y) < tol, "entry ({i},{j}): {x} vs {y}");
        }
    }
}

#[test]
fn oracle_on_two_collinear_segments() {
    let bm = straight_line(2);
    let m = nonlocal_oracle_matrix(&bm, &[true, true]).unwrap();
    assert!(m[(1, 1)] > 0.0);
    compare_with_assembler(&bm, 1e-6);
    for i in 0..3 {
        let row: f64 = (0..3).map(|j| m[(i, j)]).sum();
        assert!(row.abs() < 1e-9 * m[(1, 1)]);
    }
}

#[test]
fn oracle_far_entry_matches_smooth_gauss() {
    let bm = straight_line(6);
    let m = nonlocal_oracle_matrix(&bm, &vec![true; 6]).unwrap();
    let (x, w) = gauss_legendre_unit(20);
    let mut want = 0.0;
    for (s, ws) in x.iter().zip(&w) {
        for (t, wt) in x.iter().zip(&w) {
            let (px, py) = (*s, 5.0 + t);
            want += ws * wt * (1.0 - s) * t / ((px - py) * (px - py));
        }
    }
    want *= -2.0;
    assert!(rel(m[(0, 6)], want) < 1e-10);
}

#[test]
fn oracle_entry_on_curve_matches_matrix() {
    let c = snowflake::<f64>(1).unwrap();
    let bm = BoundaryMesh::from_curve(&c);
    let m = nonlocal_oracle_matrix(&bm, &vec![true; 12]).unwrap();
    for (i, j) in [(0, 0), (0, 1), (3, 7), (11, 0)] {
        let e = nonlocal_oracle(&c, &crate::assembly::ActiveSet::All, i, j).unwrap();
        assert!(rel(e, m[(i, j)]) < 1e-9);
    }
    let big = straight_line(65);
    assert!(nonlocal_oracle_matrix(&big, &vec![true; 65]).is_err());
}

#[test]
fn assembler_matches_oracle_on_snowflake_trace() {
    let (c, tri) = level_mesh(1, 1.0 / 6.0);
    let trace = crate::mesh::boundary_trace_map(&tri, &c).unwrap();
    let bm = BoundaryMesh::from_triangulation(&tri, &trace);
    assert_eq!(bm.edges.len(), 24);
    compare_with_assembler(&bm, 1e-6);
}

fn two_triangles() -> Triangulation<f64> {
    Triangulation {
        nodes: vec![[0.0, 0.0], [0.0, 1.0], [-1.0, 0.5], [1.0, 0.5]],
        triangles: vec![[0, 1, 2], [1, 0, 3]],
        tags: vec![1, 2],
        curve_edges: vec![CurveEdge { nodes: [0, 1], segment: 0 }, CurveEdge { nodes: [2, 0], segment: 1 }],
        outer_edges: Vec::new(),
        grading: None,
        target_h: 1.0,
    }
}

#[test]
fn flux_of_simple_fields() {
    let tri = two_triangles();
    let k = ScalarField::Constant(1.0);
    let x: Vec<f64> = tri.nodes.iter().map(|p| p[0]).collect();
    assert!((interface_flux(&x, &tri, &k, &[true, false]).unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(interface_flux(&[3.0; 4], &tri, &k, &[true, false]).unwrap(), 0.0);
    assert!(interface_flux(&x, &tri, &k, &[true, true]).is_err());
    assert!(interface_flux(&x, &tri, &k, &[true]).is_err());
    let k2 = ScalarField::PerTriangle(vec![1.0, 3.0]);
    assert!((interface_flux(&x, &tri, &k2, &[true, false]).unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn flux_is_additive_over_segment_subsets() {
    let c = snowflake::<f64>(1).unwrap();
    let region = Region::WithOuterSquare { side: 4.0, center: None, outer_h: 0.5 };
    let tri = build_quasi_uniform_mesh(&c, 1.0 / 6.0, region, &MeshOptions::default()).unwrap();
    let u = random_vec(tri.num_nodes(), 9);
    let k = ScalarField::PerTriangle(tri.tags.iter().map(|&t| if t == TAG_INNER { 1.0 } else { 1000.0 }).collect());
    let ev = FluxEvaluator::new(&tri, &k);
    let a: Vec<bool> = (0..12).map(|s| s % 3 == 0).collect();
    let b: Vec<bool> = (0..12).map(|s| s % 3 == 1).collect();
    let ab: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x || *y).collect();
    let sum = ev.flux(&u, &a).unwrap() + ev.flux(&u, &b).unwrap();
    assert!((ev.flux(&u, &ab).unwrap() - sum).abs() < 1e-12 * (1.0 + sum.abs()));
}

#[test]
fn prolongation_reproduces_linear_fields() {
    let (c, coarse) = level_mesh(2, 1.0 / 9.0);
    let (_, fine) = level_mesh(2, 1.0 / 36.0);
    let f = |p: Point<f64>| 2.0 * p[0] - 0.5 * p[1] + 0.25;
    let u: Vec<f64> = coarse.nodes.iter().map(|&p| f(p)).collect();
    let v = prolongate(&coarse, &u, &fine.nodes).unwrap();
    for (p, x) in fine.nodes.iter().zip(&v) {
        assert!((f(*p) - x).abs() < 1e-12);
    }
    let own = prolongate(&coarse, &u, &coarse.nodes).unwrap();
    assert!(own.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-14));
    assert!(prolongate(&coarse, &u, &[[5.0, 5.0]]).is_err());
    assert!(c.contains(fine.centroid(0)));
}

#[test]
fn refinement_ratio_is_enforced() {
    assert!(check_refinement_ratio(0.25, 1.0, 0.125, 1.0).is_ok());
    assert!(check_refinement_ratio(0.3, 1.0, 0.1, 1.0).is_err());
    assert!(check_refinement_ratio(0.25, 1.0, 0.2, 1.0).is_err());
}

fn tiny_problem() -> StudyProblem<f64> {
    StudyProblem {
        curve: snowflake::<f64>(1).unwrap(),
        coeffs: CoefficientField::unit(1.0),
        nonlocal: NonlocalOptions::default(),
        source: crate::assembly::Source::new(|t, p| t * (1.0 + p[0])),
        t_final: 0.25,
        theta: 0.5,
        solver: crate::time::LinearSolver::Direct,
    }
}

#[test]
fn reference_transfer_to_own_mesh_is_identity() {
    let p = tiny_problem();
    let (_, tri) = level_mesh(1, 1.0 / 6.0);
    let r = Reference::compute(&p, tri.clone(), 1.0 / 64.0, 1.0 / 16.0).unwrap();
    assert_eq!(r.run.states.len(), 5);
    let back = r.transfer_to(&tri).unwrap();
    for (a, b) in back.iter().zip(&r.run.states) {
        assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14));
    }
    assert!(r.snapshot(0.125).is_ok());
    assert!(r.snapshot(0.1).is_err());
    let run = run_level(&p, tri, 1.0 / 16.0, 1).unwrap();
    assert!(r.errors(&run, MeshKind::Uniform, None).is_err());
}

#[test]
fn errors_against_reference_decrease() {
    let p = tiny_problem();
    let (_, fine) = level_mesh(1, 1.0 / 48.0);
    let r = Reference::compute(&p, fine, 1.0 / 128.0, 1.0 / 16.0).unwrap();
    let mut prev = f64::INFINITY;
    for m in [1.0 / 6.0, 1.0 / 12.0] {
        let (_, tri) = level_mesh(1, m);
        let run = run_level(&p, tri, 1.0 / 16.0, 1).unwrap();
        let rec = r.errors(&run, MeshKind::Uniform, None).unwrap();
        assert!(rec.err_l2m > 0.0 && rec.err_v > 0.0 && rec.err_v < prev, "{rec:?}");
        prev = rec.err_v;
    }
}

#[test]
fn manufactured_heat_solution_converges_quadratically() {
    let coarse = heat_on_square_error(8, 0.02, 0.5, 0.2).unwrap();
    let fine = heat_on_square_error(16, 0.01, 0.5, 0.2).unwrap();
    let ratio = coarse / fine;
    assert!((3.3..4.7).contains(&ratio), "ratio {ratio}: {coarse} {fine}");
}

#[test]
fn pencil_extremes_of_diagonal_pencil() {
    use nalgebra::DMatrix;
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 6.0, 1.0]));
    let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 4.0]));
    let (lo, hi) = pencil_extremes(&a, &b).unwrap();
    assert!((lo - 0.25).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
    assert!(pencil_extremes(&a, &(-b)).is_err());
}

#[test]
fn spectral_constants_are_positive() {
    let (c, tri) = level_mesh(0, 1.0 / 4.0);
    let s = spectral_bounds(&tri, &c, 1.0).unwrap();
    assert!(s.c1 > 0.0 && s.c1 <= s.c2, "{s:?}");
    assert!(s.coercivity > 0.0 && s.friedrichs > 0.0);
}
