use super::*;
use crate::geometry::snowflake;

fn opts() -> MeshOptions<f64> {
    MeshOptions::default()
}

fn shoelace(tri: &Triangulation<f64>) -> f64 {
    tri.curve_edges
        .iter()
        .map(|e| {
            let (a, b) = (tri.nodes[e.nodes[0]], tri.nodes[e.nodes[1]]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

#[test]
fn level0_trace_map_has_three_nodes() {
    let c = snowflake::<f64>(0).unwrap();
    let tri = build_quasi_uniform_mesh(&c, 1.0, Region::Interior, &opts()).unwrap();
    assert_eq!(tri.num_triangles(), 1);
    let map = boundary_trace_map(&tri, &c).unwrap();
    assert_eq!(map.nodes.len(), 3);
    for (s, want) in map.arc.iter().zip([0.0, 1.0, 2.0]) {
        assert!((s - want).abs() < 1e-14);
    }
}

#[test]
fn euler_relation_and_area() {
    for (level, h) in [(0, 0.25), (1, 1.0 / 9.0), (2, 1.0 / 18.0), (3, 1.0 / 27.0)] {
        let c = snowflake::<f64>(level).unwrap();
        let tri = build_quasi_uniform_mesh(&c, h, Region::Interior, &opts()).unwrap();
        let v = tri.num_nodes() as i64;
        let e = tri.edge_map().len() as i64;
        let f = tri.num_triangles() as i64;
        assert_eq!(v - e + f, 1, "level {level}");
        let a = tri.total_area();
        assert!((a - shoelace(&tri)).abs() <= 1e-10 * a);
        assert!((a - c.signed_area()).abs() <= 1e-10 * a);
    }
}

#[test]
fn trace_map_is_consecutive_along_edges() {
    let c = snowflake::<f64>(2).unwrap();
    let tri = build_quasi_uniform_mesh(&c, 1.0 / 18.0, Region::Interior, &opts()).unwrap();
    let map = boundary_trace_map(&tri, &c).unwrap();
    assert_eq!(map.nodes.len(), tri.curve_edges.len());
    let n = map.nodes.len();
    for e in &tri.curve_edges {
        let (p, q) = (map.position[e.nodes[0]], map.position[e.nodes[1]]);
        assert_eq!((p + 1) % n, q);
    }
    assert!(map.arc.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn quasi_uniform_edge_lengths() {
    let c = snowflake::<f64>(1).unwrap();
    let h = 1.0 / 9.0;
    let tri = build_quasi_uniform_mesh(&c, h, Region::Interior, &opts()).unwrap();
    for e in &tri.curve_edges {
        let l = crate::scalar::dist(tri.nodes[e.nodes[0]], tri.nodes[e.nodes[1]]);
        assert!(l >= h / 4.0 - 1e-14 && l <= h + 1e-14);
    }
    assert!(tri.h() / tri.min_diameter() <= 4.0);
    assert!(tri.max_shape_ratio() <= 8.0);
}

#[test]
fn halving_h_quadruples_triangles() {
    let c = snowflake::<f64>(2).unwrap();
    let a = build_quasi_uniform_mesh(&c, 1.0 / 9.0, Region::Interior, &opts()).unwrap();
    let b = build_quasi_uniform_mesh(&c, 1.0 / 18.0, Region::Interior, &opts()).unwrap();
    let ratio = b.num_triangles() as f64 / a.num_triangles() as f64;
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn rejects_bad_arguments() {
    let c = snowflake::<f64>(1).unwrap();
    assert!(build_quasi_uniform_mesh(&c, 0.0, Region::Interior, &opts()).is_err());
    assert!(build_quasi_uniform_mesh(&c, 5.0, Region::Interior, &opts()).is_err());
    assert!(build_graded_mesh(&c, 0.1, 0.6, Region::Interior, &opts()).is_err());
    assert!(build_graded_mesh(&c, 0.1, 0.25, Region::Interior, &opts()).is_err());
}

#[test]
fn graded_meshes_pass_their_conditions() {
    for level in 0..=3 {
        let c = snowflake::<f64>(level).unwrap();
        let h = c.segment_length(0).min(0.25);
        for mu in [0.3, 0.4, 0.49] {
            let tri = build_graded_mesh(&c, h, mu, Region::Interior, &opts()).unwrap();
            let report = check_grading(&tri, &c, GradingParams::new(h, mu, 1.0).unwrap());
            assert!(report.all_pass(), "level {level} mu {mu}");
            assert_eq!(report.triangles.len(), tri.num_triangles());
            let a = tri.total_area();
            assert!((a - c.signed_area()).abs() <= 1e-10 * a);
        }
    }
}

#[test]
fn level0_graded_is_quasi_uniform() {
    let c = snowflake::<f64>(0).unwrap();
    let tri = build_graded_mesh(&c, 0.2, 0.3, Region::Interior, &opts()).unwrap();
    assert!(tri.h() <= 0.2 + 1e-12);
}

#[test]
fn uniform_mesh_fails_corner_condition() {
    let c = snowflake::<f64>(2).unwrap();
    let h = 1.0 / 36.0;
    let tri = build_quasi_uniform_mesh(&c, h, Region::Interior, &opts()).unwrap();
    let report = check_grading(&tri, &c, GradingParams::new(h, 0.3, 1.0).unwrap());
    assert!(!report.corner_pass);
    assert!(report.worst_corner_ratio > 1.0);
}

#[test]
fn corner_size_exponent() {
    let c = snowflake::<f64>(2).unwrap();
    let mu = 0.3;
    let hs = [1.0 / 9.0, 1.0 / 18.0, 1.0 / 36.0];
    let mut pts = Vec::new();
    for &h in &hs {
        let tri = build_graded_mesh(&c, h, mu, Region::Interior, &opts()).unwrap();
        let report = check_grading(&tri, &c, GradingParams::new(h, mu, 1.0).unwrap());
        let worst = report
            .triangles
            .iter()
            .enumerate()
            .filter(|(_, g)| g.condition == grading::Condition::Corner)
            .map(|(t, _)| tri.diameter(t))
            .fold(0.0, f64::max);
        pts.push((h.ln(), worst.ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let expected = 1.0 / (1.0 - mu);
    assert!((slope - expected).abs() < 0.3, "slope {slope}");
}

#[test]
fn single_far_triangle_uses_direct_formula() {
    let c = snowflake::<f64>(1).unwrap();
    let cen = c.centroid();
    for size in [0.05, 0.5] {
        let tri = Triangulation {
            nodes: vec![cen, [cen[0] + size, cen[1]], [cen[0], cen[1] + size]],
            triangles: vec![[0, 1, 2]],
            tags: vec![TAG_INNER],
            curve_edges: vec![],
            outer_edges: vec![],
            grading: None,
            target_h: 0.3,
        };
        let params = GradingParams::new(0.3, 0.3, 1.0).unwrap();
        let report = check_grading(&tri, &c, params);
        let brute = (0..200)
            .flat_map(|i| (0..=200 - i).map(move |j| (i, j)))
            .map(|(i, j)| {
                let p = [cen[0] + size * i as f64 / 200.0, cen[1] + size * j as f64 / 200.0];
                crate::geometry::dist_to_vertex_set(p, &c, crate::geometry::VertexSet::Reentrant)
            })
            .fold(f64::INFINITY, f64::min);
        let hs = tri.diameter(0);
        let expect = hs <= 0.3 * brute.powf(0.3);
        assert_eq!(report.triangles[0].pass, expect, "size {size}");
        assert_eq!(report.triangles[0].condition, grading::Condition::Far);
    }
}

#[test]
fn nested_refinement_keeps_old_nodes() {
    let c = snowflake::<f64>(2).unwrap();
    let coarse = build_graded_mesh(&c, 1.0 / 9.0, 0.3, Region::Interior, &opts()).unwrap();
    let fine = refine_graded(coarse.clone(), &c, GradingParams::new(1.0 / 18.0, 0.3, 1.0).unwrap(), &opts()).unwrap();
    assert_eq!(&fine.nodes[..coarse.num_nodes()], &coarse.nodes[..]);
    let report = check_grading(&fine, &c, fine.grading.unwrap());
    assert!(report.all_pass());
}

#[test]
fn two_region_mesh_is_valid_and_symmetric() {
    let c = snowflake::<f64>(2).unwrap();
    let region = Region::WithOuterSquare { side: 4.0, center: None, outer_h: 0.4 };
    let tri = build_quasi_uniform_mesh(&c, 1.0 / 18.0, region, &MeshOptions { kappa: 8.0, ..opts() }).unwrap();
    assert!(tri.tags.contains(&TAG_OUTER));
    let a = tri.total_area();
    assert!((a - 16.0).abs() < 1e-10 * 16.0);
    let inner: f64 = (0..tri.num_triangles()).filter(|&t| tri.tags[t] == TAG_INNER).map(|t| tri.area(t)).sum();
    assert!((inner - c.signed_area()).abs() < 1e-10);
    let cy = c.centroid()[1];
    let key = |p: [f64; 2]| ((p[0] * 1e8).round() as i64, (p[1] * 1e8).round() as i64);
    let set: std::collections::HashSet<_> = tri.nodes.iter().map(|&p| key(p)).collect();
    for &p in &tri.nodes {
        assert!(set.contains(&key([p[0], 2.0 * cy - p[1]])), "{p:?}");
    }
    for &n in &tri.outer_nodes() {
        let p = tri.nodes[n];
        let on = (p[0] - c.centroid()[0]).abs().max((p[1] - cy).abs());
        assert!((on - 2.0).abs() < 1e-12);
    }
}

#[test]
fn mesh_text_round_trip() {
    let c = snowflake::<f64>(1).unwrap();
    let region = Region::WithOuterSquare { side: 4.0, center: None, outer_h: 0.5 };
    let tri = build_quasi_uniform_mesh(&c, 1.0 / 6.0, region, &opts()).unwrap();
    let mut buf = Vec::new();
    io::write_mesh(&tri, &mut buf).unwrap();
    let back: Triangulation<f64> = io::read_mesh(&buf[..]).unwrap();
    assert_eq!(back.triangles, tri.triangles);
    assert_eq!(back.tags, tri.tags);
    assert_eq!(back.curve_edges, tri.curve_edges);
    assert_eq!(back.outer_edges, tri.outer_edges);
    assert_eq!(back.nodes, tri.nodes);
    back.validate().unwrap();
    assert!(io::read_mesh::<f64, _>(&b"NODES 1\n0 0\nTRIANGLES 1\n0 0 3 1\nBOUNDARY 0\n"[..]).is_err());
}

#[test]
fn vtk_output_header() {
    let tri: Triangulation<f64> = unit_square_mesh(2);
    let u: Vec<f64> = tri.nodes.iter().map(|p| p[0]).collect();
    let mut buf = Vec::new();
    io::write_vtk(&tri, &[io::PointField { name: "u", values: &u }], "test", &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(s.contains("CELLS 8 32"));
    assert!(s.contains("POINT_DATA 9"));
    assert!(io::write_vtk(&tri, &[io::PointField { name: "u", values: &u[..3] }], "t", Vec::new()).is_err());
}

#[test]
fn single_precision_mesh() {
    let c = snowflake::<f32>(1).unwrap();
    let tri = build_quasi_uniform_mesh(&c, 1.0f32 / 6.0, Region::Interior, &MeshOptions::default()).unwrap();
    assert!((tri.total_area() - c.signed_area()).abs() < 1e-5);
}
