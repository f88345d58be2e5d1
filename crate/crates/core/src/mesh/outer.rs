//! Delaunay mesh of the square surrounding the prefractal.
//!
//! The interface nodes of the inner lattice mesh are inserted as fixed
//! constraint edges so both regions share them. When the horizontal line
//! through the center meets the curve in exactly two mesh nodes, only the
//! upper half is triangulated and then mirrored, which makes the mesh
//! symmetric under that reflection.

use std::collections::HashMap;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation as _};

use super::{edge_key, Triangulation, TAG_INNER, TAG_OUTER};
use crate::error::{invalid, Error, Result};
use crate::geometry::PrefractalCurve;
use crate::scalar::{Point, Real};

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

struct NodeIndex {
    map: HashMap<(i64, i64), usize>,
    quantum: f64,
}

impl NodeIndex {
    fn key(&self, p: [f64; 2]) -> (i64, i64) {
        ((p[0] / self.quantum).round() as i64, (p[1] / self.quantum).round() as i64)
    }

    fn get_or_insert<T: Real>(&mut self, p: [f64; 2], nodes: &mut Vec<Point<T>>) -> usize {
        let k = self.key(p);
        *self.map.entry(k).or_insert_with(|| {
            nodes.push([T::lit(p[0]), T::lit(p[1])]);
            nodes.len() - 1
        })
    }
}

/// Points strictly between `a` and `b` with spacing growing geometrically
/// from `h0` (next to `a`) up to `h1`.
fn graded_points(a: [f64; 2], b: [f64; 2], h0: f64, h1: f64) -> Vec<[f64; 2]> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut ts = Vec::new();
    let (mut s, mut h) = (0.0, h0);
    loop {
        h = (h * 1.3).min(h1);
        if s + h >= len - 0.5 * h {
            break;
        }
        s += h;
        ts.push(s / len);
    }
    ts.iter().map(|&t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]).collect()
}

fn uniform_points(a: [f64; 2], b: [f64; 2], h: f64) -> Vec<[f64; 2]> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let n = (len / h).ceil().max(1.0) as usize;
    (1..n).map(|i| {
        let t = i as f64 / n as f64;
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    })
    .collect()
}

fn insert_loop(cdt: &mut Cdt, pts: &[[f64; 2]]) -> Result<()> {
    let mut handles = Vec::with_capacity(pts.len());
    for p in pts {
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::Mesh(format!("Delaunay insertion failed: {e:?}")))?;
        handles.push(h);
    }
    for i in 0..handles.len() {
        let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
        if a != b {
            cdt.add_constraint(a, b);
        }
    }
    Ok(())
}

fn refine(cdt: &mut Cdt, outer_h: f64) -> Result<()> {
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(30.0))
        .with_max_allowed_area(3f64.sqrt() / 4.0 * outer_h * outer_h)
        .keep_constraint_edges()
        .exclude_outer_faces(true)
        .with_max_additional_vertices(2_000_000);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Mesh("outer Delaunay refinement ran out of vertices".into()));
    }
    Ok(())
}

fn faces(cdt: &Cdt, keep: impl Fn([f64; 2]) -> bool) -> Vec<[[f64; 2]; 3]> {
    cdt.inner_faces()
        .filter_map(|f| {
            let v = f.vertices().map(|v| {
                let p = v.position();
                [p.x, p.y]
            });
            let c = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
            keep(c).then_some(v)
        })
        .collect()
}

pub(super) fn attach_outer_square<T: Real>(
    mut tri: Triangulation<T>,
    curve: &PrefractalCurve<T>,
    side: T,
    center: Point<T>,
    outer_h: T,
) -> Result<Triangulation<T>> {
    let (side, outer_h) = (side.as_f64(), outer_h.as_f64());
    let c = [center[0].as_f64(), center[1].as_f64()];
    if !(outer_h > 0.0) {
        return Err(invalid("outer mesh size must be positive"));
    }
    let (x0, x1, y0, y1) = (c[0] - side / 2.0, c[0] + side / 2.0, c[1] - side / 2.0, c[1] + side / 2.0);
    let loop_nodes: Vec<usize> = tri.curve_edges.iter().map(|e| e.nodes[0]).collect();
    let to64 = |n: usize| [tri.nodes[n][0].as_f64(), tri.nodes[n][1].as_f64()];
    if loop_nodes.iter().any(|&n| {
        let p = to64(n);
        p[0] <= x0 || p[0] >= x1 || p[1] <= y0 || p[1] >= y1
    }) {
        return Err(invalid("outer square does not enclose the prefractal"));
    }
    let spacing = tri.curve_edges.iter().map(|e| {
        let (a, b) = (to64(e.nodes[0]), to64(e.nodes[1]));
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }).fold(f64::INFINITY, f64::min);

    let quantum = 1e-10 * side;
    let mut index = NodeIndex { map: HashMap::new(), quantum };
    for &n in &loop_nodes {
        let k = index.key(to64(n));
        index.map.insert(k, n);
    }
    let on_axis_tol = 1e-9 * side;
    let axis: Vec<usize> = (0..loop_nodes.len()).filter(|&i| (to64(loop_nodes[i])[1] - c[1]).abs() <= on_axis_tol).collect();
    let axis_edge = tri.curve_edges.iter().any(|e| e.nodes.iter().all(|&n| (to64(n)[1] - c[1]).abs() <= on_axis_tol));

    let mut outer_faces: Vec<[[f64; 2]; 3]> = Vec::new();
    let inside_square = |p: [f64; 2]| p[0] > x0 && p[0] < x1 && p[1] > y0 && p[1] < y1;
    let outside_curve = |p: [f64; 2]| !curve.contains([T::lit(p[0]), T::lit(p[1])]);
    if axis.len() == 2 && !axis_edge {
        let (ia, ib) = (axis[0], axis[1]);
        let (pa, pb) = (to64(loop_nodes[ia]), to64(loop_nodes[ib]));
        // counter-clockwise traversal reaches the upper arc after the right crossing
        let (right, left) = if pa[0] > pb[0] { (ia, ib) } else { (ib, ia) };
        let n = loop_nodes.len();
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut i = right;
        let snap = |n: usize| {
            let mut p = to64(n);
            if (p[1] - c[1]).abs() <= on_axis_tol {
                p[1] = c[1];
            }
            p
        };
        loop {
            pts.push(snap(loop_nodes[i]));
            if i == left {
                break;
            }
            i = (i + 1) % n;
        }
        if pts.iter().any(|p| p[1] < c[1] - on_axis_tol) {
            return Err(Error::Mesh("upper arc of the prefractal dips below the symmetry axis".into()));
        }
        let pl = snap(loop_nodes[left]);
        let pr = snap(loop_nodes[right]);
        pts.extend(graded_points(pl, [x0, c[1]], spacing, outer_h));
        pts.push([x0, c[1]]);
        pts.extend(uniform_points([x0, c[1]], [x0, y1], outer_h));
        pts.push([x0, y1]);
        pts.extend(uniform_points([x0, y1], [x1, y1], outer_h));
        pts.push([x1, y1]);
        pts.extend(uniform_points([x1, y1], [x1, c[1]], outer_h));
        pts.push([x1, c[1]]);
        let mut back = graded_points(pr, [x1, c[1]], spacing, outer_h);
        back.reverse();
        pts.extend(back);
        let mut cdt = Cdt::new();
        insert_loop(&mut cdt, &pts)?;
        refine(&mut cdt, outer_h)?;
        let upper = faces(&cdt, |p| inside_square(p) && p[1] > c[1] && outside_curve(p));
        for f in &upper {
            outer_faces.push(*f);
            let m = f.map(|p| [p[0], 2.0 * c[1] - p[1]]);
            outer_faces.push([m[0], m[2], m[1]]);
        }
    } else {
        let mut cdt = Cdt::new();
        let curve_pts: Vec<[f64; 2]> = loop_nodes.iter().map(|&n| to64(n)).collect();
        insert_loop(&mut cdt, &curve_pts)?;
        let mut sq = vec![[x0, y0]];
        sq.extend(uniform_points([x0, y0], [x1, y0], outer_h));
        sq.push([x1, y0]);
        sq.extend(uniform_points([x1, y0], [x1, y1], outer_h));
        sq.push([x1, y1]);
        sq.extend(uniform_points([x1, y1], [x0, y1], outer_h));
        sq.push([x0, y1]);
        sq.extend(uniform_points([x0, y1], [x0, y0], outer_h));
        insert_loop(&mut cdt, &sq)?;
        refine(&mut cdt, outer_h)?;
        outer_faces = faces(&cdt, |p| inside_square(p) && outside_curve(p));
    }

    for f in outer_faces {
        let mut ids = f.map(|p| index.get_or_insert(p, &mut tri.nodes));
        let [a, b, cc] = ids.map(|i| tri.nodes[i]);
        let area = (b[0] - a[0]) * (cc[1] - a[1]) - (b[1] - a[1]) * (cc[0] - a[0]);
        if area < T::zero() {
            ids.swap(1, 2);
        }
        tri.triangles.push(ids);
        tri.tags.push(TAG_OUTER);
    }
    debug_assert!(tri.tags.iter().any(|&t| t == TAG_INNER));

    let curve_keys: std::collections::HashSet<[usize; 2]> =
        tri.curve_edges.iter().map(|e| edge_key(e.nodes[0], e.nodes[1])).collect();
    let mut outer_edges: Vec<[usize; 2]> = tri
        .edge_map()
        .into_iter()
        .filter(|(k, ts)| ts.len() == 1 && !curve_keys.contains(k))
        .map(|(k, _)| k)
        .collect();
    outer_edges.sort_unstable();
    tri.outer_edges = outer_edges;
    Ok(tri)
}
