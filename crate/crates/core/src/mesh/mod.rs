//! Conformal P1 triangulations of prefractal domains.
//!
//! Interior meshes are cut from the triangular lattice of spacing
//! `3^{-n}/m`, on which every Koch vertex of level `n` lies exactly. Graded
//! meshes are obtained from those by longest-edge bisection driven by the
//! element-size conditions in [`grading`]. The two-region transmission
//! geometry adds a Delaunay mesh of the surrounding square.

pub mod grading;
pub mod io;
mod lattice;
mod outer;
mod refine;

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::geometry::PrefractalCurve;
use crate::scalar::{self, Point, Real};

pub use grading::{check_grading, GradingParams, GradingReport};
pub use lattice::unit_square_mesh;
pub use refine::refine_until;

/// Subdomain tag of triangles enclosed by the prefractal.
pub const TAG_INNER: u8 = 1;
/// Subdomain tag of triangles between the prefractal and the outer square.
pub const TAG_OUTER: u8 = 2;

/// Mesh edge lying on the prefractal, oriented along the curve traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveEdge {
    pub nodes: [usize; 2],
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region<T> {
    /// Only the domain enclosed by the prefractal.
    Interior,
    /// Enclosed domain plus the square `center ± side/2` around it; the
    /// prefractal becomes an internal interface. `center` defaults to the
    /// curve centroid.
    WithOuterSquare { side: T, center: Option<Point<T>>, outer_h: T },
}

/// Element-quality and size controls shared by the generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions<T> {
    /// Shape-regularity bound on `h_S / ρ_S`.
    pub kappa: T,
    /// Constant in the grading conditions.
    pub sigma_g: T,
    /// Lower size ratio `c` of quasi-uniform meshes: `h_S ∈ [c·h, h]`.
    pub uniform_ratio: T,
}

impl<T: Real> Default for MeshOptions<T> {
    fn default() -> Self {
        Self { kappa: T::lit(8.0), sigma_g: T::one(), uniform_ratio: T::lit(0.25) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation<T> {
    pub nodes: Vec<Point<T>>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<u8>,
    /// Edges on the prefractal (domain boundary or interface).
    pub curve_edges: Vec<CurveEdge>,
    /// Edges on the outer boundary that is not the prefractal (outer square).
    pub outer_edges: Vec<[usize; 2]>,
    /// Grading parameters the mesh was built for, if graded.
    pub grading: Option<GradingParams<T>>,
    /// Requested size parameter.
    pub target_h: T,
}

/// Boundary trace indexing: curve nodes in traversal order with their arc
/// length coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMap<T> {
    pub nodes: Vec<usize>,
    pub arc: Vec<T>,
    /// Position in `nodes` of each mesh node (`usize::MAX` off the curve).
    pub position: Vec<usize>,
}

impl<T: Real> Triangulation<T> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [Point<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area (positive for counter-clockwise triangles).
    pub fn area(&self, t: usize) -> T {
        let [a, b, c] = self.vertices(t);
        scalar::cross(scalar::sub(b, a), scalar::sub(c, a)) / T::lit(2.0)
    }

    /// Diameter `h_S` (longest edge).
    pub fn diameter(&self, t: usize) -> T {
        let [a, b, c] = self.vertices(t);
        scalar::dist(a, b).max(scalar::dist(b, c)).max(scalar::dist(c, a))
    }

    /// Inradius `ρ_S = 2|S| / perimeter`.
    pub fn inradius(&self, t: usize) -> T {
        let [a, b, c] = self.vertices(t);
        let per = scalar::dist(a, b) + scalar::dist(b, c) + scalar::dist(c, a);
        T::lit(2.0) * self.area(t).abs() / per
    }

    /// Global mesh size `h = max h_S`.
    pub fn h(&self) -> T {
        (0..self.num_triangles()).fold(T::zero(), |m, t| m.max(self.diameter(t)))
    }

    pub fn min_diameter(&self) -> T {
        (0..self.num_triangles()).fold(T::infinity(), |m, t| m.min(self.diameter(t)))
    }

    pub fn max_shape_ratio(&self) -> T {
        (0..self.num_triangles()).fold(T::zero(), |m, t| m.max(self.diameter(t) / self.inradius(t)))
    }

    pub fn total_area(&self) -> T {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point<T> {
        let [a, b, c] = self.vertices(t);
        let third = T::one() / T::lit(3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    /// Edge → incident triangles.
    pub fn edge_map(&self) -> HashMap<[usize; 2], Vec<usize>> {
        let mut map: HashMap<[usize; 2], Vec<usize>> = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    /// Nodes on the prefractal.
    pub fn curve_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.curve_edges.iter().flat_map(|e| e.nodes).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Nodes on the outer (square) boundary.
    pub fn outer_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.outer_edges.iter().flat_map(|e| *e).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Verifies orientation, area, conformity and the boundary bookkeeping.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.num_triangles() {
            let a = self.area(t);
            if a <= T::tol(1e-14) {
                return Err(Error::DegenerateTriangle { index: t, area: a.as_f64() });
            }
        }
        let map = self.edge_map();
        let mut boundary: Vec<[usize; 2]> = Vec::new();
        for (e, ts) in &map {
            match ts.len() {
                1 => boundary.push(*e),
                2 => {}
                n => return Err(Error::Mesh(format!("edge {e:?} shared by {n} triangles"))),
            }
        }
        let mut declared: Vec<[usize; 2]> = self.outer_edges.iter().map(|e| edge_key(e[0], e[1])).collect();
        let interface = self.tags.iter().any(|&t| t == TAG_OUTER);
        for ce in &self.curve_edges {
            let key = edge_key(ce.nodes[0], ce.nodes[1]);
            let n = map.get(&key).map_or(0, Vec::len);
            if interface {
                if n != 2 {
                    return Err(Error::Mesh(format!("interface edge {key:?} has {n} triangles")));
                }
            } else {
                declared.push(key);
            }
        }
        declared.sort_unstable();
        boundary.sort_unstable();
        if declared != boundary {
            return Err(Error::Mesh(format!(
                "declared boundary ({} edges) differs from topological boundary ({} edges)",
                declared.len(),
                boundary.len()
            )));
        }
        Ok(())
    }

    /// Shape-regularity check against `kappa`.
    pub fn check_shape(&self, kappa: T) -> Result<()> {
        for t in 0..self.num_triangles() {
            let ratio = self.diameter(t) / self.inradius(t);
            if ratio > kappa {
                return Err(Error::Mesh(format!(
                    "triangle {t} has h/ρ = {ratio} above the regularity bound {kappa}"
                )));
            }
        }
        Ok(())
    }

    /// Locates the triangle containing `p` by brute force; returns the
    /// barycentric coordinates as well.
    pub fn locate(&self, p: Point<T>) -> Option<(usize, [T; 3])> {
        let tol = T::tol(1e-10);
        (0..self.num_triangles()).find_map(|t| {
            let bc = barycentric(self.vertices(t), p);
            (bc.iter().all(|&l| l >= -tol)).then_some((t, bc))
        })
    }
}

pub(crate) fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub fn barycentric<T: Real>(v: [Point<T>; 3], p: Point<T>) -> [T; 3] {
    let det = scalar::cross(scalar::sub(v[1], v[0]), scalar::sub(v[2], v[0]));
    let l1 = scalar::cross(scalar::sub(p, v[0]), scalar::sub(v[2], v[0])) / det;
    let l2 = scalar::cross(scalar::sub(v[1], v[0]), scalar::sub(p, v[0])) / det;
    [T::one() - l1 - l2, l1, l2]
}

/// Quasi-uniform mesh: lattice spacing `3^{-n}/m` with the smallest `m`
/// giving `h_S ≤ target_h`.
pub fn build_quasi_uniform_mesh<T: Real>(
    curve: &PrefractalCurve<T>,
    target_h: T,
    region: Region<T>,
    opts: &MeshOptions<T>,
) -> Result<Triangulation<T>> {
    if !(target_h > T::zero()) {
        return Err(invalid(format!("target_h must be positive, got {target_h}")));
    }
    if !curve.closed {
        return Err(invalid("meshing requires a closed curve"));
    }
    let seg = curve.segment_length(0);
    let m = (seg / target_h - T::tol(1e-9)).ceil().max(T::one());
    let spacing = seg / m;
    if spacing < opts.uniform_ratio * target_h {
        return Err(invalid(format!(
            "target_h {target_h} exceeds the segment length {seg} by more than 1/c"
        )));
    }
    let m = m.to_usize().expect("lattice factor fits usize");
    let mut tri = lattice::lattice_mesh(curve, m)?;
    tri.target_h = target_h;
    if let Region::WithOuterSquare { side, center, outer_h } = region {
        tri = outer::attach_outer_square(tri, curve, side, center.unwrap_or_else(|| curve.centroid()), outer_h)?;
    }
    tri.validate()?;
    tri.check_shape(opts.kappa)?;
    Ok(tri)
}

/// Graded mesh: quasi-uniform start at `target_h`, then longest-edge
/// bisection until both grading conditions hold.
pub fn build_graded_mesh<T: Real>(
    curve: &PrefractalCurve<T>,
    target_h: T,
    mu: T,
    region: Region<T>,
    opts: &MeshOptions<T>,
) -> Result<Triangulation<T>> {
    let params = GradingParams::new(target_h, mu, opts.sigma_g)?;
    let base = build_quasi_uniform_mesh(curve, target_h, region, opts)?;
    refine_graded(base, curve, params, opts)
}

/// Refines an existing mesh until it satisfies the grading conditions for
/// `params`. Refining a coarser graded mesh yields a nested hierarchy.
pub fn refine_graded<T: Real>(
    mut tri: Triangulation<T>,
    curve: &PrefractalCurve<T>,
    params: GradingParams<T>,
    opts: &MeshOptions<T>,
) -> Result<Triangulation<T>> {
    let eval = grading::Evaluator::new(curve, &tri, params);
    tri = refine::refine_until(tri, |tri, t| eval.triangle_passes(tri, t))?;
    tri.grading = Some(params);
    tri.target_h = params.target_h;
    tri.validate()?;
    tri.check_shape(opts.kappa)?;
    Ok(tri)
}

/// Uniform longest-edge refinement: bisects until every `h_S ≤ target_h`.
pub fn refine_uniform<T: Real>(tri: Triangulation<T>, target_h: T, opts: &MeshOptions<T>) -> Result<Triangulation<T>> {
    let cap = target_h * (T::one() + T::tol(1e-9));
    let mut tri = refine::refine_until(tri, |tri, t| tri.diameter(t) <= cap)?;
    tri.target_h = target_h;
    tri.check_shape(opts.kappa)?;
    Ok(tri)
}

/// Maps the curve nodes of the mesh to arc-length positions, in traversal
/// order.
pub fn boundary_trace_map<T: Real>(tri: &Triangulation<T>, curve: &PrefractalCurve<T>) -> Result<TraceMap<T>> {
    let tol = T::tol(1e-12) * T::lit(10.0);
    let mut arc_of: HashMap<usize, T> = HashMap::new();
    for e in &tri.curve_edges {
        for &n in &e.nodes {
            let s = curve
                .arc_position_on_segment(e.segment, tri.nodes[n], tol)
                .ok_or_else(|| Error::Mesh(format!("boundary node {n} is off curve segment {}", e.segment)))?;
            // the curve start vertex is reached again at the end of a closed loop
            let s = if e.segment + 1 == curve.num_segments() && curve.closed && s <= tol && e.nodes[1] == n {
                curve.total_length()
            } else {
                s
            };
            arc_of.entry(n).and_modify(|v| *v = v.min(s)).or_insert(s);
        }
    }
    let mut pairs: Vec<(T, usize)> = arc_of.into_iter().map(|(n, s)| (s, n)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite arc length"));
    let mut position = vec![usize::MAX; tri.num_nodes()];
    for (i, &(_, n)) in pairs.iter().enumerate() {
        position[n] = i;
    }
    for w in pairs.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Mesh("boundary nodes share an arc-length coordinate".into()));
        }
    }
    Ok(TraceMap { nodes: pairs.iter().map(|p| p.1).collect(), arc: pairs.iter().map(|p| p.0).collect(), position })
}

#[cfg(test)]
mod tests;
