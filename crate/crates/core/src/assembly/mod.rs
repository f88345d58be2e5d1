//! P1 operators of the energy form: bulk stiffness, composite mass for
//! `dm = dx + ds`, tangential stiffness and reaction mass on the prefractal,
//! the dense nonlocal block, load vectors and Dirichlet elimination.
//!
//! All boundary terms live on the curve edges of the triangulation, which
//! are the domain boundary for interior meshes and the interface for
//! two-region meshes.

mod coefficients;
mod nonlocal;

use std::io::Write;

use rayon::prelude::*;

pub use coefficients::{CoefficientField, ScalarField, Source};
pub use nonlocal::{assemble_nonlocal_block, BoundaryMesh};

use crate::error::{invalid, Error, Result};
use crate::geometry::PrefractalCurve;
use crate::linalg::{CsrMatrix, DenseMatrix, HybridOperator, Triplets};
use crate::mesh::{boundary_trace_map, TraceMap, Triangulation};
use crate::scalar::{self, Point, Real};

/// Where the nonlocal form is active.
#[derive(Debug, Clone, PartialEq)]
pub enum ActiveSet<T> {
    None,
    All,
    /// Flag per curve segment.
    Segments(Vec<bool>),
    /// Arc-length intervals; must be unions of whole segments.
    ArcIntervals(Vec<(T, T)>),
}

impl<T: Real> ActiveSet<T> {
    pub fn segment_mask(&self, curve: &PrefractalCurve<T>) -> Result<Vec<bool>> {
        let n = curve.num_segments();
        match self {
            Self::None => Ok(vec![false; n]),
            Self::All => Ok(vec![true; n]),
            Self::Segments(mask) if mask.len() == n => Ok(mask.clone()),
            Self::Segments(mask) => Err(invalid(format!("segment mask has {} entries for {n} segments", mask.len()))),
            Self::ArcIntervals(iv) => curve.segments_in_arc_intervals(iv),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalOptions<T> {
    pub active: ActiveSet<T>,
    pub quadrature_order: usize,
}

impl<T: Real> Default for NonlocalOptions<T> {
    fn default() -> Self {
        Self { active: ActiveSet::All, quadrature_order: 6 }
    }
}

/// All discrete operators of one mesh and coefficient set.
#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    /// `ρC_p` bulk mass plus `ρ_sC_{p,s}` boundary mass.
    pub mass: CsrMatrix<T>,
    pub bulk_stiffness: CsrMatrix<T>,
    /// Includes the factor `k_s`.
    pub tangential_stiffness: CsrMatrix<T>,
    pub boundary_mass: CsrMatrix<T>,
    /// Unweighted nonlocal matrix on `nonlocal_dofs`.
    pub nonlocal: DenseMatrix<T>,
    pub nonlocal_dofs: Vec<usize>,
    pub nonlocal_weight: T,
    pub trace: TraceMap<T>,
    /// `S_bulk + S_tang + M_b + weight·Θ`.
    pub a: HybridOperator<T>,
}

impl<T: Real> AssembledSystem<T> {
    pub fn dim(&self) -> usize {
        self.mass.rows
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.trace.nodes
    }

    pub fn nonlocal_quad_form(&self, v: &[T]) -> T {
        let vb: Vec<T> = self.nonlocal_dofs.iter().map(|&d| v[d]).collect();
        self.nonlocal.quad_form(&vb)
    }

    /// `[bulk, tangential, reaction, weighted nonlocal]` parts of `vᵀAv`.
    pub fn energy_terms(&self, v: &[T]) -> [T; 4] {
        [
            self.bulk_stiffness.quad_form(v),
            self.tangential_stiffness.quad_form(v),
            self.boundary_mass.quad_form(v),
            self.nonlocal_weight * self.nonlocal_quad_form(v),
        ]
    }
}

fn gradients<T: Real>(v: [Point<T>; 3]) -> ([Point<T>; 3], T) {
    let area2 = scalar::cross(scalar::sub(v[1], v[0]), scalar::sub(v[2], v[0]));
    let g = |a: Point<T>, b: Point<T>| [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2];
    ([g(v[1], v[2]), g(v[2], v[0]), g(v[0], v[1])], area2 / T::lit(2.0))
}

fn check_areas<T: Real>(tri: &Triangulation<T>) -> Result<()> {
    for t in 0..tri.num_triangles() {
        let a = tri.area(t);
        if a <= T::tol(1e-14) {
            return Err(Error::DegenerateTriangle { index: t, area: a.as_f64() });
        }
    }
    Ok(())
}

/// Local P1 stiffness of one triangle with unit conductivity.
pub fn local_stiffness<T: Real>(v: [Point<T>; 3]) -> [[T; 3]; 3] {
    let (g, area) = gradients(v);
    let mut k = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * scalar::dot(g[i], g[j]);
        }
    }
    k
}

fn element_triplets<T: Real, const N: usize>(locals: Vec<([usize; N], [[T; N]; N])>, n: usize) -> CsrMatrix<T> {
    let mut t = Triplets::with_capacity(n, n, locals.len() * N * N);
    for (nodes, m) in locals {
        for i in 0..N {
            for j in 0..N {
                t.push(nodes[i], nodes[j], m[i][j]);
            }
        }
    }
    t.build()
}

pub fn assemble_bulk_stiffness<T: Real>(tri: &Triangulation<T>, k: &ScalarField<T>) -> Result<CsrMatrix<T>> {
    check_areas(tri)?;
    let locals: Vec<_> = (0..tri.num_triangles())
        .into_par_iter()
        .map(|t| {
            let kt = k.on_triangle(tri, t);
            if !(kt > T::zero()) {
                return Err(invalid(format!("conductivity {kt} on triangle {t} is not positive")));
            }
            Ok((tri.triangles[t], local_stiffness(tri.vertices(t)).map(|r| r.map(|x| x * kt))))
        })
        .collect::<Result<_>>()?;
    Ok(element_triplets(locals, tri.num_nodes()))
}

pub fn assemble_bulk_mass<T: Real>(tri: &Triangulation<T>, rho_cp: &ScalarField<T>) -> Result<CsrMatrix<T>> {
    check_areas(tri)?;
    let locals: Vec<_> = (0..tri.num_triangles())
        .into_par_iter()
        .map(|t| {
            let c = rho_cp.on_triangle(tri, t);
            if !(c > T::zero()) {
                return Err(invalid(format!("heat capacity {c} on triangle {t} is not positive")));
            }
            let a = tri.area(t) * c / T::lit(12.0);
            let mut m = [[a; 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = a * T::lit(2.0);
            }
            Ok((tri.triangles[t], m))
        })
        .collect::<Result<_>>()?;
    Ok(element_triplets(locals, tri.num_nodes()))
}

fn edge_matrix<T: Real>(tri: &Triangulation<T>, f: impl Fn(Point<T>, Point<T>) -> Result<[[T; 2]; 2]>) -> Result<CsrMatrix<T>> {
    let locals: Vec<_> = tri
        .curve_edges
        .iter()
        .map(|e| Ok((e.nodes, f(tri.nodes[e.nodes[0]], tri.nodes[e.nodes[1]])?)))
        .collect::<Result<_>>()?;
    Ok(element_triplets(locals, tri.num_nodes()))
}

/// `∫_{K_n} c uv ds` with exact P1 edge mass.
pub fn assemble_curve_mass<T: Real>(tri: &Triangulation<T>, c: T) -> Result<CsrMatrix<T>> {
    edge_matrix(tri, |a, b| {
        let l = scalar::dist(a, b) * c / T::lit(6.0);
        Ok([[l * T::lit(2.0), l], [l, l * T::lit(2.0)]])
    })
}

/// Composite mass `ρC_p (u, v)_Ω + ρ_sC_{p,s} (u, v)_{K_n}`.
pub fn assemble_composite_mass<T: Real>(tri: &Triangulation<T>, rho_cp: &ScalarField<T>, rho_cp_s: T) -> Result<CsrMatrix<T>> {
    if !(rho_cp_s > T::zero()) {
        return Err(invalid("boundary heat capacity must be positive"));
    }
    Ok(assemble_bulk_mass(tri, rho_cp)?.add(T::one(), &assemble_curve_mass(tri, rho_cp_s)?, T::one()))
}

/// `k_s ∫_{K_n} ∂_s u ∂_s v ds`, edge by edge.
pub fn assemble_tangential_stiffness<T: Real>(tri: &Triangulation<T>, k_s: T) -> Result<CsrMatrix<T>> {
    edge_matrix(tri, |a, b| {
        let l = k_s / scalar::dist(a, b);
        Ok([[l, -l], [-l, l]])
    })
}

/// `∫_{K_n} b uv ds` with three-point Gauss on every edge.
pub fn assemble_boundary_reaction<T: Real>(tri: &Triangulation<T>, b: &ScalarField<T>) -> Result<CsrMatrix<T>> {
    let (xs, ws) = scalar::gauss_legendre_unit(3);
    edge_matrix(tri, |p, q| {
        let l = scalar::dist(p, q);
        let mut m = [[T::zero(); 2]; 2];
        for (&x, &w) in xs.iter().zip(&ws) {
            let s = T::lit(x);
            let bv = b.on_curve(scalar::lerp(p, q, s))?;
            if !(bv >= T::zero()) {
                return Err(invalid(format!("reaction coefficient {bv} is negative")));
            }
            let phi = [T::one() - s, s];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += T::lit(w) * l * bv * phi[i] * phi[j];
                }
            }
        }
        Ok(m)
    })
}

/// Nonlocal block on the curve edges of `tri`, indexed by global node ids.
pub fn assemble_nonlocal<T: Real>(
    tri: &Triangulation<T>,
    curve: &PrefractalCurve<T>,
    trace: &TraceMap<T>,
    opts: &NonlocalOptions<T>,
) -> Result<(DenseMatrix<T>, Vec<usize>)> {
    let mask = opts.active.segment_mask(curve)?;
    let bm = BoundaryMesh::from_triangulation(tri, trace);
    let active: Vec<bool> = bm.segment.iter().map(|&s| mask[s]).collect();
    let (block, local) = assemble_nonlocal_block(&bm, &active, opts.quadrature_order)?;
    Ok((block, local.into_iter().map(|k| trace.nodes[k]).collect()))
}

pub fn assemble_system<T: Real>(
    tri: &Triangulation<T>,
    curve: &PrefractalCurve<T>,
    coeffs: &CoefficientField<T>,
    nonlocal: &NonlocalOptions<T>,
) -> Result<AssembledSystem<T>> {
    coeffs.check_scalars()?;
    let trace = boundary_trace_map(tri, curve)?;
    let mass = assemble_composite_mass(tri, &coeffs.rho_cp, coeffs.rho_cp_s)?;
    let bulk_stiffness = assemble_bulk_stiffness(tri, &coeffs.k)?;
    let tangential_stiffness = assemble_tangential_stiffness(tri, coeffs.k_s)?;
    let boundary_mass = assemble_boundary_reaction(tri, &coeffs.b)?;
    let (nonlocal_block, nonlocal_dofs) = assemble_nonlocal(tri, curve, &trace, nonlocal)?;
    let sparse = bulk_stiffness.add(T::one(), &tangential_stiffness, T::one()).add(T::one(), &boundary_mass, T::one());
    let mut weighted = nonlocal_block.clone();
    for v in &mut weighted.data {
        *v *= coeffs.nonlocal_weight;
    }
    let a = HybridOperator::new(sparse, weighted, nonlocal_dofs.clone())?;
    Ok(AssembledSystem {
        mass,
        bulk_stiffness,
        tangential_stiffness,
        boundary_mass,
        nonlocal: nonlocal_block,
        nonlocal_dofs,
        nonlocal_weight: coeffs.nonlocal_weight,
        trace,
        a,
    })
}

fn triangle_rule<T: Real>() -> [([T; 3], T); 3] {
    let (a, b) = (T::lit(2.0 / 3.0), T::lit(1.0 / 6.0));
    let w = T::one() / T::lit(3.0);
    [([a, b, b], w), ([b, a, b], w), ([b, b, a], w)]
}

/// `∫_Ω f(t, ·) φ_i dx` with the three-point degree-two rule.
pub fn assemble_bulk_load<T: Real>(tri: &Triangulation<T>, f: &Source<T>, t: T) -> Vec<T> {
    let rule = triangle_rule::<T>();
    let parts: Vec<([usize; 3], [T; 3])> = (0..tri.num_triangles())
        .into_par_iter()
        .map(|k| {
            let v = tri.vertices(k);
            let area = tri.area(k);
            let mut loc = [T::zero(); 3];
            for (l, w) in rule {
                let p = [
                    l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                    l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                ];
                let fv = f.eval(t, p) * w * area;
                for i in 0..3 {
                    loc[i] += fv * l[i];
                }
            }
            (tri.triangles[k], loc)
        })
        .collect();
    let mut out = vec![T::zero(); tri.num_nodes()];
    for (nodes, loc) in parts {
        for i in 0..3 {
            out[nodes[i]] += loc[i];
        }
    }
    out
}

/// `∫_{K_n} f(t, ·) φ_i ds` with two-point Gauss per edge.
pub fn assemble_curve_load<T: Real>(tri: &Triangulation<T>, f: &Source<T>, t: T) -> Vec<T> {
    let g = T::lit(0.5 / 3f64.sqrt());
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); tri.num_nodes()];
    for e in &tri.curve_edges {
        let (p, q) = (tri.nodes[e.nodes[0]], tri.nodes[e.nodes[1]]);
        let l = scalar::dist(p, q);
        for s in [half - g, half + g] {
            let fv = f.eval(t, scalar::lerp(p, q, s)) * l * half;
            out[e.nodes[0]] += fv * (T::one() - s);
            out[e.nodes[1]] += fv * s;
        }
    }
    out
}

/// `(f(t), φ_i)_{L²(Ω,m)}`: bulk plus curve contribution.
pub fn assemble_load<T: Real>(tri: &Triangulation<T>, f: &Source<T>, t: T) -> Vec<T> {
    let mut out = assemble_bulk_load(tri, f, t);
    for (o, c) in out.iter_mut().zip(assemble_curve_load(tri, f, t)) {
        *o += c;
    }
    out
}

/// System restricted to the free nodes after eliminating `u = value` on a
/// node set of the outer boundary.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem<T> {
    pub free: Vec<usize>,
    pub constrained: Vec<usize>,
    pub value: T,
    pub mass: CsrMatrix<T>,
    pub a: HybridOperator<T>,
    /// `−A_fc g`, added to every free load vector.
    pub load_shift: Vec<T>,
    pub full_dim: usize,
}

impl<T: Real> ConstrainedSystem<T> {
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn restrict(&self, full: &[T]) -> Vec<T> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Free load plus the lifting correction.
    pub fn restrict_load(&self, full: &[T]) -> Vec<T> {
        self.free.iter().zip(&self.load_shift).map(|(&i, &s)| full[i] + s).collect()
    }

    pub fn expand(&self, free: &[T]) -> Vec<T> {
        let mut out = vec![self.value; self.full_dim];
        for (&i, &v) in self.free.iter().zip(free) {
            out[i] = v;
        }
        out
    }
}

/// Symmetric elimination of `u = value` on `nodes`. Curve nodes may not be
/// constrained.
pub fn apply_dirichlet<T: Real>(system: &AssembledSystem<T>, nodes: &[usize], value: T) -> Result<ConstrainedSystem<T>> {
    let n = system.dim();
    let mut fixed = vec![false; n];
    for &i in nodes {
        if i >= n {
            return Err(invalid(format!("constrained node {i} out of range")));
        }
        if system.trace.position[i] != usize::MAX {
            return Err(invalid(format!("node {i} lies on the prefractal and cannot be constrained")));
        }
        fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let constrained: Vec<usize> = (0..n).filter(|&i| fixed[i]).collect();
    let mut g = vec![T::zero(); n];
    for &i in &constrained {
        g[i] = value;
    }
    let ag = crate::linalg::LinearOperator::apply(&system.a, &g);
    Ok(ConstrainedSystem {
        load_shift: free.iter().map(|&i| -ag[i]).collect(),
        mass: system.mass.submatrix(&free),
        a: system.a.submatrix(&free),
        free,
        constrained,
        value,
        full_dim: n,
    })
}

/// Coordinate dump `i j value` of a sparse matrix under a `# name rows cols nnz` header.
pub fn write_sparse<T: Real, W: Write>(name: &str, m: &CsrMatrix<T>, mut out: W) -> Result<()> {
    writeln!(out, "# {name} {} {} {}", m.rows, m.cols, m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(out, "{i} {j} {:.16e}", v.as_f64())?;
    }
    Ok(())
}

/// Coordinate dump of a dense block with its global indices.
pub fn write_dense<T: Real, W: Write>(name: &str, m: &DenseMatrix<T>, dofs: &[usize], mut out: W) -> Result<()> {
    writeln!(out, "# {name} {} {} {}", m.rows, m.cols, m.rows * m.cols)?;
    for a in 0..m.rows {
        for b in 0..m.cols {
            writeln!(out, "{} {} {:.16e}", dofs[a], dofs[b], m[(a, b)].as_f64())?;
        }
    }
    Ok(())
}
