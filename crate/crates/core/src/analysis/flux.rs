use crate::assembly::ScalarField;
use crate::error::{invalid, Result};
use crate::mesh::{edge_key, Triangulation};
use crate::scalar::{Point, Real};

#[derive(Debug, Clone)]
struct EdgeFlux<T> {
    segment: usize,
    /// `L · k_T ∇φ_i · ν / 2` for the three nodes of each adjacent triangle.
    sides: Vec<([usize; 3], [T; 3])>,
}

/// Precomputed normal fluxes `∫_e k ∇u · ν ds` across curve edges, with
/// `ν` pointing to the right of the curve traversal (outward for a
/// counter-clockwise curve). Interface edges average the two one-sided P1
/// fluxes.
#[derive(Debug, Clone)]
pub struct FluxEvaluator<T> {
    edges: Vec<EdgeFlux<T>>,
}

impl<T: Real> FluxEvaluator<T> {
    pub fn new(tri: &Triangulation<T>, k: &ScalarField<T>) -> Self {
        let map = tri.edge_map();
        let half = T::lit(0.5);
        let edges = tri
            .curve_edges
            .iter()
            .map(|ce| {
                let [a, b] = ce.nodes;
                let (pa, pb) = (tri.nodes[a], tri.nodes[b]);
                // length times unit normal
                let nu: Point<T> = [pb[1] - pa[1], pa[0] - pb[0]];
                let adj = map.get(&edge_key(a, b)).cloned().unwrap_or_default();
                let weight = if adj.len() == 2 { half } else { T::one() };
                let sides = adj
                    .iter()
                    .map(|&t| {
                        let tn = tri.triangles[t];
                        let v = tri.vertices(t);
                        let area2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
                        let kt = k.on_triangle(tri, t) * weight;
                        let mut c = [T::zero(); 3];
                        for i in 0..3 {
                            let (p, q) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                            let g = [(p[1] - q[1]) / area2, (q[0] - p[0]) / area2];
                            c[i] = kt * (g[0] * nu[0] + g[1] * nu[1]);
                        }
                        (tn, c)
                    })
                    .collect();
                EdgeFlux { segment: ce.segment, sides }
            })
            .collect();
        Self { edges }
    }

    /// Flux of one curve edge; `None` unless the edge is an interface.
    pub fn edge_flux(&self, u: &[T], edge: usize) -> Option<T> {
        let e = &self.edges[edge];
        (e.sides.len() == 2).then(|| {
            e.sides.iter().fold(T::zero(), |acc, (nodes, c)| acc + (0..3).fold(T::zero(), |s, i| s + c[i] * u[nodes[i]]))
        })
    }

    /// Total flux across the curve edges whose segment is flagged.
    pub fn flux(&self, u: &[T], segments: &[bool]) -> Result<T> {
        let mut total = T::zero();
        for (i, e) in self.edges.iter().enumerate() {
            let Some(&on) = segments.get(e.segment) else {
                return Err(invalid(format!("segment mask has {} entries, edge lies on segment {}", segments.len(), e.segment)));
            };
            if !on {
                continue;
            }
            total += self
                .edge_flux(u, i)
                .ok_or_else(|| invalid(format!("curve edge {i} on segment {} is not an interface edge", e.segment)))?;
        }
        Ok(total)
    }
}

pub fn interface_flux<T: Real>(u: &[T], tri: &Triangulation<T>, k: &ScalarField<T>, segments: &[bool]) -> Result<T> {
    if u.len() != tri.num_nodes() {
        return Err(invalid(format!("state has {} entries for {} nodes", u.len(), tri.num_nodes())));
    }
    FluxEvaluator::new(tri, k).flux(u, segments)
}
