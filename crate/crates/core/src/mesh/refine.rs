//! Longest-edge (Rivara) bisection with longest-edge propagation paths.
//!
//! Only longest edges are ever bisected, and the neighbour across an edge is
//! refined first whenever that edge is not its own longest one, so the mesh
//! stays conforming. Equal lengths are ordered by node indices so that every
//! triangle agrees on which edge is longest.

use std::collections::HashMap;

use super::{edge_key, CurveEdge, Triangulation};
use crate::error::{Error, Result};
use crate::scalar::{self, Real};

const NONE: usize = usize::MAX;

struct Refiner<T> {
    tri: Triangulation<T>,
    adj: HashMap<[usize; 2], [usize; 2]>,
    /// oriented curve edge and its segment, keyed by the unordered pair
    curve: HashMap<[usize; 2], ([usize; 2], usize)>,
    outer: HashMap<[usize; 2], [usize; 2]>,
}

impl<T: Real> Refiner<T> {
    fn new(tri: Triangulation<T>) -> Self {
        let mut adj: HashMap<[usize; 2], [usize; 2]> = HashMap::with_capacity(tri.triangles.len() * 2);
        for (t, v) in tri.triangles.iter().enumerate() {
            for k in 0..3 {
                let slot = adj.entry(edge_key(v[k], v[(k + 1) % 3])).or_insert([NONE, NONE]);
                if slot[0] == NONE {
                    slot[0] = t;
                } else {
                    slot[1] = t;
                }
            }
        }
        let curve = tri.curve_edges.iter().map(|e| (edge_key(e.nodes[0], e.nodes[1]), (e.nodes, e.segment))).collect();
        let outer = tri.outer_edges.iter().map(|e| (edge_key(e[0], e[1]), *e)).collect();
        Self { tri, adj, curve, outer }
    }

    fn len2(&self, e: [usize; 2]) -> T {
        let d = scalar::sub(self.tri.nodes[e[0]], self.tri.nodes[e[1]]);
        scalar::dot(d, d)
    }

    fn longest_edge(&self, t: usize) -> [usize; 2] {
        let v = self.tri.triangles[t];
        let mut best = edge_key(v[0], v[1]);
        let mut best_len = self.len2(best);
        for k in 1..3 {
            let e = edge_key(v[k], v[(k + 1) % 3]);
            let l = self.len2(e);
            let tie = (l - best_len).abs() <= T::tol(1e-9) * l.max(best_len);
            if (!tie && l > best_len) || (tie && e > best) {
                best = e;
                best_len = l;
            }
        }
        best
    }

    fn neighbour(&self, t: usize, e: [usize; 2]) -> Option<usize> {
        let slot = self.adj[&e];
        let other = if slot[0] == t { slot[1] } else { slot[0] };
        (other != NONE).then_some(other)
    }

    fn replace_adj(&mut self, e: [usize; 2], old: usize, new: usize) {
        let slot = self.adj.get_mut(&e).expect("edge present");
        if slot[0] == old {
            slot[0] = new;
        } else {
            debug_assert_eq!(slot[1], old);
            slot[1] = new;
        }
    }

    fn push_adj(&mut self, e: [usize; 2], t: usize) {
        let slot = self.adj.entry(e).or_insert([NONE, NONE]);
        if slot[0] == NONE {
            slot[0] = t;
        } else {
            slot[1] = t;
        }
    }

    fn bisect(&mut self, e: [usize; 2]) {
        let slot = self.adj.remove(&e).expect("edge present");
        let mid = scalar::lerp(self.tri.nodes[e[0]], self.tri.nodes[e[1]], T::lit(0.5));
        let m = self.tri.nodes.len();
        self.tri.nodes.push(mid);
        for t in slot.into_iter().filter(|&t| t != NONE) {
            let v = self.tri.triangles[t];
            let k = (0..3).find(|&k| edge_key(v[k], v[(k + 1) % 3]) == e).expect("edge of triangle");
            let (p, q, c) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
            let t2 = self.tri.triangles.len();
            self.tri.triangles[t] = [p, m, c];
            self.tri.triangles.push([m, q, c]);
            let tag = self.tri.tags[t];
            self.tri.tags.push(tag);
            self.replace_adj(edge_key(q, c), t, t2);
            self.push_adj(edge_key(m, c), t);
            self.push_adj(edge_key(m, c), t2);
            self.push_adj(edge_key(p, m), t);
            self.push_adj(edge_key(m, q), t2);
        }
        if let Some((oriented, seg)) = self.curve.remove(&e) {
            let [a, b] = oriented;
            self.curve.insert(edge_key(a, m), ([a, m], seg));
            self.curve.insert(edge_key(m, b), ([m, b], seg));
        }
        if let Some([a, b]) = self.outer.remove(&e) {
            self.outer.insert(edge_key(a, m), [a, m]);
            self.outer.insert(edge_key(m, b), [m, b]);
        }
    }

    /// Bisects along longest-edge propagation paths until `t0` itself has
    /// been split.
    fn lepp_bisect(&mut self, t0: usize) -> Result<()> {
        let original = self.tri.triangles[t0];
        let mut guard = 0usize;
        while self.tri.triangles[t0] == original {
            let mut t = t0;
            loop {
                guard += 1;
                if guard > 10_000_000 {
                    return Err(Error::Mesh("longest-edge propagation did not terminate".into()));
                }
                let e = self.longest_edge(t);
                match self.neighbour(t, e) {
                    Some(nb) if self.longest_edge(nb) != e => t = nb,
                    _ => {
                        self.bisect(e);
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Triangulation<T> {
        let mut by_segment: HashMap<usize, Vec<[usize; 2]>> = HashMap::new();
        for (oriented, seg) in self.curve.into_values() {
            by_segment.entry(seg).or_default().push(oriented);
        }
        let mut segs: Vec<usize> = by_segment.keys().copied().collect();
        segs.sort_unstable();
        let mut curve_edges = Vec::new();
        for seg in segs {
            let edges = &by_segment[&seg];
            let next: HashMap<usize, usize> = edges.iter().map(|e| (e[0], e[1])).collect();
            let ends: std::collections::HashSet<usize> = edges.iter().map(|e| e[1]).collect();
            let mut a = edges.iter().map(|e| e[0]).find(|n| !ends.contains(n)).expect("segment chain has a start");
            while let Some(&b) = next.get(&a) {
                curve_edges.push(CurveEdge { nodes: [a, b], segment: seg });
                a = b;
            }
        }
        self.tri.curve_edges = curve_edges;
        let mut outer: Vec<[usize; 2]> = self.outer.into_values().collect();
        outer.sort_unstable();
        self.tri.outer_edges = outer;
        self.tri
    }
}

/// Bisects triangles until `passes(tri, t)` holds for every triangle.
pub fn refine_until<T, F>(tri: Triangulation<T>, passes: F) -> Result<Triangulation<T>>
where
    T: Real,
    F: Fn(&Triangulation<T>, usize) -> bool,
{
    let mut r = Refiner::new(tri);
    loop {
        let mut changed = false;
        let mut t = 0;
        while t < r.tri.triangles.len() {
            if passes(&r.tri, t) {
                t += 1;
            } else {
                r.lepp_bisect(t)?;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(r.finish())
}
