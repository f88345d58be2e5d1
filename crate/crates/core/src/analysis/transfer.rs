use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::mesh::{barycentric, Triangulation};
use crate::scalar::{Point, Real};

/// Bucket grid over the bounding box of a mesh for point location.
#[derive(Debug, Clone)]
pub struct PointLocator<'a, T> {
    tri: &'a Triangulation<T>,
    origin: Point<T>,
    cell: T,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a, T: Real> PointLocator<'a, T> {
    pub fn new(tri: &'a Triangulation<T>) -> Self {
        let (mut lo, mut hi) = ([T::infinity(); 2], [T::neg_infinity(); 2]);
        for p in &tri.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let n = tri.num_triangles().max(1);
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(T::min_positive_value());
        let per_side = T::from_usize_lossy(n).sqrt().ceil().max(T::one());
        let cell = extent / per_side;
        let count = |d: usize| ((hi[d] - lo[d]) / cell).floor().to_usize().unwrap_or(0) + 1;
        let dims = [count(0), count(1)];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        let mut loc = Self { tri, origin: lo, cell, dims, buckets: Vec::new() };
        for t in 0..tri.num_triangles() {
            let v = tri.vertices(t);
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for p in v {
                let c = loc.cell_of(p);
                for d in 0..2 {
                    a[d] = a[d].min(c[d]);
                    b[d] = b[d].max(c[d]);
                }
            }
            for j in a[1]..=b[1] {
                for i in a[0]..=b[0] {
                    buckets[j * dims[0] + i].push(t);
                }
            }
        }
        loc.buckets = buckets;
        loc
    }

    fn cell_of(&self, p: Point<T>) -> [usize; 2] {
        let idx = |d: usize| {
            let x = ((p[d] - self.origin[d]) / self.cell).floor();
            if x < T::zero() {
                0
            } else {
                x.to_usize().unwrap_or(usize::MAX).min(self.dims[d] - 1)
            }
        };
        [idx(0), idx(1)]
    }

    /// Triangle containing `p` with barycentric coordinates, choosing the
    /// candidate with the largest minimum coordinate.
    pub fn locate(&self, p: Point<T>) -> Option<(usize, [T; 3])> {
        let c = self.cell_of(p);
        let tol = T::tol(1e-9);
        let mut best: Option<(usize, [T; 3], T)> = None;
        for &t in &self.buckets[c[1] * self.dims[0] + c[0]] {
            let bc = barycentric(self.tri.vertices(t), p);
            let m = bc[0].min(bc[1]).min(bc[2]);
            if best.as_ref().is_none_or(|b| m > b.2) {
                best = Some((t, bc, m));
            }
        }
        best.filter(|b| b.2 >= -tol).map(|(t, bc, _)| (t, bc))
    }
}

/// P1 evaluation operator from a coarse mesh to a fixed point set.
#[derive(Debug, Clone)]
pub struct Interpolation<T> {
    source_nodes: usize,
    stencils: Vec<([usize; 3], [T; 3])>,
}

impl<T: Real> Interpolation<T> {
    pub fn new(coarse: &Triangulation<T>, points: &[Point<T>]) -> Result<Self> {
        let loc = PointLocator::new(coarse);
        let stencils = points
            .par_iter()
            .map(|&p| {
                let (t, bc) = loc.locate(p).ok_or_else(|| Error::Mesh(format!("point {p:?} lies outside the mesh")))?;
                Ok((coarse.triangles[t], bc))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { source_nodes: coarse.num_nodes(), stencils })
    }

    pub fn apply(&self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.source_nodes {
            return Err(invalid(format!("state has {} entries for {} nodes", u.len(), self.source_nodes)));
        }
        Ok(self.stencils.par_iter().map(|(n, bc)| bc[0] * u[n[0]] + bc[1] * u[n[1]] + bc[2] * u[n[2]]).collect())
    }
}

/// P1 evaluation of `u` (nodal on `coarse`) at `points`.
pub fn prolongate<T: Real>(coarse: &Triangulation<T>, u: &[T], points: &[Point<T>]) -> Result<Vec<T>> {
    Interpolation::new(coarse, points)?.apply(u)
}

/// Refuses references that are not at least four times finer in space and
/// eight times finer in time than the studied discretization.
pub fn check_refinement_ratio<T: Real>(h_ref: T, h: T, dt_ref: T, dt: T) -> Result<()> {
    let slack = T::one() + T::tol(1e-9);
    if h_ref * T::lit(4.0) > h * slack {
        return Err(Error::Study(format!("reference mesh size {h_ref} is not below h/4 = {}", h / T::lit(4.0))));
    }
    if dt_ref * T::lit(8.0) > dt * slack {
        return Err(Error::Study(format!("reference step {dt_ref} is not below dt/8 = {}", dt / T::lit(8.0))));
    }
    Ok(())
}
