//! Element-size conditions for meshes graded toward reentrant vertices.
//!
//! With `r` the distance to the reentrant vertices and `h` the size
//! parameter:
//!
//! * (G1) a triangle with a reentrant vertex as a corner has
//!   `h_S ≤ σ_g · h^{1/(1-μ)}`;
//! * (G2) any other triangle has `h_S ≤ σ_g · h · (inf_S r)^μ`, with `r`
//!   capped at the domain diameter.

use std::collections::HashSet;

use super::Triangulation;
use crate::error::{invalid, Result};
use crate::geometry::PrefractalCurve;
use crate::scalar::{self, Point, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradingParams<T> {
    pub target_h: T,
    pub mu: T,
    pub sigma_g: T,
}

impl<T: Real> GradingParams<T> {
    pub fn new(target_h: T, mu: T, sigma_g: T) -> Result<Self> {
        if !(target_h > T::zero()) {
            return Err(invalid(format!("target_h must be positive, got {target_h}")));
        }
        if !(mu > T::lit(0.25) && mu < T::lit(0.5)) {
            return Err(invalid(format!("grading exponent must lie in (1/4, 1/2), got {mu}")));
        }
        if !(sigma_g > T::zero()) {
            return Err(invalid("sigma_g must be positive"));
        }
        Ok(Self { target_h, mu, sigma_g })
    }

    /// Size bound for triangles touching a reentrant vertex.
    pub fn corner_bound(&self) -> T {
        self.sigma_g * self.target_h.powf(T::one() / (T::one() - self.mu))
    }

    /// Size bound for a triangle at distance `r` from the reentrant set.
    pub fn far_bound(&self, r: T) -> T {
        self.sigma_g * self.target_h * r.powf(self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Corner,
    Far,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleGrading<T> {
    pub condition: Condition,
    /// `h_S / bound`; at most one when the triangle passes.
    pub ratio: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradingReport<T> {
    pub triangles: Vec<TriangleGrading<T>>,
    pub worst_corner_ratio: T,
    pub worst_far_ratio: T,
    pub corner_pass: bool,
    pub far_pass: bool,
}

impl<T: Real> GradingReport<T> {
    pub fn all_pass(&self) -> bool {
        self.corner_pass && self.far_pass
    }

    pub fn failures(&self) -> usize {
        self.triangles.iter().filter(|t| !t.pass).count()
    }
}

pub(crate) struct Evaluator<T> {
    params: GradingParams<T>,
    corners: Vec<Point<T>>,
    corner_nodes: HashSet<usize>,
    cap: T,
}

fn dist_to_triangle<T: Real>(p: Point<T>, v: [Point<T>; 3]) -> T {
    let bc = super::barycentric(v, p);
    if bc.iter().all(|&l| l >= T::zero()) {
        return T::zero();
    }
    scalar::dist_to_segment(p, v[0], v[1])
        .min(scalar::dist_to_segment(p, v[1], v[2]))
        .min(scalar::dist_to_segment(p, v[2], v[0]))
}

impl<T: Real> Evaluator<T> {
    pub(crate) fn new(curve: &PrefractalCurve<T>, tri: &Triangulation<T>, params: GradingParams<T>) -> Self {
        let corners: Vec<Point<T>> = curve.reentrant.iter().map(|&j| curve.vertices[j]).collect();
        let tol = T::tol(1e-10);
        let corner_nodes = tri
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, p)| corners.iter().any(|&c| scalar::dist(**p, c) <= tol))
            .map(|(i, _)| i)
            .collect();
        let (mut lo, mut hi) = ([T::infinity(); 2], [T::neg_infinity(); 2]);
        for p in &tri.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let cap = scalar::dist(lo, hi);
        Self { params, corners, corner_nodes, cap }
    }

    pub(crate) fn evaluate(&self, tri: &Triangulation<T>, t: usize) -> TriangleGrading<T> {
        let h_s = tri.diameter(t);
        let touches = tri.triangles[t].iter().any(|n| self.corner_nodes.contains(n));
        let slack = T::one() + T::tol(1e-9);
        if touches {
            let ratio = h_s / self.params.corner_bound();
            TriangleGrading { condition: Condition::Corner, ratio, pass: ratio <= slack }
        } else {
            let v = tri.vertices(t);
            let r = self.corners.iter().fold(T::infinity(), |m, &c| m.min(dist_to_triangle(c, v))).min(self.cap);
            let ratio = h_s / self.params.far_bound(r);
            TriangleGrading { condition: Condition::Far, ratio, pass: ratio <= slack }
        }
    }

    pub(crate) fn triangle_passes(&self, tri: &Triangulation<T>, t: usize) -> bool {
        self.evaluate(tri, t).pass
    }
}

/// Evaluates (G1)/(G2) on every triangle.
pub fn check_grading<T: Real>(tri: &Triangulation<T>, curve: &PrefractalCurve<T>, params: GradingParams<T>) -> GradingReport<T> {
    let eval = Evaluator::new(curve, tri, params);
    let triangles: Vec<TriangleGrading<T>> = (0..tri.num_triangles()).map(|t| eval.evaluate(tri, t)).collect();
    let worst = |c: Condition| {
        triangles.iter().filter(|g| g.condition == c).fold(T::zero(), |m, g| m.max(g.ratio))
    };
    let pass = |c: Condition| triangles.iter().filter(|g| g.condition == c).all(|g| g.pass);
    GradingReport {
        worst_corner_ratio: worst(Condition::Corner),
        worst_far_ratio: worst(Condition::Far),
        corner_pass: pass(Condition::Corner),
        far_pass: pass(Condition::Far),
        triangles,
    }
}
