//! `(∫ r^{2σ} |D²u|² dx)^{1/2}` for closed-form `u`, with `r` the distance
//! to a set of curve vertices.
//!
//! Each triangle is integrated by global adaptive subdivision. Cells
//! without a singular corner use a degree-five rule checked against its
//! four children. Cells with a
//! singular corner are collapsed onto it (Duffy) and the radial variable is
//! stretched by the power law measured along the cell, which integrates
//! pure power singularities exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist_to_vertex_set, PrefractalCurve, VertexSet};
use crate::mesh::Triangulation;
use crate::scalar::{self, gauss_legendre_unit, Point, Real};

pub type Hessian<T> = [[T; 2]; 2];

const MAX_DEPTH: usize = 40;
const DUFFY_LOW: usize = 12;
const DUFFY_HIGH: usize = 18;
const REL_TOL: f64 = 1e-9;

pub fn weighted_h2_seminorm<T: Real>(
    hess: impl Fn(Point<T>) -> Hessian<T> + Sync,
    tri: &Triangulation<T>,
    curve: &PrefractalCurve<T>,
    sigma: T,
    which: VertexSet,
) -> Result<T> {
    let points = curve.vertex_set(which);
    if points.is_empty() {
        return Ok(T::zero());
    }
    let r = |x: Point<T>| dist_to_vertex_set(x, curve, which);
    integrate(&hess, tri, sigma, &points, &r)
}

/// Same seminorm with `r` the distance to an explicit point set.
pub fn weighted_h2_seminorm_at<T: Real>(
    hess: impl Fn(Point<T>) -> Hessian<T> + Sync,
    tri: &Triangulation<T>,
    sigma: T,
    points: &[Point<T>],
) -> Result<T> {
    if points.is_empty() {
        return Err(invalid("weighted seminorm needs at least one vertex"));
    }
    let r = |x: Point<T>| points.iter().map(|&p| scalar::dist(x, p)).fold(T::infinity(), T::min);
    integrate(&hess, tri, sigma, points, &r)
}

struct Integrand<'a, T, H, R> {
    hess: &'a H,
    r: &'a R,
    two_sigma: T,
    points: &'a [Point<T>],
    duffy_low: Rule<T>,
    duffy_high: Rule<T>,
}

type Rule<T> = (Vec<T>, Vec<T>);

fn rule<T: Real>(n: usize) -> Rule<T> {
    let (x, w) = gauss_legendre_unit(n);
    (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect())
}

fn integrate<T: Real, H, R>(hess: &H, tri: &Triangulation<T>, sigma: T, points: &[Point<T>], r: &R) -> Result<T>
where
    H: Fn(Point<T>) -> Hessian<T> + Sync,
    R: Fn(Point<T>) -> T + Sync,
{
    if !(sigma > T::zero() && sigma < T::one()) {
        return Err(invalid(format!("weight exponent must lie in (0, 1), got {sigma}")));
    }
    let f = Integrand { hess, r, two_sigma: sigma + sigma, points, duffy_low: rule(DUFFY_LOW), duffy_high: rule(DUFFY_HIGH) };
    let coarse: Vec<T> = (0..tri.num_triangles()).into_par_iter().map(|t| f.estimate(tri.vertices(t))).collect();
    let scale = coarse.iter().fold(T::zero(), |a, &b| a + b.abs());
    let total_area = tri.total_area();
    let tol = T::tol(REL_TOL) * scale.max(T::min_positive_value());
    let parts: Result<Vec<T>> = (0..tri.num_triangles())
        .into_par_iter()
        .map(|t| f.adapt(tri.vertices(t), tol * tri.area(t) / total_area))
        .collect();
    let sum = parts?.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(sum.max(T::zero()).sqrt())
}

fn area<T: Real>(v: [Point<T>; 3]) -> T {
    scalar::cross(scalar::sub(v[1], v[0]), scalar::sub(v[2], v[0])).abs() / T::lit(2.0)
}

fn children<T: Real>(v: [Point<T>; 3]) -> [[Point<T>; 3]; 4] {
    let half = T::lit(0.5);
    let m01 = scalar::lerp(v[0], v[1], half);
    let m12 = scalar::lerp(v[1], v[2], half);
    let m20 = scalar::lerp(v[2], v[0], half);
    [[v[0], m01, m20], [m01, v[1], m12], [m20, m12, v[2]], [m01, m12, m20]]
}

/// Degree-five seven-point rule on the reference triangle.
fn strang_fix<T: Real>() -> [([T; 3], T); 7] {
    let (a1, b1, w1) = (0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506);
    let (a2, b2, w2) = (0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827);
    let l = T::lit;
    let third = 1.0 / 3.0;
    [
        ([l(third), l(third), l(third)], l(0.225)),
        ([l(a1), l(b1), l(b1)], l(w1)),
        ([l(b1), l(a1), l(b1)], l(w1)),
        ([l(b1), l(b1), l(a1)], l(w1)),
        ([l(a2), l(b2), l(b2)], l(w2)),
        ([l(b2), l(a2), l(b2)], l(w2)),
        ([l(b2), l(b2), l(a2)], l(w2)),
    ]
}

impl<T, H, R> Integrand<'_, T, H, R>
where
    T: Real,
    H: Fn(Point<T>) -> Hessian<T> + Sync,
    R: Fn(Point<T>) -> T + Sync,
{
    fn value(&self, x: Point<T>) -> T {
        let h = (self.hess)(x);
        let sq = h[0][0] * h[0][0] + h[0][1] * h[0][1] + h[1][0] * h[1][0] + h[1][1] * h[1][1];
        if sq == T::zero() {
            return T::zero();
        }
        (self.r)(x).powf(self.two_sigma) * sq
    }

    fn singular_corner(&self, v: [Point<T>; 3]) -> Option<usize> {
        let tol = T::tol(1e-12) * (T::one() + scalar::norm(v[0]));
        (0..3).find(|&k| self.points.iter().any(|&p| scalar::dist(p, v[k]) <= tol))
    }

    fn smooth_rule(&self, v: [Point<T>; 3]) -> T {
        let a = area(v);
        strang_fix::<T>()
            .iter()
            .map(|(bc, w)| {
                let x = [
                    bc[0] * v[0][0] + bc[1] * v[1][0] + bc[2] * v[2][0],
                    bc[0] * v[0][1] + bc[1] * v[1][1] + bc[2] * v[2][1],
                ];
                *w * self.value(x)
            })
            .fold(T::zero(), |s, x| s + x)
            * a
    }

    /// Collapsed rule around corner `c`: `x = c + ρ (p − c + ξ (q − p))`,
    /// `ρ = w^q` with `q` chosen from the measured radial exponent.
    fn duffy_rule(&self, v: [Point<T>; 3], c: usize, rule: &Rule<T>) -> Result<T> {
        let (vc, p, q) = (v[c], v[(c + 1) % 3], v[(c + 2) % 3]);
        let jac = area(v) * T::lit(2.0);
        let at = |rho: T, xi: T| {
            let dir = scalar::add(scalar::sub(p, vc), scalar::scale(scalar::sub(q, p), xi));
            self.value(scalar::add(vc, scalar::scale(dir, rho))) * rho * jac
        };
        let half = T::lit(0.5);
        let (r1, r2) = (T::lit(1e-6), T::lit(1e-3));
        let (g1, g2) = (at(r1, half), at(r2, half));
        let beta = if g1 > T::zero() && g2 > T::zero() { (g2 / g1).ln() / (r2 / r1).ln() } else { T::zero() };
        if !(beta > -T::one()) || !beta.is_finite() {
            return Err(Error::Quadrature("integrand is not integrable at a singular vertex".into()));
        }
        let power = (T::one() / (beta + T::one())).clamp(T::one(), T::lit(200.0));
        // closer to the corner than r1 the point coordinates lose precision;
        // continue the measured power law instead
        let at = |rho: T, xi: T| if rho < r1 { at(r1, xi) * (rho / r1).powf(beta) } else { at(rho, xi) };
        let (xs, ws) = rule;
        let mut sum = T::zero();
        for (&w, &ww) in xs.iter().zip(ws) {
            let rho = w.powf(power);
            let dr = power * w.powf(power - T::one());
            for (&xi, &wx) in xs.iter().zip(ws) {
                sum += ww * wx * dr * at(rho, xi);
            }
        }
        Ok(sum)
    }

    fn estimate(&self, v: [Point<T>; 3]) -> T {
        match self.singular_corner(v) {
            Some(c) => self.duffy_rule(v, c, &self.duffy_high).unwrap_or(T::zero()),
            None => self.smooth_rule(v),
        }
    }

    fn cell(&self, v: [Point<T>; 3], depth: usize) -> Result<Cell<T>> {
        let (value, err) = match self.singular_corner(v) {
            Some(c) => {
                let lo = self.duffy_rule(v, c, &self.duffy_low)?;
                let hi = self.duffy_rule(v, c, &self.duffy_high)?;
                (hi, (hi - lo).abs())
            }
            None => {
                let coarse = self.smooth_rule(v);
                let fine = children(v).iter().map(|&k| self.estimate(k)).fold(T::zero(), |a, b| a + b);
                (fine, (fine - coarse).abs())
            }
        };
        Ok(Cell { v, value, err, depth })
    }

    /// Global adaptive refinement of one triangle: the cell with the largest
    /// error estimate is split until the summed estimate is below `tol`.
    fn adapt(&self, v: [Point<T>; 3], tol: T) -> Result<T> {
        let first = self.cell(v, 0)?;
        let (mut total, mut err) = (first.value, first.err);
        let mut heap = BinaryHeap::new();
        heap.push(first);
        while err > tol {
            let Some(worst) = heap.pop() else { break };
            if worst.depth >= MAX_DEPTH {
                return Err(Error::Quadrature(format!("weighted seminorm unresolved after {MAX_DEPTH} subdivisions")));
            }
            total -= worst.value;
            err -= worst.err;
            for k in children(worst.v) {
                let c = self.cell(k, worst.depth + 1)?;
                total += c.value;
                err += c.err;
                heap.push(c);
            }
            err = err.max(T::zero());
        }
        Ok(total)
    }
}

struct Cell<T> {
    v: [Point<T>; 3],
    value: T,
    err: T,
    depth: usize,
}

impl<T: PartialOrd> PartialEq for Cell<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: PartialOrd> Eq for Cell<T> {}
impl<T: PartialOrd> PartialOrd for Cell<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: PartialOrd> Ord for Cell<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

