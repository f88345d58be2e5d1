//! Koch prefractal curves.
//!
//! A Koch side of level `n` is the image of its base segment under the
//! `4^n` compositions `ψ_{i1} ∘ … ∘ ψ_{in}` of four similitudes with ratio
//! 1/3. The snowflake boundary glues three sides built on the unit
//! equilateral triangle, with every bump pointing away from the triangle.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::scalar::{self, Point, Real};

/// Highest level accepted by the generators. Beyond it double precision
/// coordinates no longer resolve the angle checks.
pub const MAX_LEVEL: u32 = 8;

/// Orientation-preserving similitude `z ↦ a·z + b` of the plane, written with
/// complex `a = (a_re, a_im)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionMap<T> {
    pub a: [T; 2],
    pub b: Point<T>,
}

impl<T: Real> ContractionMap<T> {
    pub fn identity() -> Self {
        Self { a: [T::one(), T::zero()], b: [T::zero(), T::zero()] }
    }

    /// Unique orientation-preserving similitude sending `p0 ↦ q0` and `p1 ↦ q1`.
    pub fn from_segments(p0: Point<T>, p1: Point<T>, q0: Point<T>, q1: Point<T>) -> Self {
        let dp = scalar::sub(p1, p0);
        let dq = scalar::sub(q1, q0);
        let den = scalar::dot(dp, dp);
        // a = dq / dp in complex arithmetic
        let a = [
            (dq[0] * dp[0] + dq[1] * dp[1]) / den,
            (dq[1] * dp[0] - dq[0] * dp[1]) / den,
        ];
        let ap0 = Self::mul(a, p0);
        Self { a, b: scalar::sub(q0, ap0) }
    }

    #[inline]
    fn mul(a: [T; 2], z: Point<T>) -> Point<T> {
        [a[0] * z[0] - a[1] * z[1], a[0] * z[1] + a[1] * z[0]]
    }

    #[inline]
    pub fn apply(&self, z: Point<T>) -> Point<T> {
        scalar::add(Self::mul(self.a, z), self.b)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self { a: Self::mul(self.a, inner.a), b: self.apply(inner.b) }
    }

    /// Scaling ratio `|a|`.
    pub fn ratio(&self) -> T {
        scalar::norm(self.a)
    }
}

/// The four Koch similitudes attached to the oriented segment `start → end`.
///
/// `bump_left` selects on which side of the direction of travel the middle
/// spike is raised.
pub fn koch_maps<T: Real>(start: Point<T>, end: Point<T>, bump_left: bool) -> [ContractionMap<T>; 4] {
    let third = T::one() / T::lit(3.0);
    let p1 = scalar::lerp(start, end, third);
    let p2 = scalar::lerp(start, end, T::lit(2.0) * third);
    let d = scalar::sub(p2, p1);
    let (s, c) = (T::lit(3.0).sqrt() / T::lit(2.0), T::lit(0.5));
    let s = if bump_left { s } else { -s };
    let apex = scalar::add(p1, [c * d[0] - s * d[1], s * d[0] + c * d[1]]);
    [
        ContractionMap::from_segments(start, end, start, p1),
        ContractionMap::from_segments(start, end, p1, apex),
        ContractionMap::from_segments(start, end, apex, p2),
        ContractionMap::from_segments(start, end, p2, end),
    ]
}

/// Which side of a closed curve is the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Counter-clockwise traversal.
    InteriorLeft,
    InteriorRight,
}

/// Vertex subset used by distance weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexSet {
    All,
    Reentrant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefractalCurve<T> {
    pub level: u32,
    pub closed: bool,
    pub vertices: Vec<Point<T>>,
    /// Index pairs in traversal order; segment `k` goes from vertex `k` to `k + 1` (cyclically).
    pub segments: Vec<[usize; 2]>,
    /// Interior angle per vertex; NaN until classified (and at open ends).
    pub angles: Vec<T>,
    /// Reentrant vertex indices (interior angle above π).
    pub reentrant: Vec<usize>,
    /// Cumulative arc length at the start of each segment, plus the total.
    pub arc_length: Vec<T>,
}

impl<T: Real> PrefractalCurve<T> {
    fn from_polyline(level: u32, mut vertices: Vec<Point<T>>, closed: bool) -> Self {
        if closed {
            vertices.pop();
        }
        let nv = vertices.len();
        let nseg = if closed { nv } else { nv - 1 };
        let segments: Vec<[usize; 2]> = (0..nseg).map(|k| [k, (k + 1) % nv]).collect();
        let mut arc_length = Vec::with_capacity(nseg + 1);
        let mut acc = T::zero();
        arc_length.push(acc);
        for s in &segments {
            acc += scalar::dist(vertices[s[0]], vertices[s[1]]);
            arc_length.push(acc);
        }
        Self {
            level,
            closed,
            angles: vec![T::nan(); nv],
            vertices,
            segments,
            reentrant: Vec::new(),
            arc_length,
        }
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_points(&self, k: usize) -> (Point<T>, Point<T>) {
        let [a, b] = self.segments[k];
        (self.vertices[a], self.vertices[b])
    }

    pub fn segment_length(&self, k: usize) -> T {
        let (a, b) = self.segment_points(k);
        scalar::dist(a, b)
    }

    pub fn total_length(&self) -> T {
        *self.arc_length.last().expect("arc table is never empty")
    }

    /// Signed shoelace area; positive for counter-clockwise closed curves.
    pub fn signed_area(&self) -> T {
        let n = self.vertices.len();
        let mut acc = T::zero();
        for i in 0..n {
            acc += scalar::cross(self.vertices[i], self.vertices[(i + 1) % n]);
        }
        acc / T::lit(2.0)
    }

    /// Vertex average; for the snowflake this is the triangle centroid.
    pub fn centroid(&self) -> Point<T> {
        let n = T::from_usize_lossy(self.vertices.len());
        let sx: T = self.vertices.iter().map(|p| p[0]).sum();
        let sy: T = self.vertices.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    }

    /// Even-odd point-in-polygon test (closed curves only).
    pub fn contains(&self, p: Point<T>) -> bool {
        let mut inside = false;
        for &[i, j] in &self.segments {
            let (a, b) = (self.vertices[i], self.vertices[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Selected vertex positions.
    pub fn vertex_set(&self, which: VertexSet) -> Vec<Point<T>> {
        match which {
            VertexSet::All => self.vertices.clone(),
            VertexSet::Reentrant => self.reentrant.iter().map(|&j| self.vertices[j]).collect(),
        }
    }

    /// Arc-length coordinate of `p` if it lies on segment `k` within `tol`.
    pub fn arc_position_on_segment(&self, k: usize, p: Point<T>, tol: T) -> Option<T> {
        let (a, b) = self.segment_points(k);
        if scalar::dist_to_segment(p, a, b) > tol {
            return None;
        }
        let ab = scalar::sub(b, a);
        let len = scalar::norm(ab);
        let t = (scalar::dot(scalar::sub(p, a), ab) / len).max(T::zero()).min(len);
        Some(self.arc_length[k] + t)
    }

    /// Segments whose full extent lies inside the union of arc-length
    /// intervals `[s0, s1]`. Interval endpoints must coincide with vertex arc
    /// positions (up to `1e-9` relative to the total length).
    pub fn segments_in_arc_intervals(&self, intervals: &[(T, T)]) -> Result<Vec<bool>> {
        let total = self.total_length();
        let tol = total * T::lit(1e-9);
        let mut mask = vec![false; self.num_segments()];
        for &(s0, s1) in intervals {
            if !(s0 < s1) || s0 < -tol || s1 > total + tol {
                return Err(invalid(format!("arc interval [{s0}, {s1}] outside [0, {total}]")));
            }
            for end in [s0, s1] {
                if !self.arc_length.iter().any(|&s| (s - end).abs() <= tol) {
                    return Err(invalid(format!(
                        "arc position {end} does not coincide with a curve vertex"
                    )));
                }
            }
            for (k, m) in mask.iter_mut().enumerate() {
                if self.arc_length[k] >= s0 - tol && self.arc_length[k + 1] <= s1 + tol {
                    *m = true;
                }
            }
        }
        Ok(mask)
    }
}

fn check_level(level: i64) -> Result<u32> {
    if level < 0 {
        return Err(invalid(format!("level must be nonnegative, got {level}")));
    }
    if level > MAX_LEVEL as i64 {
        return Err(invalid(format!("level {level} exceeds the supported maximum {MAX_LEVEL}")));
    }
    Ok(level as u32)
}

// Direction k stands for ω^k with ω = e^{±iπ/3}, expanded in the basis (1, ω).
const STEP: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Integer lattice coordinates `(α, β)` of the start of every segment of a
/// Koch side that leaves `origin` in direction `first`, with the spike
/// raised towards positive turns when `bump_positive`.
fn lattice_walk(level: u32, origin: (i64, i64), first: usize, bump_positive: bool) -> Vec<(i64, i64)> {
    let (up, down) = if bump_positive { (1, 5) } else { (5, 1) };
    let mut dirs = vec![first];
    for _ in 0..level {
        dirs = dirs.iter().flat_map(|&k| [k, (k + up) % 6, (k + down) % 6, k]).collect();
    }
    let (mut a, mut b) = origin;
    dirs.iter()
        .map(|&k| {
            let here = (a, b);
            a += STEP[k].0;
            b += STEP[k].1;
            here
        })
        .collect()
}

/// Vertex `j` is `start + (α_j d + β_j ωd) / 3^level` with `d = end − start`
/// and integer `α_j, β_j`, so no error accumulates along the side.
fn side_vertices<T: Real>(level: u32, start: Point<T>, end: Point<T>, bump_left: bool) -> Vec<Point<T>> {
    let d = scalar::sub(end, start);
    let s = T::lit(3.0).sqrt() / T::lit(2.0);
    let s = if bump_left { s } else { -s };
    let half = T::lit(0.5);
    let wd = [half * d[0] - s * d[1], s * d[0] + half * d[1]];
    let scale = T::lit(3f64.powi(level as i32));
    let mut vertices: Vec<Point<T>> = lattice_walk(level, (0, 0), 0, true)
        .into_iter()
        .map(|(a, b)| {
            let (a, b) = (T::lit(a as f64), T::lit(b as f64));
            [start[0] + (a * d[0] + b * wd[0]) / scale, start[1] + (a * d[1] + b * wd[1]) / scale]
        })
        .collect();
    vertices.push(end);
    vertices
}

/// Open Koch side of the given level between two endpoints, bump on the left
/// of the direction `start → end`.
pub fn koch_side<T: Real>(level: i64, start: Point<T>, end: Point<T>) -> Result<PrefractalCurve<T>> {
    let level = check_level(level)?;
    if scalar::dist(start, end) <= T::zero() {
        return Err(invalid("Koch side endpoints coincide"));
    }
    Ok(PrefractalCurve::from_polyline(level, side_vertices(level, start, end, true), false))
}

/// Corners `A1, A3, A5` of the unit equilateral triangle centred at the
/// origin, counter-clockwise, with `A1A3` horizontal.
pub fn unit_triangle<T: Real>() -> [Point<T>; 3] {
    let r = T::lit(3.0).sqrt() / T::lit(6.0);
    let half = T::lit(0.5);
    [[-half, -r], [half, -r], [T::zero(), T::lit(2.0) * r]]
}

/// Closed snowflake boundary `K_n`, traversed counter-clockwise, with angles
/// classified.
pub fn snowflake<T: Real>(level: i64) -> Result<PrefractalCurve<T>> {
    let level = check_level(level)?;
    // Every vertex is A1 + (2α + β, √3 β) / (2·3^level) for integers α, β;
    // the corners A1, A3, A5 sit at (0, 0), (3^level, 0) and (0, 3^level).
    // Centred coordinates: x = (2α + β − 3^level) / (2·3^level) and
    // y = (3β − 3^level) √3 / (6·3^level).
    let m = 3i64.pow(level);
    let mut lattice = Vec::with_capacity(3 * 4usize.pow(level) + 1);
    for (origin, dir) in [((0, 0), 0), ((m, 0), 2), ((0, m), 4)] {
        lattice.extend(lattice_walk(level, origin, dir, false));
    }
    lattice.push((0, 0));
    let denom = T::lit(2.0 * m as f64);
    let ky = T::lit(3.0).sqrt() / T::lit(6.0 * m as f64);
    let vertices = lattice
        .into_iter()
        .map(|(a, b)| [T::lit((2 * a + b - m) as f64) / denom, T::lit((3 * b - m) as f64) * ky])
        .collect();
    let curve = PrefractalCurve::from_polyline(level, vertices, true);
    classify_angles(curve, Orientation::InteriorLeft)
}

/// Fills interior angles and the reentrant set of a closed curve.
///
/// Every angle must be π/3 or 4π/3 (or π/3 everywhere at level 0).
pub fn classify_angles<T: Real>(mut curve: PrefractalCurve<T>, orientation: Orientation) -> Result<PrefractalCurve<T>> {
    if !curve.closed {
        return Err(invalid("angle classification requires a closed curve"));
    }
    let n = curve.vertices.len();
    let pi = T::PI();
    let admissible = [pi / T::lit(3.0), T::lit(4.0) * pi / T::lit(3.0)];
    let tol = T::tol(1e-12);
    curve.reentrant.clear();
    for j in 0..n {
        let prev = curve.vertices[(j + n - 1) % n];
        let here = curve.vertices[j];
        let next = curve.vertices[(j + 1) % n];
        let d1 = scalar::sub(here, prev);
        let d2 = scalar::sub(next, here);
        let turn = scalar::cross(d1, d2).atan2(scalar::dot(d1, d2));
        let eta = match orientation {
            Orientation::InteriorLeft => pi - turn,
            Orientation::InteriorRight => pi + turn,
        };
        if !admissible.iter().any(|&a| (eta - a).abs() <= tol) {
            return Err(Error::Geometry(format!(
                "vertex {j} has interior angle {eta}, expected π/3 or 4π/3"
            )));
        }
        if eta > pi {
            curve.reentrant.push(j);
        }
        curve.angles[j] = eta;
    }
    Ok(curve)
}

/// Euclidean distance from `x` to the nearest selected vertex; `+∞` when the
/// selection is empty.
pub fn dist_to_vertex_set<T: Real>(x: Point<T>, curve: &PrefractalCurve<T>, which: VertexSet) -> T {
    let iter: Box<dyn Iterator<Item = &Point<T>>> = match which {
        VertexSet::All => Box::new(curve.vertices.iter()),
        VertexSet::Reentrant => Box::new(curve.reentrant.iter().map(|&j| &curve.vertices[j])),
    };
    iter.fold(T::infinity(), |m, &p| m.min(scalar::dist(x, p)))
}

fn segments_intersect<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let orient = |p: Point<T>, q: Point<T>, r: Point<T>| scalar::cross(scalar::sub(q, p), scalar::sub(r, p));
    let eps = T::tol(1e-14);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    let strict = |x: T, y: T| (x > eps && y < -eps) || (x < -eps && y > eps);
    if strict(o1, o2) && strict(o3, o4) {
        return true;
    }
    let on = |p: Point<T>, q: Point<T>, r: Point<T>, o: T| {
        o.abs() <= eps
            && r[0] >= p[0].min(q[0]) - eps
            && r[0] <= p[0].max(q[0]) + eps
            && r[1] >= p[1].min(q[1]) - eps
            && r[1] <= p[1].max(q[1]) + eps
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// Pairwise test that no two non-adjacent segments touch and adjacent ones
/// meet only at their shared endpoint. Quadratic in the segment count.
pub fn is_simple<T: Real>(curve: &PrefractalCurve<T>) -> bool {
    let m = curve.num_segments();
    for i in 0..m {
        let (a, b) = curve.segment_points(i);
        for j in (i + 1)..m {
            let (c, d) = curve.segment_points(j);
            let adjacent = j == i + 1 || (curve.closed && i == 0 && j == m - 1);
            if adjacent {
                // the far endpoints must stay off the neighbouring segment
                let (far_i, far_j) = if j == i + 1 { (a, d) } else { (b, c) };
                let eps = T::tol(1e-14);
                if scalar::dist_to_segment(far_i, c, d) <= eps || scalar::dist_to_segment(far_j, a, b) <= eps {
                    return false;
                }
            } else if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Writes the plain-text polyline format: a `KOCH n <level> <closed|open>`
/// header and one `x y eta reentrant` line per vertex.
pub fn write_polyline<T: Real, W: Write>(curve: &PrefractalCurve<T>, mut out: W) -> Result<()> {
    let kind = if curve.closed { "closed" } else { "open" };
    writeln!(out, "KOCH n {} {}", curve.level, kind)?;
    let mut line = String::new();
    for (j, p) in curve.vertices.iter().enumerate() {
        line.clear();
        let flag = curve.reentrant.binary_search(&j).is_ok() as u8;
        let eta = curve.angles[j].as_f64();
        write!(line, "{:.16e} {:.16e} ", p[0].as_f64(), p[1].as_f64()).ok();
        if eta.is_nan() {
            line.push_str("nan");
        } else {
            write!(line, "{eta:.16e}").ok();
        }
        writeln!(out, "{line} {flag}")?;
    }
    Ok(())
}

/// Parses the polyline format back into a curve.
pub fn read_polyline<T: Real, R: BufRead>(input: R) -> Result<PrefractalCurve<T>> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
    let header = header?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse { line: 1, message: format!("bad header `{header}`") };
    if parts.len() != 4 || parts[0] != "KOCH" || parts[1] != "n" {
        return Err(bad_header());
    }
    let level: u32 = parts[2].parse().map_err(|_| bad_header())?;
    let closed = match parts[3] {
        "closed" => true,
        "open" => false,
        _ => return Err(bad_header()),
    };
    let mut vertices = Vec::new();
    let mut angles = Vec::new();
    let mut reentrant = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| Error::Parse { line: idx + 1, message: m.to_string() };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(err("expected `x y eta reentrant`"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        vertices.push([T::lit(num(f[0])?), T::lit(num(f[1])?)]);
        angles.push(T::lit(num(f[2])?));
        match f[3] {
            "1" => reentrant.push(vertices.len() - 1),
            "0" => {}
            _ => return Err(err("reentrant flag must be 0 or 1")),
        }
    }
    if vertices.len() < 2 {
        return Err(Error::Parse { line: 1, message: "fewer than two vertices".into() });
    }
    if closed {
        let first = vertices[0];
        vertices.push(first);
    }
    let mut curve = PrefractalCurve::from_polyline(level, vertices, closed);
    curve.angles = angles;
    curve.reentrant = reentrant;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn contraction_has_ratio_one_third() {
        let maps = koch_maps::<f64>([0.0, 0.0], [1.0, 0.0], true);
        for m in &maps {
            assert!((m.ratio() - 1.0 / 3.0).abs() < 1e-15);
            let (p, q) = (m.apply([0.0, 0.0]), m.apply([1.0, 0.0]));
            assert!((scalar::dist(p, q) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn side_level_zero_is_the_base_segment() {
        let c = koch_side::<f64>(0, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(c.num_segments(), 1);
        assert_eq!(c.vertices, vec![[0.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn side_level_one_has_the_equilateral_bump() {
        let c = koch_side::<f64>(1, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(c.num_segments(), 4);
        for k in 0..4 {
            assert!((c.segment_length(k) - 1.0 / 3.0).abs() < 1e-15);
        }
        let apex = c.vertices[2];
        assert!((apex[0] - 0.5).abs() < 1e-15);
        assert!((apex[1] - 3f64.sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn side_level_three_length() {
        let c = koch_side::<f64>(3, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(c.num_segments(), 64);
        assert!((c.total_length() - 64.0 / 27.0).abs() < 1e-13);
    }

    #[test]
    fn side_rejects_bad_input() {
        assert!(koch_side::<f64>(-1, [0.0, 0.0], [1.0, 0.0]).is_err());
        assert!(koch_side::<f64>(2, [0.5, 0.5], [0.5, 0.5]).is_err());
        assert!(snowflake::<f64>(-2).is_err());
    }

    #[test]
    fn triangle_at_level_zero() {
        let c = snowflake::<f64>(0).unwrap();
        assert_eq!(c.num_segments(), 3);
        assert!((c.total_length() - 3.0).abs() < 1e-15);
        assert!(c.reentrant.is_empty());
        for &a in &c.angles {
            assert!((a - PI / 3.0).abs() < 1e-12);
        }
        assert_eq!(dist_to_vertex_set([0.3, 0.2], &c, VertexSet::Reentrant), f64::INFINITY);
    }

    #[test]
    fn level_one_star_angles_by_enumeration() {
        let c = snowflake::<f64>(1).unwrap();
        assert_eq!(c.vertices.len(), 12);
        // independent count: interior angle via the angle between the two edge vectors
        let n = c.vertices.len();
        let mut big = 0;
        for j in 0..n {
            let p = c.vertices[(j + n - 1) % n];
            let q = c.vertices[(j + 1) % n];
            let v = c.vertices[j];
            let (a, b) = (scalar::sub(p, v), scalar::sub(q, v));
            let opening = (scalar::dot(a, b) / (scalar::norm(a) * scalar::norm(b))).acos();
            // reflex iff the next vertex turns clockwise for a CCW curve
            let reflex = scalar::cross(scalar::sub(v, p), scalar::sub(q, v)) < 0.0;
            let eta = if reflex { 2.0 * PI - opening } else { opening };
            if eta > PI {
                big += 1;
            }
        }
        assert_eq!(big, 6);
        assert_eq!(c.reentrant.len(), 6);
        assert_eq!(c.angles.iter().filter(|&&a| (a - PI / 3.0).abs() < 1e-12).count(), 6);
    }

    #[test]
    fn level_two_reentrant_count_matches_turn_enumeration() {
        let c = snowflake::<f64>(2).unwrap();
        let n = c.vertices.len();
        let oracle = (0..n)
            .filter(|&j| {
                let p = c.vertices[(j + n - 1) % n];
                let q = c.vertices[(j + 1) % n];
                let v = c.vertices[j];
                scalar::cross(scalar::sub(v, p), scalar::sub(q, v)) < 0.0
            })
            .count();
        assert_eq!(c.reentrant.len(), oracle);
        assert_eq!(oracle, 30);
    }

    #[test]
    fn snowflake_is_counter_clockwise_with_outward_bumps() {
        let c0 = snowflake::<f64>(0).unwrap();
        let c1 = snowflake::<f64>(1).unwrap();
        assert!(c1.signed_area() > c0.signed_area());
        // star of David area: triangle (√3/4) plus three bumps of side 1/3
        let expected = 3f64.sqrt() / 4.0 * (1.0 + 3.0 / 9.0);
        assert!((c1.signed_area() - expected).abs() < 1e-14);
    }

    #[test]
    fn distance_to_reentrant_set() {
        let c = snowflake::<f64>(1).unwrap();
        let j = c.reentrant[0];
        assert_eq!(dist_to_vertex_set(c.vertices[j], &c, VertexSet::Reentrant), 0.0);
        let g = c.centroid();
        let brute = c
            .reentrant
            .iter()
            .map(|&j| ((c.vertices[j][0] - g[0]).powi(2) + (c.vertices[j][1] - g[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(dist_to_vertex_set(g, &c, VertexSet::Reentrant), brute);
        // the inner hexagon of the star has circumradius 1/3
        assert!((brute - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn arc_interval_mask_requires_vertex_alignment() {
        let c = snowflake::<f64>(1).unwrap();
        let third = 1.0 / 3.0;
        let m = c.segments_in_arc_intervals(&[(0.0, 2.0 * third)]).unwrap();
        assert_eq!(m.iter().filter(|&&b| b).count(), 2);
        assert!(c.segments_in_arc_intervals(&[(0.1, 0.5)]).is_err());
    }

    #[test]
    fn polyline_round_trip() {
        let c = snowflake::<f64>(2).unwrap();
        let mut buf = Vec::new();
        write_polyline(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("KOCH n 2 closed\n"));
        let back: PrefractalCurve<f64> = read_polyline(&buf[..]).unwrap();
        assert_eq!(back.vertices, c.vertices);
        assert_eq!(back.reentrant, c.reentrant);
    }

    #[test]
    fn works_in_single_precision() {
        let c = snowflake::<f32>(2).unwrap();
        assert_eq!(c.num_segments(), 48);
        assert_eq!(c.reentrant.len(), 30);
    }
}
