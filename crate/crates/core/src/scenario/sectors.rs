use std::fmt;

use crate::assembly::ScalarField;
use crate::error::{invalid, Result};
use crate::geometry::PrefractalCurve;
use crate::mesh::{Triangulation, TAG_INNER, TAG_OUTER};
use crate::scalar::{Point, Real};

/// Compass quadrant of a direction seen from the snowflake center:
/// north covers polar angles `[45°, 135°)`, west `[135°, 225°)` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    North,
    East,
    South,
    West,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::North, Quadrant::East, Quadrant::South, Quadrant::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of<T: Real>(center: Point<T>, p: Point<T>) -> Self {
        let deg = (p[1] - center[1]).atan2(p[0] - center[0]).as_f64().to_degrees().rem_euclid(360.0);
        match deg {
            d if (45.0..135.0).contains(&d) => Self::North,
            d if (135.0..225.0).contains(&d) => Self::West,
            d if (225.0..315.0).contains(&d) => Self::South,
            _ => Self::East,
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::North => "north",
            Self::East => "east",
            Self::South => "south",
            Self::West => "west",
        })
    }
}

/// Eight conductivity sectors: the four quadrants inside the prefractal
/// and the four outside it.
///
/// `k[4r + q]` is the value in region `r` (0 inside, 1 outside) and
/// quadrant `q`. Neighbouring sectors, whether across a quadrant boundary or
/// across the prefractal, carry different values.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMap<T> {
    pub center: Point<T>,
    pub k: [T; 8],
}

impl<T: Real> SectorMap<T> {
    /// Inside: high east and west, low north and south; outside the reverse.
    pub fn alternating(center: Point<T>, low: T, high: T) -> Result<Self> {
        if !(low > T::zero() && high > low) {
            return Err(invalid(format!("sector conductivities need 0 < low < high, got {low} and {high}")));
        }
        let inner = [low, high, low, high];
        let outer = [high, low, high, low];
        let mut k = [T::zero(); 8];
        k[..4].copy_from_slice(&inner);
        k[4..].copy_from_slice(&outer);
        let map = Self { center, k };
        map.check_alternation()?;
        Ok(map)
    }

    pub fn value(&self, outside: bool, q: Quadrant) -> T {
        self.k[4 * usize::from(outside) + q.index()]
    }

    pub fn check_alternation(&self) -> Result<()> {
        for r in 0..2 {
            for q in 0..4 {
                let here = self.k[4 * r + q];
                let next = self.k[4 * r + (q + 1) % 4];
                let across = self.k[4 * (1 - r) + q];
                if here == next || here == across {
                    return Err(invalid(format!("sector {} of region {r} matches a neighbour", Quadrant::ALL[q])));
                }
            }
        }
        Ok(())
    }

    /// Conductivity per triangle from its subdomain tag and centroid.
    pub fn conductivity(&self, tri: &Triangulation<T>) -> Result<ScalarField<T>> {
        let values = (0..tri.num_triangles())
            .map(|t| {
                let outside = match tri.tags[t] {
                    TAG_INNER => false,
                    TAG_OUTER => true,
                    other => return Err(invalid(format!("triangle {t} has unknown tag {other}"))),
                };
                Ok(self.value(outside, Quadrant::of(self.center, tri.centroid(t))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalarField::PerTriangle(values))
    }

    /// Curve segments whose midpoint lies in quadrant `q`.
    pub fn segment_mask(&self, curve: &PrefractalCurve<T>, q: Quadrant) -> Vec<bool> {
        (0..curve.num_segments())
            .map(|k| {
                let (a, b) = curve.segment_points(k);
                let mid = [(a[0] + b[0]) / T::lit(2.0), (a[1] + b[1]) / T::lit(2.0)];
                Quadrant::of(self.center, mid) == q
            })
            .collect()
    }
}
