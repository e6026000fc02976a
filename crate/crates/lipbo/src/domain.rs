//! Shared domain types: points in a box domain and the observation history
//! that both the GP posterior and the Lipschitz envelopes are built from.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { context: "point coordinates" });
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean distance to another point.
    pub fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

/// An axis-aligned box `[lower_j, upper_j]` per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite { context: "box bounds" });
            }
            if l >= u {
                return Err(Error::InvalidArgument(format!("box requires lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        BoxDomain { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.0
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *x >= *l && *x <= *u)
    }

    /// Center of the box.
    pub fn center(&self) -> Point {
        Point(self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect())
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(l, u)| rng.random_range(*l..*u))
                .collect(),
        )
    }

    /// Map a unit-cube point into this box.
    pub fn from_unit(&self, unit: &[f64]) -> Point {
        Point(
            unit.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(z, (l, u))| l + z * (u - l))
                .collect(),
        )
    }
}

/// Evaluated points and their (noiseless) function values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ObservationHistory {
    points: Vec<Point>,
    values: Vec<f64>,
}

impl ObservationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(points: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "observed values" });
        }
        Ok(ObservationHistory { points, values })
    }

    pub fn push(&mut self, point: Point, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite { context: "observed value" });
        }
        if let Some(first) = self.points.first() {
            if first.dim() != point.dim() {
                return Err(Error::DimensionMismatch { expected: first.dim(), got: point.dim() });
            }
        }
        self.points.push(point);
        self.values.push(value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best_value(&self) -> Option<f64> {
        self.values.iter().cloned().fold(None, |acc, v| match acc {
            Some(b) if b >= v => Some(b),
            _ => Some(v),
        })
    }

    pub fn best(&self) -> Option<(&Point, f64)> {
        let mut out: Option<(&Point, f64)> = None;
        for (p, &v) in self.points.iter().zip(&self.values) {
            if out.map_or(true, |(_, b)| v > b) {
                out = Some((p, v));
            }
        }
        out
    }

    /// Same points, affinely transformed values `(y - shift) / scale`.
    pub fn transformed_values(&self, shift: f64, scale: f64) -> ObservationHistory {
        ObservationHistory {
            points: self.points.clone(),
            values: self.values.iter().map(|y| (y - shift) / scale).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand::SeedableRng;

    #[test]
    fn point_rejects_non_finite() {
        assert!(Point::new(vec![0.0, f64::NAN]).is_err());
        assert!(Point::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn box_sample_stays_inside() {
        let b = BoxDomain::new(vec![-2.0, 3.0], vec![1.0, 10.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            assert!(b.contains(&b.sample(&mut rng)));
        }
    }

    #[test]
    fn history_tracks_best() {
        let mut h = ObservationHistory::new();
        h.push(Point(vec![0.0]), 1.0).unwrap();
        h.push(Point(vec![1.0]), 3.0).unwrap();
        h.push(Point(vec![2.0]), 2.0).unwrap();
        assert_eq!(h.best_value(), Some(3.0));
        assert_eq!(h.best().unwrap().0.coords(), &[1.0]);
    }

    #[test]
    fn history_rejects_mismatched_dims() {
        let mut h = ObservationHistory::new();
        h.push(Point(vec![0.0, 0.0]), 1.0).unwrap();
        assert!(h.push(Point(vec![0.0]), 1.0).is_err());
    }
}
