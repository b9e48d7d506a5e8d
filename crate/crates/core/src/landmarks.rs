//! Landmark sets and the target registration error (TRE) metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of `(x, y)` pixel coordinates. Paired sets compared for TRE
/// correspond index-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet {
    points: Vec<(f64, f64)>,
}

impl LandmarkSet {
    pub fn from_points(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TreSummary {
    pub mean: f64,
    pub std: f64,
    pub per_point: Vec<f64>,
}

/// Euclidean distance per corresponding pair, with mean and population
/// standard deviation, in pixels.
pub fn tre(fixed: &LandmarkSet, warped: &LandmarkSet) -> Result<TreSummary> {
    if fixed.len() != warped.len() {
        return Err(Error::DimensionMismatch(format!(
            "landmark counts differ: {} vs {}",
            fixed.len(),
            warped.len()
        )));
    }
    if fixed.is_empty() {
        return Err(Error::InvalidInput("need at least one landmark pair".into()));
    }
    let per_point: Vec<f64> = fixed
        .points
        .iter()
        .zip(warped.points.iter())
        .map(|(&(ax, ay), &(bx, by))| ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt())
        .collect();
    let n = per_point.len() as f64;
    let mean = per_point.iter().sum::<f64>() / n;
    let var = per_point.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(TreSummary { mean, std: var.sqrt(), per_point })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_are_zero() {
        let a = LandmarkSet::from_points(vec![(1.0, 2.0), (3.0, 4.0)]);
        let s = tre(&a, &a).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn three_four_five() {
        let a = LandmarkSet::from_points(vec![(0.0, 0.0)]);
        let b = LandmarkSet::from_points(vec![(3.0, 4.0)]);
        assert_eq!(tre(&a, &b).unwrap().mean, 5.0);
    }

    #[test]
    fn mean_and_population_std() {
        let a = LandmarkSet::from_points(vec![(0.0, 0.0), (0.0, 0.0)]);
        let b = LandmarkSet::from_points(vec![(1.0, 0.0), (3.0, 0.0)]);
        let s = tre(&a, &b).unwrap();
        assert!((s.mean - 2.0).abs() < 1e-15);
        assert!((s.std - 1.0).abs() < 1e-15);
        assert_eq!(s.per_point, vec![1.0, 3.0]);
    }

    #[test]
    fn length_mismatch_errors() {
        let a = LandmarkSet::from_points(vec![(0.0, 0.0)]);
        let b = LandmarkSet::from_points(vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!(tre(&a, &b).is_err());
    }
}
