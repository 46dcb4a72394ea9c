use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{Axis, Domain};

/// Points of a finite parameter space are matched with this absolute slack.
const POINT_MATCH: f64 = 1e-12;

/// The parameter space Θ ⊆ ℝᴹ: a finite point set or an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterSpace {
    FiniteSet { points: Vec<Vec<f64>> },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl ParameterSpace {
    pub fn finite(points: Vec<Vec<f64>>) -> Result<Self> {
        let s = ParameterSpace::FiniteSet { points };
        s.validate()?;
        Ok(s)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = ParameterSpace::Box { lower, upper };
        s.validate()?;
        Ok(s)
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::boxed(vec![lower], vec![upper])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParameterSpace::FiniteSet { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidProblem("a finite parameter space needs at least 2 points".into()));
                }
                let dim = points[0].len();
                if dim == 0 || points.iter().any(|p| p.len() != dim) {
                    return Err(Error::InvalidProblem("finite parameter points must share a positive dimension".into()));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProblem("finite parameter points must be finite".into()));
                }
                for (i, a) in points.iter().enumerate() {
                    if points[i + 1..].iter().any(|b| same_point(a, b)) {
                        return Err(Error::InvalidProblem(format!("duplicate parameter point {a:?}")));
                    }
                }
                Ok(())
            }
            ParameterSpace::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidProblem("box bounds must have equal, positive length".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
                    return Err(Error::InvalidProblem(format!(
                        "box needs finite lower < upper on every axis, got {lower:?} / {upper:?}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParameterSpace::FiniteSet { points } => points[0].len(),
            ParameterSpace::Box { lower, .. } => lower.len(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ParameterSpace::FiniteSet { .. })
    }

    pub fn points(&self) -> Option<&[Vec<f64>]> {
        match self {
            ParameterSpace::FiniteSet { points } => Some(points),
            ParameterSpace::Box { .. } => None,
        }
    }

    /// Index of `theta` in a finite space.
    pub fn index_of(&self, theta: &[f64]) -> Option<usize> {
        self.points()?.iter().position(|p| same_point(p, theta))
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.dim() {
            return false;
        }
        match self {
            ParameterSpace::FiniteSet { .. } => self.index_of(theta).is_some(),
            ParameterSpace::Box { lower, upper } => theta
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(t, (l, u))| t >= l && t <= u),
        }
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::OutOfSupport(theta.to_vec()))
        }
    }

    /// Smallest axis distance from `theta` to the box boundary.
    pub fn boundary_distance(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            ParameterSpace::FiniteSet { .. } => vec![0.0; theta.len()],
            ParameterSpace::Box { lower, upper } => theta
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(t, (l, u))| (t - l).min(u - t))
                .collect(),
        }
    }

    /// Axis-aligned bounding box of the space.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ParameterSpace::Box { lower, upper } => (lower.clone(), upper.clone()),
            ParameterSpace::FiniteSet { points } => {
                let m = points[0].len();
                let mut lo = vec![f64::INFINITY; m];
                let mut hi = vec![f64::NEG_INFINITY; m];
                for p in points {
                    for i in 0..m {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Integration domain over Θ.
    pub fn domain(&self) -> Domain {
        match self {
            ParameterSpace::FiniteSet { points } => Domain::Points(points.clone()),
            ParameterSpace::Box { lower, upper } => Domain::Box(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(&l, &u)| Axis::finite(l, u))
                    .collect(),
            ),
        }
    }

    pub fn volume(&self) -> Option<f64> {
        match self {
            ParameterSpace::FiniteSet { .. } => None,
            ParameterSpace::Box { lower, upper } => Some(lower.iter().zip(upper).map(|(l, u)| u - l).product()),
        }
    }
}

pub(crate) fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= POINT_MATCH * (1.0 + x.abs().max(y.abs())))
}

/// Kind of the observation space X ⊆ ℝᴺ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    FiniteSet,
    Continuum,
    /// Products of a finite set and a continuum (observations augmented with
    /// independent noise of the other kind).
    Mixed,
}

/// Observation space as declared by a data model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationSpace {
    pub kind: ObservationKind,
    pub dim: usize,
    /// Full outcome list for finite spaces.
    pub points: Option<Vec<Vec<f64>>>,
    /// Per-axis bounds for continua; infinite entries mean unbounded.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}
