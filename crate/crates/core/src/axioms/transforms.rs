//! Parameter reparameterisations, observation re-encodings and independent
//! noise used by the invariance audits.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::Rng64;
use crate::numerics::matrix::{determinant, inverse};
use crate::numerics::quadrature::{Axis, Domain};

/// Strictly monotone C¹ scalar maps used coordinatewise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneMap {
    Identity,
    /// `t ↦ t³ + t`
    CubePlus,
    Sinh,
    Exp,
}

impl MonotoneMap {
    pub fn forward(self, t: f64) -> f64 {
        match self {
            MonotoneMap::Identity => t,
            MonotoneMap::CubePlus => t * t * t + t,
            MonotoneMap::Sinh => t.sinh(),
            MonotoneMap::Exp => t.exp(),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            MonotoneMap::Identity => y,
            MonotoneMap::CubePlus => {
                // Cardano root, then Newton polish (the closed form cancels near 0).
                let d = (0.25 * y * y + 1.0 / 27.0).sqrt();
                let mut t = (0.5 * y + d).cbrt() + (0.5 * y - d).cbrt();
                for _ in 0..3 {
                    t -= (t * t * t + t - y) / (3.0 * t * t + 1.0);
                }
                t
            }
            MonotoneMap::Sinh => y.asinh(),
            MonotoneMap::Exp => y.ln(),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            MonotoneMap::Identity => 1.0,
            MonotoneMap::CubePlus => 3.0 * t * t + 1.0,
            MonotoneMap::Sinh => t.cosh(),
            MonotoneMap::Exp => t.exp(),
        }
    }
}

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// User-supplied diffeomorphism with its Jacobian (row-major `dφ/dθ`).
#[derive(Clone)]
pub struct CustomParamTransform {
    pub name: String,
    pub forward: VecFn,
    pub inverse: VecFn,
    pub jacobian: VecFn,
}

impl fmt::Debug for CustomParamTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomParamTransform").field("name", &self.name).finish()
    }
}

/// A diffeomorphism of the parameter space.
#[derive(Debug, Clone)]
pub enum ParamTransform {
    /// `θ ↦ Aθ + b` with `A` row-major and invertible.
    AffineInvertible { matrix: Vec<f64>, shift: Vec<f64> },
    CoordinatewiseMonotoneC1 { maps: Vec<MonotoneMap> },
    Custom(CustomParamTransform),
}

impl ParamTransform {
    pub fn affine(matrix: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        let m = shift.len();
        if matrix.len() != m * m || m == 0 {
            return Err(Error::InvalidArgument("affine transform needs an M x M matrix and M shifts".into()));
        }
        if determinant(m, matrix.clone()).abs() < 1e-12 {
            return Err(Error::InvalidArgument("affine transform matrix is singular".into()));
        }
        Ok(ParamTransform::AffineInvertible { matrix, shift })
    }

    /// Coordinatewise `θᵢ ↦ aᵢθᵢ + bᵢ`.
    pub fn scale_shift(scale: &[f64], shift: &[f64]) -> Result<Self> {
        let m = scale.len();
        let mut matrix = vec![0.0; m * m];
        for i in 0..m {
            matrix[i * m + i] = scale[i];
        }
        Self::affine(matrix, shift.to_vec())
    }

    pub fn coordinatewise(maps: Vec<MonotoneMap>) -> Self {
        ParamTransform::CoordinatewiseMonotoneC1 { maps }
    }

    pub fn identity(dim: usize) -> Self {
        Self::coordinatewise(vec![MonotoneMap::Identity; dim])
    }

    pub fn name(&self) -> String {
        match self {
            ParamTransform::AffineInvertible { matrix, shift } => format!("affine(A={matrix:?}, b={shift:?})"),
            ParamTransform::CoordinatewiseMonotoneC1 { maps } => format!("monotone{maps:?}"),
            ParamTransform::Custom(c) => c.name.clone(),
        }
    }

    pub fn forward(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            ParamTransform::AffineInvertible { matrix, shift } => {
                let m = shift.len();
                (0..m)
                    .map(|i| shift[i] + (0..m).map(|j| matrix[i * m + j] * theta[j]).sum::<f64>())
                    .collect()
            }
            ParamTransform::CoordinatewiseMonotoneC1 { maps } => {
                theta.iter().zip(maps).map(|(t, m)| m.forward(*t)).collect()
            }
            ParamTransform::Custom(c) => (c.forward)(theta),
        }
    }

    pub fn inverse(&self, phi: &[f64]) -> Vec<f64> {
        match self {
            ParamTransform::AffineInvertible { matrix, shift } => {
                let m = shift.len();
                let inv = inverse(m, matrix).expect("validated on construction");
                (0..m)
                    .map(|i| (0..m).map(|j| inv[i * m + j] * (phi[j] - shift[j])).sum())
                    .collect()
            }
            ParamTransform::CoordinatewiseMonotoneC1 { maps } => {
                phi.iter().zip(maps).map(|(p, m)| m.inverse(*p)).collect()
            }
            ParamTransform::Custom(c) => (c.inverse)(phi),
        }
    }

    /// Row-major Jacobian `dφ/dθ` at `theta`.
    pub fn jacobian(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            ParamTransform::AffineInvertible { matrix, .. } => matrix.clone(),
            ParamTransform::CoordinatewiseMonotoneC1 { maps } => {
                let m = maps.len();
                let mut j = vec![0.0; m * m];
                for i in 0..m {
                    j[i * m + i] = maps[i].derivative(theta[i]);
                }
                j
            }
            ParamTransform::Custom(c) => (c.jacobian)(theta),
        }
    }

    pub fn log_abs_det_jacobian(&self, theta: &[f64]) -> f64 {
        determinant(theta.len(), self.jacobian(theta)).abs().ln()
    }

    /// Image of an axis-aligned box, when it is again a box.
    pub fn map_box(&self, lower: &[f64], upper: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let m = lower.len();
        let diagonal = match self {
            ParamTransform::AffineInvertible { matrix, .. } => {
                (0..m).all(|i| (0..m).all(|j| i == j || matrix[i * m + j] == 0.0))
            }
            ParamTransform::CoordinatewiseMonotoneC1 { .. } => true,
            ParamTransform::Custom(_) => false,
        };
        if !diagonal {
            return None;
        }
        let a = self.forward(lower);
        let b = self.forward(upper);
        Some((
            a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
            a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        ))
    }

    /// Checks `forward ∘ inverse = id` and a nonsingular Jacobian on samples.
    pub fn validate(&self, samples: &[Vec<f64>]) -> Result<()> {
        for theta in samples {
            let back = self.inverse(&self.forward(theta));
            let err = back.iter().zip(theta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs())));
            if err > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "transform {} is not invertible at {theta:?} (round-trip error {err:e})",
                    self.name()
                )));
            }
            if determinant(theta.len(), self.jacobian(theta)).abs() < 1e-300 {
                return Err(Error::InvalidArgument(format!("singular Jacobian at {theta:?}")));
            }
        }
        Ok(())
    }
}

/// Invertible, piecewise-differentiable re-encoding of observations, applied
/// coordinatewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObsTransform {
    /// `xᵢ ↦ aᵢxᵢ + bᵢ`; a single entry is broadcast over coordinates.
    AffineInvertible { scale: Vec<f64>, shift: Vec<f64> },
    CoordinatewisePower3,
    /// Continuous increasing piecewise-linear map fixing `knots[0]`;
    /// `slopes[k]` applies left of `knots[k]`, the last slope right of the last knot.
    PiecewiseAffine { knots: Vec<f64>, slopes: Vec<f64> },
    /// Standard normal CDF.
    CdfMap,
}

impl ObsTransform {
    pub fn affine(scale: f64, shift: f64) -> Self {
        ObsTransform::AffineInvertible {
            scale: vec![scale],
            shift: vec![shift],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ObsTransform::AffineInvertible { scale, shift } => {
                if scale.is_empty() || scale.len() != shift.len() || scale.iter().any(|a| *a == 0.0 || !a.is_finite()) {
                    return Err(Error::InvalidArgument("affine observation map needs nonzero scales".into()));
                }
            }
            ObsTransform::PiecewiseAffine { knots, slopes } => {
                if knots.is_empty()
                    || slopes.len() != knots.len() + 1
                    || slopes.iter().any(|s| *s <= 0.0)
                    || knots.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::InvalidArgument(
                        "piecewise-affine map needs sorted knots and one more positive slope".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self {
            ObsTransform::AffineInvertible { scale, shift } => format!("affine(a={scale:?}, b={shift:?})"),
            ObsTransform::CoordinatewisePower3 => "power3".into(),
            ObsTransform::PiecewiseAffine { .. } => "piecewise_affine".into(),
            ObsTransform::CdfMap => "normal_cdf".into(),
        }
    }

    fn coeffs(v: &[f64], i: usize) -> f64 {
        if v.len() == 1 {
            v[0]
        } else {
            v[i]
        }
    }

    fn increasing(&self, i: usize) -> bool {
        match self {
            ObsTransform::AffineInvertible { scale, .. } => Self::coeffs(scale, i) > 0.0,
            _ => true,
        }
    }

    pub fn forward_scalar(&self, i: usize, x: f64) -> f64 {
        match self {
            ObsTransform::AffineInvertible { scale, shift } => Self::coeffs(scale, i) * x + Self::coeffs(shift, i),
            ObsTransform::CoordinatewisePower3 => x * x * x,
            ObsTransform::PiecewiseAffine { knots, slopes } => piecewise(knots, slopes, x),
            ObsTransform::CdfMap => std_normal().cdf(x),
        }
    }

    pub fn inverse_scalar(&self, i: usize, y: f64) -> f64 {
        match self {
            ObsTransform::AffineInvertible { scale, shift } => (y - Self::coeffs(shift, i)) / Self::coeffs(scale, i),
            ObsTransform::CoordinatewisePower3 => y.cbrt(),
            ObsTransform::PiecewiseAffine { knots, slopes } => piecewise_inverse(knots, slopes, y),
            ObsTransform::CdfMap => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else if y >= 1.0 {
                    f64::INFINITY
                } else {
                    std_normal().inverse_cdf(y)
                }
            }
        }
    }

    pub fn derivative_scalar(&self, i: usize, x: f64) -> f64 {
        match self {
            ObsTransform::AffineInvertible { scale, .. } => Self::coeffs(scale, i),
            ObsTransform::CoordinatewisePower3 => 3.0 * x * x,
            ObsTransform::PiecewiseAffine { knots, slopes } => {
                let k = knots.iter().take_while(|k| x >= **k).count();
                slopes[k]
            }
            ObsTransform::CdfMap => std_normal().pdf(x),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| self.forward_scalar(i, *v)).collect()
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        y.iter().enumerate().map(|(i, v)| self.inverse_scalar(i, *v)).collect()
    }

    /// `ln |det dG/dx|` at `x`.
    pub fn log_abs_jacobian(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| self.derivative_scalar(i, *v).abs().ln())
            .sum()
    }

    /// Kinks and singular points of the map, in the original coordinates.
    fn kinks(&self) -> Vec<f64> {
        match self {
            ObsTransform::CoordinatewisePower3 => vec![0.0],
            ObsTransform::PiecewiseAffine { knots, .. } => knots.clone(),
            _ => Vec::new(),
        }
    }

    /// Image of an integration axis for coordinate `i`.
    pub fn map_axis(&self, i: usize, axis: &Axis) -> Axis {
        let g = |x: f64| self.forward_scalar(i, x);
        let (mut lo, mut hi) = (g(axis.lower), g(axis.upper));
        if !self.increasing(i) {
            std::mem::swap(&mut lo, &mut hi);
        }
        let c = axis.center;
        let s = axis.scale;
        let mut breaks: Vec<f64> = axis
            .breakpoints
            .iter()
            .copied()
            .chain(self.kinks())
            .chain([c - 2.0 * s, c, c + 2.0 * s])
            .filter(|b| axis.contains(*b))
            .map(g)
            .collect();
        breaks.sort_by(f64::total_cmp);
        // Cover twelve base scales on either side of the centre.
        let reach = [g(c - 12.0 * s), g(c + 12.0 * s)]
            .iter()
            .map(|v| (v - g(c)).abs())
            .fold(0.0, f64::max);
        Axis {
            lower: lo,
            upper: hi,
            center: g(c),
            scale: (reach / 18.0).max(f64::MIN_POSITIVE),
            breakpoints: breaks,
        }
    }

    /// Image of an observation domain; discrete points are relabelled.
    pub fn map_domain(&self, domain: &Domain) -> Result<Domain> {
        match domain {
            Domain::Points(points) => Ok(Domain::Points(points.iter().map(|p| self.forward(p)).collect())),
            Domain::Box(axes) => Ok(Domain::Box(
                axes.iter().enumerate().map(|(i, a)| self.map_axis(i, a)).collect(),
            )),
            Domain::Product(..) => Err(Error::UnsupportedClass(
                "observation transforms apply to purely discrete or purely continuous supports".into(),
            )),
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn piecewise(knots: &[f64], slopes: &[f64], x: f64) -> f64 {
    // Anchored at the first knot: G(knots[0]) = knots[0].
    let mut y = knots[0];
    if x <= knots[0] {
        return y + slopes[0] * (x - knots[0]);
    }
    for k in 0..knots.len() {
        let right = knots.get(k + 1).copied().unwrap_or(f64::INFINITY);
        if x <= right {
            return y + slopes[k + 1] * (x - knots[k]);
        }
        y += slopes[k + 1] * (right - knots[k]);
    }
    unreachable!()
}

fn piecewise_inverse(knots: &[f64], slopes: &[f64], y: f64) -> f64 {
    let mut g = knots[0];
    if y <= g {
        return knots[0] + (y - g) / slopes[0];
    }
    for k in 0..knots.len() {
        let right = knots.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let g_right = g + slopes[k + 1] * (right - knots[k]);
        if y <= g_right {
            return knots[k] + (y - g) / slopes[k + 1];
        }
        g = g_right;
    }
    unreachable!()
}

/// Superfluous information appended to an observation: `y` independent of θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    BernoulliHalf,
    Uniform01,
    Gauss01,
    /// `y = 0` with probability one; augmentation is a no-op.
    Constant,
}

impl Noise {
    pub fn is_discrete(self) -> bool {
        matches!(self, Noise::BernoulliHalf | Noise::Constant)
    }

    pub fn domain(self) -> Domain {
        match self {
            Noise::BernoulliHalf => Domain::Points(vec![vec![0.0], vec![1.0]]),
            Noise::Constant => Domain::Points(vec![vec![0.0]]),
            Noise::Uniform01 => Domain::Box(vec![Axis::finite(0.0, 1.0)]),
            Noise::Gauss01 => Domain::Box(vec![Axis::real_line(0.0, 1.0)]),
        }
    }

    /// Log density (or log mass) of `y`; `None` outside the support.
    pub fn log_density(self, y: f64) -> Option<f64> {
        match self {
            Noise::BernoulliHalf => (y == 0.0 || y == 1.0).then_some(-std::f64::consts::LN_2),
            Noise::Constant => (y == 0.0).then_some(0.0),
            Noise::Uniform01 => (0.0..=1.0).contains(&y).then_some(0.0),
            Noise::Gauss01 => Some(-0.5 * y * y - 0.5 * (2.0 * std::f64::consts::PI).ln()),
        }
    }

    pub fn sample(self, rng: &mut Rng64) -> f64 {
        match self {
            Noise::BernoulliHalf => f64::from(u8::from(rng.random::<bool>())),
            Noise::Constant => 0.0,
            Noise::Uniform01 => rng.random::<f64>(),
            Noise::Gauss01 => StandardNormal.sample(rng),
        }
    }
}

/// Seeded, fixed catalog of transforms used by the audit battery.
pub mod catalog {
    use super::*;

    /// Three parameter diffeomorphisms for an `m`-dimensional space.
    pub fn param_transforms(m: usize) -> Vec<ParamTransform> {
        let scale: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { -2.0 } else { 1.5 }).collect();
        let shift: Vec<f64> = (0..m).map(|i| 0.5 + i as f64).collect();
        vec![
            ParamTransform::scale_shift(&scale, &shift).expect("nonsingular"),
            ParamTransform::coordinatewise(vec![MonotoneMap::CubePlus; m]),
            ParamTransform::coordinatewise(vec![MonotoneMap::Sinh; m]),
        ]
    }

    /// Four observation re-encodings.
    pub fn obs_transforms() -> Vec<ObsTransform> {
        vec![
            ObsTransform::affine(2.0, 1.0),
            ObsTransform::CoordinatewisePower3,
            ObsTransform::PiecewiseAffine {
                knots: vec![-0.5, 0.5, 1.5],
                slopes: vec![0.5, 2.0, 1.0, 3.0],
            },
            ObsTransform::CdfMap,
        ]
    }

    /// Two noise augmentations.
    pub fn noises() -> Vec<Noise> {
        vec![Noise::BernoulliHalf, Noise::Gauss01]
    }
}
