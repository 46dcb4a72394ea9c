//! Derivative-free maximisation over a parameter space.
//!
//! Finite spaces are scanned exactly. Boxes get a multi-start search: a
//! cell-centred grid, Nelder–Mead refinement from the best grid cells, then
//! merging of refined points that landed on the same peak. Every maximiser
//! whose value lies within the tie tolerance of the best is returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParameterSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArgmaxConfig {
    pub grid_per_axis: usize,
    pub max_grid_points: usize,
    pub top_k: usize,
    /// Relative tie tolerance on metric values (absolute when `log_scale`).
    pub tie_tolerance: f64,
    /// The metric is a logarithm; ties are judged on differences.
    pub log_scale: bool,
    /// Simplex size at which Nelder–Mead stops, relative to the box width.
    pub x_tolerance: f64,
    pub max_iterations: usize,
    /// Refined points closer than this (relative to the box width) are merged.
    pub merge_radius: f64,
    /// Absolute per-axis distance kept from the box boundary.
    pub margin: f64,
}

impl Default for ArgmaxConfig {
    fn default() -> Self {
        Self {
            grid_per_axis: 32,
            max_grid_points: 1 << 15,
            top_k: 5,
            tie_tolerance: 1e-9,
            log_scale: false,
            x_tolerance: 1e-10,
            max_iterations: 4000,
            merge_radius: 1e-5,
            margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ArgmaxDiagnostics {
    pub grid_points: usize,
    pub refinement_iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// A returned maximiser sits on the (margin-shrunk) boundary of a box.
    pub boundary_maximum: bool,
    /// Points where the metric was non-finite and thus excluded.
    pub excluded_points: usize,
}

/// Finite, nonempty set of maximisers with their metric values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub tie_tolerance: f64,
    pub diagnostics: ArgmaxDiagnostics,
}

impl EstimateSet {
    /// The first (best) point.
    pub fn best(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn best_value(&self) -> f64 {
        self.values[0]
    }

    /// Largest coordinate distance from any point of `self` to its nearest
    /// point in `other` (symmetrised).
    pub fn distance(&self, other: &EstimateSet) -> f64 {
        fn one_way(a: &EstimateSet, b: &EstimateSet) -> f64 {
            a.points
                .iter()
                .map(|p| {
                    b.points
                        .iter()
                        .map(|q| p.iter().zip(q).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        }
        one_way(self, other).max(one_way(other, self))
    }
}

struct Counted<F> {
    f: F,
    evaluations: usize,
    excluded: usize,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            self.excluded += 1;
            Ok(f64::NEG_INFINITY)
        }
    }
}

/// Maximises `metric` over `space`. Non-finite metric values exclude a point.
pub fn argmax<F>(metric: F, space: &ParameterSpace, config: &ArgmaxConfig) -> Result<EstimateSet>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut metric = Counted {
        f: metric,
        evaluations: 0,
        excluded: 0,
    };
    match space {
        ParameterSpace::FiniteSet { points } => {
            let mut scored = Vec::with_capacity(points.len());
            for p in points {
                scored.push((p.clone(), metric.eval(p)?));
            }
            let diagnostics = ArgmaxDiagnostics {
                grid_points: points.len(),
                refinement_iterations: 0,
                evaluations: metric.evaluations,
                converged: true,
                boundary_maximum: false,
                excluded_points: metric.excluded,
            };
            select_ties(scored, config, diagnostics)
        }
        ParameterSpace::Box { lower, upper } => {
            let m = lower.len();
            let lo: Vec<f64> = lower.iter().map(|l| l + config.margin).collect();
            let hi: Vec<f64> = upper.iter().map(|u| u - config.margin).collect();
            if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
                return Err(Error::InvalidArgument("argmax margin leaves an empty box".into()));
            }
            let width: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
            let max_width = width.iter().cloned().fold(0.0, f64::max);

            let cap = (config.max_grid_points as f64).powf(1.0 / m as f64).floor() as usize;
            let per_axis = config.grid_per_axis.min(cap).max(1);
            let total = per_axis.pow(m as u32);
            let mut grid = Vec::with_capacity(total);
            let mut idx = vec![0usize; m];
            for _ in 0..total {
                let p: Vec<f64> = (0..m)
                    .map(|i| lo[i] + (idx[i] as f64 + 0.5) * width[i] / per_axis as f64)
                    .collect();
                let v = metric.eval(&p)?;
                grid.push((p, v));
                for i in (0..m).rev() {
                    idx[i] += 1;
                    if idx[i] < per_axis {
                        break;
                    }
                    idx[i] = 0;
                }
            }
            if grid.iter().all(|(_, v)| !v.is_finite()) {
                return Err(Error::NoFiniteValue);
            }
            let mut order: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].1.is_finite()).collect();
            order.sort_by(|&a, &b| grid[b].1.total_cmp(&grid[a].1).then(a.cmp(&b)));

            let step: Vec<f64> = width.iter().map(|w| 0.5 * w / per_axis as f64).collect();
            let x_tol = config.x_tolerance * max_width;
            let mut refined = Vec::new();
            let mut iterations = 0;
            let mut converged = true;
            for &i in order.iter().take(config.top_k.max(1)) {
                let (mut x, mut v) = grid[i].clone();
                let mut scale = step.clone();
                // Restart from the incumbent until a fresh simplex stops improving.
                for _ in 0..4 {
                    let r = nelder_mead(&mut metric, &x, v, &scale, &lo, &hi, x_tol, config.max_iterations)?;
                    iterations += r.iterations;
                    converged &= r.converged;
                    let improved = r.value > v;
                    let moved = r.point.iter().zip(&x).any(|(a, b)| (a - b).abs() > x_tol);
                    if r.value >= v {
                        x = r.point;
                        v = r.value;
                    }
                    if !improved && !moved {
                        break;
                    }
                    scale = scale.iter().map(|s| (s * 0.1).max(10.0 * x_tol)).collect();
                }
                refined.push((x, v));
            }

            // Merge refined points sitting on the same peak, keeping the best.
            refined.sort_by(|a, b| b.1.total_cmp(&a.1));
            let radius = config.merge_radius * max_width;
            let mut merged: Vec<(Vec<f64>, f64)> = Vec::new();
            for (p, v) in refined {
                let near = merged
                    .iter()
                    .any(|(q, _)| p.iter().zip(q).all(|(a, b)| (a - b).abs() <= radius));
                if !near {
                    merged.push((p, v));
                }
            }
            let boundary_tol = 1e-7 * max_width;
            let mut diagnostics = ArgmaxDiagnostics {
                grid_points: total,
                refinement_iterations: iterations,
                evaluations: metric.evaluations,
                converged,
                boundary_maximum: false,
                excluded_points: metric.excluded,
            };
            let mut set = select_ties(merged, config, diagnostics.clone())?;
            diagnostics.boundary_maximum = set.points.iter().any(|p| {
                p.iter()
                    .zip(lo.iter().zip(&hi))
                    .any(|(x, (l, h))| x - l <= boundary_tol || h - x <= boundary_tol)
            });
            set.diagnostics = diagnostics;
            Ok(set)
        }
    }
}

fn select_ties(
    scored: Vec<(Vec<f64>, f64)>,
    config: &ArgmaxConfig,
    diagnostics: ArgmaxDiagnostics,
) -> Result<EstimateSet> {
    let best = scored.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(Error::NoFiniteValue);
    }
    let slack = if config.log_scale {
        config.tie_tolerance
    } else {
        config.tie_tolerance * best.abs()
    };
    let mut kept: Vec<(Vec<f64>, f64)> = scored.into_iter().filter(|(_, v)| *v >= best - slack).collect();
    kept.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (points, values) = kept.into_iter().unzip();
    Ok(EstimateSet {
        points,
        values,
        tie_tolerance: config.tie_tolerance,
        diagnostics,
    })
}

struct NmResult {
    point: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Nelder–Mead maximisation inside the box `[lo, hi]` (trial points are
/// clamped onto the box).
#[allow(clippy::too_many_arguments)]
fn nelder_mead<F>(
    metric: &mut Counted<F>,
    start: &[f64],
    start_value: f64,
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    x_tol: f64,
    max_iterations: usize,
) -> Result<NmResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = start.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    // Minimise the negated metric.
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.to_vec(), -start_value)];
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step[i];
        if x[i] > hi[i] {
            x[i] = start[i] - step[i];
        }
        clamp(&mut x);
        let v = -metric.eval(&x)?;
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0, f64::max);
        if size <= x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..n).map(|i| centroid[i] + t * (worst.0[i] - centroid[i])).collect();
            clamp(&mut x);
            x
        };

        let xr = along(-1.0);
        let fr = -metric.eval(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = -metric.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            let f = -metric.eval(&x)?;
            (x, f)
        } else {
            let x = along(0.5);
            let f = -metric.eval(&x)?;
            (x, f)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for k in 1..=n {
            let mut x: Vec<f64> = (0..n).map(|i| best[i] + 0.5 * (simplex[k].0[i] - best[i])).collect();
            clamp(&mut x);
            let v = -metric.eval(&x)?;
            simplex[k] = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, v) = simplex.swap_remove(0);
    Ok(NmResult {
        point,
        value: -v,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_set_picks_largest() {
        let space = ParameterSpace::finite(vec![vec![1.0], vec![2.0]]).unwrap();
        let r = argmax(|t| Ok(if t[0] == 1.0 { 0.9 } else { 0.1 }), &space, &ArgmaxConfig::default()).unwrap();
        assert_eq!(r.points, vec![vec![1.0]]);
    }

    #[test]
    fn box_quadratic_peak() {
        let space = ParameterSpace::interval(-5.0, 5.0).unwrap();
        let r = argmax(|t| Ok(-(t[0] - 1.7).powi(2)), &space, &ArgmaxConfig::default()).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!((r.best()[0] - 1.7).abs() < 1e-6);
        assert!(!r.diagnostics.boundary_maximum);
    }

    #[test]
    fn symmetric_peaks_are_both_returned() {
        let space = ParameterSpace::interval(-3.0, 3.0).unwrap();
        let a = 1.3;
        let metric = |t: &[f64]| Ok((-(t[0] - a).powi(2) * 4.0).exp() + (-(t[0] + a).powi(2) * 4.0).exp());
        let r = argmax(metric, &space, &ArgmaxConfig::default()).unwrap();
        assert_eq!(r.points.len(), 2, "{:?}", r.points);
        let mut xs: Vec<f64> = r.points.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + a).abs() < 1e-4 && (xs[1] - a).abs() < 1e-4, "{xs:?}");
    }

    #[test]
    fn boundary_maximum_is_flagged() {
        let space = ParameterSpace::interval(0.0, 1.0).unwrap();
        let r = argmax(|t| Ok(t[0]), &space, &ArgmaxConfig::default()).unwrap();
        assert!(r.diagnostics.boundary_maximum);
        assert!((r.best()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_dimensional_rosenbrock_like() {
        let space = ParameterSpace::boxed(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let metric = |t: &[f64]| Ok(-((1.0 - t[0]).powi(2) + 10.0 * (t[1] - t[0] * t[0]).powi(2)));
        let r = argmax(metric, &space, &ArgmaxConfig::default()).unwrap();
        assert!((r.best()[0] - 1.0).abs() < 1e-5 && (r.best()[1] - 1.0).abs() < 1e-5, "{:?}", r.points);
    }

    #[test]
    fn excluded_points_are_counted() {
        let space = ParameterSpace::interval(-1.0, 1.0).unwrap();
        let metric = |t: &[f64]| Ok(if t[0] < 0.0 { f64::NAN } else { -(t[0] - 0.5).powi(2) });
        let r = argmax(metric, &space, &ArgmaxConfig::default()).unwrap();
        assert!(r.diagnostics.excluded_points > 0);
        assert!((r.best()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn all_nonfinite_is_an_error() {
        let space = ParameterSpace::interval(-1.0, 1.0).unwrap();
        let err = argmax(|_| Ok(f64::NAN), &space, &ArgmaxConfig::default()).unwrap_err();
        assert_eq!(err, Error::NoFiniteValue);
    }

    #[test]
    fn doubling_the_grid_does_not_move_the_result() {
        let space = ParameterSpace::boxed(vec![-1.0, 0.1], vec![2.0, 3.0]).unwrap();
        let metric = |t: &[f64]| Ok(-(t[0] - 0.3).powi(2) - 2.0 * (t[1].ln() - 0.2).powi(2));
        let a = argmax(metric, &space, &ArgmaxConfig::default()).unwrap();
        let cfg = ArgmaxConfig {
            grid_per_axis: 64,
            ..ArgmaxConfig::default()
        };
        let b = argmax(metric, &space, &cfg).unwrap();
        assert!(a.distance(&b) < 1e-6);
    }
}
