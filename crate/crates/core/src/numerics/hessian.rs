//! Hessian of `θ′ ↦ L(θ′, θ)` at `θ′ = θ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::model::EstimationProblem;
use crate::numerics::matrix::SymMatrix;
use crate::numerics::quadrature::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HessianConfig {
    /// Step is `max(min_step, rel_step·|θᵢ|)` per axis.
    pub rel_step: f64,
    pub min_step: f64,
    /// One Richardson extrapolation step from `h` and `h/2`.
    pub richardson: bool,
    /// Relative tolerance of the loss integrals. Losses a step away from the
    /// diagonal are `O(h²)`, so an absolute tolerance would swamp them.
    pub loss_rel_tol: f64,
}

impl Default for HessianConfig {
    fn default() -> Self {
        Self {
            rel_step: 1e-4,
            min_step: 1e-4,
            richardson: true,
            loss_rel_tol: 1e-9,
        }
    }
}

pub fn hessian_at_diagonal(loss: &LossSpec, problem: &EstimationProblem, theta: &[f64]) -> Result<SymMatrix> {
    hessian_at_diagonal_with(loss, problem, theta, &HessianConfig::default())
}

pub fn hessian_at_diagonal_with(
    loss: &LossSpec,
    problem: &EstimationProblem,
    theta: &[f64],
    config: &HessianConfig,
) -> Result<SymMatrix> {
    let space = problem.theta_space();
    if space.is_finite() {
        return Err(Error::UnsupportedClass("loss Hessians need a continuous parameter space".into()));
    }
    space.check(theta)?;
    let m = theta.len();
    let steps: Vec<f64> = theta.iter().map(|t| config.min_step.max(config.rel_step * t.abs())).collect();
    for (d, h) in space.boundary_distance(theta).iter().zip(&steps) {
        if *d < 2.0 * h {
            return Err(Error::BoundaryTooClose {
                point: theta.to_vec(),
                margin: 2.0 * h,
            });
        }
    }
    let tol = Tolerance::relative(config.loss_rel_tol);
    let bound = loss.bind_target_with(problem, theta, tol)?;
    let eval = |offsets: &[(usize, f64)]| -> Result<f64> {
        let mut t = theta.to_vec();
        for &(i, d) in offsets {
            t[i] += d;
        }
        let v = bound(&t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteLoss(t))
        }
    };
    let l0 = eval(&[])?;
    let stencil = |scale: f64| -> Result<Vec<f64>> {
        let h: Vec<f64> = steps.iter().map(|s| s * scale).collect();
        let mut dense = vec![0.0; m * m];
        for i in 0..m {
            let d = (eval(&[(i, h[i])])? - 2.0 * l0 + eval(&[(i, -h[i])])?) / (h[i] * h[i]);
            dense[i * m + i] = d;
            for j in 0..i {
                let pp = eval(&[(i, h[i]), (j, h[j])])?;
                let pm = eval(&[(i, h[i]), (j, -h[j])])?;
                let mp = eval(&[(i, -h[i]), (j, h[j])])?;
                let mm = eval(&[(i, -h[i]), (j, -h[j])])?;
                let d = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
                dense[i * m + j] = d;
                dense[j * m + i] = d;
            }
        }
        Ok(dense)
    };
    let coarse = stencil(1.0)?;
    let dense = if config.richardson {
        let fine = stencil(0.5)?;
        fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
    } else {
        coarse
    };
    SymMatrix::from_dense(m, &dense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataModel, ParameterSpace, Prior};
    use crate::numerics::fisher::{fisher_information, FisherMethod};

    fn problem(model: DataModel, lo: Vec<f64>, hi: Vec<f64>) -> EstimationProblem {
        let s = ParameterSpace::boxed(lo, hi).unwrap();
        EstimationProblem::new(model, Prior::uniform(&s).unwrap()).unwrap()
    }

    #[test]
    fn quadratic_hessian_is_twice_identity() {
        let p = problem(DataModel::GaussianMeanSigma { n: 2 }, vec![-1.0, 0.5], vec![1.0, 2.0]);
        let h = hessian_at_diagonal(&LossSpec::Quadratic, &p, &[0.1, 1.0]).unwrap();
        assert!(h.relative_deviation(&SymMatrix::identity(2).scaled(2.0)) < 1e-8);
    }

    #[test]
    fn f_divergence_hessians_are_scaled_fisher() {
        let p = problem(DataModel::Bernoulli, vec![0.0], vec![1.0]);
        for (loss, gamma) in [(LossSpec::hellinger2(), 0.25), (LossSpec::kl(), 1.0), (LossSpec::chi_squared(), 2.0)] {
            let h = hessian_at_diagonal(&loss, &p, &[0.3]).unwrap();
            let i = fisher_information(&p, &[0.3], FisherMethod::Analytic).unwrap();
            assert!(h.relative_deviation(&i.scaled(gamma)) < 1e-6, "{}", loss.name());
        }
    }

    #[test]
    fn boundary_and_finite_space_errors() {
        let p = problem(DataModel::Bernoulli, vec![0.0], vec![1.0]);
        assert!(matches!(
            hessian_at_diagonal(&LossSpec::kl(), &p, &[1e-4]),
            Err(Error::BoundaryTooClose { .. })
        ));
        let s = ParameterSpace::finite(vec![vec![0.2], vec![0.7]]).unwrap();
        let p = EstimationProblem::new(DataModel::Bernoulli, Prior::uniform(&s).unwrap()).unwrap();
        assert!(matches!(
            hessian_at_diagonal(&LossSpec::kl(), &p, &[0.2]),
            Err(Error::UnsupportedClass(_))
        ));
    }
}
