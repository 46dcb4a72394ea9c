//! Point estimators: discrete and continuous MAP, Wallace–Freeman,
//! penalised ML, Bayes, and EIC over a smooth loss.
//!
//! Metrics are maximised on a log scale. Points where a metric is undefined
//! (zero posterior, non-positive Fisher or Hessian determinant, a Hessian
//! stencil crossing the boundary) are excluded from candidacy and counted in
//! the argmax diagnostics.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::losses::{LossSpec, Penalty};
use crate::model::{EstimationProblem, ParameterSpace};
use crate::numerics::argmax::{argmax, ArgmaxConfig, EstimateSet};
use crate::numerics::fisher::{fisher_information, FisherMethod};
use crate::numerics::hessian::{hessian_at_diagonal_with, HessianConfig};
use crate::numerics::matrix::SymMatrix;
use crate::numerics::quadrature::{integrate, Tolerance};

#[derive(Debug, Clone)]
pub enum EstimatorKind {
    DMAP,
    CMAP,
    WF,
    PMLE(Penalty),
    Bayes { loss: LossSpec, extend_to_box: bool },
    EIC(LossSpec),
}

#[derive(Debug, Clone)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub fisher: FisherMethod,
    pub hessian: HessianConfig,
    pub argmax: ArgmaxConfig,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        Self {
            kind,
            fisher: FisherMethod::Analytic,
            hessian: HessianConfig::default(),
            argmax: ArgmaxConfig::default(),
        }
    }

    pub fn dmap() -> Self {
        Self::new(EstimatorKind::DMAP)
    }

    pub fn cmap() -> Self {
        Self::new(EstimatorKind::CMAP)
    }

    pub fn wf() -> Self {
        Self::new(EstimatorKind::WF)
    }

    pub fn pmle(g: Penalty) -> Self {
        Self::new(EstimatorKind::PMLE(g))
    }

    pub fn bayes(loss: LossSpec) -> Self {
        Self::new(EstimatorKind::Bayes {
            loss,
            extend_to_box: false,
        })
    }

    /// Bayes with the estimate ranging over the bounding box of Θ.
    pub fn bayes_extended(loss: LossSpec) -> Self {
        Self::new(EstimatorKind::Bayes {
            loss,
            extend_to_box: true,
        })
    }

    pub fn eic(loss: LossSpec) -> Self {
        Self::new(EstimatorKind::EIC(loss))
    }

    pub fn with_argmax(mut self, argmax: ArgmaxConfig) -> Self {
        self.argmax = argmax;
        self
    }

    pub fn with_fisher(mut self, fisher: FisherMethod) -> Self {
        self.fisher = fisher;
        self
    }

    pub fn name(&self) -> String {
        match &self.kind {
            EstimatorKind::DMAP => "dmap".into(),
            EstimatorKind::CMAP => "cmap".into(),
            EstimatorKind::WF => "wf".into(),
            EstimatorKind::PMLE(g) => format!("pmle({})", g.name),
            EstimatorKind::Bayes { loss, extend_to_box } => {
                format!("bayes({}{})", loss.name(), if *extend_to_box { ", extended" } else { "" })
            }
            EstimatorKind::EIC(loss) => format!("eic({})", loss.name()),
        }
    }
}

/// `ln Λ(θ) + ln f(x|θ)`.
pub fn log_posterior_unnorm(problem: &EstimationProblem, theta: &[f64], x: &[f64]) -> Result<f64> {
    let prior = problem.prior().density(theta);
    if !(prior > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(prior.ln() + problem.log_cond_density(theta, x)?)
}

/// Fisher information, falling back to brute force when no closed form exists.
pub fn fisher_or_brute_force(problem: &EstimationProblem, theta: &[f64], method: FisherMethod) -> Result<SymMatrix> {
    match fisher_information(problem, theta, method) {
        Err(Error::NoAnalyticForm(_)) if method == FisherMethod::Analytic => {
            fisher_information(problem, theta, FisherMethod::BruteForce)
        }
        other => other,
    }
}

fn log_sqrt_det(m: &SymMatrix, what: &str, theta: &[f64]) -> Result<f64> {
    let det = m.determinant();
    if det > 0.0 && det.is_finite() {
        Ok(0.5 * det.ln())
    } else {
        Err(Error::IllDefinedEstimator(format!("{what} determinant {det} at {theta:?}")))
    }
}

/// `ln f(θ|x)·… − ½ ln |H_L^θ|`, the log of the EIC metric.
pub fn eic_log_metric(
    loss: &LossSpec,
    problem: &EstimationProblem,
    x: &[f64],
    theta: &[f64],
    config: &HessianConfig,
) -> Result<f64> {
    let h = hessian_at_diagonal_with(loss, problem, theta, config)?;
    Ok(log_posterior_unnorm(problem, theta, x)? - log_sqrt_det(&h, "loss Hessian", theta)?)
}

/// `posterior_unnorm(θ, x) / √|H_L^θ|`.
pub fn eic_metric(loss: &LossSpec, problem: &EstimationProblem, x: &[f64], theta: &[f64]) -> Result<f64> {
    Ok(eic_log_metric(loss, problem, x, theta, &HessianConfig::default())?.exp())
}

/// `ln posterior_unnorm(θ, x) − ½ ln |I_θ|`.
pub fn wf_log_metric(problem: &EstimationProblem, x: &[f64], theta: &[f64], method: FisherMethod) -> Result<f64> {
    let i = fisher_or_brute_force(problem, theta, method)?;
    Ok(log_posterior_unnorm(problem, theta, x)? - log_sqrt_det(&i, "Fisher information", theta)?)
}

/// Loss whose EIC estimator is `PMLE(g)`.
pub fn pmle_to_loss(g: &Penalty, problem: &EstimationProblem) -> Result<LossSpec> {
    for theta in probe_points(problem.theta_space(), 5) {
        let v = g.eval(&theta);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty {} is {v} at {theta:?}", g.name)));
        }
        if !problem.prior().density(&theta).is_finite() {
            return Err(Error::NonNormalisablePrior("pmle_to_loss"));
        }
    }
    Ok(LossSpec::PmleInduced(g.clone()))
}

/// Penalty `g = Λ/√|H_L|` whose PMLE is the EIC estimator of `loss`.
/// Where the Hessian is unavailable `g` is NaN, which excludes the point.
pub fn eic_penalty(loss: &LossSpec, problem: &EstimationProblem, config: HessianConfig) -> Penalty {
    let (loss, problem) = (loss.clone(), Arc::new(problem.clone()));
    Penalty::new(&format!("prior/sqrt|H[{}]|", loss.name()), move |theta| {
        match hessian_at_diagonal_with(&loss, &problem, theta, &config) {
            Ok(h) if h.determinant() > 0.0 => problem.prior().density(theta) / h.determinant().sqrt(),
            _ => f64::NAN,
        }
    })
}

fn probe_points(space: &ParameterSpace, per_axis: usize) -> Vec<Vec<f64>> {
    match space {
        ParameterSpace::FiniteSet { points } => points.clone(),
        ParameterSpace::Box { lower, upper } => {
            let m = lower.len();
            (0..per_axis.pow(m as u32))
                .map(|mut idx| {
                    (0..m)
                        .map(|i| {
                            let k = idx % per_axis;
                            idx /= per_axis;
                            lower[i] + (upper[i] - lower[i]) * (k as f64 + 0.5) / per_axis as f64
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Keeps Hessian stencils inside the box.
fn hessian_margin(space: &ParameterSpace, config: &HessianConfig, argmax: &ArgmaxConfig) -> ArgmaxConfig {
    let (lo, hi) = space.bounding_box();
    let reach = lo
        .iter()
        .chain(&hi)
        .map(|b| 2.5 * config.min_step.max(config.rel_step * b.abs()))
        .fold(0.0, f64::max);
    ArgmaxConfig {
        margin: argmax.margin.max(reach),
        ..argmax.clone()
    }
}

/// Maps metric errors that only disqualify a point to `−∞`.
fn exclude_undefined(v: Result<f64>) -> Result<f64> {
    match v {
        Err(Error::IllDefinedEstimator(_))
        | Err(Error::BoundaryTooClose { .. })
        | Err(Error::SingularDivergence(_))
        | Err(Error::NonFiniteLoss(_))
        | Err(Error::OutOfSupport(_)) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

fn log_scale(config: &ArgmaxConfig) -> ArgmaxConfig {
    ArgmaxConfig {
        log_scale: true,
        ..config.clone()
    }
}

fn maximise<F>(metric: F, space: &ParameterSpace, config: &ArgmaxConfig, what: &str) -> Result<EstimateSet>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    argmax(metric, space, config).map_err(|e| match e {
        Error::NoFiniteValue => Error::IllDefinedEstimator(format!("{what} metric is undefined everywhere on Θ")),
        other => other,
    })
}

pub fn estimate(spec: &EstimatorSpec, problem: &EstimationProblem, x: &[f64]) -> Result<EstimateSet> {
    let space = problem.theta_space();
    // The observation must be possible under some parameter.
    problem.model().log_density(&probe_points(space, 1)[0], x)?;
    match &spec.kind {
        EstimatorKind::DMAP => {
            if !space.is_finite() {
                return Err(Error::UnsupportedClass("discrete MAP needs a finite parameter space".into()));
            }
            map_estimate(problem, x, &spec.argmax)
        }
        EstimatorKind::CMAP => map_estimate(problem, x, &spec.argmax),
        EstimatorKind::WF => {
            if space.is_finite() {
                return Err(Error::UnsupportedClass("Wallace–Freeman needs a continuous parameter space".into()));
            }
            let config = log_scale(&spec.argmax);
            maximise(
                |t| exclude_undefined(wf_log_metric(problem, x, t, spec.fisher)),
                space,
                &config,
                "WF",
            )
        }
        EstimatorKind::PMLE(g) => {
            let config = log_scale(&spec.argmax);
            maximise(
                |t| {
                    let v = g.eval(t);
                    if !(v > 0.0 && v.is_finite()) {
                        return Ok(f64::NEG_INFINITY);
                    }
                    exclude_undefined(problem.log_cond_density(t, x).map(|l| l + v.ln()))
                },
                space,
                &config,
                "PMLE",
            )
        }
        EstimatorKind::Bayes { loss, extend_to_box } => {
            let candidates = if *extend_to_box {
                let (lo, hi) = space.bounding_box();
                ParameterSpace::boxed(lo, hi)?
            } else {
                space.clone()
            };
            maximise(
                |t| bayes_expected_loss(loss, problem, x, t).map(|v| -v),
                &candidates,
                &spec.argmax,
                "Bayes",
            )
        }
        EstimatorKind::EIC(loss) => {
            if !loss.flags().smooth {
                return Err(Error::InvalidArgument(format!("EIC needs a smooth loss, {} is not", loss.name())));
            }
            if space.is_finite() {
                return map_estimate(problem, x, &spec.argmax);
            }
            let config = log_scale(&hessian_margin(space, &spec.hessian, &spec.argmax));
            maximise(
                |t| exclude_undefined(eic_log_metric(loss, problem, x, t, &spec.hessian)),
                space,
                &config,
                "EIC",
            )
        }
    }
}

fn map_estimate(problem: &EstimationProblem, x: &[f64], config: &ArgmaxConfig) -> Result<EstimateSet> {
    maximise(
        |t| exclude_undefined(log_posterior_unnorm(problem, t, x)),
        problem.theta_space(),
        &log_scale(config),
        "MAP",
    )
}

/// Posterior expected loss `E[L(θ, θ̂) | x]`. `θ̂` may leave Θ for losses
/// defined off it (the quadratic loss).
pub fn bayes_expected_loss(loss: &LossSpec, problem: &EstimationProblem, x: &[f64], estimate: &[f64]) -> Result<f64> {
    let posterior = problem.posterior_for(x)?;
    let bound = if matches!(loss, LossSpec::Quadratic) || problem.theta_space().contains(estimate) {
        loss.bind_target(problem, estimate)?
    } else {
        return Err(Error::OutOfSupport(estimate.to_vec()));
    };
    let e = integrate(
        |t| {
            let p = posterior.density(t)?;
            if p == 0.0 {
                return Ok(0.0);
            }
            Ok(p * bound(t)?)
        },
        &problem.theta_space().domain(),
        Tolerance::default().with_initial_segments(4),
    )?;
    Ok(e.value)
}

/// One estimate per observation, in input order.
pub fn estimate_batch(spec: &EstimatorSpec, problem: &EstimationProblem, xs: &[Vec<f64>]) -> Vec<Result<EstimateSet>> {
    xs.iter().map(|x| estimate(spec, problem, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CustomModel, DataModel, Prior};

    fn table_problem() -> EstimationProblem {
        let thetas = vec![vec![1.0], vec![2.0]];
        let m = CustomModel::table(
            "two-point",
            thetas.clone(),
            vec![vec![0.0], vec![1.0]],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        )
        .unwrap();
        let s = ParameterSpace::finite(thetas).unwrap();
        EstimationProblem::new(DataModel::Custom(m), Prior::uniform(&s).unwrap()).unwrap()
    }

    fn gaussian_mean() -> EstimationProblem {
        let s = ParameterSpace::interval(-4.0, 4.0).unwrap();
        let p = Prior::gaussian(&s, vec![0.0], vec![1.0]).unwrap();
        EstimationProblem::new(DataModel::GaussianKnownSigma { sigma: 1.0 }, p).unwrap()
    }

    #[test]
    fn discrete_map_and_extended_bayes() {
        let p = table_problem();
        let map = estimate(&EstimatorSpec::dmap(), &p, &[0.0]).unwrap();
        assert_eq!(map.points, vec![vec![1.0]]);
        let bayes = estimate(&EstimatorSpec::bayes_extended(LossSpec::Quadratic), &p, &[0.0]).unwrap();
        assert!((bayes.best()[0] - 1.1).abs() < 1e-6);
        let risk = bayes_expected_loss(&LossSpec::Quadratic, &p, &[0.0], bayes.best()).unwrap();
        assert!((risk - 0.09).abs() < 1e-6);
        // Restricted to Θ the choice is between 1 and 2.
        let b = estimate(&EstimatorSpec::bayes(LossSpec::Quadratic), &p, &[0.0]).unwrap();
        assert_eq!(b.points, vec![vec![1.0]]);
        let eic = estimate(&EstimatorSpec::eic(LossSpec::hellinger2()), &p, &[0.0]).unwrap();
        assert_eq!(eic.points, map.points);
    }

    #[test]
    fn conjugate_gaussian_map_and_eic() {
        let p = gaussian_mean();
        // Posterior N(x/2, 1/2).
        let cmap = estimate(&EstimatorSpec::cmap(), &p, &[1.2]).unwrap();
        assert!((cmap.best()[0] - 0.6).abs() < 1e-6);
        let wf = estimate(&EstimatorSpec::wf(), &p, &[1.2]).unwrap();
        assert!((wf.best()[0] - 0.6).abs() < 1e-6);
        let eic = estimate(&EstimatorSpec::eic(LossSpec::Quadratic), &p, &[1.2]).unwrap();
        assert!((eic.best()[0] - 0.6).abs() < 1e-5);
        let bayes = estimate(&EstimatorSpec::bayes(LossSpec::Quadratic), &p, &[1.2]).unwrap();
        assert!((bayes.best()[0] - 0.6).abs() < 1e-5);
    }

    #[test]
    fn eic_metric_binomial_value() {
        let s = ParameterSpace::interval(0.0, 1.0).unwrap();
        let p = EstimationProblem::new(DataModel::BinomialN { n: 10 }, Prior::uniform(&s).unwrap()).unwrap();
        let v = eic_metric(&LossSpec::hellinger2(), &p, &[7.0], &[0.5]).unwrap();
        let oracle = 120.0 * 0.5f64.powi(10) / 10f64.sqrt();
        assert!((v - oracle).abs() < 1e-6 * oracle, "{v} vs {oracle}");
        let q = eic_metric(&LossSpec::Quadratic, &p, &[7.0], &[0.5]).unwrap();
        assert!((q - 120.0 * 0.5f64.powi(10) / 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn scaling_the_loss_rescales_the_metric() {
        let p = gaussian_mean();
        let base = eic_metric(&LossSpec::kl(), &p, &[0.3], &[0.2]).unwrap();
        let scaled = LossSpec::Scaled {
            base: Box::new(LossSpec::kl()),
            factor: 4.0,
        };
        let v = eic_metric(&scaled, &p, &[0.3], &[0.2]).unwrap();
        assert!((v - base / 2.0).abs() < 1e-6 * base);
    }

    #[test]
    fn flat_penalty_gives_mle() {
        let p = gaussian_mean();
        let loss = pmle_to_loss(&Penalty::flat(), &p).unwrap();
        let a = estimate(&EstimatorSpec::eic(loss), &p, &[1.2]).unwrap();
        assert!((a.best()[0] - 1.2).abs() < 1e-5);
        let b = estimate(&EstimatorSpec::pmle(Penalty::flat()), &p, &[1.2]).unwrap();
        assert!((b.best()[0] - 1.2).abs() < 1e-6);
    }

    #[test]
    fn improper_prior_bayes_is_rejected_and_wf_is_not() {
        let s = ParameterSpace::boxed(vec![-5.0, 0.2], vec![5.0, 6.0]).unwrap();
        let prior = Prior::power_law_sigma(&s, 1).unwrap();
        let p = EstimationProblem::new(DataModel::GaussianMeanSigma { n: 4 }, prior).unwrap();
        let x = [0.1, -0.5, 1.0, 0.7];
        assert!(matches!(
            estimate(&EstimatorSpec::bayes(LossSpec::Quadratic), &p, &x),
            Err(Error::NonNormalisablePrior(_))
        ));
        let wf = estimate(&EstimatorSpec::wf().with_argmax(ArgmaxConfig { grid_per_axis: 12, ..Default::default() }), &p, &x)
            .unwrap();
        let mean = x.iter().sum::<f64>() / 4.0;
        let s2 = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        assert!((wf.best()[0] - mean).abs() < 1e-5);
        assert!((wf.best()[1] * wf.best()[1] - s2 / 3.0).abs() < 1e-5);
    }
}
