use serde::{Deserialize, Serialize};

use super::family::DataModel;
use super::prior::Prior;
use super::space::{ObservationKind, ObservationSpace, ParameterSpace};
use crate::axioms::transforms::{Noise, ObsTransform, ParamTransform};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, Domain, Estimate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemClass {
    /// Finite parameter space.
    Discrete,
    /// Box parameter space with continuous observations.
    Continuous,
    /// Box parameter space with discrete (or mixed) observations.
    SemiContinuous,
}

/// A prior and a family of conditional data distributions over a parameter space.
#[derive(Debug, Clone)]
pub struct EstimationProblem {
    theta_space: ParameterSpace,
    obs_space: ObservationSpace,
    model: DataModel,
    prior: Prior,
    class: ProblemClass,
}

impl EstimationProblem {
    pub fn new(model: DataModel, prior: Prior) -> Result<Self> {
        let problem = Self::assemble(model, prior)?;
        problem.validate()?;
        Ok(problem)
    }

    /// Builds without numerical spot checks; for problems derived by exact
    /// transformation of an already validated problem.
    fn derived(model: DataModel, prior: Prior) -> Result<Self> {
        Self::assemble(model, prior)
    }

    fn assemble(model: DataModel, prior: Prior) -> Result<Self> {
        model.validate()?;
        let theta_space = prior.space().clone();
        if model.param_dim() != theta_space.dim() {
            return Err(Error::InvalidProblem(format!(
                "model {} has {} parameters but the space has dimension {}",
                model.name(),
                model.param_dim(),
                theta_space.dim()
            )));
        }
        let reference = Self::grid(&theta_space, 1)[0].clone();
        let obs_space = model.observation_space(&reference)?;
        let class = match (&theta_space, obs_space.kind) {
            (ParameterSpace::FiniteSet { .. }, _) => ProblemClass::Discrete,
            (_, ObservationKind::Continuum) => ProblemClass::Continuous,
            _ => ProblemClass::SemiContinuous,
        };
        Ok(Self {
            theta_space,
            obs_space,
            model,
            prior,
            class,
        })
    }

    /// Checks the declared class against the spaces.
    pub fn with_class(self, class: ProblemClass) -> Result<Self> {
        if class != self.class {
            return Err(Error::InvalidProblem(format!(
                "declared class {class:?} but the spaces make this a {:?} problem",
                self.class
            )));
        }
        Ok(self)
    }

    /// Parameter points for spot checks: the finite set, or a small interior grid.
    fn grid(space: &ParameterSpace, per_axis: usize) -> Vec<Vec<f64>> {
        match space {
            ParameterSpace::FiniteSet { points } => points.clone(),
            ParameterSpace::Box { lower, upper } => {
                let m = lower.len();
                let total = per_axis.pow(m as u32);
                (0..total)
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

    fn validate(&self) -> Result<()> {
        let mut checks = Self::grid(&self.theta_space, 3);
        if let ParameterSpace::Box { lower, upper } = &self.theta_space {
            // Corners nudged inside: the family must be defined up to the boundary.
            let m = lower.len();
            for mask in 0..(1usize << m) {
                checks.push(
                    (0..m)
                        .map(|i| {
                            let w = upper[i] - lower[i];
                            if mask >> i & 1 == 1 {
                                upper[i] - 1e-9 * w
                            } else {
                                lower[i] + 1e-9 * w
                            }
                        })
                        .collect(),
                );
            }
        }
        for theta in &checks {
            if !self.model.param_ok(theta) {
                return Err(Error::InvalidProblem(format!(
                    "parameter {theta:?} lies outside the domain of {}",
                    self.model.name()
                )));
            }
            if !(self.prior.density(theta) > 0.0) {
                return Err(Error::InvalidProblem(format!("prior vanishes at {theta:?}")));
            }
        }
        self.check_normalisation()?;
        self.check_distinct()?;
        Ok(())
    }

    fn check_normalisation(&self) -> Result<()> {
        let continuous = self.obs_space.kind != ObservationKind::FiniteSet;
        if continuous && !self.model.is_builtin() {
            return Ok(());
        }
        let reduced = self.model.sufficient();
        let model = reduced.as_ref().unwrap_or(&self.model);
        let probe = Self::grid(&self.theta_space, 2);
        for theta in probe.iter().take(3) {
            let z = model.chart(theta)?.integrate(|x| model.density(theta, x), Tolerance::default())?.value;
            if (z - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidProblem(format!(
                    "{} is not normalised at {theta:?}: total mass {z}",
                    model.name()
                )));
            }
        }
        Ok(())
    }

    fn check_distinct(&self) -> Result<()> {
        let Some(points) = self.theta_space.points() else {
            return Ok(());
        };
        let reduced = self.model.sufficient();
        let model = reduced.as_ref().unwrap_or(&self.model);
        for (i, a) in points.iter().enumerate() {
            let chart = model.chart(a)?;
            for b in &points[i + 1..] {
                let tv = chart
                    .integrate(
                        |x| Ok(0.5 * (model.density(a, x)? - model.density(b, x)?).abs()),
                        Tolerance::default(),
                    )?
                    .value;
                if !(tv > 1e-12) {
                    return Err(Error::InvalidProblem(format!(
                        "parameters {a:?} and {b:?} give the same data distribution"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn theta_space(&self) -> &ParameterSpace {
        &self.theta_space
    }

    pub fn obs_space(&self) -> &ObservationSpace {
        &self.obs_space
    }

    pub fn model(&self) -> &DataModel {
        &self.model
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn class(&self) -> ProblemClass {
        self.class
    }

    pub fn param_dim(&self) -> usize {
        self.theta_space.dim()
    }

    /// `f_θ(x)`.
    pub fn cond_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.theta_space.check(theta)?;
        self.model.density(theta, x)
    }

    pub fn log_cond_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.theta_space.check(theta)?;
        self.model.log_density(theta, x)
    }

    /// `f_θ₁(x) / f_θ₂(x)`.
    pub fn likelihood_ratio(&self, theta1: &[f64], theta2: &[f64], x: &[f64]) -> Result<f64> {
        let l1 = self.log_cond_density(theta1, x)?;
        let l2 = self.log_cond_density(theta2, x)?;
        if l2 == f64::NEG_INFINITY {
            return Err(Error::DivisionByZeroSupport(x.to_vec()));
        }
        Ok((l1 - l2).exp())
    }

    /// `f_θ(x) Λ(θ)`.
    pub fn posterior_unnorm(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.cond_density(theta, x)? * self.prior.density(theta))
    }

    /// Posterior for a fixed observation, with the evidence computed once.
    pub fn posterior_for(&self, x: &[f64]) -> Result<Posterior<'_>> {
        if !self.prior.is_proper() {
            return Err(Error::NonNormalisablePrior("the posterior needs a proper prior"));
        }
        let tol = Tolerance::relative(1e-11).with_initial_segments(8);
        let evidence = integrate(|t| self.posterior_unnorm(t, x), &self.theta_space.domain(), tol)?;
        if !(evidence.value > 0.0) {
            return Err(Error::DomainError(x.to_vec()));
        }
        Ok(Posterior {
            problem: self,
            x: x.to_vec(),
            evidence,
        })
    }

    /// `f(θ | x)`; one-off evaluation, see [`EstimationProblem::posterior_for`] for repeated use.
    pub fn posterior(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.posterior_for(x)?.density(theta)
    }

    /// Draws `(θ, x)` from the joint distribution.
    pub fn sample_joint(&self, rng: &mut super::Rng64) -> Result<(Vec<f64>, Vec<f64>)> {
        let theta = self.prior.sample(rng)?;
        let x = self.model.sample(&theta, rng)?;
        Ok((theta, x))
    }

    /// The same problem indexed by `φ = F(θ)`.
    pub fn reparameterised(&self, transform: &ParamTransform) -> Result<Self> {
        let prior = Prior::pushforward(&self.prior, transform)?;
        let model = DataModel::Reparameterised {
            base: Box::new(self.model.clone()),
            transform: transform.clone(),
        };
        Self::derived(model, prior)
    }

    /// The same problem observing `G(x)`.
    pub fn with_observation_transform(&self, transform: &ObsTransform) -> Result<Self> {
        let model = DataModel::ObsTransformed {
            base: Box::new(self.model.clone()),
            transform: transform.clone(),
        };
        Self::derived(model, self.prior.clone())
    }

    /// The same problem observing `(x, y)` with independent noise `y`.
    pub fn augmented(&self, noise: Noise) -> Result<Self> {
        let model = DataModel::Augmented {
            base: Box::new(self.model.clone()),
            noise,
        };
        Self::derived(model, self.prior.clone())
    }

    /// The same model under another prior on the same space.
    pub fn with_prior(&self, prior: Prior) -> Result<Self> {
        if prior.space() != &self.theta_space {
            return Err(Error::InvalidProblem("replacement prior lives on a different space".into()));
        }
        Self::derived(self.model.clone(), prior)
    }

    /// Observation support at `θ`.
    pub fn support(&self, theta: &[f64]) -> Result<Domain> {
        self.model.support(theta)
    }
}

/// `f(θ | x)` for one observation.
#[derive(Debug, Clone)]
pub struct Posterior<'a> {
    problem: &'a EstimationProblem,
    x: Vec<f64>,
    evidence: Estimate,
}

impl Posterior<'_> {
    pub fn evidence(&self) -> f64 {
        self.evidence.value
    }

    pub fn evidence_error(&self) -> f64 {
        self.evidence.error
    }

    pub fn observation(&self) -> &[f64] {
        &self.x
    }

    pub fn density(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.problem.posterior_unnorm(theta, &self.x)? / self.evidence.value)
    }

    /// Posterior masses of a finite parameter space, in point order.
    pub fn pmf(&self) -> Option<Vec<f64>> {
        let points = self.problem.theta_space.points()?;
        points.iter().map(|p| self.density(p).ok()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::family::CustomModel;

    fn bernoulli_flat() -> EstimationProblem {
        let space = ParameterSpace::interval(0.0, 1.0).unwrap();
        EstimationProblem::new(DataModel::Bernoulli, Prior::beta(&space, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn likelihood_ratios() {
        let p = bernoulli_flat();
        assert!((p.likelihood_ratio(&[0.8], &[0.5], &[1.0]).unwrap() - 1.6).abs() < 1e-14);
        assert!((p.likelihood_ratio(&[0.8], &[0.5], &[0.0]).unwrap() - 0.4).abs() < 1e-14);
        assert_eq!(p.likelihood_ratio(&[0.3], &[0.3], &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn conjugate_posterior() {
        let p = bernoulli_flat();
        let post = p.posterior_for(&[1.0]).unwrap();
        assert!((post.density(&[0.5]).unwrap() - 1.0).abs() < 1e-9);
        assert!((post.density(&[0.9]).unwrap() - 1.8).abs() < 1e-9);
    }

    #[test]
    fn discrete_posterior_from_table() {
        let space = ParameterSpace::finite(vec![vec![1.0], vec![2.0]]).unwrap();
        let model = CustomModel::table(
            "pair",
            vec![vec![1.0], vec![2.0]],
            vec![vec![0.0], vec![1.0]],
            vec![vec![0.1, 0.9], vec![0.9, 0.1]],
        )
        .unwrap();
        let p = EstimationProblem::new(DataModel::Custom(model), Prior::uniform(&space).unwrap()).unwrap();
        assert_eq!(p.class(), ProblemClass::Discrete);
        let pmf = p.posterior_for(&[1.0]).unwrap().pmf().unwrap();
        assert!((pmf[0] - 0.9).abs() < 1e-15 && (pmf[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn classes_follow_spaces() {
        let b = ParameterSpace::interval(-2.0, 2.0).unwrap();
        let g = EstimationProblem::new(
            DataModel::GaussianKnownSigma { sigma: 1.0 },
            Prior::uniform(&b).unwrap(),
        )
        .unwrap();
        assert_eq!(g.class(), ProblemClass::Continuous);
        assert!(g.clone().with_class(ProblemClass::SemiContinuous).is_err());
        let s = ParameterSpace::interval(0.1, 0.9).unwrap();
        let bin = EstimationProblem::new(DataModel::BinomialN { n: 10 }, Prior::uniform(&s).unwrap()).unwrap();
        assert_eq!(bin.class(), ProblemClass::SemiContinuous);
    }

    #[test]
    fn improper_prior_has_no_posterior() {
        let s = ParameterSpace::boxed(vec![-3.0, 0.2], vec![3.0, 5.0]).unwrap();
        let p = EstimationProblem::new(
            DataModel::GaussianMeanSigma { n: 3 },
            Prior::power_law_sigma(&s, 1).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            p.posterior(&[0.0, 1.0], &[0.0, 1.0, -1.0]),
            Err(Error::NonNormalisablePrior(_))
        ));
        assert!(p.posterior_unnorm(&[0.0, 1.0], &[0.0, 1.0, -1.0]).unwrap() > 0.0);
    }

    #[test]
    fn identical_distributions_are_rejected() {
        let space = ParameterSpace::finite(vec![vec![1.0], vec![2.0]]).unwrap();
        let model = CustomModel::table(
            "same",
            vec![vec![1.0], vec![2.0]],
            vec![vec![0.0], vec![1.0]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        assert!(EstimationProblem::new(DataModel::Custom(model), Prior::uniform(&space).unwrap()).is_err());
    }
}
