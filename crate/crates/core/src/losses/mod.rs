//! Loss functions `L(θ₁, θ₂)` over estimation problems.
//!
//! The first argument is the true parameter, the second the estimate.

pub mod generator;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::model::space::same_point;
use crate::model::{DataModel, EstimationProblem, ObservationKind, ParameterSpace, Prior, Rng64};
use crate::numerics::fisher::{fisher_information, FisherMethod};
use crate::numerics::quadrature::Tolerance;

pub use generator::{builtin_generator, BuiltinGenerator, CustomGenerator, Generator};

/// `θ₁ ↦ L(θ₁, θ₂)` with per-target work done once.
pub type BoundLoss<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + 'a>;

type PenaltyFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type CustomLossFn = Arc<dyn Fn(&EstimationProblem, &[f64], &[f64]) -> Result<f64> + Send + Sync>;

/// Positive function `g` on Θ.
#[derive(Clone)]
pub struct Penalty {
    pub name: String,
    g: PenaltyFn,
}

impl fmt::Debug for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Penalty({})", self.name)
    }
}

impl Penalty {
    pub fn new(name: &str, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_string(),
            g: Arc::new(g),
        }
    }

    /// `g ≡ 1`: PMLE is then maximum likelihood.
    pub fn flat() -> Self {
        Self::new("flat", |_| 1.0)
    }

    /// `g = Λ`: PMLE is then continuous MAP.
    pub fn prior_density(prior: &Prior) -> Self {
        let prior = prior.clone();
        Self::new("prior", move |t| prior.density(t))
    }

    /// Smooth random positive penalty `exp(Σ aₖ sin(kπuᵢ + φₖ))` on the
    /// bounding box of `space`, reproducible from `seed`.
    pub fn random(seed: u64, space: &ParameterSpace) -> Self {
        let (lo, hi) = space.bounding_box();
        let mut rng = Rng64::seed_from_u64(seed);
        let terms: Vec<Vec<(f64, f64)>> = lo
            .iter()
            .map(|_| {
                (1..=3)
                    .map(|_| (rng.random_range(-0.4..0.4), rng.random_range(0.0..std::f64::consts::TAU)))
                    .collect()
            })
            .collect();
        Self::new(&format!("random(seed={seed})"), move |t| {
            let mut s = 0.0;
            for (i, axis) in terms.iter().enumerate() {
                let width = (hi[i] - lo[i]).max(f64::MIN_POSITIVE);
                let u = (t[i] - lo[i]) / width;
                for (k, (a, phase)) in axis.iter().enumerate() {
                    s += a * ((k + 1) as f64 * std::f64::consts::PI * u + phase).sin();
                }
            }
            s.exp()
        })
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        (self.g)(theta)
    }
}

/// Per-target weight `γ(θ₂)` of a weighted loss, raised to `2/M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossWeight {
    /// `Λ(θ₂)^{2/M}`
    Prior,
    /// `(Λ(θ₂)/√|I_θ₂|)^{2/M}`
    PriorOverSqrtFisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossFlags {
    pub smooth: bool,
    pub discriminative_checked: bool,
    pub conditional_distribution_based: bool,
}

#[derive(Clone)]
pub struct CustomLoss {
    pub name: String,
    pub f: CustomLossFn,
    pub flags: LossFlags,
}

impl fmt::Debug for CustomLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomLoss({})", self.name)
    }
}

/// Weight `P(θ₂) = Prob_{θ∼Λ}(L₁(θ, θ₂) ≤ t)` by seeded Monte Carlo.
#[derive(Debug, Clone)]
pub struct NoIiaSpec {
    pub inner: Box<LossSpec>,
    pub outer: Box<LossSpec>,
    pub threshold: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum LossSpec {
    Quadratic,
    FDivergence(Generator),
    Bhattacharyya,
    /// `(Λ(θ₂)/g(θ₂))^{2/M} |θ₁ − θ₂|²`
    PmleInduced(Penalty),
    /// `∫ q (p − q)² dx` over a continuous observation space.
    NoIRO,
    /// `P(θ₂) L₂(θ₁, θ₂)`
    NoIIA(NoIiaSpec),
    /// `Σ Q (P − Q)²` over a discrete observation space.
    NoISI,
    Weighted { base: Box<LossSpec>, weight: LossWeight },
    Scaled { base: Box<LossSpec>, factor: f64 },
    Custom(CustomLoss),
}

impl LossSpec {
    pub fn hellinger2() -> Self {
        LossSpec::FDivergence(builtin_generator(BuiltinGenerator::Hellinger2))
    }

    pub fn kl() -> Self {
        LossSpec::FDivergence(builtin_generator(BuiltinGenerator::KL))
    }

    pub fn chi_squared() -> Self {
        LossSpec::FDivergence(builtin_generator(BuiltinGenerator::ChiSquared))
    }

    pub fn no_iia(inner: LossSpec, outer: LossSpec, threshold: f64, seed: u64) -> Self {
        LossSpec::NoIIA(NoIiaSpec {
            inner: Box::new(inner),
            outer: Box::new(outer),
            threshold,
            samples: 4000,
            seed,
        })
    }

    /// Quadratic loss weighted by `Λ(θ₂)^{2/M}`; its EIC is maximum likelihood.
    pub fn mle_quadratic() -> Self {
        LossSpec::Weighted {
            base: Box::new(LossSpec::Quadratic),
            weight: LossWeight::Prior,
        }
    }

    /// Squared Hellinger weighted by `(Λ/√|I|)^{2/M}`; its EIC is maximum likelihood.
    pub fn mle_hellinger() -> Self {
        LossSpec::Weighted {
            base: Box::new(LossSpec::hellinger2()),
            weight: LossWeight::PriorOverSqrtFisher,
        }
    }

    pub fn custom(
        name: &str,
        flags: LossFlags,
        f: impl Fn(&EstimationProblem, &[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        LossSpec::Custom(CustomLoss {
            name: name.to_string(),
            f: Arc::new(f),
            flags,
        })
    }

    pub fn name(&self) -> String {
        match self {
            LossSpec::Quadratic => "quadratic".into(),
            LossSpec::FDivergence(g) => g.name(),
            LossSpec::Bhattacharyya => "bhattacharyya".into(),
            LossSpec::PmleInduced(g) => format!("pmle_induced({})", g.name),
            LossSpec::NoIRO => "no_iro".into(),
            LossSpec::NoIIA(s) => format!("no_iia({}, {}, t={})", s.inner.name(), s.outer.name(), s.threshold),
            LossSpec::NoISI => "no_isi".into(),
            LossSpec::Weighted { base, weight } => format!("weighted({}, {weight:?})", base.name()),
            LossSpec::Scaled { base, factor } => format!("{factor}*{}", base.name()),
            LossSpec::Custom(c) => c.name.clone(),
        }
    }

    pub fn flags(&self) -> LossFlags {
        let flags = |cdb: bool| LossFlags {
            smooth: true,
            discriminative_checked: true,
            conditional_distribution_based: cdb,
        };
        match self {
            LossSpec::FDivergence(_) | LossSpec::Bhattacharyya | LossSpec::NoIRO | LossSpec::NoISI => flags(true),
            LossSpec::Quadratic | LossSpec::PmleInduced(_) | LossSpec::Weighted { .. } => flags(false),
            LossSpec::NoIIA(_) => LossFlags {
                discriminative_checked: false,
                ..flags(false)
            },
            LossSpec::Scaled { base, .. } => base.flags(),
            LossSpec::Custom(c) => c.flags,
        }
    }

    /// `γ = F″(1)` for losses whose Hessian is `γ · I_θ`.
    pub fn fisher_factor(&self) -> Option<f64> {
        match self {
            LossSpec::FDivergence(g) => Some(g.gamma()),
            LossSpec::Bhattacharyya => Some(0.25),
            LossSpec::Scaled { base, factor } => base.fisher_factor().map(|g| g * factor),
            _ => None,
        }
    }

    /// Binds the estimate `θ₂` using the default loss tolerance.
    pub fn bind_target<'a>(&'a self, problem: &'a EstimationProblem, theta2: &[f64]) -> Result<BoundLoss<'a>> {
        self.bind_target_with(problem, theta2, Tolerance::default())
    }

    pub fn bind_target_with<'a>(
        &'a self,
        problem: &'a EstimationProblem,
        theta2: &[f64],
        tol: Tolerance,
    ) -> Result<BoundLoss<'a>> {
        let t2 = theta2.to_vec();
        let m = theta2.len() as f64;
        match self {
            LossSpec::Quadratic => Ok(Box::new(move |t1| Ok(sq_dist(t1, &t2)))),
            LossSpec::FDivergence(g) => bind_fdivergence(problem, theta2, move |d| g.centered(d), tol),
            LossSpec::Bhattacharyya => {
                let g = builtin_generator(BuiltinGenerator::Hellinger2);
                let h2 = bind_fdivergence(problem, theta2, move |d| g.centered(d), tol)?;
                Ok(Box::new(move |t1| {
                    let h = h2(t1)?;
                    if h >= 1.0 - 1e-12 {
                        return Err(Error::SingularDivergence(h));
                    }
                    Ok(-(-h).ln_1p())
                }))
            }
            LossSpec::PmleInduced(g) => {
                problem.theta_space().check(theta2)?;
                let ratio = problem.prior().density(theta2) / g.eval(theta2);
                if !(ratio > 0.0 && ratio.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "penalty {} must be positive and finite at {theta2:?}",
                        g.name
                    )));
                }
                let factor = ratio.powf(2.0 / m);
                Ok(Box::new(move |t1| Ok(factor * sq_dist(t1, &t2))))
            }
            LossSpec::NoIRO => bind_density_gap(problem, theta2, false, tol),
            LossSpec::NoISI => bind_density_gap(problem, theta2, true, tol),
            LossSpec::NoIIA(spec) => {
                let weight = iia_weight(spec, problem, theta2, tol)?;
                let outer = spec.outer.bind_target_with(problem, theta2, tol)?;
                Ok(Box::new(move |t1| Ok(weight * outer(t1)?)))
            }
            LossSpec::Weighted { base, weight } => {
                problem.theta_space().check(theta2)?;
                let lambda = problem.prior().density(theta2);
                let w = match weight {
                    LossWeight::Prior => lambda,
                    LossWeight::PriorOverSqrtFisher => {
                        let fisher = match fisher_information(problem, theta2, FisherMethod::Analytic) {
                            Err(Error::NoAnalyticForm(_)) => fisher_information(problem, theta2, FisherMethod::BruteForce)?,
                            other => other?,
                        };
                        lambda / fisher.determinant().sqrt()
                    }
                }
                .powf(2.0 / m);
                let inner = base.bind_target_with(problem, theta2, tol)?;
                Ok(Box::new(move |t1| Ok(w * inner(t1)?)))
            }
            LossSpec::Scaled { base, factor } => {
                let inner = base.bind_target_with(problem, theta2, tol)?;
                let c = *factor;
                Ok(Box::new(move |t1| Ok(c * inner(t1)?)))
            }
            LossSpec::Custom(c) => Ok(Box::new(move |t1| (c.f)(problem, t1, &t2))),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `L(θ₁, θ₂)` at the default tolerance.
pub fn eval_loss(loss: &LossSpec, problem: &EstimationProblem, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
    loss.bind_target(problem, theta2)?(theta1)
}

/// Bhattacharyya distance `−ln(1 − H²)`.
pub fn bhattacharyya_loss(problem: &EstimationProblem, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
    eval_loss(&LossSpec::Bhattacharyya, problem, theta1, theta2)
}

/// Family used for ratio-only functionals: a sufficient reduction when one exists.
fn ratio_model(problem: &EstimationProblem) -> DataModel {
    problem.model().sufficient().unwrap_or_else(|| problem.model().clone())
}

/// `θ₁ ↦ E_{x∼θ₂}[k(ln f_θ₁(x) − ln f_θ₂(x))]`.
fn bind_fdivergence<'a, K>(
    problem: &'a EstimationProblem,
    theta2: &[f64],
    kernel: K,
    tol: Tolerance,
) -> Result<BoundLoss<'a>>
where
    K: Fn(f64) -> f64 + 'a,
{
    problem.theta_space().check(theta2)?;
    let model = ratio_model(problem);
    let chart = model.chart(theta2)?;
    let t2 = theta2.to_vec();
    Ok(Box::new(move |t1| {
        problem.theta_space().check(t1)?;
        if same_point(t1, &t2) {
            return Ok(0.0);
        }
        let e = chart.integrate(
            |x| {
                let lq = model.log_density(&t2, x)?;
                if lq == f64::NEG_INFINITY {
                    return Ok(0.0);
                }
                let lp = model.log_density(t1, x)?;
                Ok(lq.exp() * kernel(lp - lq))
            },
            tol,
        )?;
        Ok(e.value)
    }))
}

/// `θ₁ ↦ ∫ q (p − q)²` on the raw (unreduced) observation space.
fn bind_density_gap<'a>(
    problem: &'a EstimationProblem,
    theta2: &[f64],
    discrete: bool,
    tol: Tolerance,
) -> Result<BoundLoss<'a>> {
    problem.theta_space().check(theta2)?;
    let kind = problem.model().observation_kind();
    match (discrete, kind) {
        (true, ObservationKind::FiniteSet) | (false, ObservationKind::Continuum) => {}
        (true, _) => return Err(Error::UnsupportedClass("the discrete density-gap loss needs finite observations".into())),
        (false, _) => {
            return Err(Error::UnsupportedClass(
                "the continuous density-gap loss needs continuous observations".into(),
            ))
        }
    }
    let model = problem.model();
    let chart = model.chart(theta2)?;
    let t2 = theta2.to_vec();
    Ok(Box::new(move |t1| {
        problem.theta_space().check(t1)?;
        if same_point(t1, &t2) {
            return Ok(0.0);
        }
        let e = chart.integrate(
            |x| {
                let lq = model.log_density(&t2, x)?;
                if lq == f64::NEG_INFINITY {
                    return Ok(0.0);
                }
                let lp = model.log_density(t1, x)?;
                let q = lq.exp();
                let gap = q * (lp - lq).exp_m1();
                Ok(q * gap * gap)
            },
            tol,
        )?;
        Ok(e.value)
    }))
}

fn iia_weight(spec: &NoIiaSpec, problem: &EstimationProblem, theta2: &[f64], tol: Tolerance) -> Result<f64> {
    let inner = spec.inner.bind_target_with(problem, theta2, tol)?;
    let mut rng = Rng64::seed_from_u64(spec.seed);
    let mut hits = 0usize;
    for _ in 0..spec.samples {
        let theta = problem.prior().sample(&mut rng)?;
        if inner(&theta)? <= spec.threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / spec.samples as f64)
}

/// Spot check of `L ≥ 0` and `L(θ, θ) = 0` on `pairs` seeded prior draws.
pub fn check_loss_axioms(loss: &LossSpec, problem: &EstimationProblem, pairs: usize, seed: u64) -> Result<()> {
    let mut rng = Rng64::seed_from_u64(seed);
    let draw = |rng: &mut Rng64| -> Result<Vec<f64>> {
        match problem.prior().sample(rng) {
            Ok(t) => Ok(t),
            Err(_) => {
                let (lo, hi) = problem.theta_space().bounding_box();
                Ok(lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect())
            }
        }
    };
    for _ in 0..pairs {
        let (a, b) = (draw(&mut rng)?, draw(&mut rng)?);
        let bound = loss.bind_target(problem, &b)?;
        let l = bound(&a)?;
        if l < -1e-12 || !l.is_finite() {
            return Err(Error::InvalidArgument(format!("{} gives L({a:?}, {b:?}) = {l}", loss.name())));
        }
        let z = bound(&b)?;
        if z.abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("{} gives L(θ, θ) = {z} at {b:?}", loss.name())));
        }
    }
    Ok(())
}

/// Smallest `L(θ′, θ)` over grid points `θ′` outside the ball `B(θ, δ)`.
pub fn discriminativity_margin(
    loss: &LossSpec,
    problem: &EstimationProblem,
    theta: &[f64],
    delta: f64,
    per_axis: usize,
) -> Result<f64> {
    let bound = loss.bind_target(problem, theta)?;
    let candidates: Vec<Vec<f64>> = match problem.theta_space() {
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
    };
    let mut min = f64::INFINITY;
    for c in candidates {
        if sq_dist(&c, theta).sqrt() >= delta {
            min = min.min(bound(&c)?);
        }
    }
    Ok(min)
}
