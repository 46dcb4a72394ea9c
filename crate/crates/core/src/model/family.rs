use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, Exp, Gamma, Normal};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};
use statrs::function::gamma::ln_gamma;

use super::space::{same_point, ObservationKind, ObservationSpace};
use super::Rng64;
use crate::axioms::transforms::{Noise, ObsTransform, ParamTransform};
use crate::error::{Error, Result};
use crate::numerics::matrix::{inverse, SymMatrix};
use crate::numerics::quadrature::{integrate, Axis, Domain, Estimate, Tolerance};

/// Largest discrete product support that is enumerated outright.
const MAX_ENUMERATED: usize = 1 << 20;

type LogDensityFn = Arc<dyn Fn(&[f64], &[f64]) -> Option<f64> + Send + Sync>;
type SupportFn = Arc<dyn Fn(&[f64]) -> Domain + Send + Sync>;
type ParamCheckFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type SamplerFn = Arc<dyn Fn(&[f64], &mut Rng64) -> Vec<f64> + Send + Sync>;

/// A user-supplied family `f_θ(x)`.
///
/// `log_density` returns `None` for `x` outside the support.
#[derive(Clone)]
pub struct CustomModel {
    pub name: String,
    pub param_dim: usize,
    pub obs_dim: usize,
    pub kind: ObservationKind,
    pub log_density: LogDensityFn,
    pub support: SupportFn,
    pub param_ok: Option<ParamCheckFn>,
    pub sampler: Option<SamplerFn>,
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel")
            .field("name", &self.name)
            .field("param_dim", &self.param_dim)
            .field("obs_dim", &self.obs_dim)
            .field("kind", &self.kind)
            .finish()
    }
}

impl CustomModel {
    /// Finite table: `probs[i][j] = P(x = outcomes[j] | θ = thetas[i])`.
    pub fn table(
        name: &str,
        thetas: Vec<Vec<f64>>,
        outcomes: Vec<Vec<f64>>,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if thetas.is_empty() || outcomes.is_empty() || probs.len() != thetas.len() {
            return Err(Error::InvalidProblem("pmf table needs one row per parameter point".into()));
        }
        for row in &probs {
            if row.len() != outcomes.len() || row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidProblem("pmf table rows must be nonnegative, one entry per outcome".into()));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidProblem(format!("pmf table row sums to {total}, not 1")));
            }
        }
        let param_dim = thetas[0].len();
        let obs_dim = outcomes[0].len();
        let thetas = Arc::new(thetas);
        let outcomes = Arc::new(outcomes);
        let probs = Arc::new(probs);
        let (t1, o1, p1) = (thetas.clone(), outcomes.clone(), probs.clone());
        let t2 = thetas.clone();
        let (t3, o3, p3) = (thetas, outcomes.clone(), probs);
        Ok(CustomModel {
            name: name.to_string(),
            param_dim,
            obs_dim,
            kind: ObservationKind::FiniteSet,
            log_density: Arc::new(move |theta, x| {
                let i = t1.iter().position(|t| same_point(t, theta))?;
                let j = o1.iter().position(|o| same_point(o, x))?;
                Some(p1[i][j].ln())
            }),
            support: Arc::new(move |_| Domain::Points(outcomes.as_ref().clone())),
            param_ok: Some(Arc::new(move |theta| t2.iter().any(|t| same_point(t, theta)))),
            sampler: Some(Arc::new(move |theta, rng| {
                let i = t3.iter().position(|t| same_point(t, theta)).unwrap_or(0);
                let j = sample_index(&p3[i], rng);
                o3[j].clone()
            })),
        })
    }
}

fn sample_index(weights: &[f64], rng: &mut Rng64) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Integration domain for an observation support together with the
/// re-encodings carrying its points into observation space.
#[derive(Debug, Clone)]
pub struct ObsChart {
    pub domain: Domain,
    /// Applied in order, each to the leading `usize` coordinates.
    warps: Vec<(ObsTransform, usize)>,
}

impl ObsChart {
    /// Maps chart coordinates to an observation; returns `ln |det Jacobian|`.
    pub fn map_into(&self, u: &[f64], y: &mut Vec<f64>) -> f64 {
        y.clear();
        y.extend_from_slice(u);
        let mut ln_jac = 0.0;
        for (g, d) in &self.warps {
            for i in 0..*d {
                ln_jac += g.derivative_scalar(i, y[i]).abs().ln();
                y[i] = g.forward_scalar(i, y[i]);
            }
        }
        ln_jac
    }

    /// `∫ h(y) dy` (or `Σ h(y)`) over the observation support.
    pub fn integrate<F>(&self, h: F, tol: Tolerance) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        if self.warps.is_empty() {
            return integrate(h, &self.domain, tol);
        }
        integrate(
            |u| {
                let mut y = Vec::with_capacity(u.len());
                let ln_jac = self.map_into(u, &mut y);
                if ln_jac == f64::NEG_INFINITY {
                    return Ok(0.0);
                }
                Ok(h(&y)? * ln_jac.exp())
            },
            &self.domain,
            tol,
        )
    }
}

/// Conditional data distribution family `θ ↦ P_θ`.
#[derive(Debug, Clone)]
pub enum DataModel {
    Bernoulli,
    BinomialN { n: u32 },
    /// `θ = (p₁, …, p_{k−1})`, `p_k = 1 − Σθ`; outcomes are labels `0..k`.
    Categorical { k: usize },
    GaussianKnownSigma { sigma: f64 },
    /// `θ = (μ, σ)` for `n` iid normal observations.
    GaussianMeanSigma { n: usize },
    ExponentialRate,
    IidProduct { base: Box<DataModel>, n: usize },
    /// Sum of `n` iid exponentials with rate `θ`.
    GammaSum { n: usize },
    /// `(x̄, S)` for `n` iid normal observations with `θ = (μ, σ)`.
    GaussianSufficient { n: usize },
    Custom(CustomModel),
    /// The base family indexed by `φ = F(θ)`.
    Reparameterised { base: Box<DataModel>, transform: ParamTransform },
    /// Observations re-encoded as `y = G(x)`.
    ObsTransformed { base: Box<DataModel>, transform: ObsTransform },
    /// Observations `(x, y)` with `y` independent noise.
    Augmented { base: Box<DataModel>, noise: Noise },
}

fn ln_choose(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

fn normal_ln_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

fn is_label(x: f64, count: u32) -> bool {
    x >= 0.0 && x < count as f64 && x.fract() == 0.0
}

impl DataModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProblem(m.to_string()));
        match self {
            DataModel::BinomialN { n } if *n == 0 => bad("BinomialN needs n >= 1"),
            DataModel::Categorical { k } if *k < 2 => bad("Categorical needs k >= 2"),
            DataModel::GaussianKnownSigma { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => {
                bad("GaussianKnownSigma needs sigma > 0")
            }
            DataModel::GaussianMeanSigma { n } if *n == 0 => bad("GaussianMeanSigma needs n >= 1"),
            DataModel::GammaSum { n } if *n == 0 => bad("GammaSum needs n >= 1"),
            DataModel::GaussianSufficient { n } if *n < 2 => bad("GaussianSufficient needs n >= 2"),
            DataModel::IidProduct { n, .. } if *n == 0 => bad("IidProduct needs n >= 1"),
            DataModel::IidProduct { base, .. } => base.validate(),
            DataModel::Reparameterised { base, .. } => base.validate(),
            DataModel::ObsTransformed { base, transform } => {
                transform.validate()?;
                if base.observation_kind() == ObservationKind::Mixed {
                    return bad("observation transforms need a purely discrete or continuous base");
                }
                base.validate()
            }
            DataModel::Augmented { base, .. } => base.validate(),
            DataModel::Custom(c) if c.param_dim == 0 || c.obs_dim == 0 => bad("custom model needs positive dimensions"),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DataModel::Bernoulli => "bernoulli".into(),
            DataModel::BinomialN { n } => format!("binomial(n={n})"),
            DataModel::Categorical { k } => format!("categorical(k={k})"),
            DataModel::GaussianKnownSigma { sigma } => format!("gaussian_known_sigma(sigma={sigma})"),
            DataModel::GaussianMeanSigma { n } => format!("gaussian_mean_sigma(n={n})"),
            DataModel::ExponentialRate => "exponential_rate".into(),
            DataModel::IidProduct { base, n } => format!("iid({}, n={n})", base.name()),
            DataModel::GammaSum { n } => format!("gamma_sum(n={n})"),
            DataModel::GaussianSufficient { n } => format!("gaussian_sufficient(n={n})"),
            DataModel::Custom(c) => c.name.clone(),
            DataModel::Reparameterised { base, transform } => format!("{} @ {}", base.name(), transform.name()),
            DataModel::ObsTransformed { base, transform } => format!("{}({})", transform.name(), base.name()),
            DataModel::Augmented { base, noise } => format!("{} + {noise:?}", base.name()),
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            DataModel::Categorical { k } => k - 1,
            DataModel::GaussianMeanSigma { .. } | DataModel::GaussianSufficient { .. } => 2,
            DataModel::IidProduct { base, .. }
            | DataModel::ObsTransformed { base, .. }
            | DataModel::Augmented { base, .. }
            | DataModel::Reparameterised { base, .. } => base.param_dim(),
            DataModel::Custom(c) => c.param_dim,
            _ => 1,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            DataModel::GaussianMeanSigma { n } => *n,
            DataModel::GaussianSufficient { .. } => 2,
            DataModel::IidProduct { base, n } => base.obs_dim() * n,
            DataModel::Custom(c) => c.obs_dim,
            DataModel::Reparameterised { base, .. } | DataModel::ObsTransformed { base, .. } => base.obs_dim(),
            DataModel::Augmented { base, .. } => base.obs_dim() + 1,
            _ => 1,
        }
    }

    pub fn observation_kind(&self) -> ObservationKind {
        match self {
            DataModel::Bernoulli | DataModel::BinomialN { .. } | DataModel::Categorical { .. } => {
                ObservationKind::FiniteSet
            }
            DataModel::Custom(c) => c.kind,
            DataModel::IidProduct { base, .. }
            | DataModel::Reparameterised { base, .. }
            | DataModel::ObsTransformed { base, .. } => base.observation_kind(),
            DataModel::Augmented { base, noise } => {
                let kind = base.observation_kind();
                match (kind, noise.is_discrete()) {
                    (ObservationKind::FiniteSet, true) | (ObservationKind::Continuum, false) => kind,
                    _ => ObservationKind::Mixed,
                }
            }
            _ => ObservationKind::Continuum,
        }
    }

    /// Whether `θ` lies in the family's natural parameter domain.
    pub fn param_ok(&self, theta: &[f64]) -> bool {
        if theta.len() != self.param_dim() || theta.iter().any(|t| !t.is_finite()) {
            return false;
        }
        match self {
            DataModel::Bernoulli | DataModel::BinomialN { .. } => theta[0] > 0.0 && theta[0] < 1.0,
            DataModel::Categorical { .. } => theta.iter().all(|p| *p > 0.0) && theta.iter().sum::<f64>() < 1.0,
            DataModel::GaussianKnownSigma { .. } => true,
            DataModel::GaussianMeanSigma { .. } | DataModel::GaussianSufficient { .. } => theta[1] > 0.0,
            DataModel::ExponentialRate | DataModel::GammaSum { .. } => theta[0] > 0.0,
            DataModel::Custom(c) => c.param_ok.as_ref().is_none_or(|f| f(theta)),
            DataModel::Reparameterised { base, transform } => base.param_ok(&transform.inverse(theta)),
            DataModel::IidProduct { base, .. }
            | DataModel::ObsTransformed { base, .. }
            | DataModel::Augmented { base, .. } => base.param_ok(theta),
        }
    }

    fn check_param(&self, theta: &[f64]) -> Result<()> {
        if self.param_ok(theta) {
            Ok(())
        } else {
            Err(Error::OutOfSupport(theta.to_vec()))
        }
    }

    /// `ln f_θ(x)`; `-∞` where the density vanishes on the closure of the support.
    pub fn log_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.check_param(theta)?;
        if x.len() != self.obs_dim() {
            return Err(Error::DomainError(x.to_vec()));
        }
        let outside = || Err(Error::DomainError(x.to_vec()));
        let t = theta[0];
        match self {
            DataModel::Bernoulli => match x[0] {
                v if v == 1.0 => Ok(t.ln()),
                v if v == 0.0 => Ok((1.0 - t).ln()),
                _ => outside(),
            },
            DataModel::BinomialN { n } => {
                if !is_label(x[0], n + 1) {
                    return outside();
                }
                let k = x[0] as u32;
                Ok(ln_choose(*n, k) + k as f64 * t.ln() + (n - k) as f64 * (1.0 - t).ln())
            }
            DataModel::Categorical { k } => {
                if !is_label(x[0], *k as u32) {
                    return outside();
                }
                let i = x[0] as usize;
                let p = if i + 1 < *k { theta[i] } else { 1.0 - theta.iter().sum::<f64>() };
                Ok(p.ln())
            }
            DataModel::GaussianKnownSigma { sigma } => {
                if !x[0].is_finite() {
                    return outside();
                }
                Ok(normal_ln_pdf(x[0], t, *sigma))
            }
            DataModel::GaussianMeanSigma { .. } => {
                if x.iter().any(|v| !v.is_finite()) {
                    return outside();
                }
                Ok(x.iter().map(|v| normal_ln_pdf(*v, theta[0], theta[1])).sum())
            }
            DataModel::ExponentialRate => {
                if !(x[0] >= 0.0 && x[0].is_finite()) {
                    return outside();
                }
                Ok(t.ln() - t * x[0])
            }
            DataModel::GammaSum { n } => {
                if !(x[0] >= 0.0 && x[0].is_finite()) {
                    return outside();
                }
                let n = *n as f64;
                Ok(n * t.ln() + (n - 1.0) * x[0].ln() - t * x[0] - ln_gamma(n))
            }
            DataModel::GaussianSufficient { n } => {
                if !x[0].is_finite() || !(x[1] >= 0.0 && x[1].is_finite()) {
                    return outside();
                }
                let (mu, sigma) = (theta[0], theta[1]);
                let nf = *n as f64;
                let k = nf - 1.0;
                let s2 = sigma * sigma;
                let y = x[1] / s2;
                let ln_chi = (0.5 * k - 1.0) * y.ln() - 0.5 * y - 0.5 * k * 2f64.ln() - ln_gamma(0.5 * k);
                Ok(normal_ln_pdf(x[0], mu, sigma / nf.sqrt()) + ln_chi - s2.ln())
            }
            DataModel::IidProduct { base, n } => {
                let d = base.obs_dim();
                let mut total = 0.0;
                for i in 0..*n {
                    total += base.log_density(theta, &x[i * d..(i + 1) * d])?;
                }
                Ok(total)
            }
            DataModel::Custom(c) => (c.log_density)(theta, x).map_or_else(outside, Ok),
            DataModel::Reparameterised { base, transform } => base.log_density(&transform.inverse(theta), x),
            DataModel::ObsTransformed { base, transform } => {
                let raw = transform.inverse(x);
                match base.observation_kind() {
                    ObservationKind::FiniteSet => {
                        let snapped = base.snap_outcome(theta, &raw).ok_or_else(|| Error::DomainError(x.to_vec()))?;
                        base.log_density(theta, &snapped)
                    }
                    _ => {
                        if raw.iter().any(|v| v.is_nan()) {
                            return outside();
                        }
                        let ln_jac = transform.log_abs_jacobian(&raw);
                        if ln_jac == f64::NEG_INFINITY {
                            // Critical points of G form a null set; take the density to be 0 there.
                            return Ok(f64::NEG_INFINITY);
                        }
                        Ok(base.log_density(theta, &raw)? - ln_jac)
                    }
                }
            }
            DataModel::Augmented { base, noise } => {
                let d = base.obs_dim();
                let ln_noise = noise.log_density(x[d]).ok_or_else(|| Error::DomainError(x.to_vec()))?;
                Ok(base.log_density(theta, &x[..d])? + ln_noise)
            }
        }
    }

    pub fn density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.log_density(theta, x)?.exp())
    }

    /// Nearest support point to `x` for discrete families, if within rounding.
    fn snap_outcome(&self, theta: &[f64], x: &[f64]) -> Option<Vec<f64>> {
        let points = self.support(theta).ok()?.enumerate()?;
        points
            .into_iter()
            .find(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + a.abs())))
    }

    /// Observation support at `θ`, with axis hints placing the bulk of the mass.
    pub fn support(&self, theta: &[f64]) -> Result<Domain> {
        self.check_param(theta)?;
        let t = theta[0];
        let labels = |count: usize| Domain::Points((0..count).map(|i| vec![i as f64]).collect());
        Ok(match self {
            DataModel::Bernoulli => labels(2),
            DataModel::BinomialN { n } => labels(*n as usize + 1),
            DataModel::Categorical { k } => labels(*k),
            DataModel::GaussianKnownSigma { sigma } => Domain::Box(vec![Axis::real_line(t, *sigma)]),
            DataModel::GaussianMeanSigma { n } => Domain::Box(vec![Axis::real_line(theta[0], theta[1]); *n]),
            // Exponential tails need a map scale of several decay lengths,
            // otherwise the compactified integrand is singular at the end.
            DataModel::ExponentialRate => Domain::Box(vec![Axis::new(0.0, f64::INFINITY, 1.0 / t, 4.0 / t)]),
            DataModel::GammaSum { n } => {
                let n = *n as f64;
                Domain::Box(vec![Axis::new(0.0, f64::INFINITY, n / t, n.sqrt().max(4.0) / t)])
            }
            DataModel::GaussianSufficient { n } => {
                let (mu, sigma) = (theta[0], theta[1]);
                let k = *n as f64 - 1.0;
                let s2 = sigma * sigma;
                Domain::Box(vec![
                    Axis::real_line(mu, sigma / (*n as f64).sqrt()),
                    Axis::new(0.0, f64::INFINITY, k * s2, s2 * (2.0 * k).sqrt().max(8.0)),
                ])
            }
            DataModel::IidProduct { base, n } => {
                let one = base.support(theta)?;
                match &one {
                    Domain::Box(axes) => Domain::Box(axes.iter().cloned().cycle().take(axes.len() * n).collect()),
                    Domain::Points(p) => {
                        if p.len().checked_pow(*n as u32).is_none_or(|s| s > MAX_ENUMERATED) {
                            return Err(Error::UnsupportedClass(format!(
                                "discrete product support of {} is too large to enumerate",
                                self.name()
                            )));
                        }
                        let mut d = one.clone();
                        for _ in 1..*n {
                            d = Domain::Product(Box::new(d), Box::new(one.clone()));
                        }
                        Domain::Points(d.enumerate().expect("discrete"))
                    }
                    Domain::Product(..) => {
                        let mut d = one.clone();
                        for _ in 1..*n {
                            d = Domain::Product(Box::new(d), Box::new(one.clone()));
                        }
                        d
                    }
                }
            }
            DataModel::Custom(c) => (c.support)(theta),
            DataModel::Reparameterised { base, transform } => base.support(&transform.inverse(theta))?,
            DataModel::ObsTransformed { base, transform } => transform.map_domain(&base.support(theta)?)?,
            DataModel::Augmented { base, noise } => {
                let b = base.support(theta)?;
                match (b, noise.domain()) {
                    (Domain::Points(p), Domain::Points(q)) => Domain::Points(
                        Domain::Product(Box::new(Domain::Points(p)), Box::new(Domain::Points(q)))
                            .enumerate()
                            .expect("discrete"),
                    ),
                    (Domain::Box(mut a), Domain::Box(q)) => {
                        a.extend(q);
                        Domain::Box(a)
                    }
                    (b, q) => Domain::Product(Box::new(b), Box::new(q)),
                }
            }
        })
    }

    /// Integration chart for expectations over the observation support.
    ///
    /// Continuous re-encoded observations are integrated in the coordinates
    /// of the underlying family, which keeps kinks and singular Jacobians of
    /// `G` away from the quadrature rule.
    pub fn chart(&self, theta: &[f64]) -> Result<ObsChart> {
        match self {
            DataModel::Reparameterised { base, transform } => base.chart(&transform.inverse(theta)),
            DataModel::ObsTransformed { base, transform } if base.observation_kind() == ObservationKind::Continuum => {
                let mut chart = base.chart(theta)?;
                chart.warps.push((transform.clone(), base.obs_dim()));
                Ok(chart)
            }
            DataModel::Augmented { base, noise } => {
                let mut chart = base.chart(theta)?;
                chart.domain = match (chart.domain, noise.domain()) {
                    (Domain::Points(p), Domain::Points(q)) => Domain::Points(
                        Domain::Product(Box::new(Domain::Points(p)), Box::new(Domain::Points(q)))
                            .enumerate()
                            .expect("discrete"),
                    ),
                    (Domain::Box(mut a), Domain::Box(q)) => {
                        a.extend(q);
                        Domain::Box(a)
                    }
                    (b, q) => Domain::Product(Box::new(b), Box::new(q)),
                };
                Ok(chart)
            }
            _ => Ok(ObsChart {
                domain: self.support(theta)?,
                warps: Vec::new(),
            }),
        }
    }

    /// Observation space described from the support at a reference `θ`.
    pub fn observation_space(&self, theta: &[f64]) -> Result<ObservationSpace> {
        let kind = self.observation_kind();
        let support = self.support(theta)?;
        let dim = self.obs_dim();
        let (mut lower, mut upper) = (vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim]);
        if let Domain::Box(axes) = &support {
            for (i, a) in axes.iter().enumerate() {
                lower[i] = a.lower;
                upper[i] = a.upper;
            }
        }
        let points = support.enumerate();
        if let Some(p) = &points {
            for i in 0..dim {
                lower[i] = p.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
                upper[i] = p.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
            }
        }
        Ok(ObservationSpace {
            kind,
            dim,
            points,
            lower,
            upper,
        })
    }

    /// Draws `x ∼ P_θ`.
    pub fn sample(&self, theta: &[f64], rng: &mut Rng64) -> Result<Vec<f64>> {
        self.check_param(theta)?;
        let t = theta[0];
        let bad = |e: String| Error::InvalidArgument(e);
        Ok(match self {
            DataModel::Bernoulli => vec![f64::from(u8::from(rng.random::<f64>() < t))],
            DataModel::BinomialN { n } => {
                vec![Binomial::new(u64::from(*n), t).map_err(|e| bad(e.to_string()))?.sample(rng) as f64]
            }
            DataModel::Categorical { k } => {
                let mut w = theta.to_vec();
                w.push(1.0 - theta.iter().sum::<f64>());
                debug_assert_eq!(w.len(), *k);
                vec![sample_index(&w, rng) as f64]
            }
            DataModel::GaussianKnownSigma { sigma } => {
                vec![Normal::new(t, *sigma).map_err(|e| bad(e.to_string()))?.sample(rng)]
            }
            DataModel::GaussianMeanSigma { n } => {
                let d = Normal::new(theta[0], theta[1]).map_err(|e| bad(e.to_string()))?;
                (0..*n).map(|_| d.sample(rng)).collect()
            }
            DataModel::ExponentialRate => vec![Exp::new(t).map_err(|e| bad(e.to_string()))?.sample(rng)],
            DataModel::GammaSum { n } => {
                vec![Gamma::new(*n as f64, 1.0 / t).map_err(|e| bad(e.to_string()))?.sample(rng)]
            }
            DataModel::GaussianSufficient { n } => {
                let (mu, sigma) = (theta[0], theta[1]);
                let nf = *n as f64;
                let mean = Normal::new(mu, sigma / nf.sqrt()).map_err(|e| bad(e.to_string()))?.sample(rng);
                let chi = ChiSquared::new(nf - 1.0).map_err(|e| bad(e.to_string()))?.sample(rng);
                vec![mean, sigma * sigma * chi]
            }
            DataModel::IidProduct { base, n } => {
                let mut out = Vec::with_capacity(self.obs_dim());
                for _ in 0..*n {
                    out.extend(base.sample(theta, rng)?);
                }
                out
            }
            DataModel::Custom(c) => match &c.sampler {
                Some(s) => s(theta, rng),
                None => return Err(Error::InvalidArgument(format!("custom model {} has no sampler", c.name))),
            },
            DataModel::Reparameterised { base, transform } => base.sample(&transform.inverse(theta), rng)?,
            DataModel::ObsTransformed { base, transform } => transform.forward(&base.sample(theta, rng)?),
            DataModel::Augmented { base, noise } => {
                let mut x = base.sample(theta, rng)?;
                x.push(noise.sample(rng));
                x
            }
        })
    }

    /// Closed-form Fisher information.
    pub fn fisher_analytic(&self, theta: &[f64]) -> Result<SymMatrix> {
        self.check_param(theta)?;
        let t = theta[0];
        Ok(match self {
            DataModel::Bernoulli => SymMatrix::diagonal(&[1.0 / (t * (1.0 - t))]),
            DataModel::BinomialN { n } => SymMatrix::diagonal(&[*n as f64 / (t * (1.0 - t))]),
            DataModel::Categorical { k } => {
                let last = 1.0 - theta.iter().sum::<f64>();
                SymMatrix::from_fn(k - 1, |i, j| if i == j { 1.0 / theta[i] + 1.0 / last } else { 1.0 / last })
            }
            DataModel::GaussianKnownSigma { sigma } => SymMatrix::diagonal(&[1.0 / (sigma * sigma)]),
            DataModel::GaussianMeanSigma { n } | DataModel::GaussianSufficient { n } => {
                let s2 = theta[1] * theta[1];
                let n = *n as f64;
                SymMatrix::diagonal(&[n / s2, 2.0 * n / s2])
            }
            DataModel::ExponentialRate => SymMatrix::diagonal(&[1.0 / (t * t)]),
            DataModel::GammaSum { n } => SymMatrix::diagonal(&[*n as f64 / (t * t)]),
            DataModel::IidProduct { base, n } => base.fisher_analytic(theta)?.scaled(*n as f64),
            DataModel::Custom(c) => return Err(Error::NoAnalyticForm(c.name.clone())),
            DataModel::Reparameterised { base, transform } => {
                let inner = transform.inverse(theta);
                let m = theta.len();
                let j_inv = inverse(m, &transform.jacobian(&inner))?;
                base.fisher_analytic(&inner)?.congruence(&j_inv)
            }
            DataModel::ObsTransformed { base, .. } | DataModel::Augmented { base, .. } => base.fisher_analytic(theta)?,
        })
    }

    /// Equivalent family on a sufficient statistic: every likelihood ratio
    /// `f_θ₁/f_θ₂` has the same law under the reduced model. Gaussian samples
    /// of size 2 stay unreduced, as `S` would have a singular density at 0.
    pub fn sufficient(&self) -> Option<DataModel> {
        match self {
            DataModel::GaussianMeanSigma { n } if *n >= 3 => Some(DataModel::GaussianSufficient { n: *n }),
            DataModel::IidProduct { base, n } => match base.as_ref() {
                DataModel::Bernoulli => Some(DataModel::BinomialN { n: *n as u32 }),
                DataModel::BinomialN { n: m } => Some(DataModel::BinomialN { n: m * *n as u32 }),
                DataModel::GaussianKnownSigma { sigma } => Some(DataModel::GaussianKnownSigma {
                    sigma: sigma / (*n as f64).sqrt(),
                }),
                DataModel::ExponentialRate => Some(DataModel::GammaSum { n: *n }),
                DataModel::GaussianMeanSigma { n: m } if m * n >= 3 => Some(DataModel::GaussianSufficient { n: m * n }),
                _ => None,
            },
            DataModel::Reparameterised { base, transform } => base.sufficient().map(|b| DataModel::Reparameterised {
                base: Box::new(b),
                transform: transform.clone(),
            }),
            _ => None,
        }
    }

    /// Quantile of a one-dimensional continuous family.
    pub fn inverse_cdf(&self, theta: &[f64], u: f64) -> Option<f64> {
        if !self.param_ok(theta) || self.obs_dim() != 1 {
            return None;
        }
        let t = theta[0];
        match self {
            DataModel::GaussianKnownSigma { sigma } => Some(
                statrs::distribution::Normal::new(t, *sigma).ok()?.inverse_cdf(u),
            ),
            DataModel::GaussianMeanSigma { n: 1 } => Some(
                statrs::distribution::Normal::new(t, theta[1]).ok()?.inverse_cdf(u),
            ),
            DataModel::ExponentialRate => Some(-(-u).ln_1p() / t),
            DataModel::GammaSum { n } => Some(GammaDist::new(*n as f64, t).ok()?.inverse_cdf(u)),
            DataModel::IidProduct { base, n: 1 } => base.inverse_cdf(theta, u),
            DataModel::Reparameterised { base, transform } => base.inverse_cdf(&transform.inverse(theta), u),
            DataModel::ObsTransformed { base, transform } => {
                let increasing = transform.forward_scalar(0, 1.0) > transform.forward_scalar(0, 0.0);
                let q = base.inverse_cdf(theta, if increasing { u } else { 1.0 - u })?;
                Some(transform.forward_scalar(0, q))
            }
            _ => None,
        }
    }

    /// Whether this is a built-in family whose normalisation is checked on construction.
    pub fn is_builtin(&self) -> bool {
        match self {
            DataModel::Custom(_) => false,
            DataModel::IidProduct { base, .. } => base.is_builtin(),
            DataModel::Reparameterised { .. } | DataModel::ObsTransformed { .. } | DataModel::Augmented { .. } => false,
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn total_mass(model: &DataModel, theta: &[f64]) -> f64 {
        let chart = model.chart(theta).unwrap();
        chart.integrate(|x| model.density(theta, x), Tolerance::default()).unwrap().value
    }

    #[test]
    fn builtin_densities_normalise() {
        let cases: Vec<(DataModel, Vec<f64>)> = vec![
            (DataModel::Bernoulli, vec![0.3]),
            (DataModel::BinomialN { n: 10 }, vec![0.7]),
            (DataModel::Categorical { k: 3 }, vec![0.2, 0.5]),
            (DataModel::GaussianKnownSigma { sigma: 2.0 }, vec![-1.0]),
            (DataModel::ExponentialRate, vec![3.0]),
            (DataModel::GammaSum { n: 4 }, vec![0.5]),
            (DataModel::GaussianSufficient { n: 5 }, vec![0.3, 1.7]),
            (DataModel::GaussianMeanSigma { n: 2 }, vec![0.3, 0.7]),
        ];
        for (m, theta) in cases {
            let z = total_mass(&m, &theta);
            assert!((z - 1.0).abs() < 1e-7, "{} integrates to {z}", m.name());
        }
    }

    #[test]
    fn point_values() {
        assert_eq!(DataModel::Bernoulli.density(&[0.5], &[1.0]).unwrap(), 0.5);
        let g = DataModel::GaussianKnownSigma { sigma: 1.0 };
        assert!((g.density(&[0.0], &[0.0]).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        let iid = DataModel::IidProduct {
            base: Box::new(DataModel::Bernoulli),
            n: 3,
        };
        assert!((iid.density(&[0.5], &[1.0, 0.0, 1.0]).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn out_of_support_is_an_error() {
        assert!(matches!(
            DataModel::Bernoulli.density(&[0.5], &[2.0]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            DataModel::Bernoulli.density(&[1.5], &[1.0]),
            Err(Error::OutOfSupport(_))
        ));
    }

    #[test]
    fn table_model_pmf_and_sampling() {
        let m = CustomModel::table(
            "two",
            vec![vec![1.0], vec![2.0]],
            vec![vec![0.0], vec![1.0]],
            vec![vec![0.1, 0.9], vec![0.9, 0.1]],
        )
        .unwrap();
        let m = DataModel::Custom(m);
        assert!((m.density(&[1.0], &[1.0]).unwrap() - 0.9).abs() < 1e-15);
        let mut rng = Rng64::seed_from_u64(1);
        let ones: f64 = (0..2000).map(|_| m.sample(&[2.0], &mut rng).unwrap()[0]).sum();
        assert!((ones / 2000.0 - 0.1).abs() < 0.03);
    }

    #[test]
    fn transformed_observations_keep_mass() {
        let base = DataModel::GaussianKnownSigma { sigma: 1.0 };
        for g in crate::axioms::transforms::catalog::obs_transforms() {
            let m = DataModel::ObsTransformed {
                base: Box::new(base.clone()),
                transform: g.clone(),
            };
            let z = total_mass(&m, &[0.4]);
            assert!((z - 1.0).abs() < 1e-6, "{} integrates to {z}", g.name());
        }
    }

    #[test]
    fn reparameterised_fisher_transforms_covariantly() {
        let t = ParamTransform::scale_shift(&[2.0], &[1.0]).unwrap();
        let m = DataModel::Reparameterised {
            base: Box::new(DataModel::Bernoulli),
            transform: t,
        };
        // θ = 0.25 ↦ φ = 1.5; I_φ = I_θ / 4.
        let i = m.fisher_analytic(&[1.5]).unwrap().get(0, 0);
        assert!((i - 1.0 / (0.25 * 0.75) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn sufficient_reductions_preserve_likelihood_ratios() {
        let iid = DataModel::IidProduct {
            base: Box::new(DataModel::ExponentialRate),
            n: 3,
        };
        let red = iid.sufficient().unwrap();
        let x = [0.2, 1.1, 0.4];
        let s = [x.iter().sum::<f64>()];
        let lr = |m: &DataModel, x: &[f64]| m.log_density(&[2.0], x).unwrap() - m.log_density(&[0.7], x).unwrap();
        assert!((lr(&iid, &x) - lr(&red, &s)).abs() < 1e-12);
    }

    #[test]
    fn inverse_cdf_matches_exponential() {
        let q = DataModel::ExponentialRate.inverse_cdf(&[2.0], 0.5).unwrap();
        assert!((q - 2f64.ln() / 2.0).abs() < 1e-15);
    }
}
