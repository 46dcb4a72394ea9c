use std::fmt;
use std::sync::Arc;

use rand::Rng;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use super::space::ParameterSpace;
use super::Rng64;
use crate::axioms::transforms::ParamTransform;
use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, Axis, Domain, Tolerance};

type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SamplerFn = Arc<dyn Fn(&mut Rng64) -> Vec<f64> + Send + Sync>;

/// Move of prior mass between two slabs of one axis, leaving the prior
/// untouched outside both slabs.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorAlteration {
    pub axis: usize,
    pub add: (f64, f64),
    pub remove: (f64, f64),
    /// Fraction of mass moved; must keep the density positive.
    pub amount: f64,
}

/// C¹ bump on `(a, b)`, peaking at 1 in the middle.
fn bump(t: f64, (a, b): (f64, f64)) -> f64 {
    if t <= a || t >= b {
        return 0.0;
    }
    let h = 0.5 * (b - a);
    let v = (t - a) * (b - t) / (h * h);
    v * v
}

#[derive(Clone)]
pub enum PriorKind {
    FinitePmf { weights: Vec<f64> },
    UniformBox,
    Beta { alpha: f64, beta: f64 },
    /// Independent normals truncated to the box.
    Gaussian { mean: Vec<f64>, sd: Vec<f64> },
    /// `Λ(θ) ∝ 1/θ[axis]`, flagged improper.
    PowerLawSigma { axis: usize },
    CustomDensity {
        name: String,
        density: DensityFn,
        sampler: Option<SamplerFn>,
    },
    /// Law of `F(θ)` for `θ` from the base prior.
    Pushforward { base: Box<Prior>, transform: ParamTransform },
    Altered {
        base: Box<Prior>,
        alteration: PriorAlteration,
        add_mass: f64,
        remove_mass: f64,
    },
}

impl fmt::Debug for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorKind::FinitePmf { weights } => write!(f, "FinitePmf({weights:?})"),
            PriorKind::UniformBox => write!(f, "UniformBox"),
            PriorKind::Beta { alpha, beta } => write!(f, "Beta({alpha}, {beta})"),
            PriorKind::Gaussian { mean, sd } => write!(f, "Gaussian({mean:?}, {sd:?})"),
            PriorKind::PowerLawSigma { axis } => write!(f, "PowerLawSigma(axis {axis})"),
            PriorKind::CustomDensity { name, .. } => write!(f, "Custom({name})"),
            PriorKind::Pushforward { base, transform } => write!(f, "Pushforward({:?}, {})", base.kind, transform.name()),
            PriorKind::Altered { base, alteration, .. } => write!(f, "Altered({:?}, {alteration:?})", base.kind),
        }
    }
}

/// Prior `Λ` over a parameter space, normalised on construction.
#[derive(Debug, Clone)]
pub struct Prior {
    kind: PriorKind,
    space: ParameterSpace,
    log_norm: f64,
    proper: bool,
}

impl Prior {
    pub fn finite_pmf(space: &ParameterSpace, weights: Vec<f64>) -> Result<Self> {
        let points = space
            .points()
            .ok_or_else(|| Error::InvalidProblem("a finite pmf prior needs a finite parameter space".into()))?;
        if weights.len() != points.len() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidProblem("prior weights must be positive, one per parameter point".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProblem(format!("prior weights sum to {total}, not 1")));
        }
        Ok(Self::raw(PriorKind::FinitePmf { weights }, space))
    }

    /// Uniform over a box, or equal weights over a finite set.
    pub fn uniform(space: &ParameterSpace) -> Result<Self> {
        match space {
            ParameterSpace::FiniteSet { points } => {
                Self::finite_pmf(space, vec![1.0 / points.len() as f64; points.len()])
            }
            ParameterSpace::Box { .. } => {
                let mut p = Self::raw(PriorKind::UniformBox, space);
                p.log_norm = space.volume().expect("box").ln();
                Ok(p)
            }
        }
    }

    pub fn beta(space: &ParameterSpace, alpha: f64, beta: f64) -> Result<Self> {
        let (lo, hi) = Self::unit_interval(space)?;
        let dist = Beta::new(alpha, beta).map_err(|e| Error::InvalidProblem(e.to_string()))?;
        let mass = dist.cdf(hi) - dist.cdf(lo);
        let mut p = Self::raw(PriorKind::Beta { alpha, beta }, space);
        p.log_norm = statrs::function::beta::ln_beta(alpha, beta) + mass.ln();
        Ok(p)
    }

    fn unit_interval(space: &ParameterSpace) -> Result<(f64, f64)> {
        match space {
            ParameterSpace::Box { lower, upper } if lower.len() == 1 && lower[0] >= 0.0 && upper[0] <= 1.0 => {
                Ok((lower[0], upper[0]))
            }
            _ => Err(Error::InvalidProblem("a beta prior needs a one-dimensional box inside [0, 1]".into())),
        }
    }

    pub fn gaussian(space: &ParameterSpace, mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        let ParameterSpace::Box { lower, upper } = space else {
            return Err(Error::InvalidProblem("a gaussian prior needs a box parameter space".into()));
        };
        if mean.len() != lower.len() || sd.len() != lower.len() || sd.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidProblem("gaussian prior needs one mean and positive sd per axis".into()));
        }
        let mut log_norm = 0.0;
        for i in 0..mean.len() {
            let n = Normal::new(mean[i], sd[i]).map_err(|e| Error::InvalidProblem(e.to_string()))?;
            let mass = n.cdf(upper[i]) - n.cdf(lower[i]);
            if !(mass > 0.0) {
                return Err(Error::NonNormalisablePrior("gaussian prior has no mass on the box"));
            }
            log_norm += mass.ln() + sd[i].ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        let mut p = Self::raw(PriorKind::Gaussian { mean, sd }, space);
        p.log_norm = log_norm;
        Ok(p)
    }

    /// `Λ(θ) ∝ 1/θ[axis]`; improper, so only usable for argmax estimators.
    pub fn power_law_sigma(space: &ParameterSpace, axis: usize) -> Result<Self> {
        let (lo, _) = space.bounding_box();
        if axis >= lo.len() || !(lo[axis] > 0.0) {
            return Err(Error::InvalidProblem("1/sigma prior needs a positive scale axis".into()));
        }
        let mut p = Self::raw(PriorKind::PowerLawSigma { axis }, space);
        p.proper = false;
        Ok(p)
    }

    /// A density the caller asserts is normalised on `space`; verified by quadrature.
    pub fn custom(
        space: &ParameterSpace,
        name: &str,
        density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        sampler: Option<SamplerFn>,
    ) -> Result<Self> {
        let p = Self::raw(
            PriorKind::CustomDensity {
                name: name.to_string(),
                density: Arc::new(density),
                sampler,
            },
            space,
        );
        let z = p.total_mass()?;
        if (z - 1.0).abs() > 1e-6 {
            return Err(Error::NonNormalisablePrior("custom prior does not integrate to 1 over the parameter space"));
        }
        Ok(p)
    }

    /// Law of `F(θ)` with `θ` drawn from `base`.
    pub fn pushforward(base: &Prior, transform: &ParamTransform) -> Result<Self> {
        let space = match &base.space {
            ParameterSpace::FiniteSet { points } => {
                ParameterSpace::finite(points.iter().map(|p| transform.forward(p)).collect())?
            }
            ParameterSpace::Box { lower, upper } => {
                let (lo, hi) = transform.map_box(lower, upper).ok_or_else(|| {
                    Error::UnsupportedClass(format!("{} does not map the box onto a box", transform.name()))
                })?;
                ParameterSpace::boxed(lo, hi)?
            }
        };
        if let PriorKind::FinitePmf { weights } = &base.kind {
            return Self::finite_pmf(&space, weights.clone());
        }
        let mut p = Self::raw(
            PriorKind::Pushforward {
                base: Box::new(base.clone()),
                transform: transform.clone(),
            },
            &space,
        );
        p.proper = base.proper;
        Ok(p)
    }

    /// Moves `amount` of mass between two slabs of one axis.
    pub fn altered(base: &Prior, alteration: PriorAlteration) -> Result<Self> {
        if !base.proper {
            return Err(Error::NonNormalisablePrior("cannot alter an improper prior"));
        }
        let m = base.space.dim();
        if alteration.axis >= m || !(alteration.amount > 0.0) {
            return Err(Error::InvalidArgument("alteration needs a valid axis and positive amount".into()));
        }
        let slab_mass = |region: (f64, f64)| -> Result<f64> {
            let weight = |theta: &[f64]| bump(theta[alteration.axis], region);
            match &base.space {
                ParameterSpace::FiniteSet { points } => Ok(points.iter().map(|p| base.density(p) * weight(p)).sum()),
                ParameterSpace::Box { lower, upper } => {
                    let axes = (0..m)
                        .map(|i| {
                            if i == alteration.axis {
                                Axis::finite(region.0.max(lower[i]), region.1.min(upper[i]))
                            } else {
                                Axis::finite(lower[i], upper[i])
                            }
                        })
                        .collect();
                    let tol = Tolerance::relative(1e-10);
                    Ok(integrate(|t| Ok(base.density(t) * weight(t)), &Domain::Box(axes), tol)?.value)
                }
            }
        };
        let add_mass = slab_mass(alteration.add)?;
        let remove_mass = slab_mass(alteration.remove)?;
        if !(add_mass > 0.0) || !(remove_mass > 0.0) {
            return Err(Error::InvalidArgument("alteration slabs carry no prior mass".into()));
        }
        if alteration.amount / remove_mass >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "moving {} of the mass would make the prior negative",
                alteration.amount
            )));
        }
        Ok(Self::raw(
            PriorKind::Altered {
                base: Box::new(base.clone()),
                alteration,
                add_mass,
                remove_mass,
            },
            &base.space,
        ))
    }

    fn raw(kind: PriorKind, space: &ParameterSpace) -> Self {
        Self {
            kind,
            space: space.clone(),
            log_norm: 0.0,
            proper: true,
        }
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn is_proper(&self) -> bool {
        self.proper
    }

    pub fn name(&self) -> String {
        format!("{:?}", self.kind)
    }

    /// `Λ(θ)`; zero off the parameter space.
    pub fn density(&self, theta: &[f64]) -> f64 {
        if !self.space.contains(theta) {
            return 0.0;
        }
        let unnorm = match &self.kind {
            PriorKind::FinitePmf { weights } => weights[self.space.index_of(theta).expect("contained")],
            PriorKind::UniformBox => 1.0,
            PriorKind::Beta { alpha, beta } => {
                let t = theta[0];
                ((alpha - 1.0) * t.ln() + (beta - 1.0) * (1.0 - t).ln()).exp()
            }
            PriorKind::Gaussian { mean, sd } => {
                let q: f64 = theta
                    .iter()
                    .zip(mean.iter().zip(sd))
                    .map(|(t, (m, s))| ((t - m) / s).powi(2))
                    .sum();
                (-0.5 * q).exp()
            }
            PriorKind::PowerLawSigma { axis } => 1.0 / theta[*axis],
            PriorKind::CustomDensity { density, .. } => density(theta),
            PriorKind::Pushforward { base, transform } => {
                let inner = transform.inverse(theta);
                base.density(&inner) * (-transform.log_abs_det_jacobian(&inner)).exp()
            }
            PriorKind::Altered {
                base,
                alteration: a,
                add_mass,
                remove_mass,
            } => {
                let t = theta[a.axis];
                base.density(theta) * (1.0 + a.amount * (bump(t, a.add) / add_mass - bump(t, a.remove) / remove_mass))
            }
        };
        unnorm * (-self.log_norm).exp()
    }

    /// `∫ Λ` (or `ΣΛ`) over the parameter space.
    pub fn total_mass(&self) -> Result<f64> {
        let tol = Tolerance::relative(1e-10).with_initial_segments(4);
        Ok(integrate(|t| Ok(self.density(t)), &self.space.domain(), tol)?.value)
    }

    /// Draws `θ ∼ Λ`.
    pub fn sample(&self, rng: &mut Rng64) -> Result<Vec<f64>> {
        let (lower, upper) = self.space.bounding_box();
        Ok(match &self.kind {
            PriorKind::FinitePmf { weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let points = self.space.points().expect("finite");
                let mut pick = points.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                points[pick].clone()
            }
            PriorKind::UniformBox => lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect(),
            PriorKind::Beta { alpha, beta } => {
                let d = Beta::new(*alpha, *beta).map_err(|e| Error::InvalidProblem(e.to_string()))?;
                let (a, b) = (d.cdf(lower[0]), d.cdf(upper[0]));
                vec![d.inverse_cdf(a + (b - a) * rng.random::<f64>())]
            }
            PriorKind::Gaussian { mean, sd } => (0..mean.len())
                .map(|i| {
                    let d = Normal::new(mean[i], sd[i]).expect("validated");
                    let (a, b) = (d.cdf(lower[i]), d.cdf(upper[i]));
                    d.inverse_cdf(a + (b - a) * rng.random::<f64>()).clamp(lower[i], upper[i])
                })
                .collect(),
            PriorKind::PowerLawSigma { .. } => {
                return Err(Error::NonNormalisablePrior("cannot sample the improper 1/sigma prior"))
            }
            PriorKind::CustomDensity { name, sampler, .. } => match sampler {
                Some(s) => s(rng),
                None => return Err(Error::InvalidArgument(format!("custom prior {name} has no sampler"))),
            },
            PriorKind::Pushforward { base, transform } => transform.forward(&base.sample(rng)?),
            PriorKind::Altered {
                base,
                alteration: a,
                add_mass,
                remove_mass,
            } => {
                let bound = 1.0 + a.amount / add_mass;
                loop {
                    let theta = base.sample(rng)?;
                    let t = theta[a.axis];
                    let w = 1.0 + a.amount * (bump(t, a.add) / add_mass - bump(t, a.remove) / remove_mass);
                    if rng.random::<f64>() * bound < w {
                        break theta;
                    }
                }
            }
        })
    }
}
