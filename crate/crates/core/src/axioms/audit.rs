//! Numerical checks of IRP, IRO, IIA and ISI, and the audit battery.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::transforms::{catalog, Noise, ObsTransform, ParamTransform};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::model::{EstimationProblem, ParameterSpace, Prior, PriorAlteration, Rng64};
use crate::numerics::quadrature::Tolerance;

/// Deviations below this pass an audit item.
pub const PASS_BELOW: f64 = 1e-5;
/// Deviations above this fail an audit item.
pub const FAIL_ABOVE: f64 = 1e-2;

/// Quadrature accuracy of audited loss values, well inside [`PASS_BELOW`].
pub fn audit_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-6,
        ..Tolerance::default()
    }
}

fn eval_loss(loss: &LossSpec, problem: &EstimationProblem, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
    loss.bind_target_with(problem, theta2, audit_tolerance())?(theta1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairValues {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub original: f64,
    pub transformed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub max_abs: f64,
    /// `max |L − L′| / max(|L|, |L′|)` over pairs (0 where both vanish).
    pub max_rel: f64,
    pub pairs: Vec<PairValues>,
}

impl Deviation {
    fn from_pairs(pairs: Vec<PairValues>) -> Self {
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        for p in &pairs {
            let d = (p.original - p.transformed).abs();
            max_abs = max_abs.max(d);
            let scale = p.original.abs().max(p.transformed.abs());
            if scale > 0.0 {
                max_rel = max_rel.max(d / scale);
            }
        }
        Self { max_abs, max_rel, pairs }
    }

    /// `L′/L` per pair.
    pub fn ratios(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.transformed / p.original).collect()
    }
}

fn compare<F>(pairs: &[(Vec<f64>, Vec<f64>)], mut eval: F) -> Result<Deviation>
where
    F: FnMut(&[f64], &[f64]) -> Result<(f64, f64)>,
{
    let mut out = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (original, transformed) = eval(a, b)?;
        out.push(PairValues {
            theta1: a.clone(),
            theta2: b.clone(),
            original,
            transformed,
        });
    }
    Ok(Deviation::from_pairs(out))
}

/// `L(θ₁, θ₂)` against `L′(F(θ₁), F(θ₂))` on the reparameterised problem.
pub fn check_irp(
    loss: &LossSpec,
    problem: &EstimationProblem,
    transform: &ParamTransform,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<Deviation> {
    let moved = problem.reparameterised(transform)?;
    compare(pairs, |a, b| {
        Ok((
            eval_loss(loss, problem, a, b)?,
            eval_loss(loss, &moved, &transform.forward(a), &transform.forward(b))?,
        ))
    })
}

/// `L` on `x` against `L` on `G(x)`.
pub fn check_iro(
    loss: &LossSpec,
    problem: &EstimationProblem,
    transform: &ObsTransform,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<Deviation> {
    transform.validate()?;
    let moved = problem.with_observation_transform(transform)?;
    compare(pairs, |a, b| Ok((eval_loss(loss, problem, a, b)?, eval_loss(loss, &moved, a, b)?)))
}

/// `|L_A(θ₁, θ₂) − L_B(θ₁, θ₂)|` for problems agreeing at `θ₁` and `θ₂`.
pub fn check_iia(
    loss: &LossSpec,
    problem_a: &EstimationProblem,
    problem_b: &EstimationProblem,
    theta1: &[f64],
    theta2: &[f64],
) -> Result<Deviation> {
    for theta in [theta1, theta2] {
        check_agreement(problem_a, problem_b, theta)?;
    }
    compare(&[(theta1.to_vec(), theta2.to_vec())], |a, b| {
        Ok((eval_loss(loss, problem_a, a, b)?, eval_loss(loss, problem_b, a, b)?))
    })
}

fn check_agreement(a: &EstimationProblem, b: &EstimationProblem, theta: &[f64]) -> Result<()> {
    let violated = |m: String| Err(Error::PreconditionViolated(format!("problems differ at {theta:?}: {m}")));
    if !a.theta_space().contains(theta) || !b.theta_space().contains(theta) {
        return violated("not in both parameter spaces".into());
    }
    let (pa, pb) = (a.prior().density(theta), b.prior().density(theta));
    if (pa - pb).abs() > 1e-9 * pa.abs().max(pb.abs()) {
        return violated(format!("prior {pa} vs {pb}"));
    }
    let chart = a.model().chart(theta)?;
    let tv = chart
        .integrate(
            |x| Ok(0.5 * (a.cond_density(theta, x)? - b.model().density(theta, x).unwrap_or(0.0)).abs()),
            Tolerance::default(),
        )?
        .value;
    if tv > 1e-8 {
        return violated(format!("data distributions at total variation {tv}"));
    }
    Ok(())
}

/// `L` on `x` against `L` on `(x, y)` with independent noise `y`.
pub fn check_isi(
    loss: &LossSpec,
    problem: &EstimationProblem,
    noise: Noise,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<Deviation> {
    let moved = problem.augmented(noise)?;
    compare(pairs, |a, b| Ok((eval_loss(loss, problem, a, b)?, eval_loss(loss, &moved, a, b)?)))
}

/// Seeded parameter pairs: prior draws, or uniform box draws for priors that
/// cannot be sampled. Coincident pairs are redrawn.
pub fn sample_pairs(problem: &EstimationProblem, n: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut rng = Rng64::seed_from_u64(seed);
    let space = problem.theta_space();
    let (lo, hi) = space.bounding_box();
    let draw = |rng: &mut Rng64| -> Result<Vec<f64>> {
        match problem.prior().sample(rng) {
            Ok(t) => Ok(t),
            Err(Error::NonNormalisablePrior(_)) | Err(Error::InvalidArgument(_)) => {
                Ok(lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect())
            }
            Err(e) => Err(e),
        }
    };
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 100 * n + 100 {
            return Err(Error::InvalidArgument("could not draw distinct parameter pairs".into()));
        }
        let (a, b) = (draw(&mut rng)?, draw(&mut rng)?);
        if a != b {
            out.push((a, b));
        }
    }
    Ok(out)
}

/// A prior alteration witnessing IIA failure of a prior-weighted loss: it
/// moves mass into the `inner`-ball of radius `threshold` around `θ₂` (on
/// the side away from `θ₁`) from a region far from both points, leaving
/// `Λ(θ₁)` and `Λ(θ₂)` unchanged.
pub fn iia_witness(
    problem: &EstimationProblem,
    inner: &LossSpec,
    threshold: f64,
    theta1: &[f64],
    theta2: &[f64],
) -> Result<Prior> {
    let ParameterSpace::Box { lower, upper } = problem.theta_space() else {
        return Err(Error::UnsupportedClass("the IIA witness needs a continuous parameter space".into()));
    };
    let axis = 0;
    let (lo, hi) = (lower[axis], upper[axis]);
    let (t1, t2) = (theta1[axis], theta2[axis]);
    let dir = if t1 < t2 { 1.0 } else { -1.0 };
    let bound = inner.bind_target(problem, theta2)?;
    // Walk away from θ₁ until the inner loss leaves the ball or the box ends.
    let room = if dir > 0.0 { hi - t2 } else { t2 - lo };
    let mut radius = room;
    for k in 1..=200 {
        let step = room * k as f64 / 200.0 * 0.999;
        let mut t = theta2.to_vec();
        t[axis] = t2 + dir * step;
        if bound(&t)? > threshold {
            radius = step;
            break;
        }
    }
    let (a, b) = (t2 + dir * 0.15 * radius, t2 + dir * 0.75 * radius);
    let add = (a.min(b), a.max(b));
    // Take mass from the far side of θ₁, or beyond the ball if that side is empty.
    let near = t1.min(t2) - 1e-9;
    let far = t1.max(t2) + radius;
    let remove = if dir > 0.0 && near - lo > 1e-3 * (hi - lo) {
        (lo, near - 0.1 * (near - lo))
    } else if dir < 0.0 && hi - (t1.max(t2) + 1e-9) > 1e-3 * (hi - lo) {
        let start = t1.max(t2) + 1e-9;
        (start + 0.1 * (hi - start), hi)
    } else if dir > 0.0 && hi - far > 1e-3 * (hi - lo) {
        (far, hi)
    } else {
        return Err(Error::UnsupportedClass("no room to move prior mass for the IIA witness".into()));
    };
    // Probe the amount: as much as keeps the density positive.
    let probe = Prior::altered(
        problem.prior(),
        PriorAlteration {
            axis,
            add,
            remove,
            amount: 1e-6,
        },
    )?;
    let crate::model::PriorKind::Altered { remove_mass, .. } = probe.kind() else {
        unreachable!("altered prior")
    };
    Prior::altered(
        problem.prior(),
        PriorAlteration {
            axis,
            add,
            remove,
            amount: 0.9 * remove_mass,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Axiom {
    IRP,
    IRO,
    IIA,
    ISI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    NotApplicable,
}

pub fn verdict(max_rel: f64) -> Verdict {
    if max_rel < PASS_BELOW {
        Verdict::Pass
    } else if max_rel > FAIL_ABOVE {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub axiom: Axiom,
    pub problem: String,
    pub item: String,
    pub deviation: Option<Deviation>,
    pub verdict: Verdict,
    /// Why the item does not apply.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub loss: String,
    pub records: Vec<AuditRecord>,
    pub summary: BTreeMap<Axiom, Verdict>,
}

impl AuditReport {
    pub fn verdict(&self, axiom: Axiom) -> Verdict {
        self.summary.get(&axiom).copied().unwrap_or(Verdict::NotApplicable)
    }

    /// Largest relative deviation recorded for `axiom`.
    pub fn max_rel(&self, axiom: Axiom) -> f64 {
        self.records
            .iter()
            .filter(|r| r.axiom == axiom)
            .filter_map(|r| r.deviation.as_ref().map(|d| d.max_rel))
            .fold(0.0, f64::max)
    }
}

/// Problems and pairs the battery is run on.
#[derive(Debug, Clone)]
pub struct AuditSuite {
    pub problems: Vec<(String, EstimationProblem)>,
    pub pairs_per_item: usize,
    pub seed: u64,
    /// Threshold of the ball used by the IIA witness.
    pub iia_threshold: f64,
}

impl AuditSuite {
    /// A Gaussian-mean problem and a Bernoulli problem, both with flat priors.
    pub fn standard(seed: u64) -> Result<Self> {
        let g = ParameterSpace::interval(-2.0, 2.0)?;
        let gaussian = EstimationProblem::new(
            crate::model::DataModel::GaussianKnownSigma { sigma: 1.0 },
            Prior::uniform(&g)?,
        )?;
        let b = ParameterSpace::interval(0.05, 0.95)?;
        let bernoulli = EstimationProblem::new(crate::model::DataModel::Bernoulli, Prior::uniform(&b)?)?;
        Ok(Self {
            problems: vec![("gaussian_mean".into(), gaussian), ("bernoulli".into(), bernoulli)],
            pairs_per_item: 6,
            seed,
            iia_threshold: 0.02,
        })
    }
}

fn record(axiom: Axiom, problem: &str, item: String, result: Result<Deviation>) -> Result<AuditRecord> {
    match result {
        Ok(d) => Ok(AuditRecord {
            axiom,
            problem: problem.to_string(),
            item,
            verdict: verdict(d.max_rel),
            deviation: Some(d),
            note: None,
        }),
        Err(Error::UnsupportedClass(m)) => Ok(AuditRecord {
            axiom,
            problem: problem.to_string(),
            item,
            deviation: None,
            verdict: Verdict::NotApplicable,
            note: Some(m),
        }),
        Err(Error::IntegralNotConverged { estimate, error }) => Ok(AuditRecord {
            axiom,
            problem: problem.to_string(),
            item,
            deviation: None,
            verdict: Verdict::Inconclusive,
            note: Some(format!(
                "loss integral did not converge (estimate {estimate:e}, error {error:e}); it may be infinite"
            )),
        }),
        Err(e) => Err(e),
    }
}

/// Runs the fixed transform battery for each axiom on each suite problem.
///
/// IIA is probed with two witnesses per problem: a prior alteration that
/// moves mass into a ball around `θ₂`, and, for a prior-weighted loss with
/// an inner loss, the same construction around that loss's own ball.
pub fn audit_loss(loss: &LossSpec, suite: &AuditSuite) -> Result<AuditReport> {
    let mut records = Vec::new();
    for (k, (name, problem)) in suite.problems.iter().enumerate() {
        let seed = suite.seed.wrapping_add(k as u64 * 7919);
        let pairs = sample_pairs(problem, suite.pairs_per_item, seed)?;
        let m = problem.param_dim();
        for t in catalog::param_transforms(m) {
            records.push(record(Axiom::IRP, name, t.name(), check_irp(loss, problem, &t, &pairs))?);
        }
        for g in catalog::obs_transforms() {
            records.push(record(Axiom::IRO, name, g.name(), check_iro(loss, problem, &g, &pairs))?);
        }
        let (inner, threshold) = match loss {
            LossSpec::NoIIA(spec) => ((*spec.inner).clone(), spec.threshold),
            _ => (LossSpec::hellinger2(), suite.iia_threshold),
        };
        for (a, b) in pairs.iter().take(2) {
            let item = format!("altered_prior({a:?}, {b:?})");
            let result = iia_witness(problem, &inner, threshold, a, b)
                .and_then(|prior| problem.with_prior(prior))
                .and_then(|altered| check_iia(loss, problem, &altered, a, b));
            records.push(record(Axiom::IIA, name, item, result)?);
        }
        for noise in catalog::noises() {
            records.push(record(Axiom::ISI, name, format!("{noise:?}"), check_isi(loss, problem, noise, &pairs))?);
        }
    }
    let mut summary = BTreeMap::new();
    for axiom in [Axiom::IRP, Axiom::IRO, Axiom::IIA, Axiom::ISI] {
        let verdicts: Vec<Verdict> = records
            .iter()
            .filter(|r| r.axiom == axiom && r.verdict != Verdict::NotApplicable)
            .map(|r| r.verdict)
            .collect();
        let v = if verdicts.is_empty() {
            Verdict::NotApplicable
        } else if verdicts.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if verdicts.iter().all(|v| *v == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        summary.insert(axiom, v);
    }
    Ok(AuditReport {
        loss: loss.name(),
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::transforms::MonotoneMap;
    use crate::model::DataModel;

    fn gaussian() -> EstimationProblem {
        let s = ParameterSpace::interval(-2.0, 2.0).unwrap();
        EstimationProblem::new(DataModel::GaussianKnownSigma { sigma: 1.0 }, Prior::uniform(&s).unwrap()).unwrap()
    }

    fn bernoulli() -> EstimationProblem {
        let s = ParameterSpace::interval(0.05, 0.95).unwrap();
        EstimationProblem::new(DataModel::Bernoulli, Prior::uniform(&s).unwrap()).unwrap()
    }

    #[test]
    fn quadratic_irp_violation_value() {
        let cube = ParamTransform::coordinatewise(vec![MonotoneMap::CubePlus]);
        let d = check_irp(&LossSpec::Quadratic, &gaussian(), &cube, &[(vec![0.0], vec![1.0])]).unwrap();
        assert!((d.max_abs - 3.0).abs() < 1e-12);
        let id = ParamTransform::identity(1);
        let d = check_irp(&LossSpec::kl(), &gaussian(), &id, &[(vec![0.0], vec![1.0])]).unwrap();
        assert_eq!(d.max_abs, 0.0);
    }

    #[test]
    fn hellinger_is_invariant_under_cube_map_and_affine_data() {
        let p = gaussian();
        let pairs = sample_pairs(&p, 10, 1).unwrap();
        let cube = ParamTransform::coordinatewise(vec![MonotoneMap::CubePlus]);
        assert!(check_irp(&LossSpec::hellinger2(), &p, &cube, &pairs).unwrap().max_rel < 1e-6);
        let g = ObsTransform::affine(2.0, 1.0);
        assert!(check_iro(&LossSpec::hellinger2(), &p, &g, &pairs).unwrap().max_rel < 1e-6);
    }

    #[test]
    fn density_gap_scalings() {
        let p = gaussian();
        let pairs = sample_pairs(&p, 3, 2).unwrap();
        // Densities halve under x ↦ 2x, and ∫q(p − q)² dx picks up 1/4.
        let d = check_iro(&LossSpec::NoIRO, &p, &ObsTransform::affine(2.0, 0.0), &pairs).unwrap();
        for r in d.ratios() {
            assert!((r - 0.25).abs() < 1e-6, "{r}");
        }
        let b = bernoulli();
        let pairs = sample_pairs(&b, 3, 2).unwrap();
        let d = check_isi(&LossSpec::NoISI, &b, Noise::BernoulliHalf, &pairs).unwrap();
        for r in d.ratios() {
            assert!((r - 0.25).abs() < 1e-12, "{r}");
        }
        let d = check_isi(&LossSpec::NoISI, &b, Noise::Constant, &pairs).unwrap();
        assert_eq!(d.max_abs, 0.0);
    }

    #[test]
    fn iia_checks() {
        let b = bernoulli();
        let other = b.with_prior(Prior::beta(b.theta_space(), 2.0, 2.0).unwrap()).unwrap();
        // Different priors at θ₁, θ₂ violate the precondition.
        assert!(matches!(
            check_iia(&LossSpec::hellinger2(), &b, &other, &[0.3], &[0.7]),
            Err(Error::PreconditionViolated(_))
        ));
        let witness = iia_witness(&b, &LossSpec::hellinger2(), 0.02, &[0.3], &[0.7]).unwrap();
        let altered = b.with_prior(witness).unwrap();
        assert_eq!(check_iia(&LossSpec::hellinger2(), &b, &altered, &[0.3], &[0.7]).unwrap().max_abs, 0.0);
        let no_iia = LossSpec::no_iia(LossSpec::hellinger2(), LossSpec::hellinger2(), 0.02, 9);
        assert!(check_iia(&no_iia, &b, &altered, &[0.3], &[0.7]).unwrap().max_rel > 0.01);
        assert_eq!(check_iia(&no_iia, &b, &b, &[0.3], &[0.7]).unwrap().max_abs, 0.0);
    }
}
