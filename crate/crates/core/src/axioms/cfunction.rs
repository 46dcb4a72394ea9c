//! The quantile function `c[P, Q]` of the likelihood ratio `r = p/q` under
//! `x ∼ Q`, and the one-dimensional canonical rearrangement built from it.

use std::sync::Arc;

use rand::SeedableRng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CustomModel, DataModel, EstimationProblem, ObservationKind, ParameterSpace, Prior, Rng64};
use crate::numerics::quadrature::{Axis, Domain};

/// Samples (or strata) used for continuous observations.
pub const CONTINUOUS_SAMPLES: usize = 100_000;
/// Seed for the sampled representation.
pub const CFUNCTION_SEED: u64 = 0x0c0f;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CFunction {
    /// Sorted ratios with the cumulative `Q` mass up to and including each.
    Step { r: Vec<f64>, cumulative: Vec<f64> },
    /// Same layout as `Step`, from quantile strata of `Q` whose two tail
    /// strata are halved repeatedly.
    Strata { r: Vec<f64>, cumulative: Vec<f64> },
    /// Sorted ratios at `n` equally weighted draws from `Q`.
    Sampled { r: Vec<f64> },
}

impl CFunction {
    /// `c(t) = inf{r ≥ 0 : t ≤ P_Q(r(x) ≤ r)}`; `c(0) = 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            CFunction::Step { r, cumulative } | CFunction::Strata { r, cumulative } => {
                let i = cumulative.partition_point(|&m| m < t - 1e-12);
                r[i.min(r.len() - 1)]
            }
            CFunction::Sampled { r } => {
                let k = (t * r.len() as f64).ceil() as usize;
                r[k.clamp(1, r.len()) - 1]
            }
        }
    }

    /// `∫₀¹ c(t) dt`, which equals `E_Q[r] = 1` when `P ≪ Q`.
    pub fn mass(&self) -> f64 {
        match self {
            CFunction::Step { r, cumulative } | CFunction::Strata { r, cumulative } => {
                let mut prev = 0.0;
                let mut total = 0.0;
                for (ri, ci) in r.iter().zip(cumulative) {
                    total += ri * (ci - prev);
                    prev = *ci;
                }
                total
            }
            CFunction::Sampled { r } => r.iter().sum::<f64>() / r.len() as f64,
        }
    }

    /// `(t, c(t))` on `n` points of `(0, 1]`.
    pub fn curve(&self, n: usize) -> Vec<(f64, f64)> {
        (1..=n).map(|i| i as f64 / n as f64).map(|t| (t, self.eval(t))).collect()
    }
}

pub fn c_eval(c: &CFunction, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("c is defined on [0, 1], got t = {t}")));
    }
    Ok(c.eval(t))
}

/// `c[P_θ₁, P_θ₂]`: exact on finite observation spaces, otherwise built from
/// `n` quantile strata of `Q` (when the family has a quantile function) or
/// `n` seeded draws from `Q`.
pub fn c_function(problem: &EstimationProblem, theta1: &[f64], theta2: &[f64]) -> Result<CFunction> {
    problem.theta_space().check(theta1)?;
    problem.theta_space().check(theta2)?;
    let model = problem.model();
    if model.observation_kind() == ObservationKind::FiniteSet {
        let outcomes = problem
            .support(theta2)?
            .enumerate()
            .ok_or_else(|| Error::UnsupportedClass("finite observation space without an outcome list".into()))?;
        let mut pairs = Vec::with_capacity(outcomes.len());
        for x in &outcomes {
            let q = model.density(theta2, x)?;
            if q > 0.0 {
                pairs.push((model.density(theta1, x)? / q, q));
            }
        }
        let (r, cumulative) = accumulate(pairs);
        return Ok(CFunction::Step { r, cumulative });
    }
    if model.inverse_cdf(theta2, 0.5).is_some() {
        let (r, cumulative) = accumulate(tail_refined_strata(problem, theta1, theta2, CONTINUOUS_SAMPLES)?);
        return Ok(CFunction::Strata { r, cumulative });
    }
    let (r, _) = sorted_ratios(problem, theta1, theta2, CONTINUOUS_SAMPLES)?;
    Ok(CFunction::Sampled { r })
}

/// Sorts `(ratio, weight)` pairs and returns ratios with normalised cumulative weights.
fn accumulate(mut pairs: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    pairs
        .into_iter()
        .map(|(r, q)| {
            acc += q / total;
            (r, acc)
        })
        .unzip()
}

/// `Q` mass on each side handed to the geometric tail pieces.
const TAIL_START: f64 = 1e-2;
/// Smallest tail piece; quantiles closer to 0 or 1 than this lose precision.
const TAIL_FLOOR: f64 = 1e-14;
/// Each tail piece `[qw, w]` leaves `[0, qw]` for the next.
const TAIL_SHRINK: f64 = 0.95;

/// Midpoint ratios of `n` equal quantile strata of `Q`, except that the
/// outer `TAIL_START` on each side is cut geometrically down to `TAIL_FLOOR`. An unbounded ratio puts
/// most of `P` in the far upper tail when the two parameters are well
/// separated, which equal strata do not reach.
fn tail_refined_strata(problem: &EstimationProblem, theta1: &[f64], theta2: &[f64], n: usize) -> Result<Vec<(f64, f64)>> {
    let model = problem.model();
    let ratio = |u: f64| -> Result<f64> {
        let x = [model.inverse_cdf(theta2, u).expect("quantile available")];
        Ok((model.log_density(theta1, &x)? - model.log_density(theta2, &x)?).exp())
    };
    let h = 1.0 / n as f64;
    let m = ((n as f64 * TAIL_START).ceil() as usize).clamp(1, n / 2);
    let mut pairs = Vec::with_capacity(n + 1200);
    for i in m..n - m {
        pairs.push((ratio((i as f64 + 0.5) * h)?, h));
    }
    // Pieces of [0, mh], mirrored on [1 − mh, 1].
    let mut w = m as f64 * h;
    while w > TAIL_FLOOR {
        let mid = 0.5 * (1.0 + TAIL_SHRINK) * w;
        pairs.push((ratio(mid)?, (1.0 - TAIL_SHRINK) * w));
        pairs.push((ratio(1.0 - mid)?, (1.0 - TAIL_SHRINK) * w));
        w *= TAIL_SHRINK;
    }
    pairs.push((ratio(0.5 * w)?, w));
    pairs.push((ratio(1.0 - 0.5 * w)?, w));
    Ok(pairs)
}

/// Equally weighted ratios: quantile strata midpoints when available, else seeded draws.
fn sorted_ratios(problem: &EstimationProblem, theta1: &[f64], theta2: &[f64], n: usize) -> Result<(Vec<f64>, bool)> {
    let model = problem.model();
    let ratio = |x: &[f64]| -> Result<f64> { Ok((model.log_density(theta1, x)? - model.log_density(theta2, x)?).exp()) };
    let mut r = Vec::with_capacity(n);
    let stratified = model.inverse_cdf(theta2, 0.5).is_some();
    if stratified {
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let x = model.inverse_cdf(theta2, u).expect("quantile available");
            r.push(ratio(&[x])?);
        }
    } else {
        let mut rng = Rng64::seed_from_u64(CFUNCTION_SEED);
        for _ in 0..n {
            let x = model.sample(theta2, &mut rng)?;
            r.push(ratio(&x)?);
        }
    }
    r.sort_by(f64::total_cmp);
    Ok((r, stratified))
}

/// Default bin width of the rearrangement.
pub const REARRANGEMENT_DELTA: f64 = 1.0 / 512.0;
/// Strata per bin.
const POINTS_PER_BIN: usize = 64;

/// Densities `p′` (non-decreasing, piecewise constant on bins of width
/// `delta`) and `q′ = 1` on `[0, 1]`, packaged as a two-point problem with
/// `θ = 0 ↦ p′` and `θ = 1 ↦ q′`. There is no problem when `p′ = q′`, as
/// its two parameters would not be identifiable.
#[derive(Debug, Clone)]
pub struct Rearrangement {
    pub delta: f64,
    pub p_prime: Vec<f64>,
    pub problem: Option<EstimationProblem>,
}

impl Rearrangement {
    pub const P: [f64; 1] = [0.0];
    pub const Q: [f64; 1] = [1.0];

    /// `1 − ∫₀¹ √p′ dt`.
    pub fn hellinger2(&self) -> f64 {
        1.0 - self.delta * self.p_prime.iter().map(|p| p.sqrt()).sum::<f64>()
    }
}

/// Moves `x` to its `Q`-quantile rank ordered by increasing `r`, so that
/// `q′` is uniform and `p′` is the binned `c[p, q]`.
pub fn canonical_rearrangement_1d(problem: &EstimationProblem, theta1: &[f64], theta2: &[f64]) -> Result<Rearrangement> {
    canonical_rearrangement_1d_with(problem, theta1, theta2, (1.0 / REARRANGEMENT_DELTA) as usize)
}

pub fn canonical_rearrangement_1d_with(
    problem: &EstimationProblem,
    theta1: &[f64],
    theta2: &[f64],
    bins: usize,
) -> Result<Rearrangement> {
    let model = problem.model();
    if model.obs_dim() != 1 || model.observation_kind() != ObservationKind::Continuum {
        return Err(Error::UnsupportedClass(
            "the canonical rearrangement needs one-dimensional continuous observations".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("at least one bin is needed".into()));
    }
    problem.theta_space().check(theta1)?;
    problem.theta_space().check(theta2)?;
    let (r, _) = sorted_ratios(problem, theta1, theta2, bins * POINTS_PER_BIN)?;
    let delta = 1.0 / bins as f64;
    let mut p_prime: Vec<f64> = r
        .chunks(POINTS_PER_BIN)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let mut total = delta * p_prime.iter().sum::<f64>();
    if !(total > 0.0) {
        return Err(Error::DomainError(theta1.to_vec()));
    }
    // Strata midpoints miss the upper tail of an unbounded ratio; that mass
    // belongs to the top bin.
    if total < 1.0 {
        let last = p_prime.len() - 1;
        p_prime[last] += (1.0 - total) / delta;
        total = 1.0;
    }
    for p in &mut p_prime {
        *p /= total;
    }
    let problem = if p_prime.iter().all(|p| (p - 1.0).abs() < 1e-12) {
        None
    } else {
        Some(fragment_problem(&p_prime, delta)?)
    };
    Ok(Rearrangement { delta, p_prime, problem })
}

fn fragment_problem(p_prime: &[f64], delta: f64) -> Result<EstimationProblem> {
    let bins = p_prime.len();
    let table = Arc::new(p_prime.to_vec());
    let edges: Vec<f64> = (1..bins).map(|i| i as f64 * delta).collect();
    let model = CustomModel {
        name: "canonical_rearrangement".into(),
        param_dim: 1,
        obs_dim: 1,
        kind: ObservationKind::Continuum,
        log_density: Arc::new(move |theta, x| {
            let u = x[0];
            if !(0.0..=1.0).contains(&u) {
                return None;
            }
            if theta[0] == 1.0 {
                return Some(0.0);
            }
            let i = ((u * bins as f64) as usize).min(bins - 1);
            Some(table[i].ln())
        }),
        support: Arc::new(move |_| Domain::Box(vec![Axis::finite(0.0, 1.0).with_breakpoints(edges.clone())])),
        param_ok: Some(Arc::new(|theta| theta[0] == 0.0 || theta[0] == 1.0)),
        sampler: None,
    };
    let space = ParameterSpace::finite(vec![Rearrangement::P.to_vec(), Rearrangement::Q.to_vec()])?;
    EstimationProblem::new(DataModel::Custom(model), Prior::finite_pmf(&space, vec![0.5, 0.5])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{eval_loss, LossSpec};

    fn gaussian() -> EstimationProblem {
        let s = ParameterSpace::interval(-3.0, 3.0).unwrap();
        EstimationProblem::new(DataModel::GaussianKnownSigma { sigma: 1.0 }, Prior::uniform(&s).unwrap()).unwrap()
    }

    #[test]
    fn bernoulli_step_function() {
        let s = ParameterSpace::interval(0.01, 0.99).unwrap();
        let p = EstimationProblem::new(DataModel::Bernoulli, Prior::uniform(&s).unwrap()).unwrap();
        let c = c_function(&p, &[0.8], &[0.5]).unwrap();
        for (t, want) in [(0.1, 0.4), (0.5, 0.4), (0.5001, 1.6), (1.0, 1.6)] {
            assert!((c_eval(&c, t).unwrap() - want).abs() < 1e-12, "c({t})");
        }
        assert_eq!(c.eval(0.0), 0.0);
        assert!((c.mass() - 1.0).abs() < 1e-12);
        let same = c_function(&p, &[0.3], &[0.3]).unwrap();
        for t in [1e-6, 0.3, 1.0] {
            assert!((same.eval(t) - 1.0).abs() < 1e-12);
        }
        assert!(c_eval(&c, 1.5).is_err());
    }

    #[test]
    fn continuous_quantiles() {
        let c = c_function(&gaussian(), &[1.0], &[0.0]).unwrap();
        assert!((c.mass() - 1.0).abs() < 1e-2, "{}", c.mass());
        let curve = c.curve(100);
        assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
        // r = exp(x − ½) at the median x = 0.
        assert!((c.eval(0.5) - (-0.5f64).exp()).abs() < 1e-3);
        let same = c_function(&gaussian(), &[0.4], &[0.4]).unwrap();
        assert!((same.eval(0.7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_strata_keep_the_mass_at_wide_separation() {
        // Most of P sits beyond the last equal stratum of Q here.
        let c = c_function(&gaussian(), &[2.0], &[-2.0]).unwrap();
        assert!((c.mass() - 1.0).abs() < 5e-4, "{}", c.mass());
        let curve = c.curve(500);
        assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn rearrangement_preserves_hellinger() {
        let p = gaussian();
        let re = canonical_rearrangement_1d(&p, &[1.0], &[0.0]).unwrap();
        assert!(re.p_prime.windows(2).all(|w| w[0] <= w[1]));
        assert!((re.delta * re.p_prime.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let oracle = 1.0 - (-1.0f64 / 8.0).exp();
        assert!((re.hellinger2() - oracle).abs() < 1e-3, "{}", re.hellinger2());
        let quad = eval_loss(&LossSpec::hellinger2(), re.problem.as_ref().unwrap(), &Rearrangement::P, &Rearrangement::Q).unwrap();
        assert!((quad - re.hellinger2()).abs() < 1e-7, "{quad}");
        let flat = canonical_rearrangement_1d(&p, &[0.2], &[0.2]).unwrap();
        assert!(flat.p_prime.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(flat.problem.is_none());
    }

    #[test]
    fn wide_separation_needs_finer_bins() {
        // H² ≈ 0.39: the default histogram is biased by about 1.2e-3, finer bins converge.
        let p = gaussian();
        let oracle = 1.0 - (-0.5f64).exp();
        let coarse = canonical_rearrangement_1d(&p, &[2.0], &[0.0]).unwrap().hellinger2();
        let fine = canonical_rearrangement_1d_with(&p, &[2.0], &[0.0], 4096).unwrap().hellinger2();
        assert!((oracle - coarse - 1.2e-3).abs() < 1e-4, "{coarse}");
        assert!((oracle - fine).abs() < 2e-4, "{fine}");
    }

    #[test]
    fn rearrangement_rejects_discrete() {
        let s = ParameterSpace::interval(0.01, 0.99).unwrap();
        let p = EstimationProblem::new(DataModel::Bernoulli, Prior::uniform(&s).unwrap()).unwrap();
        assert!(matches!(
            canonical_rearrangement_1d(&p, &[0.3], &[0.5]),
            Err(Error::UnsupportedClass(_))
        ));
    }
}
