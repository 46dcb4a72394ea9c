//! Fisher information `I_θ = E_θ[∇ℓ ∇ℓᵀ]`.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataModel, EstimationProblem, Rng64};
use crate::numerics::matrix::SymMatrix;
use crate::numerics::quadrature::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FisherMethod {
    Analytic,
    /// Finite-difference scores integrated over the observation space.
    BruteForce,
    MonteCarlo { samples: usize, seed: u64 },
}

pub fn fisher_information(problem: &EstimationProblem, theta: &[f64], method: FisherMethod) -> Result<SymMatrix> {
    problem.theta_space().check(theta)?;
    match method {
        FisherMethod::Analytic => problem.model().fisher_analytic(theta),
        FisherMethod::BruteForce => brute_force(problem.model(), theta),
        FisherMethod::MonteCarlo { samples, seed } => monte_carlo(problem.model(), theta, samples, seed),
    }
}

/// Score `∇_θ ln f_θ(x)` by central differences, one-sided where `θ ± h`
/// leaves the family's domain.
struct Scorer<'a> {
    model: &'a DataModel,
    plus: Vec<Vec<f64>>,
    minus: Vec<Vec<f64>>,
    centre: Vec<f64>,
    /// Denominator per coordinate: `2h` centred, `h` one-sided.
    spans: Vec<f64>,
}

impl<'a> Scorer<'a> {
    fn new(model: &'a DataModel, theta: &[f64]) -> Result<Self> {
        let m = theta.len();
        let (mut plus, mut minus, mut spans) = (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
        for i in 0..m {
            let h = 1e-5 * theta[i].abs().max(1.0);
            let shifted = |d: f64| {
                let mut t = theta.to_vec();
                t[i] += d;
                t
            };
            let (p, q) = (shifted(h), shifted(-h));
            let (p_ok, q_ok) = (model.param_ok(&p), model.param_ok(&q));
            let (p, q, span) = match (p_ok, q_ok) {
                (true, true) => (p, q, 2.0 * h),
                (true, false) => (p, theta.to_vec(), h),
                (false, true) => (theta.to_vec(), q, h),
                (false, false) => {
                    return Err(Error::BoundaryTooClose {
                        point: theta.to_vec(),
                        margin: h,
                    })
                }
            };
            plus.push(p);
            minus.push(q);
            spans.push(span);
        }
        Ok(Self {
            model,
            plus,
            minus,
            centre: theta.to_vec(),
            spans,
        })
    }

    /// Returns `(ln f_θ(x), score)`.
    fn score(&self, x: &[f64], out: &mut [f64]) -> Result<f64> {
        let l0 = self.model.log_density(&self.centre, x)?;
        if l0 == f64::NEG_INFINITY {
            out.fill(0.0);
            return Ok(l0);
        }
        for (i, s) in out.iter_mut().enumerate() {
            let lp = self.model.log_density(&self.plus[i], x)?;
            let lm = self.model.log_density(&self.minus[i], x)?;
            *s = (lp - lm) / self.spans[i];
        }
        Ok(l0)
    }
}

fn brute_force(raw: &DataModel, theta: &[f64]) -> Result<SymMatrix> {
    let model = raw.sufficient().unwrap_or_else(|| raw.clone());
    let scorer = Scorer::new(&model, theta)?;
    let chart = model.chart(theta)?;
    let m = theta.len();
    let entry = |i: usize, j: usize, tol: Tolerance| -> Result<f64> {
        let e = chart.integrate(
            |x| {
                let mut s = vec![0.0; m];
                let l0 = scorer.score(x, &mut s)?;
                Ok(if l0 == f64::NEG_INFINITY { 0.0 } else { l0.exp() * s[i] * s[j] })
            },
            tol,
        )?;
        Ok(e.value)
    };
    let mut dense = vec![0.0; m * m];
    for i in 0..m {
        dense[i * m + i] = entry(i, i, Tolerance::relative(1e-9))?;
    }
    // Off-diagonal entries may vanish, so their tolerance is anchored to the diagonal.
    for i in 0..m {
        for j in i + 1..m {
            let scale = (dense[i * m + i] * dense[j * m + j]).sqrt();
            let tol = Tolerance {
                abs: 1e-9 * scale,
                ..Tolerance::relative(1e-9)
            };
            let v = entry(i, j, tol)?;
            dense[i * m + j] = v;
            dense[j * m + i] = v;
        }
    }
    SymMatrix::from_dense(m, &dense)
}

fn monte_carlo(model: &DataModel, theta: &[f64], samples: usize, seed: u64) -> Result<SymMatrix> {
    if samples == 0 {
        return Err(Error::InvalidArgument("Monte Carlo Fisher information needs samples > 0".into()));
    }
    let scorer = Scorer::new(model, theta)?;
    let m = theta.len();
    let mut rng = Rng64::seed_from_u64(seed);
    let mut acc = vec![0.0; m * m];
    let mut s = vec![0.0; m];
    for _ in 0..samples {
        let x = model.sample(theta, &mut rng)?;
        scorer.score(&x, &mut s)?;
        for i in 0..m {
            for j in 0..m {
                acc[i * m + j] += s[i] * s[j];
            }
        }
    }
    let n = samples as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    SymMatrix::from_dense(m, &acc)
}
