//! Risk attitude spectra, expected subjective utility and EI-inferiority.
//!
//! A spectrum maps objective loss `t` to subjective loss `T_ε(t)`, saturating
//! at `V_max` from the error limit `ε` on. Utilities use the affine rescale
//! `A_ε = (V_max − T_ε)/(V_max − T_ε(0))`, which is 1 at no loss and 0 from
//! `ε` on, so a larger utility means a smaller expected subjective loss.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::eic_metric;
use crate::losses::LossSpec;
use crate::model::{EstimationProblem, ParameterSpace};
use crate::numerics::hessian::hessian_at_diagonal;
use crate::numerics::quadrature::{integrate, Axis, Domain, Tolerance};

/// Quadrature error above this fraction of the utility marks an ε unstable.
pub const STABILITY_CUTOFF: f64 = 0.05;

/// Relative margin below which two utilities count as tied.
pub const UTILITY_TIE: f64 = 1e-9;

type SpectrumFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SpectrumFamily {
    /// `T_ε(t) = V_max·s(t/ε)`, `s(u) = 3u² − 2u³` on `[0, 1]`.
    SmoothStep,
    /// `T_ε(t) = V_max·(1 − h(t/ε))` with `h(u) = (e^{−ku} − e^{−k}(1 + k(1 − u)))/(1 − e^{−k}(1 + k))`,
    /// a clamped exponential whose slope vanishes at `u = 1`.
    ExpSaturate { rate: f64 },
    /// `(t, ε) ↦ T_ε(t)`, probed for the spectrum invariants on construction.
    Custom { name: String, t: SpectrumFn },
}

impl fmt::Debug for SpectrumFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumFamily::SmoothStep => write!(f, "SmoothStep"),
            SpectrumFamily::ExpSaturate { rate } => write!(f, "ExpSaturate({rate})"),
            SpectrumFamily::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RiskSpectrum {
    family: SpectrumFamily,
    v_max: f64,
}

pub fn make_spectrum(family: SpectrumFamily, v_max: f64) -> Result<RiskSpectrum> {
    if !(v_max > 0.0 && v_max.is_finite()) {
        return Err(Error::InvalidSpectrum(format!("V_max must be positive and finite, got {v_max}")));
    }
    if let SpectrumFamily::ExpSaturate { rate } = family {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("rate must be positive, got {rate}")));
        }
    }
    let s = RiskSpectrum { family, v_max };
    if matches!(s.family, SpectrumFamily::Custom { .. }) {
        s.probe()?;
    }
    Ok(s)
}

impl RiskSpectrum {
    pub fn smooth_step(v_max: f64) -> Self {
        make_spectrum(SpectrumFamily::SmoothStep, v_max).expect("valid")
    }

    pub fn exp_saturate(v_max: f64, rate: f64) -> Result<Self> {
        make_spectrum(SpectrumFamily::ExpSaturate { rate }, v_max)
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn name(&self) -> String {
        match &self.family {
            SpectrumFamily::SmoothStep => "smooth_step".into(),
            SpectrumFamily::ExpSaturate { rate } => format!("exp_saturate(k={rate})"),
            SpectrumFamily::Custom { name, .. } => name.clone(),
        }
    }

    /// `T_ε(t)`.
    pub fn t(&self, eps: f64, t: f64) -> f64 {
        let u = (t / eps).max(0.0);
        match &self.family {
            SpectrumFamily::SmoothStep => {
                if u >= 1.0 {
                    self.v_max
                } else {
                    self.v_max * u * u * (3.0 - 2.0 * u)
                }
            }
            SpectrumFamily::ExpSaturate { rate } => {
                if u >= 1.0 {
                    self.v_max
                } else {
                    let k = *rate;
                    let tail = (-k).exp();
                    let h = ((-k * u).exp() - tail * (1.0 + k * (1.0 - u))) / (1.0 - tail * (1.0 + k));
                    self.v_max * (1.0 - h)
                }
            }
            SpectrumFamily::Custom { t: f, .. } => f(t, eps),
        }
    }

    /// `A_ε(t)`, in `[0, 1]`.
    pub fn a(&self, eps: f64, t: f64) -> f64 {
        match &self.family {
            SpectrumFamily::SmoothStep => {
                let u = (t / eps).max(0.0);
                if u >= 1.0 {
                    0.0
                } else {
                    // 1 − s(u) = (1 − u)²(1 + 2u)
                    (1.0 - u) * (1.0 - u) * (1.0 + 2.0 * u)
                }
            }
            _ => {
                let t0 = self.t(eps, 0.0);
                ((self.v_max - self.t(eps, t)) / (self.v_max - t0)).clamp(0.0, 1.0)
            }
        }
    }

    /// Samples monotonicity, the plateau from ε on, `V_max > T(0)` and a
    /// flat join at ε for a few error limits.
    fn probe(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpectrum(format!("{}: {m}", self.name())));
        for eps in [1e-3, 0.1, 1.0, 10.0] {
            let t0 = self.t(eps, 0.0);
            if !(t0 < self.v_max) {
                return bad(format!("T(0) = {t0} is not below V_max at ε = {eps}"));
            }
            let mut prev = t0;
            for i in 1..=200 {
                let t = eps * i as f64 / 200.0;
                let v = self.t(eps, t);
                if !v.is_finite() || v < prev - 1e-12 * self.v_max {
                    return bad(format!("not monotone near t = {t} at ε = {eps}"));
                }
                prev = v;
            }
            for f in [1.0, 1.5, 3.0, 100.0] {
                if (self.t(eps, f * eps) - self.v_max).abs() > 1e-12 * self.v_max {
                    return bad(format!("no plateau at t = {}ε for ε = {eps}", f));
                }
            }
            let h = 1e-4 * eps;
            let slope = (self.v_max - self.t(eps, eps - h)) / h;
            if slope > 1e-2 * self.v_max / eps {
                return bad(format!("slope {slope} at the error limit ε = {eps} does not vanish"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Utility {
    pub value: f64,
    pub error: f64,
}

impl Utility {
    pub fn is_stable(&self) -> bool {
        self.value > 0.0 && self.error <= STABILITY_CUTOFF * self.value
    }
}

/// `E[A_ε(L(θ, θ̂)) | x]` under the normalised posterior.
pub fn expected_utility(
    problem: &EstimationProblem,
    loss: &LossSpec,
    spectrum: &RiskSpectrum,
    eps: f64,
    estimate: &[f64],
    x: &[f64],
) -> Result<Utility> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("error limit must be positive, got {eps}")));
    }
    let posterior = problem.posterior_for(x)?;
    let bound = loss.bind_target(problem, estimate)?;
    let integrand = |t: &[f64]| -> Result<f64> {
        let p = posterior.density(t)?;
        if p == 0.0 {
            return Ok(0.0);
        }
        let a = spectrum.a(eps, bound(t)?);
        Ok(if a == 0.0 { 0.0 } else { p * a })
    };
    let e = match problem.theta_space() {
        ParameterSpace::FiniteSet { .. } => integrate(integrand, &problem.theta_space().domain(), Tolerance::default())?,
        ParameterSpace::Box { lower, upper } => {
            let domain = Domain::Box(
                lower
                    .iter()
                    .zip(upper)
                    .enumerate()
                    .map(|(i, (&l, &u))| Axis::finite(l, u).with_breakpoints(focus_points(problem, loss, estimate, eps, i)))
                    .collect(),
            );
            integrate(integrand, &domain, Tolerance::default().with_initial_segments(2))?
        }
    };
    Ok(Utility {
        value: e.value.clamp(0.0, 1.0),
        error: e.error,
    })
}

/// Breakpoints bracketing the region `L(·, θ̂) < ε` along axis `i`, from the
/// quadratic approximation `L ≈ ½ H_ii δ²`.
fn focus_points(problem: &EstimationProblem, loss: &LossSpec, estimate: &[f64], eps: f64, i: usize) -> Vec<f64> {
    let c = estimate[i];
    let mut pts = vec![c];
    if let Ok(h) = hessian_at_diagonal(loss, problem, estimate) {
        let hii = h.get(i, i);
        if hii > 0.0 {
            let r = (2.0 * eps / hii).sqrt();
            for k in [0.5, 1.0, 2.0, 4.0] {
                pts.push(c - k * r);
                pts.push(c + k * r);
            }
        }
    }
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPoint {
    pub eps: f64,
    pub utility_1: Utility,
    pub utility_2: Utility,
    pub ratio: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCurve {
    pub points: Vec<RatioPoint>,
    /// `eic_metric(θ₁)/eic_metric(θ₂)`, the ε → 0 limit.
    pub predicted: f64,
}

impl RatioCurve {
    /// Stable points in input order.
    pub fn stable(&self) -> Vec<&RatioPoint> {
        self.points.iter().filter(|p| p.stable).collect()
    }

    /// Ratio at the smallest stable ε.
    pub fn last_stable(&self) -> Option<&RatioPoint> {
        self.points
            .iter()
            .filter(|p| p.stable)
            .min_by(|a, b| a.eps.total_cmp(&b.eps))
    }
}

/// Utility ratios of `θ₁` to `θ₂` along `eps_list`, with the predicted limit.
#[allow(clippy::too_many_arguments)]
pub fn utility_ratio_curve(
    problem: &EstimationProblem,
    loss: &LossSpec,
    spectrum: &RiskSpectrum,
    x: &[f64],
    theta1: &[f64],
    theta2: &[f64],
    eps_list: &[f64],
) -> Result<RatioCurve> {
    let predicted = if problem.theta_space().is_finite() {
        let post = problem.posterior_for(x)?;
        post.density(theta1)? / post.density(theta2)?
    } else {
        eic_metric(loss, problem, x, theta1)? / eic_metric(loss, problem, x, theta2)?
    };
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let u1 = expected_utility(problem, loss, spectrum, eps, theta1, x)?;
        let u2 = expected_utility(problem, loss, spectrum, eps, theta2, x)?;
        points.push(RatioPoint {
            eps,
            utility_1: u1,
            utility_2: u2,
            ratio: u1.value / u2.value,
            stable: u1.is_stable() && u2.is_stable(),
        });
    }
    Ok(RatioCurve { points, predicted })
}

/// Default geometric grid `1, 10⁻¹, …, 10⁻⁴`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=4).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    /// Index of the candidate found inferior.
    pub inferior: usize,
    /// Index of the candidate it is inferior to.
    pub to: usize,
    /// Largest ε₀ such that the strict ordering held at every stable grid ε ≤ ε₀.
    pub eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferiorityReport {
    pub eps_grid: Vec<f64>,
    /// `utilities[k][i]`: candidate `i` at `eps_grid[k]`.
    pub utilities: Vec<Vec<Utility>>,
    pub stable: Vec<bool>,
    pub pairs: Vec<PairRecord>,
    pub maximal: Vec<bool>,
}

/// Pairwise EI-inferiority over candidate estimates.
///
/// Candidate `j` is inferior to `i` when `i` has strictly larger utility at
/// every stable ε of a nonempty tail of the (descending) grid that contains
/// its smallest stable ε.
pub fn ei_inferiority_report(
    problem: &EstimationProblem,
    loss: &LossSpec,
    spectrum: &RiskSpectrum,
    x: &[f64],
    candidates: &[Vec<f64>],
    eps_grid: &[f64],
) -> Result<InferiorityReport> {
    if eps_grid.len() < 3 || eps_grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("ε grid must be strictly descending with at least 3 points".into()));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates".into()));
    }
    let mut utilities = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let row = candidates
            .iter()
            .map(|c| expected_utility(problem, loss, spectrum, eps, c, x))
            .collect::<Result<Vec<_>>>()?;
        utilities.push(row);
    }
    let stable: Vec<bool> = utilities.iter().map(|row| row.iter().all(Utility::is_stable)).collect();
    let stable_rows: Vec<usize> = (0..eps_grid.len()).filter(|&k| stable[k]).collect();

    let n = candidates.len();
    let mut pairs = Vec::new();
    let mut maximal = vec![true; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // Walk the stable rows from the smallest ε upwards.
            let mut eps0 = None;
            for &k in stable_rows.iter().rev() {
                let (ui, uj) = (utilities[k][i].value, utilities[k][j].value);
                if ui > uj * (1.0 + UTILITY_TIE) && ui - uj > utilities[k][i].error + utilities[k][j].error {
                    eps0 = Some(eps_grid[k]);
                } else {
                    break;
                }
            }
            if let Some(eps0) = eps0 {
                pairs.push(PairRecord { inferior: j, to: i, eps0 });
                maximal[j] = false;
            }
        }
    }
    Ok(InferiorityReport {
        eps_grid: eps_grid.to_vec(),
        utilities,
        stable,
        pairs,
        maximal,
    })
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

    #[test]
    fn smooth_step_values_and_join() {
        let s = RiskSpectrum::smooth_step(2.0);
        assert_eq!(s.t(1.0, 0.0), 0.0);
        assert_eq!(s.t(1.0, 0.5), 1.0);
        assert_eq!(s.t(1.0, 1.0), 2.0);
        assert_eq!(s.a(0.3, 0.0), 1.0);
        assert_eq!(s.a(0.3, 0.6), 0.0);
        // s′(u) = 6u(1 − u): the slope vanishes linearly at the join.
        let h = 1e-4;
        let slope = (s.t(1.0, 1.0) - s.t(1.0, 1.0 - h)) / h;
        assert!(slope < 7.0 * h * 2.0 && slope > 0.0);
    }

    #[test]
    fn exp_saturate_invariants() {
        let s = RiskSpectrum::exp_saturate(1.0, 4.0).unwrap();
        s.probe().unwrap();
        assert!(s.t(1.0, 0.0).abs() < 1e-15);
        assert_eq!(s.a(0.2, 0.4), 0.0);
        assert!((s.a(0.2, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn custom_spectra_are_probed() {
        let ok = SpectrumFamily::Custom {
            name: "cubic".into(),
            t: Arc::new(|t, eps| {
                let u = (t / eps).min(1.0);
                1.0 - (1.0 - u).powi(3)
            }),
        };
        assert!(make_spectrum(ok, 1.0).is_ok());
        let kinked = SpectrumFamily::Custom {
            name: "linear".into(),
            t: Arc::new(|t, eps| (t / eps).min(1.0)),
        };
        assert!(matches!(make_spectrum(kinked, 1.0), Err(Error::InvalidSpectrum(_))));
        let no_plateau = SpectrumFamily::Custom {
            name: "open".into(),
            t: Arc::new(|t, _| t),
        };
        assert!(make_spectrum(no_plateau, 1.0).is_err());
    }

    #[test]
    fn discrete_utilities_and_inferiority() {
        let p = table_problem();
        let s = RiskSpectrum::smooth_step(1.0);
        let loss = LossSpec::hellinger2();
        let u = expected_utility(&p, &loss, &s, 0.1, &[1.0], &[0.0]).unwrap();
        assert!((u.value - 0.9).abs() < 1e-12);
        let big = expected_utility(&p, &loss, &s, 10.0, &[2.0], &[0.0]).unwrap();
        assert!(big.value >= 0.97);
        let r = ei_inferiority_report(&p, &loss, &s, &[0.0], &[vec![1.0], vec![2.0]], &default_eps_grid()).unwrap();
        assert_eq!(r.maximal, vec![true, false]);
        assert_eq!(r.pairs.len(), 1);
        let single = ei_inferiority_report(&p, &loss, &s, &[0.0], &[vec![2.0]], &default_eps_grid()).unwrap();
        assert_eq!(single.maximal, vec![true]);
    }

    #[test]
    fn identical_points_have_unit_ratio() {
        let s = ParameterSpace::interval(-4.0, 4.0).unwrap();
        let prior = Prior::gaussian(&s, vec![0.0], vec![1.0]).unwrap();
        let p = EstimationProblem::new(DataModel::GaussianKnownSigma { sigma: 1.0 }, prior).unwrap();
        let c = utility_ratio_curve(&p, &LossSpec::Quadratic, &RiskSpectrum::smooth_step(1.0), &[0.4], &[0.1], &[0.1], &[1.0, 0.1])
            .unwrap();
        assert!(c.points.iter().all(|p| p.ratio == 1.0));
        assert!((c.predicted - 1.0).abs() < 1e-12);
    }
}
