//! Construction of core objects from a validated config.

use eic_core::estimators::EstimatorSpec;
use eic_core::losses::{LossSpec, Penalty};
use eic_core::model::{DataModel, EstimationProblem, Prior};
use eic_core::risk::{make_spectrum, RiskSpectrum, SpectrumFamily};

use crate::config::{EstimatorConfig, FamilyConfig, LossConfig, ModelConfig, PriorConfig, RunConfig, SpectrumConfig};
use crate::CliError;

pub fn model(config: &ModelConfig) -> DataModel {
    let base = match &config.family {
        FamilyConfig::Bernoulli => DataModel::Bernoulli,
        FamilyConfig::Binomial { n } => DataModel::BinomialN { n: *n },
        FamilyConfig::Categorical { k } => DataModel::Categorical { k: *k },
        FamilyConfig::GaussianKnownSigma { sigma } => DataModel::GaussianKnownSigma { sigma: *sigma },
        FamilyConfig::GaussianMeanSigma { n } => DataModel::GaussianMeanSigma { n: *n },
        FamilyConfig::ExponentialRate => DataModel::ExponentialRate,
        FamilyConfig::GammaSum { n } => DataModel::GammaSum { n: *n },
    };
    match config.iid {
        Some(n) if n > 1 => DataModel::IidProduct { base: Box::new(base), n },
        _ => base,
    }
}

pub fn problem(config: &RunConfig) -> Result<EstimationProblem, CliError> {
    let op = "model.build_problem";
    let wrap = |e: eic_core::Error| CliError::config(op, e.to_string());
    config.theta.validate().map_err(wrap)?;
    let space = &config.theta;
    let prior = match &config.prior {
        PriorConfig::Uniform => Prior::uniform(space),
        PriorConfig::Beta { alpha, beta } => Prior::beta(space, *alpha, *beta),
        PriorConfig::Gaussian { mean, sd } => Prior::gaussian(space, mean.clone(), sd.clone()),
        PriorConfig::PowerLawSigma { axis } => Prior::power_law_sigma(space, *axis),
        PriorConfig::Pmf { weights } => Prior::finite_pmf(space, weights.clone()),
    }
    .map_err(wrap)?;
    EstimationProblem::new(model(&config.model), prior).map_err(wrap)
}

pub fn loss(config: &LossConfig, seed: u64) -> LossSpec {
    match config {
        LossConfig::Quadratic => LossSpec::Quadratic,
        LossConfig::Hellinger2 => LossSpec::hellinger2(),
        LossConfig::Kl => LossSpec::kl(),
        LossConfig::ChiSquared => LossSpec::chi_squared(),
        LossConfig::Bhattacharyya => LossSpec::Bhattacharyya,
        LossConfig::NoIro => LossSpec::NoIRO,
        LossConfig::NoIsi => LossSpec::NoISI,
        LossConfig::NoIia { threshold, seed: s } => {
            LossSpec::no_iia(LossSpec::hellinger2(), LossSpec::hellinger2(), *threshold, s.unwrap_or(seed))
        }
        LossConfig::MleQuadratic => LossSpec::mle_quadratic(),
        LossConfig::MleHellinger => LossSpec::mle_hellinger(),
    }
}

/// The configured loss; validation guarantees it where a command needs one.
pub fn required_loss(config: &RunConfig) -> Result<LossSpec, CliError> {
    config
        .loss
        .as_ref()
        .map(|l| loss(l, config.seed))
        .ok_or_else(|| CliError::config("config.validate", "a [loss] table is required"))
}

/// Applies the configured argmax, Hessian and Fisher settings.
pub fn tuned(spec: EstimatorSpec, config: &RunConfig) -> EstimatorSpec {
    let mut spec = spec.with_argmax(config.argmax.clone()).with_fisher(config.fisher);
    spec.hessian = config.hessian;
    spec
}

pub fn estimator(
    which: EstimatorConfig,
    config: &RunConfig,
    problem: &EstimationProblem,
) -> Result<EstimatorSpec, CliError> {
    let spec = match which {
        EstimatorConfig::Dmap => EstimatorSpec::dmap(),
        EstimatorConfig::Cmap => EstimatorSpec::cmap(),
        EstimatorConfig::Wf => EstimatorSpec::wf(),
        EstimatorConfig::PmleFlat => EstimatorSpec::pmle(Penalty::flat()),
        EstimatorConfig::PmlePrior => EstimatorSpec::pmle(Penalty::prior_density(problem.prior())),
        EstimatorConfig::Eic => EstimatorSpec::eic(required_loss(config)?),
        EstimatorConfig::Bayes => EstimatorSpec::bayes(required_loss(config)?),
        EstimatorConfig::BayesExtended => EstimatorSpec::bayes_extended(required_loss(config)?),
    };
    Ok(tuned(spec, config))
}

pub fn spectrum(config: &SpectrumConfig, v_max: f64) -> Result<RiskSpectrum, CliError> {
    let family = match config {
        SpectrumConfig::SmoothStep => SpectrumFamily::SmoothStep,
        SpectrumConfig::ExpSaturate { rate } => SpectrumFamily::ExpSaturate { rate: *rate },
    };
    make_spectrum(family, v_max).map_err(|e| CliError::config("risk.make_spectrum", e.to_string()))
}
