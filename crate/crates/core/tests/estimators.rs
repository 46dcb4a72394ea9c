use eic_core::estimators::{estimate, estimate_batch, EstimatorSpec};
use eic_core::losses::{LossFlags, LossSpec};
use eic_core::model::{DataModel, EstimationProblem, ParameterSpace, Prior};
use eic_core::numerics::{ArgmaxConfig, FisherMethod};
use eic_core::Error;

fn coarse() -> ArgmaxConfig {
    ArgmaxConfig {
        grid_per_axis: 10,
        top_k: 2,
        ..Default::default()
    }
}

#[test]
fn eic_matches_wf_in_two_dimensions() {
    let space = ParameterSpace::boxed(vec![-3.0, 0.3], vec![3.0, 4.0]).unwrap();
    let p = EstimationProblem::new(DataModel::GaussianMeanSigma { n: 5 }, Prior::uniform(&space).unwrap()).unwrap();
    let x = [0.4, -0.3, 1.2, 0.9, 0.1];
    let wf = estimate(&EstimatorSpec::wf().with_argmax(coarse()), &p, &x).unwrap();
    let eic = estimate(&EstimatorSpec::eic(LossSpec::hellinger2()).with_argmax(coarse()), &p, &x).unwrap();
    assert!(wf.distance(&eic) < 1e-4, "{:?} vs {:?}", wf.points, eic.points);
    // Uniform prior, √det I ∝ σ⁻²: the WF metric is σ^(2−n) exp(−S/2σ²), peaking at σ² = S/(n − 2).
    let mean = x.iter().sum::<f64>() / 5.0;
    let s: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    assert!((wf.best()[0] - mean).abs() < 1e-5);
    assert!((wf.best()[1].powi(2) - s / 3.0).abs() < 1e-5);
}

#[test]
fn brute_force_fisher_gives_the_same_wf() {
    let s = ParameterSpace::interval(0.05, 10.0).unwrap();
    let p = EstimationProblem::new(DataModel::ExponentialRate, Prior::uniform(&s).unwrap()).unwrap();
    let a = estimate(&EstimatorSpec::wf(), &p, &[0.8]).unwrap();
    let b = estimate(&EstimatorSpec::wf().with_fisher(FisherMethod::BruteForce), &p, &[0.8]).unwrap();
    assert!((a.best()[0] - 2.5).abs() < 1e-6);
    assert!(a.distance(&b) < 1e-4);
}

#[test]
fn batch_keeps_order_and_isolates_failures() {
    let s = ParameterSpace::interval(0.05, 0.95).unwrap();
    let p = EstimationProblem::new(DataModel::Bernoulli, Prior::uniform(&s).unwrap()).unwrap();
    let xs = vec![vec![1.0], vec![0.5], vec![0.0]];
    let out = estimate_batch(&EstimatorSpec::wf(), &p, &xs);
    assert!((out[0].as_ref().unwrap().best()[0] - 0.75).abs() < 1e-6);
    assert!(out[1].is_err());
    assert!((out[2].as_ref().unwrap().best()[0] - 0.25).abs() < 1e-6);
}

#[test]
fn non_smooth_loss_is_rejected_for_eic() {
    let s = ParameterSpace::interval(-2.0, 2.0).unwrap();
    let p = EstimationProblem::new(DataModel::GaussianKnownSigma { sigma: 1.0 }, Prior::uniform(&s).unwrap()).unwrap();
    let flags = LossFlags {
        smooth: false,
        discriminative_checked: false,
        conditional_distribution_based: false,
    };
    let loss = LossSpec::custom("absolute", flags, |_, a, b| Ok((a[0] - b[0]).abs()));
    assert!(matches!(
        estimate(&EstimatorSpec::eic(loss), &p, &[0.3]),
        Err(Error::InvalidArgument(_))
    ));
}
