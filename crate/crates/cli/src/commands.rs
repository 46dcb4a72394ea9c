//! One function per command, each producing values, a table and checks.

use eic_core::axioms::{audit_loss, c_function, AuditSuite, Axiom, CFunction};
use eic_core::estimators::{eic_penalty, estimate, pmle_to_loss, EstimatorSpec};
use eic_core::losses::Penalty;
use eic_core::model::{EstimationProblem, ParameterSpace, Prior, Rng64};
use eic_core::numerics::{fisher_information, hessian_at_diagonal_with, EstimateSet, FisherMethod, SymMatrix};
use eic_core::risk::utility_ratio_curve;
use rand::SeedableRng;
use serde_json::json;

use crate::build;
use crate::config::RunConfig;
use crate::report::{num, vector, Check, Table};
use crate::CliError;

pub struct Outcome {
    pub values: serde_json::Value,
    pub table: Table,
    pub checks: Vec<Check>,
    /// Records holding a numeric error instead of a value.
    pub errors: usize,
}

fn core(op: &str) -> impl Fn(eic_core::Error) -> CliError + '_ {
    move |e| CliError::from_core(op, e)
}

fn tolerance(config: &RunConfig) -> f64 {
    config
        .check
        .tolerance
        .or(config.command.default_tolerance())
        .expect("commands with checks have a default tolerance")
}

fn points_json(set: &EstimateSet) -> serde_json::Value {
    serde_json::to_value(set).expect("estimate sets serialise")
}

struct EstimateRow {
    estimator: String,
    observation: usize,
    result: Result<EstimateSet, String>,
}

fn run_estimators(config: &RunConfig, problem: &EstimationProblem) -> Result<Vec<EstimateRow>, CliError> {
    let specs = config
        .estimators
        .iter()
        .map(|e| build::estimator(*e, config, problem))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (i, x) in config.observations.iter().enumerate() {
        for spec in &specs {
            rows.push(EstimateRow {
                estimator: spec.name(),
                observation: i,
                result: estimate(spec, problem, x).map_err(|e| e.to_string()),
            });
        }
    }
    Ok(rows)
}

fn estimate_values(config: &RunConfig, rows: &[EstimateRow]) -> (Vec<serde_json::Value>, Table) {
    let mut table = Table::new(&["observation", "x", "estimator", "estimate", "metric", "ties", "error"]);
    let mut records = Vec::new();
    for r in rows {
        let x = &config.observations[r.observation];
        match &r.result {
            Ok(set) => {
                records.push(json!({
                    "observation": r.observation,
                    "x": x,
                    "estimator": r.estimator,
                    "estimate": points_json(set),
                }));
                table.push(vec![
                    r.observation.to_string(),
                    vector(x),
                    r.estimator.clone(),
                    set.points.iter().map(|p| vector(p)).collect::<Vec<_>>().join(" | "),
                    num(set.best_value()),
                    set.points.len().to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                records.push(json!({
                    "observation": r.observation,
                    "x": x,
                    "estimator": r.estimator,
                    "error": e,
                }));
                table.push(vec![
                    r.observation.to_string(),
                    vector(x),
                    r.estimator.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.clone(),
                ]);
            }
        }
    }
    (records, table)
}

pub fn estimate_cmd(config: &RunConfig, problem: &EstimationProblem) -> Result<Outcome, CliError> {
    let rows = run_estimators(config, problem)?;
    let errors = rows.iter().filter(|r| r.result.is_err()).count();
    let (records, table) = estimate_values(config, &rows);
    Ok(Outcome {
        values: json!({ "records": records }),
        table,
        checks: Vec::new(),
        errors,
    })
}

pub fn compare(config: &RunConfig, problem: &EstimationProblem) -> Result<Outcome, CliError> {
    let rows = run_estimators(config, problem)?;
    let errors = rows.iter().filter(|r| r.result.is_err()).count();
    let (records, _) = estimate_values(config, &rows);
    let tol = tolerance(config);
    let mut table = Table::new(&["observation", "estimator_a", "estimator_b", "distance"]);
    let mut distances = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..config.observations.len() {
        let group: Vec<&EstimateRow> = rows.iter().filter(|r| r.observation == i).collect();
        for (a, ra) in group.iter().enumerate() {
            for rb in &group[a + 1..] {
                let (Ok(sa), Ok(sb)) = (&ra.result, &rb.result) else { continue };
                let d = sa.distance(sb);
                worst = worst.max(d);
                distances.push(json!({
                    "observation": i,
                    "a": ra.estimator,
                    "b": rb.estimator,
                    "distance": d,
                }));
                table.push(vec![i.to_string(), ra.estimator.clone(), rb.estimator.clone(), num(d)]);
            }
        }
    }
    Ok(Outcome {
        values: json!({ "records": records, "distances": distances, "max_distance": worst }),
        table,
        checks: vec![Check::below("max pairwise argmax distance", worst, tol)],
        errors,
    })
}

/// `n` seeded points uniform in the middle 80% of each box axis.
fn interior_points(space: &ParameterSpace, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
    let ParameterSpace::Box { lower, upper } = space else {
        return Err(CliError::config(
            "verify_fisher.thetas",
            "a finite parameter space needs explicit thetas (and has no Hessian)",
        ));
    };
    let (lo, hi): (Vec<f64>, Vec<f64>) = lower
        .iter()
        .zip(upper)
        .map(|(l, u)| (l + 0.1 * (u - l), u - 0.1 * (u - l)))
        .unzip();
    let inner = ParameterSpace::boxed(lo, hi).map_err(core("verify_fisher.thetas"))?;
    let prior = Prior::uniform(&inner).map_err(core("verify_fisher.thetas"))?;
    let mut rng = Rng64::seed_from_u64(seed);
    (0..n)
        .map(|_| prior.sample(&mut rng).map_err(core("verify_fisher.thetas")))
        .collect()
}

pub fn verify_fisher(config: &RunConfig, problem: &EstimationProblem) -> Result<Outcome, CliError> {
    let loss = build::required_loss(config)?;
    let gamma = loss.fisher_factor().ok_or_else(|| {
        CliError::config(
            "losses.fisher_factor",
            format!("{} is not an f-divergence; H = γ·I does not apply", loss.name()),
        )
    })?;
    let thetas = if config.verify_fisher.thetas.is_empty() {
        interior_points(problem.theta_space(), config.verify_fisher.random, config.seed)?
    } else {
        config.verify_fisher.thetas.clone()
    };
    let tol = tolerance(config);
    let mut table = Table::new(&["theta", "gamma", "gamma_hat", "rel_deviation", "hessian", "gamma_fisher"]);
    let mut records = Vec::new();
    let mut worst = 0.0f64;
    for theta in &thetas {
        let h = hessian_at_diagonal_with(&loss, problem, theta, &config.hessian)
            .map_err(core("numerics.hessian_at_diagonal"))?;
        let fisher = match fisher_information(problem, theta, config.fisher) {
            Err(eic_core::Error::NoAnalyticForm(_)) if config.fisher == FisherMethod::Analytic => {
                fisher_information(problem, theta, FisherMethod::BruteForce)
            }
            other => other,
        }
        .map_err(core("numerics.fisher_information"))?;
        let target = fisher.scaled(gamma);
        let dev = h.relative_deviation(&target);
        let gamma_hat = gamma * h.projection_scale(&target);
        worst = worst.max(dev);
        let rows = |m: &SymMatrix| m.rows();
        records.push(json!({
            "theta": theta,
            "hessian": rows(&h),
            "gamma_fisher": rows(&target),
            "gamma_hat": gamma_hat,
            "rel_deviation": dev,
        }));
        table.push(vec![
            vector(theta),
            num(gamma),
            num(gamma_hat),
            num(dev),
            h.to_dense().iter().map(|v| num(*v)).collect::<Vec<_>>().join(";"),
            target.to_dense().iter().map(|v| num(*v)).collect::<Vec<_>>().join(";"),
        ]);
    }
    Ok(Outcome {
        values: json!({ "loss": loss.name(), "gamma": gamma, "points": records, "max_rel_deviation": worst }),
        table,
        checks: vec![Check::below("max ||H - gamma I|| / ||gamma I||", worst, tol)],
        errors: 0,
    })
}

pub fn verify_limit(config: &RunConfig, problem: &EstimationProblem) -> Result<Outcome, CliError> {
    let loss = build::required_loss(config)?;
    let limit = config.limit.as_ref().expect("validated");
    let spectrum = build::spectrum(&limit.spectrum, limit.v_max)?;
    let x = &config.observations[0];
    let curve = utility_ratio_curve(problem, &loss, &spectrum, x, &limit.theta1, &limit.theta2, &limit.eps)
        .map_err(core("risk.utility_ratio_curve"))?;
    let mut table = Table::new(&["eps", "utility_1", "utility_2", "ratio", "predicted", "rel_error", "stable"]);
    for p in &curve.points {
        table.push(vec![
            num(p.eps),
            num(p.utility_1.value),
            num(p.utility_2.value),
            num(p.ratio),
            num(curve.predicted),
            num((p.ratio - curve.predicted).abs() / curve.predicted),
            p.stable.to_string(),
        ]);
    }
    let stat = curve
        .last_stable()
        .map(|p| (p.ratio - curve.predicted).abs() / curve.predicted)
        .unwrap_or(f64::INFINITY);
    Ok(Outcome {
        values: json!({
            "x": x,
            "spectrum": spectrum.name(),
            "curve": serde_json::to_value(&curve).expect("curves serialise"),
        }),
        table,
        checks: vec![Check::below("|ratio(smallest stable eps) - predicted| / predicted", stat, tolerance(config))],
        errors: 0,
    })
}

pub fn verify_pmle(config: &RunConfig, problem: &EstimationProblem) -> Result<Outcome, CliError> {
    let tol = tolerance(config);
    let mut table = Table::new(&["direction", "source", "observation", "pmle", "eic", "distance"]);
    let mut records = Vec::new();
    let mut worst = 0.0f64;
    let mut push = |direction: &str, source: String, i: usize, pmle: &EstimateSet, eic: &EstimateSet| {
        let d = pmle.distance(eic);
        worst = worst.max(d);
        records.push(json!({
            "direction": direction,
            "source": source,
            "observation": i,
            "pmle": pmle.points,
            "eic": eic.points,
            "distance": d,
        }));
        table.push(vec![
            direction.to_string(),
            source,
            i.to_string(),
            vector(pmle.best()),
            vector(eic.best()),
            num(d),
        ]);
    };
    let run = |spec: EstimatorSpec, x: &[f64]| {
        estimate(&build::tuned(spec, config), problem, x).map_err(core("estimators.estimate"))
    };
    for k in 0..config.pmle.penalties {
        let g = Penalty::random(config.seed.wrapping_add(k as u64), problem.theta_space());
        let induced = pmle_to_loss(&g, problem).map_err(core("estimators.pmle_to_loss"))?;
        for (i, x) in config.observations.iter().enumerate() {
            let a = run(EstimatorSpec::pmle(g.clone()), x)?;
            let b = run(EstimatorSpec::eic(induced.clone()), x)?;
            push("pmle_to_eic", g.name.clone(), i, &a, &b);
        }
    }
    if let Some(l) = &config.loss {
        let loss = build::loss(l, config.seed);
        let g = eic_penalty(&loss, problem, config.hessian);
        for (i, x) in config.observations.iter().enumerate() {
            let a = run(EstimatorSpec::pmle(g.clone()), x)?;
            let b = run(EstimatorSpec::eic(loss.clone()), x)?;
            push("eic_to_pmle", loss.name(), i, &a, &b);
        }
    }
    Ok(Outcome {
        values: json!({ "records": records, "max_distance": worst }),
        table,
        checks: vec![Check::below("max PMLE/EIC argmax distance", worst, tol)],
        errors: 0,
    })
}

fn axiom_key(a: Axiom) -> &'static str {
    match a {
        Axiom::IRP => "irp",
        Axiom::IRO => "iro",
        Axiom::IIA => "iia",
        Axiom::ISI => "isi",
    }
}

fn verdict_name(v: eic_core::axioms::Verdict) -> String {
    serde_json::to_value(v).expect("verdicts serialise").as_str().expect("string").to_string()
}

/// The audit battery on the built-in suite; the configured problem is not used.
pub fn audit_axioms(config: &RunConfig) -> Result<Outcome, CliError> {
    let loss = build::required_loss(config)?;
    let mut suite = AuditSuite::standard(config.seed).map_err(core("axioms.audit_suite"))?;
    suite.pairs_per_item = config.audit.pairs;
    let report = audit_loss(&loss, &suite).map_err(core("axioms.audit_loss"))?;
    let mut table = Table::new(&["axiom", "problem", "item", "max_abs", "max_rel", "verdict", "note"]);
    let mut deviations = Vec::new();
    let mut record_verdicts = Vec::new();
    for r in &report.records {
        let (abs, rel) = r.deviation.as_ref().map_or((None, None), |d| (Some(d.max_abs), Some(d.max_rel)));
        deviations.push(json!({
            "axiom": axiom_key(r.axiom),
            "problem": r.problem,
            "item": r.item,
            "deviation": r.deviation,
            "note": r.note,
        }));
        record_verdicts.push(verdict_name(r.verdict));
        table.push(vec![
            axiom_key(r.axiom).to_string(),
            r.problem.clone(),
            r.item.clone(),
            abs.map(num).unwrap_or_default(),
            rel.map(num).unwrap_or_default(),
            verdict_name(r.verdict),
            r.note.clone().unwrap_or_default(),
        ]);
    }
    let summary: serde_json::Map<String, serde_json::Value> = report
        .summary
        .iter()
        .map(|(a, v)| (axiom_key(*a).to_string(), json!(verdict_name(*v))))
        .collect();
    let mut checks = Vec::new();
    for (key, expected) in &config.audit.expect {
        let axiom = [Axiom::IRP, Axiom::IRO, Axiom::IIA, Axiom::ISI]
            .into_iter()
            .find(|a| axiom_key(*a) == key)
            .expect("validated");
        checks.push(Check::equals(
            format!("{key} verdict"),
            verdict_name(*expected),
            verdict_name(report.verdict(axiom)),
        ));
    }
    Ok(Outcome {
        values: json!({
            "loss": report.loss,
            "records": deviations,
            "record_verdicts": record_verdicts,
            "summary": summary,
        }),
        table,
        checks,
        errors: 0,
    })
}

pub fn c_function_cmd(config: &RunConfig, problem: &EstimationProblem) -> Result<Outcome, CliError> {
    let c = config.cfunction.as_ref().expect("validated");
    let f = c_function(problem, &c.theta1, &c.theta2).map_err(core("axioms.c_function"))?;
    let curve = f.curve(c.points.max(1));
    let mut table = Table::new(&["t", "c"]);
    for (t, v) in &curve {
        table.push(vec![num(*t), num(*v)]);
    }
    let representation = match &f {
        CFunction::Step { .. } => "exact_step",
        CFunction::Strata { .. } => "quantile_strata",
        CFunction::Sampled { .. } => "seeded_samples",
    };
    let mass = f.mass();
    Ok(Outcome {
        values: json!({
            "representation": representation,
            "mass": mass,
            "curve": curve,
        }),
        table,
        checks: vec![Check::below("|integral of c - 1|", (mass - 1.0).abs(), tolerance(config))],
        errors: 0,
    })
}
