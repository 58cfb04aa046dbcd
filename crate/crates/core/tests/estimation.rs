use netevo::estimation::{fit_model, fit_weights, per_step_component_probs, Family, FitConfig, Role};
use netevo::generator::{grow, CountDistribution, OuterModel};
use netevo::likelihood::{Scope, SpecPair};
use netevo::{Component, EdgeEvent, EdgeMode, EvolvingGraph, ModelSpec};

fn arrivals(spec: &str, choices: usize, seed: u64) -> Vec<EdgeEvent> {
    let outer = OuterModel::empirical(CountDistribution::point(1), CountDistribution::point(0)).unwrap();
    let spec: ModelSpec = spec.parse().unwrap();
    grow(&EvolvingGraph::with_root(), &outer, &SpecPair::same(spec), choices, seed).unwrap().events
}

#[test]
fn pure_degree_is_recovered() {
    let events = arrivals("degree", 10_000, 5);
    let cols = [Component::Degree, Component::Null];
    let probs =
        per_step_component_probs(&cols, &EvolvingGraph::with_root(), &events, Scope::NewNode, EdgeMode::Unordered)
            .unwrap();
    let fit = fit_weights(&probs, &[0, 1], 1000, 1e-6).unwrap();
    assert!(fit.betas[0] >= 0.9, "{:?}", fit.betas);
    assert!((fit.betas.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
}

#[test]
fn null_data_fits_close_to_null() {
    let events = arrivals("null", 10_000, 6);
    // every family, on a coarse exponent grid
    let mut cfg = FitConfig::default().with_role(Role::NewNode);
    cfg.delta_grid = (-0.5, 0.5, 0.1);
    let fit = fit_model(&EvolvingGraph::with_root(), &events, &cfg).unwrap();
    assert!((0.99..=1.01).contains(&fit.report.c0), "{} c0={}", fit.spec, fit.report.c0);
    let null_beta = fit.spec.terms().iter().find(|t| t.component == Component::Null).map_or(0.0, |t| t.beta);
    assert!(null_beta > 0.5, "{}", fit.spec);
}

#[test]
fn fitting_is_deterministic() {
    let events = arrivals("0.5*pfp(-0.1) + 0.5*recent(3)", 3000, 7);
    let cfg =
        FitConfig::default().with_candidates(&[Family::Pfp, Family::Recent, Family::Null]).with_role(Role::NewNode);
    let a = fit_model(&EvolvingGraph::with_root(), &events, &cfg).unwrap();
    let b = fit_model(&EvolvingGraph::with_root(), &events, &cfg).unwrap();
    assert_eq!(a.spec.to_string(), b.spec.to_string());
    assert_eq!(a.report.log_likelihood.to_bits(), b.report.log_likelihood.to_bits());
}
