mod common;

use common::{random_spec, random_stream, Naive};
use netevo::events::{build_graph, stream_hash};
use netevo::generator::{empirical_outer_from, grow, OuterModel};
use netevo::likelihood::{score_many, ScoreOptions, SpecPair};
use netevo::stats::{snapshot, trajectory, StatsTracker};
use netevo::{EdgeEvent, EdgeMode, EventFile, EventKind, EvolvingGraph, ModelSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn stream(seed: u64, max_nodes: usize, len: usize) -> Vec<EdgeEvent> {
    random_stream(&mut ChaCha8Rng::seed_from_u64(seed), max_nodes, 0.4, len)
}

fn spec_from(seed: u64) -> ModelSpec {
    random_spec(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Product of per-choice probabilities, computed without logs.
fn naive_product(spec: &SpecPair, events: &[EdgeEvent], mode: EdgeMode) -> f64 {
    let mut g = Naive::root();
    let mut prod = 1.0;
    for ev in events {
        match &ev.kind {
            EventKind::NewNode { targets } => {
                for (j, t) in targets.iter().enumerate() {
                    let excl: Vec<u32> = targets[..j].iter().map(|x| x.0).collect();
                    prod *= g.prob(&spec.new_node, t.0, &g.all_except(&excl));
                }
            }
            &EventKind::InternalEdge { a, b } => prod *= g.edge_prob(&spec.internal, a.0, b.0, mode),
        }
        g.apply(ev);
    }
    prod
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_likelihood_matches_probability_product(
        seed in any::<u64>(), s1 in any::<u64>(), s2 in any::<u64>(), len in 1usize..=20, ordered in any::<bool>()
    ) {
        let events = stream(seed, 12, len);
        let spec = SpecPair::new(spec_from(s1), spec_from(s2));
        let mode = if ordered { EdgeMode::Ordered } else { EdgeMode::Unordered };
        let opts = ScoreOptions { edge_mode: mode, ..Default::default() };
        let r = score_many(std::slice::from_ref(&spec), &EvolvingGraph::with_root(), &events, opts).unwrap().remove(0);
        let prod = naive_product(&spec, &events, mode);
        if prod == 0.0 {
            prop_assert_eq!(r.log_likelihood, f64::NEG_INFINITY);
        } else {
            prop_assert!((r.log_likelihood.exp() - prod).abs() <= 1e-9 * prod, "{} vs {}", r.log_likelihood.exp(), prod);
        }
    }

    #[test]
    fn event_file_round_trips(seed in any::<u64>(), len in 1usize..60) {
        let events = stream(seed, 25, len);
        let file = EventFile::new(vec!["netevo events v1".into(), "warmup_events=1".into()], events);
        let back = EventFile::parse(&file.to_text()).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn spec_display_round_trips(seed in any::<u64>()) {
        let spec = spec_from(seed);
        let back: ModelSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(back.to_string(), spec.to_string());
        for (a, b) in back.terms().iter().zip(spec.terms()) {
            prop_assert_eq!(a.component, b.component);
            prop_assert!((a.beta - b.beta).abs() <= 1e-12);
        }
    }

    #[test]
    fn grown_events_replay_to_the_same_graph(seed in any::<u64>(), s in any::<u64>(), extra in 1usize..200) {
        let observed = stream(seed, 30, 40);
        let g0 = build_graph(&observed[..5]).unwrap();
        let spec = SpecPair::same(spec_from(s));
        for outer in [OuterModel::replay_from(&observed[5..]), empirical_outer_from(&observed[5..]).unwrap()] {
            let target = g0.edge_count() + extra;
            let Ok(r) = grow(&g0, &outer, &spec, target, seed) else { continue };
            let mut replayed = g0.clone();
            for ev in &r.events {
                ev.apply(&mut replayed).unwrap();
            }
            prop_assert_eq!(replayed.fingerprint(), r.graph.fingerprint());
            prop_assert_eq!(stream_hash(&g0, &r.events), stream_hash(&g0, &grow(&g0, &outer, &spec, target, seed).unwrap().events));
        }
    }

    #[test]
    fn tracked_statistics_match_snapshots(seed in any::<u64>(), len in 1usize..120) {
        let events = stream(seed, 40, len);
        let mut g = EvolvingGraph::with_root();
        let mut tracker = StatsTracker::new(&g);
        for ev in &events {
            ev.apply_with(&mut g, |g, d| tracker.on_edge(g, d)).unwrap();
        }
        let a = tracker.snapshot(&g);
        let b = snapshot(&g);
        prop_assert_eq!(a.n_edges, b.n_edges);
        prop_assert_eq!(a.max_degree, b.max_degree);
        prop_assert!((a.clustering - b.clustering).abs() <= 1e-12);
        prop_assert!(a.assortativity.to_bits() == b.assortativity.to_bits() || (a.assortativity - b.assortativity).abs() <= 1e-12);
        let rows = trajectory(&EvolvingGraph::with_root(), &events, &[g.edge_count()]).unwrap();
        prop_assert_eq!(rows.len(), 1);
        prop_assert_eq!(rows[0].1.n_edges, g.edge_count());
        prop_assert_eq!(rows[0].0, g.edge_count());
    }
}
