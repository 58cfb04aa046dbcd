//! Exact sequence likelihood of an observed event stream under a pair of
//! inner models, and the per-choice likelihood ratio against the uniform
//! model.
//!
//! Each event is scored against the graph as it stood before the event,
//! then applied. Everything is accumulated in natural-log space; the null
//! model is scored over the identical choice sets in the same pass.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::events::{stream_hash, EdgeEvent, EventKind};
use crate::graph::EvolvingGraph;
use crate::models::probability::{mixture_edge_probability, mixture_probability};
use crate::models::{EdgeMode, Exclusion, ModelSpec, ResolvedSpec, WeightSums};

/// Inner models for the two kinds of choice: targets of a new node, and
/// edges between existing nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecPair {
    pub new_node: ModelSpec,
    pub internal: ModelSpec,
}

impl SpecPair {
    pub fn new(new_node: ModelSpec, internal: ModelSpec) -> Self {
        SpecPair { new_node, internal }
    }

    /// The same spec for both roles.
    pub fn same(spec: ModelSpec) -> Self {
        SpecPair { new_node: spec.clone(), internal: spec }
    }

    pub fn null() -> Self {
        Self::same(ModelSpec::null())
    }

    pub fn free_parameters(&self, scope: Scope, count_windows: bool) -> usize {
        let new = self.new_node.free_parameters(count_windows);
        let int = self.internal.free_parameters(count_windows);
        match scope {
            Scope::All => new + int,
            Scope::NewNode => new,
            Scope::Internal => int,
        }
    }
}

/// Which choices contribute to a report. Events outside the scope are
/// still applied to the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    #[default]
    All,
    NewNode,
    Internal,
}

impl Scope {
    fn includes(self, kind: &EventKind) -> bool {
        matches!(
            (self, kind),
            (Scope::All, _)
                | (Scope::NewNode, EventKind::NewNode { .. })
                | (Scope::Internal, EventKind::InternalEdge { .. })
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::NewNode => "new_node",
            Scope::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreOptions {
    pub scope: Scope,
    pub edge_mode: EdgeMode,
    /// Count recency windows as fitted parameters in the AIC.
    pub count_windows: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodReport {
    pub spec_new: String,
    pub spec_internal: String,
    /// Natural log.
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    /// Number of choices scored.
    pub t: usize,
    pub c0: f64,
    pub deviance: f64,
    pub aic: f64,
    /// Parameter count used for the AIC.
    pub parameters: usize,
    /// `original_index` of every event given probability zero.
    pub zero_probability_events: Vec<usize>,
    pub stream_hash: String,
    pub scope: Scope,
}

impl LikelihoodReport {
    fn finish(specs: &SpecPair, acc: &Accumulator, null_ll: f64, t: usize, hash: &str, opts: &ScoreOptions) -> Self {
        let ll = acc.log_likelihood;
        let c0 = if !acc.zero_events.is_empty() {
            0.0
        } else if t == 0 {
            1.0
        } else {
            ((ll - null_ll) / t as f64).exp()
        };
        let k = specs.free_parameters(opts.scope, opts.count_windows);
        LikelihoodReport {
            spec_new: specs.new_node.to_string(),
            spec_internal: specs.internal.to_string(),
            log_likelihood: ll,
            null_log_likelihood: null_ll,
            t,
            c0,
            deviance: -2.0 * ll,
            aic: 2.0 * k as f64 - 2.0 * ll,
            parameters: k,
            zero_probability_events: acc.zero_events.clone(),
            stream_hash: hash.to_string(),
            scope: opts.scope,
        }
    }

    pub const CSV_HEADER: &'static str = "spec_new,spec_internal,logL,nullLogL,t,c0,deviance,aic,zeroEvents";

    pub fn to_csv_row(&self) -> String {
        let zero: Vec<String> = self.zero_probability_events.iter().map(|i| i.to_string()).collect();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.spec_new,
            self.spec_internal,
            self.log_likelihood,
            self.null_log_likelihood,
            self.t,
            self.c0,
            self.deviance,
            self.aic,
            zero.join(";")
        )
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let zero: Vec<String> = self.zero_probability_events.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "spec_new={}", self.spec_new);
        let _ = writeln!(s, "spec_internal={}", self.spec_internal);
        let _ = writeln!(s, "scope={}", self.scope.as_str());
        let _ = writeln!(s, "logL={}", self.log_likelihood);
        let _ = writeln!(s, "nullLogL={}", self.null_log_likelihood);
        let _ = writeln!(s, "t={}", self.t);
        let _ = writeln!(s, "c0={}", self.c0);
        let _ = writeln!(s, "deviance={}", self.deviance);
        let _ = writeln!(s, "aic={}", self.aic);
        let _ = writeln!(s, "k={}", self.parameters);
        let _ = writeln!(s, "zeroEvents={}", zero.join(";"));
        let _ = writeln!(s, "stream={}", self.stream_hash);
        s
    }
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    log_likelihood: f64,
    zero_events: Vec<usize>,
}

impl Accumulator {
    fn add(&mut self, p: f64, index: usize) {
        if p > 0.0 {
            self.log_likelihood += p.ln();
        } else {
            self.log_likelihood = f64::NEG_INFINITY;
            if self.zero_events.last() != Some(&index) {
                self.zero_events.push(index);
            }
        }
    }
}

/// Scores several spec pairs over one replay of a stream.
pub struct Scorer {
    graph: EvolvingGraph,
    sums: WeightSums,
    specs: Vec<SpecPair>,
    resolved: Vec<(ResolvedSpec, ResolvedSpec)>,
    null: ResolvedSpec,
    acc: Vec<Accumulator>,
    null_ll: f64,
    t: usize,
    opts: ScoreOptions,
}

impl Scorer {
    pub fn new(specs: &[SpecPair], g0: &EvolvingGraph, opts: ScoreOptions) -> Result<Self> {
        let mut sums = WeightSums::default();
        let mut resolved = Vec::with_capacity(specs.len());
        for s in specs {
            s.new_node.validate()?;
            s.internal.validate()?;
            resolved
                .push((ResolvedSpec::new(&s.new_node, &mut sums, g0), ResolvedSpec::new(&s.internal, &mut sums, g0)));
        }
        let null = ResolvedSpec::new(&ModelSpec::null(), &mut sums, g0);
        Ok(Scorer {
            graph: g0.clone(),
            sums,
            specs: specs.to_vec(),
            resolved,
            null,
            acc: vec![Accumulator::default(); specs.len()],
            null_ll: 0.0,
            t: 0,
            opts,
        })
    }

    pub fn graph(&self) -> &EvolvingGraph {
        &self.graph
    }

    /// Scores `ev` against the current state, then applies it.
    pub fn push(&mut self, ev: &EdgeEvent) -> Result<()> {
        let idx = ev.original_index;
        ev.validate(&self.graph)?;
        let g = &self.graph;
        let sums = &self.sums;
        if self.opts.scope.includes(&ev.kind) {
            match &ev.kind {
                EventKind::NewNode { targets } => {
                    for (j, &target) in targets.iter().enumerate() {
                        let excl = Exclusion::Nodes(&targets[..j]);
                        for (acc, (new_spec, _)) in self.acc.iter_mut().zip(&self.resolved) {
                            let p = mixture_probability(new_spec, sums, g, target, &excl)
                                .map_err(|e| Error::malformed(idx, e))?;
                            acc.add(p, idx);
                        }
                        let p0 = mixture_probability(&self.null, sums, g, target, &excl)
                            .map_err(|e| Error::malformed(idx, e))?;
                        self.null_ll += p0.ln();
                        self.t += 1;
                    }
                }
                &EventKind::InternalEdge { a, b } => {
                    let mode = self.opts.edge_mode;
                    for (acc, (_, int_spec)) in self.acc.iter_mut().zip(&self.resolved) {
                        let p = mixture_edge_probability(int_spec, sums, g, a, b, mode)
                            .map_err(|e| Error::malformed(idx, e))?;
                        acc.add(p, idx);
                    }
                    let p0 = mixture_edge_probability(&self.null, sums, g, a, b, mode)
                        .map_err(|e| Error::malformed(idx, e))?;
                    self.null_ll += p0.ln();
                    self.t += 1;
                }
            }
        }
        let sums = &mut self.sums;
        ev.apply_with(&mut self.graph, |g, d| sums.on_edge(g, d))
    }

    pub fn finish(self, hash: &str) -> Vec<LikelihoodReport> {
        self.specs
            .iter()
            .zip(&self.acc)
            .map(|(s, acc)| LikelihoodReport::finish(s, acc, self.null_ll, self.t, hash, &self.opts))
            .collect()
    }
}

/// Log-probability of one event under `specs` given the state `g`, and the
/// number of choices it contains. A zero-probability event yields `-inf`.
pub fn step_log_likelihood(
    specs: &SpecPair,
    g: &EvolvingGraph,
    ev: &EdgeEvent,
    mode: EdgeMode,
) -> Result<(f64, usize)> {
    ev.validate(g)?;
    let mut sums = WeightSums::default();
    let new_spec = ResolvedSpec::new(&specs.new_node, &mut sums, g);
    let int_spec = ResolvedSpec::new(&specs.internal, &mut sums, g);
    let mut acc = Accumulator::default();
    match &ev.kind {
        EventKind::NewNode { targets } => {
            for (j, &target) in targets.iter().enumerate() {
                acc.add(mixture_probability(&new_spec, &sums, g, target, &Exclusion::Nodes(&targets[..j]))?, 0);
            }
        }
        &EventKind::InternalEdge { a, b } => {
            acc.add(mixture_edge_probability(&int_spec, &sums, g, a, b, mode)?, 0);
        }
    }
    Ok((acc.log_likelihood, ev.choices()))
}

/// Scores every spec pair over the stream in a single pass.
pub fn score_many(
    specs: &[SpecPair],
    g0: &EvolvingGraph,
    events: &[EdgeEvent],
    opts: ScoreOptions,
) -> Result<Vec<LikelihoodReport>> {
    let mut scorer = Scorer::new(specs, g0, opts)?;
    for ev in events {
        scorer.push(ev)?;
    }
    Ok(scorer.finish(&stream_hash(g0, events)))
}

pub fn sequence_log_likelihood_with(
    specs: &SpecPair,
    g0: &EvolvingGraph,
    events: &[EdgeEvent],
    opts: ScoreOptions,
) -> Result<LikelihoodReport> {
    Ok(score_many(std::slice::from_ref(specs), g0, events, opts)?.remove(0))
}

pub fn sequence_log_likelihood(specs: &SpecPair, g0: &EvolvingGraph, events: &[EdgeEvent]) -> Result<LikelihoodReport> {
    sequence_log_likelihood_with(specs, g0, events, ScoreOptions::default())
}

/// Reports ordered by `c0`, best first, with all pairwise ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Indices into the input, best first.
    pub order: Vec<usize>,
    /// `ratios[i][j] = c0[i] / c0[j]`.
    pub ratios: Vec<Vec<f64>>,
}

pub fn compare(reports: &[LikelihoodReport]) -> Result<Ranking> {
    if let Some(first) = reports.first() {
        for r in &reports[1..] {
            if r.t != first.t || r.stream_hash != first.stream_hash || r.scope != first.scope {
                return Err(Error::IncomparableReports(format!(
                    "t={} stream={} scope={} vs t={} stream={} scope={}",
                    first.t,
                    first.stream_hash,
                    first.scope.as_str(),
                    r.t,
                    r.stream_hash,
                    r.scope.as_str()
                )));
            }
        }
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&i, &j| reports[j].c0.total_cmp(&reports[i].c0));
    let ratios = reports.iter().map(|a| reports.iter().map(|b| a.c0 / b.c0).collect()).collect();
    Ok(Ranking { order, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::build_graph;
    use crate::graph::NodeId;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn spec(s: &str) -> ModelSpec {
        s.parse().unwrap()
    }

    fn k2() -> EvolvingGraph {
        build_graph(&[EdgeEvent::new_node(vec![n(0)], 0)]).unwrap()
    }

    #[test]
    fn hand_computed_degree_stream() {
        let events = vec![EdgeEvent::new_node(vec![n(0)], 0), EdgeEvent::new_node(vec![n(2)], 1)];
        let r = sequence_log_likelihood(&SpecPair::same(spec("degree")), &k2(), &events).unwrap();
        assert_eq!(r.t, 2);
        assert!((r.log_likelihood - (1.0f64 / 8.0).ln()).abs() < 1e-12);
        assert!((r.null_log_likelihood - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((r.c0 - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((r.deviance + 2.0 * r.log_likelihood).abs() < 1e-15);
        assert_eq!(r.parameters, 0);
    }

    #[test]
    fn null_spec_gives_unit_c0() {
        let events = vec![
            EdgeEvent::new_node(vec![n(0), n(1)], 0),
            EdgeEvent::new_node(vec![n(2)], 1),
            EdgeEvent::internal(n(1), n(3), 2),
        ];
        let r = sequence_log_likelihood(&SpecPair::null(), &k2(), &events[..1]).unwrap();
        assert_eq!(r.c0, 1.0);
        let r = sequence_log_likelihood(&SpecPair::null(), &k2(), &events).unwrap();
        assert_eq!(r.log_likelihood, r.null_log_likelihood);
        assert_eq!(r.c0, 1.0);
    }

    #[test]
    fn single_step() {
        // path of four nodes, null model
        let g = build_graph(&[
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::new_node(vec![n(1)], 1),
            EdgeEvent::new_node(vec![n(2)], 2),
        ])
        .unwrap();
        let ev = EdgeEvent::new_node(vec![n(3)], 3);
        let (ll, c) = step_log_likelihood(&SpecPair::null(), &g, &ev, EdgeMode::Unordered).unwrap();
        assert_eq!(c, 1);
        assert!((ll - 0.25f64.ln()).abs() < 1e-15);

        let star = build_graph(&[
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::new_node(vec![n(0)], 1),
            EdgeEvent::new_node(vec![n(0)], 2),
        ])
        .unwrap();
        let ev = EdgeEvent::new_node(vec![n(0)], 3);
        let (ll, _) = step_log_likelihood(&SpecPair::same(spec("degree")), &star, &ev, EdgeMode::Unordered).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_events_are_collected() {
        // recent(1) only ever allows the last selected node
        let events = vec![
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::new_node(vec![n(1)], 1),
            EdgeEvent::new_node(vec![n(0)], 2),
            EdgeEvent::new_node(vec![n(0)], 3),
        ];
        let g0 = EvolvingGraph::with_root();
        let r = sequence_log_likelihood(&SpecPair::same(spec("recent(1)")), &g0, &events).unwrap();
        assert_eq!(r.log_likelihood, f64::NEG_INFINITY);
        assert_eq!(r.c0, 0.0);
        // event 0: empty window falls back to uniform over one node
        assert_eq!(r.zero_probability_events, vec![1, 2]);
    }

    #[test]
    fn scoring_precedes_application() {
        // degree-based probability computed on the post-event graph differs
        let star = build_graph(&[EdgeEvent::new_node(vec![n(0)], 0), EdgeEvent::new_node(vec![n(0)], 1)]).unwrap();
        let ev = EdgeEvent::new_node(vec![n(1)], 2);
        let specs = SpecPair::same(spec("degree"));
        let r = sequence_log_likelihood(&specs, &star, std::slice::from_ref(&ev)).unwrap();
        let mut after = star.clone();
        ev.apply(&mut after).unwrap();
        let leaked = node_prob(&after, n(1));
        assert!((r.log_likelihood - 0.25f64.ln()).abs() < 1e-15);
        assert!((leaked.ln() - r.log_likelihood).abs() > 1e-3);
    }

    fn node_prob(g: &EvolvingGraph, v: NodeId) -> f64 {
        crate::models::node_probability(&spec("degree"), v, g, &[]).unwrap()
    }

    #[test]
    fn malformed_stream_reports_index() {
        let events = vec![EdgeEvent::new_node(vec![n(0)], 0), EdgeEvent::internal(n(0), n(1), 1)];
        let err = sequence_log_likelihood(&SpecPair::null(), &EvolvingGraph::with_root(), &events).unwrap_err();
        assert!(matches!(err, Error::MalformedStream { index: 1, .. }));
    }

    #[test]
    fn ranking() {
        let base = LikelihoodReport {
            spec_new: "null".into(),
            spec_internal: "null".into(),
            log_likelihood: 0.0,
            null_log_likelihood: 0.0,
            t: 10,
            c0: 1.0,
            deviance: 0.0,
            aic: 0.0,
            parameters: 0,
            zero_probability_events: vec![],
            stream_hash: "abc".into(),
            scope: Scope::All,
        };
        let with_c0 = |c0| LikelihoodReport { c0, ..base.clone() };
        let reports = vec![with_c0(1.31), with_c0(1.0), with_c0(6.24)];
        let r = compare(&reports).unwrap();
        assert_eq!(r.order, vec![2, 0, 1]);
        assert!((r.ratios[2][0] - 6.24 / 1.31).abs() < 1e-12);

        assert_eq!(compare(&reports[..1]).unwrap().order, vec![0]);
        let same = compare(&[base.clone(), base.clone()]).unwrap();
        assert_eq!(same.ratios[0][1], 1.0);

        let other = LikelihoodReport { t: 9, ..base.clone() };
        assert!(matches!(compare(&[base.clone(), other]), Err(Error::IncomparableReports(_))));
        let other = LikelihoodReport { stream_hash: "def".into(), ..base.clone() };
        assert!(compare(&[base, other]).is_err());
    }
}
