//! Growing artificial networks.
//!
//! The outer model decides what happens next (a new node with some number
//! of targets, or an edge between existing nodes); the inner models decide
//! which nodes are involved. Node choices are sampled from exactly the
//! distribution that [`crate::models::node_probability`] scores, so a grown
//! stream can be fed straight back into the likelihood engine.

use std::collections::BTreeMap;

use log::debug;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::events::{EdgeEvent, EventKind};
use crate::fenwick::Fenwick;
use crate::graph::{EdgeDelta, EvolvingGraph, NodeId};
use crate::likelihood::SpecPair;
use crate::models::{pfp_weight, Component, Exclusion, ModelSpec};

/// Updates between exact rebuilds of floating-point PFP trees.
const REBUILD_INTERVAL: usize = 1 << 16;
/// Rejection attempts before an exact scan of the choice set.
const MAX_REJECTIONS: usize = 64;

/// Discrete distribution over non-negative integers.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    probs: BTreeMap<usize, f64>,
}

impl CountDistribution {
    pub fn new(probs: BTreeMap<usize, f64>) -> Result<Self> {
        let sum: f64 = probs.values().sum();
        if probs.is_empty() || probs.values().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("count distribution must sum to 1, got {sum}")));
        }
        Ok(CountDistribution { probs })
    }

    /// Normalised histogram of `counts`.
    pub fn from_counts(counts: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
        let mut total = 0usize;
        for c in counts {
            *hist.entry(c).or_default() += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::EmptyStream);
        }
        Self::new(hist.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect())
    }

    pub fn point(value: usize) -> Self {
        CountDistribution { probs: BTreeMap::from([(value, 1.0)]) }
    }

    pub fn probability(&self, value: usize) -> f64 {
        self.probs.get(&value).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().map(|(&k, &p)| (k, p))
    }

    pub fn min_value(&self) -> usize {
        *self.probs.keys().next().expect("non-empty")
    }

    fn sampler(&self) -> (Vec<usize>, WeightedIndex<f64>) {
        let values: Vec<usize> = self.probs.keys().copied().collect();
        let index = WeightedIndex::new(self.probs.values().copied()).expect("validated distribution");
        (values, index)
    }
}

/// One step of the outer model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterOp {
    NewNode(usize),
    Internal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OuterModel {
    /// The observed sequence of operations with their choices stripped.
    Replay(Vec<OuterOp>),
    /// A new node with a sampled number of targets, followed by a sampled
    /// number of internal edges.
    Empirical { targets: CountDistribution, internal: CountDistribution },
}

impl OuterModel {
    pub fn replay_from(events: &[EdgeEvent]) -> Self {
        OuterModel::Replay(
            events
                .iter()
                .map(|ev| match &ev.kind {
                    EventKind::NewNode { targets } => OuterOp::NewNode(targets.len()),
                    EventKind::InternalEdge { .. } => OuterOp::Internal,
                })
                .collect(),
        )
    }

    pub fn empirical(targets: CountDistribution, internal: CountDistribution) -> Result<Self> {
        if targets.min_value() == 0 {
            return Err(Error::Config("a new node needs at least one target".into()));
        }
        Ok(OuterModel::Empirical { targets, internal })
    }
}

/// Empirical outer model: the distribution of target counts of new nodes,
/// and of the number of internal edges following each new node (up to the
/// next one). Internal edges before the first new node are not counted.
pub fn empirical_outer_from(events: &[EdgeEvent]) -> Result<OuterModel> {
    let mut targets = Vec::new();
    let mut internal = Vec::new();
    for ev in events {
        match &ev.kind {
            EventKind::NewNode { targets: t } => {
                targets.push(t.len());
                internal.push(0);
            }
            EventKind::InternalEdge { .. } => {
                if let Some(last) = internal.last_mut() {
                    *last += 1;
                }
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::EmptyStream);
    }
    OuterModel::empirical(CountDistribution::from_counts(targets)?, CountDistribution::from_counts(internal)?)
}

#[derive(Debug, Clone)]
struct Track {
    component: Component,
    // None for null and recency components
    tree: Option<Fenwick>,
    pfp_table: Vec<f64>,
    updates: usize,
}

impl Track {
    fn new(component: Component, g: &EvolvingGraph) -> Self {
        let mut t = Track { component, tree: None, pfp_table: Vec::new(), updates: 0 };
        if !matches!(component, Component::Null | Component::Recent(_)) {
            let weights = g.nodes().map(|n| t.weight(g, n)).collect();
            t.tree = Some(Fenwick::from_weights(weights));
        }
        t
    }

    fn weight(&mut self, g: &EvolvingGraph, n: NodeId) -> f64 {
        let d = g.degree(n);
        match self.component {
            Component::Null => 1.0,
            Component::Degree => d as f64,
            Component::Triangle => g.triangles(n) as f64,
            Component::Singleton => (d == 1) as u8 as f64,
            Component::Doubleton => (d == 2) as u8 as f64,
            Component::Recent(w) => g.is_recent(w, n) as u8 as f64,
            Component::Pfp(delta) => {
                while self.pfp_table.len() <= d {
                    let k = self.pfp_table.len();
                    self.pfp_table.push(pfp_weight(k, delta));
                }
                self.pfp_table[d]
            }
        }
    }

    fn refresh(&mut self, g: &EvolvingGraph, n: NodeId) {
        let w = self.weight(g, n);
        if let Some(tree) = &mut self.tree {
            while tree.len() <= n.index() {
                tree.push(0.0);
            }
            tree.set(n.index(), w);
        }
    }

    fn on_edge(&mut self, g: &EvolvingGraph, delta: &EdgeDelta) {
        if self.tree.is_none() {
            return;
        }
        self.refresh(g, delta.a);
        self.refresh(g, delta.b);
        if self.component == Component::Triangle {
            for &x in &delta.common {
                self.refresh(g, x);
            }
        }
        if let Component::Pfp(_) = self.component {
            self.updates += 1;
            if self.updates >= REBUILD_INTERVAL {
                self.tree.as_mut().expect("tree").rebuild();
                self.updates = 0;
            }
        }
    }

    /// Weight of the choice set, `None` if empty.
    fn restricted_total(&self, g: &EvolvingGraph, excl: &Exclusion<'_>) -> Option<f64> {
        let z = match (&self.component, &self.tree) {
            (Component::Recent(w), _) => g.recent_set(*w).into_iter().filter(|&n| !excl.contains(g, n)).count() as f64,
            (_, None) => (g.node_count() - excl.len(g)) as f64,
            (_, Some(tree)) => {
                let total = tree.total();
                if total <= 0.0 {
                    return None;
                }
                let mut removed = 0.0;
                excl.for_each(g, |x| removed += tree.value(x.index()));
                let z = total - removed;
                if z <= total * 1e-12 {
                    return None;
                }
                z
            }
        };
        (z > 0.0).then_some(z)
    }

    fn sample<R: Rng>(&self, g: &EvolvingGraph, excl: &Exclusion<'_>, rng: &mut R) -> NodeId {
        match (&self.component, &self.tree) {
            (Component::Recent(w), _) => {
                let support: Vec<NodeId> = g.recent_set(*w).into_iter().filter(|&n| !excl.contains(g, n)).collect();
                support[rng.gen_range(0..support.len())]
            }
            (_, None) => sample_uniform(g, excl, rng),
            (_, Some(tree)) => {
                let total = tree.total();
                for _ in 0..MAX_REJECTIONS {
                    let i = tree.find(rng.gen::<f64>() * total);
                    let n = NodeId::from(i);
                    if tree.value(i) > 0.0 && !excl.contains(g, n) {
                        return n;
                    }
                }
                // most of the mass is excluded: exact draw over the choice set
                let candidates: Vec<(NodeId, f64)> = g
                    .nodes()
                    .filter(|&n| !excl.contains(g, n))
                    .map(|n| (n, tree.value(n.index())))
                    .filter(|&(_, w)| w > 0.0)
                    .collect();
                let z: f64 = candidates.iter().map(|&(_, w)| w).sum();
                let mut u = rng.gen::<f64>() * z;
                for &(n, w) in &candidates {
                    if u < w {
                        return n;
                    }
                    u -= w;
                }
                candidates.last().expect("non-empty support").0
            }
        }
    }
}

fn sample_uniform<R: Rng>(g: &EvolvingGraph, excl: &Exclusion<'_>, rng: &mut R) -> NodeId {
    let n = g.node_count();
    for _ in 0..MAX_REJECTIONS {
        let v = NodeId::from(rng.gen_range(0..n));
        if !excl.contains(g, v) {
            return v;
        }
    }
    let candidates: Vec<NodeId> = g.nodes().filter(|&v| !excl.contains(g, v)).collect();
    candidates[rng.gen_range(0..candidates.len())]
}

/// Cumulative weight structures for every component of one or more specs,
/// kept in step with a growing graph.
#[derive(Debug, Clone, Default)]
pub struct Sampler {
    tracks: Vec<Track>,
}

impl Sampler {
    pub fn new<'a>(components: impl IntoIterator<Item = &'a Component>, g: &EvolvingGraph) -> Self {
        let mut s = Sampler::default();
        for c in components {
            if !s.tracks.iter().any(|t| t.component.key() == c.key()) {
                s.tracks.push(Track::new(*c, g));
            }
        }
        s
    }

    /// Must be called after every `g.add_edge`.
    pub fn on_edge(&mut self, g: &EvolvingGraph, delta: &EdgeDelta) {
        for t in &mut self.tracks {
            t.on_edge(g, delta);
        }
    }

    fn track(&self, c: &Component) -> &Track {
        self.tracks.iter().find(|t| t.component.key() == c.key()).expect("component registered with the sampler")
    }

    /// Draws a node with probability `node_probability(spec, ., g, excl)`:
    /// a term is picked with its renormalised weight, then a node within
    /// that component's support.
    pub fn sample<R: Rng>(
        &self,
        spec: &ModelSpec,
        g: &EvolvingGraph,
        excl: &Exclusion<'_>,
        rng: &mut R,
    ) -> Result<NodeId> {
        if g.node_count() <= excl.len(g) {
            return Err(Error::EmptyChoiceSet);
        }
        let mut active: Vec<(f64, &Track)> = Vec::with_capacity(spec.terms().len());
        let mut beta_sum = 0.0;
        for term in spec.terms() {
            if term.beta == 0.0 {
                continue;
            }
            let track = self.track(&term.component);
            if track.restricted_total(g, excl).is_some() {
                beta_sum += term.beta;
                active.push((term.beta, track));
            }
        }
        if active.is_empty() {
            return Ok(sample_uniform(g, excl, rng));
        }
        let mut u = rng.gen::<f64>() * beta_sum;
        let mut chosen = active[active.len() - 1].1;
        for &(beta, track) in &active {
            if u < beta {
                chosen = track;
                break;
            }
            u -= beta;
        }
        Ok(chosen.sample(g, excl, rng))
    }
}

/// Draws one node from `spec` over all nodes of `g` except `excluded`.
pub fn sample_node<R: Rng>(spec: &ModelSpec, g: &EvolvingGraph, excluded: &[NodeId], rng: &mut R) -> Result<NodeId> {
    Sampler::new(spec.components(), g).sample(spec, g, &Exclusion::Nodes(excluded), rng)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GrowOptions {
    /// Fail with [`Error::Stuck`] instead of skipping an internal edge when
    /// the graph is complete.
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub struct GrowthResult {
    pub graph: EvolvingGraph,
    /// Events appended to the starting graph.
    pub events: Vec<EdgeEvent>,
    pub rng_seed: u64,
    /// Internal-edge operations skipped because the graph was complete.
    pub skipped_internal: usize,
}

pub fn grow(
    g0: &EvolvingGraph,
    outer: &OuterModel,
    specs: &SpecPair,
    target_edges: usize,
    seed: u64,
) -> Result<GrowthResult> {
    grow_with(g0, outer, specs, target_edges, seed, GrowOptions::default())
}

/// Grows `g0` until it has `target_edges` edges. A final new node is given
/// fewer targets if needed to land exactly on the target.
pub fn grow_with(
    g0: &EvolvingGraph,
    outer: &OuterModel,
    specs: &SpecPair,
    target_edges: usize,
    seed: u64,
    opts: GrowOptions,
) -> Result<GrowthResult> {
    specs.new_node.validate()?;
    specs.internal.validate()?;
    if g0.node_count() == 0 || !g0.is_connected() {
        return Err(Error::Config("starting graph must be non-empty and connected".into()));
    }
    if target_edges <= g0.edge_count() {
        return Err(Error::Config(format!(
            "target of {target_edges} edges does not exceed the starting graph's {}",
            g0.edge_count()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = g0.clone();
    let mut sampler = Sampler::new(specs.new_node.components().chain(specs.internal.components()), &g);
    let mut events = Vec::new();
    let mut skipped = 0usize;

    let mut replay = match outer {
        OuterModel::Replay(ops) => Some(ops.iter()),
        OuterModel::Empirical { .. } => None,
    };
    let empirical = match outer {
        OuterModel::Empirical { targets, internal } => Some((targets.sampler(), internal.sampler())),
        OuterModel::Replay(_) => None,
    };
    let mut pending_internal = 0usize;

    while g.edge_count() < target_edges {
        let op = if let Some(ops) = replay.as_mut() {
            match ops.next() {
                Some(&op) => op,
                None => return Err(Error::Exhausted { produced: g.edge_count(), target: target_edges }),
            }
        } else if pending_internal > 0 {
            pending_internal -= 1;
            OuterOp::Internal
        } else {
            let ((tv, ti), (iv, ii)) = empirical.as_ref().expect("empirical outer model");
            let k = tv[ti.sample(&mut rng)];
            pending_internal = iv[ii.sample(&mut rng)];
            OuterOp::NewNode(k)
        };

        let ev = match op {
            OuterOp::NewNode(k) => {
                let k = k.min(g.node_count()).min(target_edges - g.edge_count());
                let mut targets: Vec<NodeId> = Vec::with_capacity(k);
                for _ in 0..k {
                    let t = sampler.sample(&specs.new_node, &g, &Exclusion::Nodes(&targets), &mut rng)?;
                    targets.push(t);
                }
                EdgeEvent::new_node(targets, events.len())
            }
            OuterOp::Internal => {
                if g.is_complete() {
                    if opts.strict {
                        return Err(Error::Stuck { nodes: g.node_count() });
                    }
                    debug!("skipping internal edge: graph with {} nodes is complete", g.node_count());
                    skipped += 1;
                    continue;
                }
                let saturated = g.saturated_nodes();
                let a = sampler.sample(&specs.internal, &g, &Exclusion::Nodes(&saturated), &mut rng)?;
                let b = sampler.sample(&specs.internal, &g, &Exclusion::Closed(a), &mut rng)?;
                EdgeEvent::internal(a, b, events.len())
            }
        };
        ev.apply_with(&mut g, |g, d| sampler.on_edge(g, d))?;
        events.push(ev);
    }

    Ok(GrowthResult { graph: g, events, rng_seed: seed, skipped_internal: skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{build_graph, replay};

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn star3() -> EvolvingGraph {
        build_graph(&[
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::new_node(vec![n(0)], 1),
            EdgeEvent::new_node(vec![n(0)], 2),
        ])
        .unwrap()
    }

    #[test]
    fn empirical_outer_histograms() {
        let ones: Vec<EdgeEvent> = (0..10).map(|i| EdgeEvent::new_node(vec![n(0)], i)).collect();
        let OuterModel::Empirical { targets, internal } = empirical_outer_from(&ones).unwrap() else { panic!() };
        assert_eq!(targets, CountDistribution::point(1));
        assert_eq!(internal, CountDistribution::point(0));

        let ab: Vec<EdgeEvent> = (0..5).map(|i| EdgeEvent::new_node(vec![n(0), n(1), n(2)], i)).collect();
        let OuterModel::Empirical { targets, .. } = empirical_outer_from(&ab).unwrap() else { panic!() };
        assert_eq!(targets.probability(3), 1.0);

        let mixed = vec![
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::internal(n(0), n(1), 1),
            EdgeEvent::new_node(vec![n(0), n(1)], 2),
        ];
        let OuterModel::Empirical { targets, internal } = empirical_outer_from(&mixed).unwrap() else { panic!() };
        assert_eq!((targets.probability(1), targets.probability(2)), (0.5, 0.5));
        assert_eq!((internal.probability(1), internal.probability(0)), (0.5, 0.5));

        assert!(matches!(empirical_outer_from(&[EdgeEvent::internal(n(0), n(1), 0)]), Err(Error::EmptyStream)));
    }

    #[test]
    fn one_more_edge_is_one_event() {
        let g0 = star3();
        let outer = OuterModel::empirical(CountDistribution::point(2), CountDistribution::point(1)).unwrap();
        let r = grow(&g0, &outer, &SpecPair::null(), g0.edge_count() + 1, 3).unwrap();
        assert_eq!(r.events.len(), 1);
        assert_eq!(r.graph.edge_count(), 4);
    }

    #[test]
    fn growth_is_deterministic_and_replays() {
        let g0 = star3();
        let spec: ModelSpec = "0.5*degree + 0.3*recent(2) + 0.2*singleton".parse().unwrap();
        let outer = OuterModel::empirical(
            CountDistribution::new(BTreeMap::from([(1, 0.5), (2, 0.5)])).unwrap(),
            CountDistribution::new(BTreeMap::from([(0, 0.5), (1, 0.5)])).unwrap(),
        )
        .unwrap();
        let specs = SpecPair::same(spec);
        let a = grow(&g0, &outer, &specs, 400, 11).unwrap();
        let b = grow(&g0, &outer, &specs, 400, 11).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.graph.fingerprint(), b.graph.fingerprint());
        assert_eq!(a.graph.edge_count(), 400);
        let mut again = g0.clone();
        replay(&mut again, &a.events).unwrap();
        assert_eq!(again.fingerprint(), a.graph.fingerprint());
        assert!(a.graph.is_connected());
    }

    #[test]
    fn replay_outer_model() {
        let g0 = star3();
        let skeleton = OuterModel::Replay(vec![OuterOp::NewNode(2), OuterOp::Internal, OuterOp::NewNode(1)]);
        let r = grow(&g0, &skeleton, &SpecPair::same("degree".parse().unwrap()), 7, 1).unwrap();
        assert_eq!(r.events.len(), 3);
        assert!(matches!(r.events[1].kind, EventKind::InternalEdge { .. }));
        assert!(matches!(
            grow(&g0, &skeleton, &SpecPair::null(), 8, 1),
            Err(Error::Exhausted { produced: 7, target: 8 })
        ));
    }

    #[test]
    fn complete_graph_skips_or_fails() {
        let k3 = build_graph(&[EdgeEvent::new_node(vec![n(0)], 0), EdgeEvent::new_node(vec![n(0), n(1)], 1)]).unwrap();
        let skeleton = OuterModel::Replay(vec![OuterOp::Internal, OuterOp::NewNode(1)]);
        let r = grow(&k3, &skeleton, &SpecPair::null(), 4, 0).unwrap();
        assert_eq!(r.skipped_internal, 1);
        assert_eq!(r.events.len(), 1);
        let strict = grow_with(&k3, &skeleton, &SpecPair::null(), 4, 0, GrowOptions { strict: true });
        assert!(matches!(strict, Err(Error::Stuck { nodes: 3 })));
    }

    #[test]
    fn single_singleton_is_always_chosen() {
        // path 0-1-2 plus 3 attached to 1 and 2: only node 0 has degree 1
        let g = build_graph(&[
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::new_node(vec![n(1)], 1),
            EdgeEvent::new_node(vec![n(1), n(2)], 2),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = ModelSpec::pure(Component::Singleton);
        for _ in 0..200 {
            assert_eq!(sample_node(&spec, &g, &[], &mut rng).unwrap(), n(0));
        }
        let all: Vec<NodeId> = g.nodes().collect();
        assert!(matches!(sample_node(&spec, &g, &all, &mut rng), Err(Error::EmptyChoiceSet)));
    }

    #[test]
    fn bad_growth_requests() {
        let g0 = star3();
        let outer = OuterModel::empirical(CountDistribution::point(1), CountDistribution::point(0)).unwrap();
        assert!(grow(&g0, &outer, &SpecPair::null(), 3, 0).is_err());
        assert!(OuterModel::empirical(CountDistribution::point(0), CountDistribution::point(0)).is_err());
    }
}
