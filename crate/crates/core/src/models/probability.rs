use crate::error::{Error, Result};
use crate::graph::{EvolvingGraph, NodeId};

use super::{Component, ModelSpec, WeightSums};

/// Nodes removed from the choice set of a draw.
#[derive(Debug, Clone, Copy)]
pub enum Exclusion<'a> {
    None,
    /// Distinct nodes.
    Nodes(&'a [NodeId]),
    /// A node together with all its neighbours.
    Closed(NodeId),
}

impl Exclusion<'_> {
    #[inline]
    pub fn contains(&self, g: &EvolvingGraph, n: NodeId) -> bool {
        match *self {
            Exclusion::None => false,
            Exclusion::Nodes(list) => list.contains(&n),
            Exclusion::Closed(a) => a == n || g.has_edge(a, n),
        }
    }

    pub fn len(&self, g: &EvolvingGraph) -> usize {
        match *self {
            Exclusion::None => 0,
            Exclusion::Nodes(list) => list.len(),
            Exclusion::Closed(a) => 1 + g.degree(a),
        }
    }

    pub fn is_empty(&self, g: &EvolvingGraph) -> bool {
        self.len(g) == 0
    }

    pub fn for_each(&self, g: &EvolvingGraph, mut f: impl FnMut(NodeId)) {
        match *self {
            Exclusion::None => {}
            Exclusion::Nodes(list) => list.iter().copied().for_each(f),
            Exclusion::Closed(a) => {
                f(a);
                g.neighbors(a).iter().copied().for_each(f);
            }
        }
    }
}

/// How an observed internal edge is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeMode {
    /// Both draw orders are summed; the edge is unordered.
    #[default]
    Unordered,
    /// The recorded first endpoint is the first draw.
    Ordered,
}

/// A spec whose PFP terms are bound to running sums in a [`WeightSums`].
#[derive(Debug, Clone)]
pub struct ResolvedSpec {
    pub(crate) terms: Vec<(f64, Component, Option<usize>)>,
}

impl ResolvedSpec {
    pub fn new(spec: &ModelSpec, sums: &mut WeightSums, g: &EvolvingGraph) -> Self {
        let terms = spec.terms().iter().map(|t| (t.beta, t.component, sums.slot(&t.component, g))).collect();
        ResolvedSpec { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Normaliser of one component over the choice set, or `None` when the
/// component has no support there.
#[inline]
pub(crate) fn restricted_total(
    c: &Component,
    slot: Option<usize>,
    sums: &WeightSums,
    g: &EvolvingGraph,
    excl: &Exclusion<'_>,
) -> Option<f64> {
    let z = match *c {
        // support is the short recency window; count it directly
        Component::Recent(w) => g.recent_set(w).into_iter().filter(|&n| !excl.contains(g, n)).count() as f64,
        Component::Null => (g.node_count() - excl.len(g)) as f64,
        _ => {
            let total = sums.total_at(c, slot, g);
            if total <= 0.0 {
                return None;
            }
            let mut removed = 0.0;
            excl.for_each(g, |x| removed += sums.weight_at(c, slot, g, x));
            let z = total - removed;
            // PFP sums carry rounding from incremental updates
            if z <= total * 1e-12 {
                return None;
            }
            z
        }
    };
    (z > 0.0).then_some(z)
}

pub(crate) fn choice_set_size(g: &EvolvingGraph, excl: &Exclusion<'_>) -> Result<usize> {
    let n = g.node_count().saturating_sub(excl.len(g));
    if n == 0 {
        Err(Error::EmptyChoiceSet)
    } else {
        Ok(n)
    }
}

/// Mixture probability of `node`. Terms whose component has no support in
/// the choice set are dropped and the remaining weights renormalised; with
/// no surviving term the choice is uniform.
pub(crate) fn mixture_probability(
    spec: &ResolvedSpec,
    sums: &WeightSums,
    g: &EvolvingGraph,
    node: NodeId,
    excl: &Exclusion<'_>,
) -> Result<f64> {
    let size = choice_set_size(g, excl)?;
    if excl.contains(g, node) {
        return Ok(0.0);
    }
    let mut beta_sum = 0.0;
    let mut acc = 0.0;
    for &(beta, ref c, slot) in &spec.terms {
        if beta == 0.0 {
            continue;
        }
        if let Some(z) = restricted_total(c, slot, sums, g, excl) {
            beta_sum += beta;
            acc += beta * (sums.weight_at(c, slot, g, node) / z);
        }
    }
    if beta_sum > 0.0 {
        Ok(acc / beta_sum)
    } else {
        Ok(1.0 / size as f64)
    }
}

pub(crate) fn check_absent_edge(g: &EvolvingGraph, a: NodeId, b: NodeId) -> Result<()> {
    g.check_node(a)?;
    g.check_node(b)?;
    if a == b {
        return Err(Error::SelfLoop(a));
    }
    if g.has_edge(a, b) {
        return Err(Error::DuplicateEdge(a, b));
    }
    Ok(())
}

/// Probability of the internal edge `{a, b}` under the two-draw mechanism:
/// the first endpoint is drawn from nodes that still have a non-neighbour,
/// the second from nodes that are neither the first nor adjacent to it.
pub(crate) fn mixture_edge_probability(
    spec: &ResolvedSpec,
    sums: &WeightSums,
    g: &EvolvingGraph,
    a: NodeId,
    b: NodeId,
    mode: EdgeMode,
) -> Result<f64> {
    check_absent_edge(g, a, b)?;
    let saturated = g.saturated_nodes();
    let first = Exclusion::Nodes(&saturated);
    let forward =
        mixture_probability(spec, sums, g, a, &first)? * mixture_probability(spec, sums, g, b, &Exclusion::Closed(a))?;
    match mode {
        EdgeMode::Ordered => Ok(forward),
        EdgeMode::Unordered => {
            let backward = mixture_probability(spec, sums, g, b, &first)?
                * mixture_probability(spec, sums, g, a, &Exclusion::Closed(b))?;
            Ok(forward + backward)
        }
    }
}

/// Unnormalised weight of `node` under `c`, computed directly.
pub fn component_weight(c: &Component, node: NodeId, g: &EvolvingGraph) -> Result<f64> {
    g.check_node(node)?;
    Ok(WeightSums::default().weight_at(c, None, g, node))
}

/// Probability that `spec` selects `node` from all nodes except `excluded`.
///
/// This builds the normalisers from the graph's counters on each call; the
/// likelihood engine keeps them incrementally instead.
pub fn node_probability(spec: &ModelSpec, node: NodeId, g: &EvolvingGraph, excluded: &[NodeId]) -> Result<f64> {
    g.check_node(node)?;
    let mut sums = WeightSums::default();
    let resolved = ResolvedSpec::new(spec, &mut sums, g);
    mixture_probability(&resolved, &sums, g, node, &Exclusion::Nodes(excluded))
}

/// Probability that `spec` creates the absent internal edge `{a, b}`.
pub fn edge_probability(spec: &ModelSpec, a: NodeId, b: NodeId, g: &EvolvingGraph, mode: EdgeMode) -> Result<f64> {
    let mut sums = WeightSums::default();
    let resolved = ResolvedSpec::new(spec, &mut sums, g);
    mixture_edge_probability(&resolved, &sums, g, a, b, mode)
}
