use crate::graph::{EdgeDelta, EvolvingGraph, NodeId};

use super::Component;

/// Edges between exact recomputations of the PFP running sums.
const RESYNC_INTERVAL: usize = 1 << 16;

/// `d^(1 + delta * log10 d)`, zero for an unconnected node.
pub fn pfp_weight(degree: usize, delta: f64) -> f64 {
    match degree {
        0 => 0.0,
        1 => 1.0,
        d => {
            let d = d as f64;
            d.powf(1.0 + delta * d.log10())
        }
    }
}

#[derive(Debug, Clone)]
struct PfpSum {
    delta: f64,
    // table[d] = pfp_weight(d, delta)
    table: Vec<f64>,
    total: f64,
}

impl PfpSum {
    fn new(delta: f64, g: &EvolvingGraph) -> Self {
        let mut s = PfpSum { delta, table: Vec::new(), total: 0.0 };
        s.extend(g.max_degree() + 1);
        s.resync(g);
        s
    }

    fn extend(&mut self, len: usize) {
        while self.table.len() < len {
            let d = self.table.len();
            self.table.push(pfp_weight(d, self.delta));
        }
    }

    fn resync(&mut self, g: &EvolvingGraph) {
        self.total = g.degree_histogram().map(|(d, count)| count as f64 * self.table[d]).sum();
    }
}

/// Normalising constants of every tracked component.
///
/// Totals for the null, degree, triangle, singleton and doubleton components
/// are exact integers read off the graph's counters. PFP sums depend on the
/// exponent and are carried here, updated by `new - old` weight on each
/// degree change and recomputed exactly from the degree histogram every
/// 2^16 edges. Recency totals are computed on demand from the (short)
/// selection window.
#[derive(Debug, Clone, Default)]
pub struct WeightSums {
    pfp: Vec<PfpSum>,
    since_resync: usize,
}

impl WeightSums {
    pub fn new<'a>(components: impl IntoIterator<Item = &'a Component>, g: &EvolvingGraph) -> Self {
        let mut sums = WeightSums::default();
        for c in components {
            sums.slot(c, g);
        }
        sums
    }

    /// Index of the running sum backing `c`, created if missing. Only PFP
    /// components have one.
    pub fn slot(&mut self, c: &Component, g: &EvolvingGraph) -> Option<usize> {
        let Component::Pfp(delta) = *c else { return None };
        let bits = (delta + 0.0).to_bits();
        if let Some(i) = self.pfp.iter().position(|p| (p.delta + 0.0).to_bits() == bits) {
            return Some(i);
        }
        self.pfp.push(PfpSum::new(delta, g));
        Some(self.pfp.len() - 1)
    }

    #[inline]
    pub(crate) fn weight_at(&self, c: &Component, slot: Option<usize>, g: &EvolvingGraph, n: NodeId) -> f64 {
        match *c {
            Component::Null => 1.0,
            Component::Degree => g.degree(n) as f64,
            Component::Triangle => g.triangles(n) as f64,
            Component::Singleton => (g.degree(n) == 1) as u8 as f64,
            Component::Doubleton => (g.degree(n) == 2) as u8 as f64,
            Component::Recent(w) => g.is_recent(w, n) as u8 as f64,
            Component::Pfp(delta) => match slot {
                Some(i) => self.pfp[i].table[g.degree(n)],
                None => pfp_weight(g.degree(n), delta),
            },
        }
    }

    #[inline]
    pub(crate) fn total_at(&self, c: &Component, slot: Option<usize>, g: &EvolvingGraph) -> f64 {
        match *c {
            Component::Null => g.node_count() as f64,
            Component::Degree => (2 * g.edge_count()) as f64,
            Component::Triangle => g.triangle_sum() as f64,
            Component::Singleton => g.degree_count(1) as f64,
            Component::Doubleton => g.degree_count(2) as f64,
            Component::Recent(w) => g.recent_set(w).len() as f64,
            Component::Pfp(delta) => match slot {
                Some(i) => self.pfp[i].total,
                None => g.degree_histogram().map(|(d, count)| count as f64 * pfp_weight(d, delta)).sum(),
            },
        }
    }

    /// Unnormalised weight of `n` under `c`.
    pub fn weight(&self, c: &Component, g: &EvolvingGraph, n: NodeId) -> f64 {
        self.weight_at(c, self.find(c), g, n)
    }

    /// Sum of weights over all nodes.
    pub fn total(&self, c: &Component, g: &EvolvingGraph) -> f64 {
        self.total_at(c, self.find(c), g)
    }

    fn find(&self, c: &Component) -> Option<usize> {
        let Component::Pfp(delta) = *c else { return None };
        let bits = (delta + 0.0).to_bits();
        self.pfp.iter().position(|p| (p.delta + 0.0).to_bits() == bits)
    }

    /// Must be called after `g.add_edge` returned `delta`.
    pub fn on_edge(&mut self, g: &EvolvingGraph, delta: &EdgeDelta) {
        let da = g.degree(delta.a);
        let db = g.degree(delta.b);
        let need = da.max(db) + 1;
        for p in &mut self.pfp {
            p.extend(need);
            p.total += (p.table[da] - p.table[da - 1]) + (p.table[db] - p.table[db - 1]);
        }
        self.since_resync += 1;
        if self.since_resync >= RESYNC_INTERVAL {
            self.resync(g);
        }
    }

    pub fn resync(&mut self, g: &EvolvingGraph) {
        for p in &mut self.pfp {
            p.extend(g.max_degree() + 1);
            p.resync(g);
        }
        self.since_resync = 0;
    }
}
