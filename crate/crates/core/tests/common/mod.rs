//! Test-only reference implementations. Everything here is recomputed from
//! a plain adjacency-set graph on every call, sharing no code with the
//! incremental engine beyond the public event and spec types.

#![allow(dead_code)]

use std::collections::BTreeSet;

use netevo::models::Term;
use netevo::{Component, EdgeEvent, EdgeMode, EventKind, ModelSpec, NodeId};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Naive {
    pub adj: Vec<BTreeSet<u32>>,
    pub log: Vec<u32>,
}

impl Naive {
    pub fn root() -> Self {
        Naive { adj: vec![BTreeSet::new()], log: Vec::new() }
    }

    pub fn from_events(events: &[EdgeEvent]) -> Self {
        let mut g = Naive::root();
        for ev in events {
            g.apply(ev);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.adj[a as usize].contains(&b)
    }

    pub fn triangles(&self, v: u32) -> u64 {
        let nb: Vec<u32> = self.adj[v as usize].iter().copied().collect();
        let mut t = 0;
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                if self.has_edge(nb[i], nb[j]) {
                    t += 1;
                }
            }
        }
        t
    }

    pub fn apply(&mut self, ev: &EdgeEvent) {
        match &ev.kind {
            EventKind::NewNode { targets } => {
                let v = self.adj.len() as u32;
                self.adj.push(BTreeSet::new());
                for t in targets {
                    self.adj[v as usize].insert(t.0);
                    self.adj[t.0 as usize].insert(v);
                }
                self.log.extend(targets.iter().map(|t| t.0));
            }
            &EventKind::InternalEdge { a, b } => {
                self.adj[a.0 as usize].insert(b.0);
                self.adj[b.0 as usize].insert(a.0);
                self.log.push(a.0);
                self.log.push(b.0);
            }
        }
    }

    pub fn is_recent(&self, w: usize, v: u32) -> bool {
        self.log[self.log.len().saturating_sub(w)..].contains(&v)
    }

    pub fn weight(&self, c: &Component, v: u32) -> f64 {
        let d = self.degree(v);
        match *c {
            Component::Null => 1.0,
            Component::Degree => d as f64,
            Component::Triangle => self.triangles(v) as f64,
            Component::Singleton => f64::from(d == 1),
            Component::Doubleton => f64::from(d == 2),
            Component::Recent(w) => f64::from(self.is_recent(w, v)),
            Component::Pfp(delta) => {
                if d == 0 {
                    0.0
                } else {
                    let d = d as f64;
                    d.powf(1.0 + delta * d.log10())
                }
            }
        }
    }

    /// Mixture probability of `v` over `allowed`; terms without support are
    /// dropped and the rest renormalised, uniform if none survive.
    pub fn prob(&self, spec: &ModelSpec, v: u32, allowed: &[u32]) -> f64 {
        if !allowed.contains(&v) {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut mass = 0.0;
        for t in spec.terms() {
            if t.beta == 0.0 {
                continue;
            }
            let z: f64 = allowed.iter().map(|&u| self.weight(&t.component, u)).sum();
            if z > 0.0 {
                mass += t.beta;
                acc += t.beta * self.weight(&t.component, v) / z;
            }
        }
        if mass > 0.0 {
            acc / mass
        } else {
            1.0 / allowed.len() as f64
        }
    }

    pub fn all_except(&self, excluded: &[u32]) -> Vec<u32> {
        (0..self.n() as u32).filter(|v| !excluded.contains(v)).collect()
    }

    /// Two-draw internal edge probability.
    pub fn edge_prob(&self, spec: &ModelSpec, a: u32, b: u32, mode: EdgeMode) -> f64 {
        let unsaturated: Vec<u32> = (0..self.n() as u32).filter(|&v| self.degree(v) < self.n() - 1).collect();
        let second =
            |x: u32| -> Vec<u32> { (0..self.n() as u32).filter(|&v| v != x && !self.has_edge(x, v)).collect() };
        let fwd = self.prob(spec, a, &unsaturated) * self.prob(spec, b, &second(a));
        match mode {
            EdgeMode::Ordered => fwd,
            EdgeMode::Unordered => fwd + self.prob(spec, b, &unsaturated) * self.prob(spec, a, &second(b)),
        }
    }

    pub fn absent_pairs(&self) -> Vec<(u32, u32)> {
        let n = self.n() as u32;
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if !self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Log-likelihood of `events` from this state, scored event by event.
    pub fn log_likelihood(
        &self,
        new_spec: &ModelSpec,
        int_spec: &ModelSpec,
        events: &[EdgeEvent],
        mode: EdgeMode,
    ) -> f64 {
        let mut g = self.clone();
        let mut ll = 0.0;
        for ev in events {
            match &ev.kind {
                EventKind::NewNode { targets } => {
                    for (j, t) in targets.iter().enumerate() {
                        let excl: Vec<u32> = targets[..j].iter().map(|x| x.0).collect();
                        ll += g.prob(new_spec, t.0, &g.all_except(&excl)).ln();
                    }
                }
                &EventKind::InternalEdge { a, b } => ll += g.edge_prob(int_spec, a.0, b.0, mode).ln(),
            }
            g.apply(ev);
        }
        ll
    }

    pub fn sum_degree_sq(&self) -> f64 {
        (0..self.n() as u32).map(|v| (self.degree(v) * self.degree(v)) as f64).sum()
    }

    /// Global transitivity: closed triples over connected triples.
    pub fn clustering(&self) -> f64 {
        let closed: u64 = (0..self.n() as u32).map(|v| self.triangles(v)).sum();
        let triples: usize = (0..self.n() as u32).map(|v| self.degree(v) * self.degree(v).saturating_sub(1) / 2).sum();
        if triples == 0 {
            0.0
        } else {
            closed as f64 / triples as f64
        }
    }

    /// Pearson correlation of the degrees at either end of an edge.
    pub fn assortativity(&self) -> f64 {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (a, nb) in self.adj.iter().enumerate() {
            for &b in nb {
                xs.push(self.degree(a as u32) as f64);
                ys.push(self.degree(b) as f64);
            }
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }
}

/// A random valid stream on at most `max_nodes` nodes.
pub fn random_stream<R: Rng>(rng: &mut R, max_nodes: usize, p_internal: f64, len: usize) -> Vec<EdgeEvent> {
    let mut g = Naive::root();
    let mut out = Vec::new();
    while out.len() < len {
        let absent = g.absent_pairs();
        let internal = g.n() >= 3 && !absent.is_empty() && (g.n() >= max_nodes || rng.gen_bool(p_internal));
        let ev = if internal {
            let &(a, b) = absent.choose(rng).unwrap();
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            EdgeEvent::internal(NodeId(a), NodeId(b), out.len())
        } else if g.n() < max_nodes {
            let k = rng.gen_range(1..=g.n().min(3));
            let mut pool: Vec<u32> = (0..g.n() as u32).collect();
            pool.shuffle(rng);
            EdgeEvent::new_node(pool[..k].iter().map(|&v| NodeId(v)).collect(), out.len())
        } else {
            break;
        };
        g.apply(&ev);
        out.push(ev);
    }
    out
}

pub fn component_pool<R: Rng>(rng: &mut R) -> Vec<Component> {
    vec![
        Component::Null,
        Component::Degree,
        Component::Triangle,
        Component::Singleton,
        Component::Doubleton,
        Component::Recent(rng.gen_range(1..6)),
        Component::Pfp((rng.gen_range(-50..=50) as f64) / 100.0),
    ]
}

/// A mixture of one to four distinct components with random weights.
pub fn random_spec<R: Rng>(rng: &mut R) -> ModelSpec {
    let mut pool = component_pool(rng);
    pool.shuffle(rng);
    let k = rng.gen_range(1..=4);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut betas: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = betas[..k - 1].iter().sum();
    betas[k - 1] = 1.0 - head;
    ModelSpec::new(pool[..k].iter().zip(betas).map(|(&component, beta)| Term { beta, component }).collect())
        .expect("valid random spec")
}

pub fn spec(s: &str) -> ModelSpec {
    s.parse().expect("valid spec")
}
