//! Comparison statistics: fraction of degree-1 and degree-2 nodes, maximum
//! degree, mean square degree, global clustering (transitivity) and degree
//! assortativity.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::events::EdgeEvent;
use crate::graph::{EdgeDelta, EvolvingGraph};

/// Written as a comment line above every trajectory CSV.
pub const CSV_PREAMBLE: &str = "# clustering=global-transitivity assortativity=newman-degree-pearson";
pub const CSV_HEADER: &str = "edges,nodes,d1,d2,maxd,meansqd,clustering,assortativity";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsSnapshot {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub d1_fraction: f64,
    pub d2_fraction: f64,
    pub max_degree: usize,
    pub mean_sq_degree: f64,
    /// 3 x triangles / connected triples; 0 when there are no triples.
    pub clustering: f64,
    /// NaN when the endpoint degrees have zero variance (e.g. regular graphs).
    pub assortativity: f64,
}

impl StatsSnapshot {
    /// Fixed by the outer model, so not a comparison statistic.
    pub fn mean_degree(&self) -> f64 {
        if self.n_nodes == 0 {
            0.0
        } else {
            2.0 * self.n_edges as f64 / self.n_nodes as f64
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n_edges,
            self.n_nodes,
            self.d1_fraction,
            self.d2_fraction,
            self.max_degree,
            self.mean_sq_degree,
            self.clustering,
            self.assortativity
        )
    }

    pub fn from_csv_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return None;
        }
        Some(StatsSnapshot {
            n_edges: f[0].parse().ok()?,
            n_nodes: f[1].parse().ok()?,
            d1_fraction: f[2].parse().ok()?,
            d2_fraction: f[3].parse().ok()?,
            max_degree: f[4].parse().ok()?,
            mean_sq_degree: f[5].parse().ok()?,
            clustering: f[6].parse().ok()?,
            assortativity: f[7].parse().ok()?,
        })
    }

    /// `(name, value)` for each comparison statistic, in CSV column order.
    pub fn statistics(&self) -> [(&'static str, f64); 6] {
        [
            ("d1", self.d1_fraction),
            ("d2", self.d2_fraction),
            ("maxd", self.max_degree as f64),
            ("meansqd", self.mean_sq_degree),
            ("clustering", self.clustering),
            ("assortativity", self.assortativity),
        ]
    }
}

/// Degree moments needed for the assortativity coefficient, kept exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Moments {
    sum_d2: u128,
    sum_d3: u128,
    // sum over edges of the product of endpoint degrees
    sum_edge_product: u128,
}

fn assemble(g: &EvolvingGraph, m: &Moments) -> StatsSnapshot {
    let n = g.node_count();
    let e = g.edge_count();
    let frac = |d: usize| if n == 0 { 0.0 } else { g.degree_count(d) as f64 / n as f64 };
    let triples = (m.sum_d2 - 2 * e as u128) / 2;
    let clustering = if triples == 0 { 0.0 } else { g.triangle_sum() as f64 / triples as f64 };
    let assortativity = if e == 0 {
        f64::NAN
    } else {
        // r = (S/M - (Σd²/2M)²) / (Σd³/2M - (Σd²/2M)²); scaled by (2M)² to stay in integers
        let two_m = 2 * e as u128;
        let num = 4 * e as i128 * m.sum_edge_product as i128 - (m.sum_d2 * m.sum_d2) as i128;
        let den = (two_m * m.sum_d3) as i128 - (m.sum_d2 * m.sum_d2) as i128;
        if den == 0 {
            f64::NAN
        } else {
            num as f64 / den as f64
        }
    };
    StatsSnapshot {
        n_nodes: n,
        n_edges: e,
        d1_fraction: frac(1),
        d2_fraction: frac(2),
        max_degree: g.max_degree(),
        mean_sq_degree: if n == 0 { 0.0 } else { m.sum_d2 as f64 / n as f64 },
        clustering,
        assortativity,
    }
}

/// Statistics of `g`, computed from scratch in O(N + E).
pub fn snapshot(g: &EvolvingGraph) -> StatsSnapshot {
    let mut m = Moments::default();
    for v in g.nodes() {
        let d = g.degree(v) as u128;
        m.sum_d2 += d * d;
        m.sum_d3 += d * d * d;
        for &u in g.neighbors(v) {
            if u > v {
                m.sum_edge_product += d * g.degree(u) as u128;
            }
        }
    }
    assemble(g, &m)
}

/// Keeps the degree moments of a growing graph up to date, so a snapshot
/// costs O(1) beyond the graph's own counters.
#[derive(Debug, Clone)]
pub struct StatsTracker {
    moments: Moments,
}

impl StatsTracker {
    pub fn new(g: &EvolvingGraph) -> Self {
        let mut m = Moments::default();
        for v in g.nodes() {
            let d = g.degree(v) as u128;
            m.sum_d2 += d * d;
            m.sum_d3 += d * d * d;
            for &u in g.neighbors(v) {
                if u > v {
                    m.sum_edge_product += d * g.degree(u) as u128;
                }
            }
        }
        StatsTracker { moments: m }
    }

    /// Must be called after `g.add_edge` returned `delta`.
    pub fn on_edge(&mut self, g: &EvolvingGraph, delta: &EdgeDelta) {
        let m = &mut self.moments;
        for (x, other) in [(delta.a, delta.b), (delta.b, delta.a)] {
            let d = g.degree(x) as u128;
            m.sum_d2 += 2 * d - 1;
            m.sum_d3 += 3 * d * d - 3 * d + 1;
            // every pre-existing edge of x gains one unit on x's side
            let old_neighbours: u128 =
                g.neighbors(x).iter().filter(|&&n| n != other).map(|&n| g.degree(n) as u128).sum();
            m.sum_edge_product += old_neighbours;
        }
        m.sum_edge_product += (g.degree(delta.a) * g.degree(delta.b)) as u128;
    }

    pub fn snapshot(&self, g: &EvolvingGraph) -> StatsSnapshot {
        assemble(g, &self.moments)
    }
}

/// Replays `events` from `g0`, taking a snapshot each time the edge count
/// first reaches a checkpoint. Checkpoints already met by `g0` are
/// reported before any event is applied.
pub fn trajectory(
    g0: &EvolvingGraph,
    events: &[EdgeEvent],
    checkpoints: &[usize],
) -> Result<Vec<(usize, StatsSnapshot)>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be strictly increasing".into()));
    }
    let mut g = g0.clone();
    let mut tracker = StatsTracker::new(&g);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let emit = |g: &EvolvingGraph, tracker: &StatsTracker, next: &mut usize, out: &mut Vec<_>| {
        while *next < checkpoints.len() && g.edge_count() >= checkpoints[*next] {
            out.push((g.edge_count(), tracker.snapshot(g)));
            *next += 1;
        }
    };
    emit(&g, &tracker, &mut next, &mut out);
    for ev in events {
        if next == checkpoints.len() {
            break;
        }
        ev.apply_with(&mut g, |g, d| tracker.on_edge(g, d))?;
        emit(&g, &tracker, &mut next, &mut out);
    }
    Ok(out)
}

/// `count` checkpoints evenly spaced up to `final_edges`.
pub fn even_checkpoints(start_edges: usize, final_edges: usize, count: usize) -> Vec<usize> {
    let span = final_edges.saturating_sub(start_edges);
    let mut out: Vec<usize> = (1..=count).map(|i| start_edges + span * i / count).collect();
    out.dedup();
    out.retain(|&c| c > start_edges || span == 0);
    out
}

pub fn trajectory_csv(rows: &[(usize, StatsSnapshot)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CSV_PREAMBLE}");
    let _ = writeln!(s, "{CSV_HEADER}");
    for (_, snap) in rows {
        let _ = writeln!(s, "{}", snap.to_csv_row());
    }
    s
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<StatsSnapshot>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == CSV_HEADER {
            continue;
        }
        out.push(
            StatsSnapshot::from_csv_row(line)
                .ok_or_else(|| Error::Parse { line: i + 1, reason: format!("expected {CSV_HEADER}") })?,
        );
    }
    Ok(out)
}

/// Long-form table `source,edges,statistic,value` for several labelled
/// trajectories, grouped by statistic and aligned on edge count.
pub fn long_form(sources: &[(String, Vec<StatsSnapshot>)]) -> String {
    let mut rows: Vec<(usize, usize, usize, String)> = Vec::new();
    for (si, (label, snaps)) in sources.iter().enumerate() {
        for snap in snaps {
            for (k, (name, value)) in snap.statistics().into_iter().enumerate() {
                rows.push((k, snap.n_edges, si, format!("{label},{},{name},{value}", snap.n_edges)));
            }
        }
    }
    rows.sort_by_key(|r| (r.0, r.1, r.2));
    let mut s = String::from("source,edges,statistic,value\n");
    for (_, _, _, row) in rows {
        s.push_str(&row);
        s.push('\n');
    }
    s
}
