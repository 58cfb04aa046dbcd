//! Edge-event streams and their canonical text format.
//!
//! A stream starts from the single root node 0. `N t1 t2 ...` adds the next
//! node and connects it to the listed existing targets in order; `I a b`
//! adds an edge between two existing nodes. Lines starting with `#` are
//! comments and are kept as the file header.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{EdgeDelta, EvolvingGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    NewNode { targets: Vec<NodeId> },
    InternalEdge { a: NodeId, b: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeEvent {
    pub kind: EventKind,
    pub original_index: usize,
}

impl EdgeEvent {
    pub fn new_node(targets: Vec<NodeId>, original_index: usize) -> Self {
        EdgeEvent { kind: EventKind::NewNode { targets }, original_index }
    }

    pub fn internal(a: NodeId, b: NodeId, original_index: usize) -> Self {
        EdgeEvent { kind: EventKind::InternalEdge { a, b }, original_index }
    }

    /// Number of node choices the event represents.
    pub fn choices(&self) -> usize {
        match &self.kind {
            EventKind::NewNode { targets } => targets.len(),
            EventKind::InternalEdge { .. } => 1,
        }
    }

    pub fn edges(&self) -> usize {
        match &self.kind {
            EventKind::NewNode { targets } => targets.len(),
            EventKind::InternalEdge { .. } => 1,
        }
    }

    /// Checks the event can be applied to `g` without modifying it.
    pub fn validate(&self, g: &EvolvingGraph) -> Result<()> {
        let idx = self.original_index;
        match &self.kind {
            EventKind::NewNode { targets } => {
                if targets.is_empty() {
                    return Err(Error::malformed(idx, "new node without targets"));
                }
                for (i, t) in targets.iter().enumerate() {
                    if !g.contains(*t) {
                        return Err(Error::malformed(idx, format!("unknown target {t}")));
                    }
                    if targets[..i].contains(t) {
                        return Err(Error::malformed(idx, format!("repeated target {t}")));
                    }
                }
            }
            &EventKind::InternalEdge { a, b } => {
                if !g.contains(a) || !g.contains(b) {
                    return Err(Error::malformed(idx, format!("unknown endpoint in {a}-{b}")));
                }
                if a == b {
                    return Err(Error::malformed(idx, format!("self-loop on {a}")));
                }
                if g.has_edge(a, b) {
                    return Err(Error::malformed(idx, format!("edge {a}-{b} already present")));
                }
            }
        }
        Ok(())
    }

    /// Validates and applies the event, recording every chosen node in the
    /// selection log. `on_edge` sees the graph after each inserted edge.
    pub fn apply_with(&self, g: &mut EvolvingGraph, mut on_edge: impl FnMut(&EvolvingGraph, &EdgeDelta)) -> Result<()> {
        self.validate(g)?;
        match &self.kind {
            EventKind::NewNode { targets } => {
                let v = g.add_node();
                for &t in targets {
                    let d = g.add_edge(v, t)?;
                    on_edge(g, &d);
                }
                for &t in targets {
                    g.record_selection(t)?;
                }
            }
            &EventKind::InternalEdge { a, b } => {
                let d = g.add_edge(a, b)?;
                on_edge(g, &d);
                g.record_selection(a)?;
                g.record_selection(b)?;
            }
        }
        Ok(())
    }

    pub fn apply(&self, g: &mut EvolvingGraph) -> Result<()> {
        self.apply_with(g, |_, _| {})
    }
}

/// Applies `events` in order on top of `g`.
pub fn replay(g: &mut EvolvingGraph, events: &[EdgeEvent]) -> Result<()> {
    events.iter().try_for_each(|ev| ev.apply(g))
}

/// Graph obtained by replaying `events` from the root node.
pub fn build_graph(events: &[EdgeEvent]) -> Result<EvolvingGraph> {
    let mut g = EvolvingGraph::with_root();
    replay(&mut g, events)?;
    Ok(g)
}

/// Renumbers `original_index` to positions `0..n`.
pub fn reindex(events: &mut [EdgeEvent]) {
    for (i, ev) in events.iter_mut().enumerate() {
        ev.original_index = i;
    }
}

pub fn format_event(ev: &EdgeEvent) -> String {
    let mut s = String::new();
    match &ev.kind {
        EventKind::NewNode { targets } => {
            s.push('N');
            for t in targets {
                let _ = write!(s, " {t}");
            }
        }
        EventKind::InternalEdge { a, b } => {
            let _ = write!(s, "I {a} {b}");
        }
    }
    s
}

/// Hex digest identifying a starting graph plus event stream.
pub fn stream_hash(g0: &EvolvingGraph, events: &[EdgeEvent]) -> String {
    let mut h = Sha256::new();
    h.update(g0.fingerprint().as_bytes());
    for ev in events {
        h.update(format_event(ev).as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

/// Contents of a canonical event file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventFile {
    /// Leading comment lines, without the `#`.
    pub header: Vec<String>,
    pub events: Vec<EdgeEvent>,
}

impl EventFile {
    pub fn new(header: Vec<String>, events: Vec<EdgeEvent>) -> Self {
        EventFile { header, events }
    }

    /// Value of a `# key=value` header entry.
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find_map(|line| {
            line.split_whitespace().find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        })
    }

    pub fn parse(input: &str) -> Result<Self> {
        let mut file = EventFile::default();
        for (lineno, raw) in input.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if file.events.is_empty() {
                    file.header.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                }
                continue;
            }
            let mut fields = line.split_whitespace();
            let tag = fields.next().unwrap_or_default();
            let ids: Vec<NodeId> = fields
                .map(|f| {
                    f.parse::<u32>()
                        .map(NodeId)
                        .map_err(|_| Error::Parse { line: lineno, reason: format!("bad node id `{f}`") })
                })
                .collect::<Result<_>>()?;
            let index = file.events.len();
            let ev = match tag {
                "N" if !ids.is_empty() => EdgeEvent::new_node(ids, index),
                "I" if ids.len() == 2 => EdgeEvent::internal(ids[0], ids[1], index),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        reason: format!("expected `N <targets..>` or `I <a> <b>`, got `{line}`"),
                    })
                }
            };
            file.events.push(ev);
        }
        Ok(file)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for h in &self.header {
            if h.is_empty() {
                out.push_str("#\n");
            } else {
                let _ = writeln!(out, "# {h}");
            }
        }
        for ev in &self.events {
            out.push_str(&format_event(ev));
            out.push('\n');
        }
        out
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
