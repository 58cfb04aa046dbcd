//! Raw edge lists and co-authorship records to canonical event streams.
//!
//! Edges are introduced in order of first sighting. An edge with neither
//! endpoint in the growing graph is held back until one of them appears,
//! so the graph stays connected throughout.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::events::{build_graph, EdgeEvent, EventFile, EventKind};
use crate::graph::{EvolvingGraph, NodeId};

/// Raw input layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFormat {
    /// `src dst`
    Edges2,
    /// `src dst first_seen`
    Edges3,
    /// `src dst first_seen last_seen`
    Edges4,
    /// `paper_id|timestamp|author1;author2;...`
    Coauth,
}

impl FromStr for RawFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges2" => Ok(RawFormat::Edges2),
            "edges3" => Ok(RawFormat::Edges3),
            "edges4" => Ok(RawFormat::Edges4),
            "coauth" => Ok(RawFormat::Coauth),
            _ => Err(Error::Config(format!("unknown raw format `{s}`"))),
        }
    }
}

impl fmt::Display for RawFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RawFormat::Edges2 => "edges2",
            RawFormat::Edges3 => "edges3",
            RawFormat::Edges4 => "edges4",
            RawFormat::Coauth => "coauth",
        })
    }
}

/// One observed edge. Endpoints index into the label table of the
/// [`RawStream`] that owns the record.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEdgeRecord {
    pub src: usize,
    pub dst: usize,
    pub first_seen: Option<f64>,
    pub last_seen: Option<f64>,
    /// 1-based source line, 0 when synthesised.
    pub line: usize,
}

impl RawEdgeRecord {
    fn key(&self) -> (usize, usize) {
        (self.src.min(self.dst), self.src.max(self.dst))
    }
}

/// Records plus the external label of every dense id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawStream {
    pub records: Vec<RawEdgeRecord>,
    pub labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl RawStream {
    /// Dense id of `label`, assigned on first appearance.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    /// Fraction of events assigned to the starting graph.
    pub warmup: f64,
    /// Drop records last seen before this time.
    pub final_window_cutoff: Option<f64>,
    /// Hold back edges that would disconnect the graph; when off they are
    /// reported as residual instead.
    pub delay_disconnected: bool,
    /// Keep only the first sighting of each node pair.
    pub dedupe: bool,
    pub max_clique: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { warmup: 0.05, final_window_cutoff: None, delay_disconnected: true, dedupe: true, max_clique: 59 }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(Error::Config(format!("warmup {} outside [0, 1)", self.warmup)));
        }
        Ok(())
    }
}

fn parse_time(field: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|t| t.is_finite())
        .ok_or_else(|| Error::Parse { line, reason: format!("bad timestamp `{field}`") })
}

/// Parses an edge list in one of the `edges*` layouts. `#` starts a
/// comment. With `dedupe`, only the first sighting of a pair is kept.
pub fn parse_edge_stream(text: &str, format: RawFormat, dedupe: bool) -> Result<RawStream> {
    let columns = match format {
        RawFormat::Edges2 => 2,
        RawFormat::Edges3 => 3,
        RawFormat::Edges4 => 4,
        RawFormat::Coauth => return Err(Error::Config("co-authorship input goes through parse_coauth".into())),
    };
    let mut stream = RawStream::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != columns {
            return Err(Error::Parse {
                line,
                reason: format!("expected {columns} columns for {format}, found {}", fields.len()),
            });
        }
        if fields[0] == fields[1] {
            return Err(Error::SelfLoopRecord { line });
        }
        let first_seen = fields.get(2).map(|f| parse_time(f, line)).transpose()?;
        let last_seen = fields.get(3).map(|f| parse_time(f, line)).transpose()?;
        let src = stream.intern(fields[0]);
        let dst = stream.intern(fields[1]);
        stream.records.push(RawEdgeRecord { src, dst, first_seen, last_seen, line });
    }
    if dedupe {
        dedupe_records(&mut stream.records);
    }
    Ok(stream)
}

/// Keeps the earliest sighting of each unordered pair (file order breaks
/// ties), widening its `last_seen` to the latest sighting. Returns the
/// number of records removed.
pub fn dedupe_records(records: &mut Vec<RawEdgeRecord>) -> usize {
    let mut first: HashMap<(usize, usize), usize> = HashMap::new();
    let mut keep = vec![true; records.len()];
    for i in 0..records.len() {
        let key = records[i].key();
        match first.get(&key) {
            None => {
                first.insert(key, i);
            }
            Some(&j) => {
                let earlier = match (records[i].first_seen, records[j].first_seen) {
                    (Some(a), Some(b)) => a < b,
                    _ => false,
                };
                let last = match (records[i].last_seen, records[j].last_seen) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                if earlier {
                    keep[j] = false;
                    records[i].last_seen = last;
                    first.insert(key, i);
                } else {
                    keep[i] = false;
                    records[j].last_seen = last;
                }
            }
        }
    }
    let before = records.len();
    let mut it = keep.iter();
    records.retain(|_| *it.next().unwrap());
    before - records.len()
}

/// Drops records last seen before `cutoff`; records without a last
/// sighting are kept. Returns the number removed.
pub fn apply_cutoff(records: &mut Vec<RawEdgeRecord>, cutoff: f64) -> usize {
    let before = records.len();
    records.retain(|r| r.last_seen.is_none_or(|t| t >= cutoff));
    before - records.len()
}

/// Result of ordering a record stream into events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ordered {
    pub events: Vec<EdgeEvent>,
    /// External label of each canonical node id.
    pub node_labels: Vec<String>,
    /// Records that could not be introduced without disconnecting the graph.
    pub residual: Vec<RawEdgeRecord>,
    /// Repeated pairs skipped because the edge was already present.
    pub duplicates: usize,
}

/// Orders records by first sighting (stable) and emits events, delaying
/// edges with no endpoint in the graph until one appears. After each
/// introduced edge the earliest-buffered edge that has become applicable
/// goes next. Consecutive edges of a just-arrived node with equal (or no)
/// timestamps form one new-node event.
pub fn order_and_delay(stream: &RawStream, config: &IngestConfig) -> Ordered {
    let mut records: Vec<&RawEdgeRecord> = stream.records.iter().collect();
    let timed = records.iter().filter(|r| r.first_seen.is_some()).count();
    if timed == records.len() {
        records.sort_by(|a, b| a.first_seen.partial_cmp(&b.first_seen).expect("finite timestamps"));
    } else if timed > 0 {
        log::warn!("{timed} of {} records carry timestamps; keeping file order", records.len());
    }

    let mut b = Builder { canonical: vec![None; stream.node_count()], ..Builder::default() };
    // buffered records, by buffer position
    let mut pending: Vec<Option<&RawEdgeRecord>> = Vec::new();
    let mut waiting: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut ready: BTreeSet<usize> = BTreeSet::new();
    let mut residual = Vec::new();

    for r in records {
        if b.next_id == 0 || b.is_present(r.src) || b.is_present(r.dst) {
            let added = b.apply(r);
            release(added, &mut waiting, &mut ready);
            while let Some(pos) = ready.pop_first() {
                if let Some(r) = pending[pos].take() {
                    let added = b.apply(r);
                    release(added, &mut waiting, &mut ready);
                }
            }
        } else if config.delay_disconnected {
            let pos = pending.len();
            pending.push(Some(r));
            waiting.entry(r.src).or_default().push(pos);
            waiting.entry(r.dst).or_default().push(pos);
        } else {
            residual.push(r.clone());
        }
    }
    residual.extend(pending.into_iter().flatten().cloned());
    residual.sort_by_key(|r| r.line);
    if !residual.is_empty() {
        log::warn!("{} edges never connect to the main component", residual.len());
    }
    let node_labels = b.order.iter().map(|&i| stream.labels[i].clone()).collect();
    Ordered { events: b.events, node_labels, residual, duplicates: b.duplicates }
}

fn release(added: Vec<usize>, waiting: &mut HashMap<usize, Vec<usize>>, ready: &mut BTreeSet<usize>) {
    for raw in added {
        if let Some(list) = waiting.remove(&raw) {
            ready.extend(list);
        }
    }
}

#[derive(Default)]
struct Builder {
    /// Canonical id of each raw id, once introduced.
    canonical: Vec<Option<NodeId>>,
    /// Raw id of each canonical id.
    order: Vec<usize>,
    next_id: u32,
    edges: HashSet<(u32, u32)>,
    events: Vec<EdgeEvent>,
    last_time: Option<f64>,
    duplicates: usize,
}

impl Builder {
    fn is_present(&self, raw: usize) -> bool {
        self.canonical[raw].is_some()
    }

    fn introduce(&mut self, raw: usize) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.canonical[raw] = Some(id);
        self.order.push(raw);
        id
    }

    /// Introduces the record's edge; returns the raw ids of nodes that
    /// entered the graph.
    fn apply(&mut self, r: &RawEdgeRecord) -> Vec<usize> {
        let mut added = Vec::new();
        if self.next_id == 0 {
            self.introduce(r.src);
            added.push(r.src);
        }
        let (su, sv) = (self.canonical[r.src], self.canonical[r.dst]);
        let index = self.events.len();
        match (su, sv) {
            (Some(u), Some(v)) => {
                let key = (u.0.min(v.0), u.0.max(v.0));
                if !self.edges.insert(key) {
                    self.duplicates += 1;
                    return added;
                }
                let newest = NodeId(self.next_id - 1);
                let same_time = r.first_seen == self.last_time;
                if let Some(EdgeEvent { kind: EventKind::NewNode { targets }, .. }) = self.events.last_mut() {
                    if same_time && (u == newest || v == newest) {
                        targets.push(if u == newest { v } else { u });
                        return added;
                    }
                }
                self.events.push(EdgeEvent::internal(u, v, index));
            }
            (Some(existing), None) | (None, Some(existing)) => {
                let raw = if su.is_none() { r.src } else { r.dst };
                let v = self.introduce(raw);
                self.edges.insert((existing.0.min(v.0), existing.0.max(v.0)));
                self.events.push(EdgeEvent::new_node(vec![existing], index));
                added.push(raw);
            }
            (None, None) => unreachable!("records are applied only when an endpoint is present"),
        }
        self.last_time = r.first_seen;
        added
    }
}

/// Splits a stream into the starting graph and the scored tail. At least
/// one event (the seed edge) always goes to the starting graph.
pub fn split_warmup(events: &[EdgeEvent], warmup: f64) -> Result<(EvolvingGraph, Vec<EdgeEvent>)> {
    if !(0.0..1.0).contains(&warmup) {
        return Err(Error::Config(format!("warmup {warmup} outside [0, 1)")));
    }
    let warm = warmup_len(events.len(), warmup);
    if warm >= events.len() {
        return Err(Error::WarmupTooLarge { warm, total: events.len() });
    }
    let g0 = build_graph(&events[..warm])?;
    Ok((g0, events[warm..].to_vec()))
}

/// Number of warm-up events: `max(1, floor(warmup * total))`.
pub fn warmup_len(total: usize, warmup: f64) -> usize {
    ((warmup * total as f64).floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paper {
    pub id: String,
    pub timestamp: f64,
    pub authors: Vec<String>,
}

/// Reduces an author name to first initial and surname, lower case:
/// `"Smith, John A."` and `"John A. Smith"` both become `"j smith"`.
pub fn normalize_author(name: &str) -> String {
    let cleaned = name.replace('.', " ");
    let (given, surname) = match cleaned.split_once(',') {
        Some((s, g)) => (g.trim().to_string(), s.trim().to_string()),
        None => {
            let mut parts: Vec<&str> = cleaned.split_whitespace().collect();
            let surname = parts.pop().unwrap_or_default().to_string();
            (parts.join(" "), surname)
        }
    };
    let surname = surname.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    match given.chars().find(|c| c.is_alphabetic()) {
        Some(initial) => format!("{} {surname}", initial.to_lowercase()),
        None => surname,
    }
}

/// Parses `paper_id|timestamp|author1;author2;...` lines.
pub fn parse_coauth(text: &str) -> Result<Vec<Paper>> {
    let mut papers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split('|').collect();
        let [id, ts, authors] = fields[..] else {
            return Err(Error::Parse { line, reason: "expected paper_id|timestamp|authors".into() });
        };
        let authors: Vec<String> =
            authors.split(';').map(str::trim).filter(|a| !a.is_empty()).map(str::to_string).collect();
        if authors.is_empty() {
            return Err(Error::Parse { line, reason: "paper without authors".into() });
        }
        papers.push(Paper { id: id.trim().to_string(), timestamp: parse_time(ts.trim(), line)?, authors });
    }
    Ok(papers)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoauthExpansion {
    /// Deduplicated author pairs.
    pub stream: RawStream,
    /// Pairs emitted before deduplication.
    pub pairs: usize,
    /// Ids of papers with more than `max_clique` authors.
    pub skipped: Vec<String>,
}

/// One edge per pair of co-authors, stamped with the paper's time. Papers
/// with more than `max_clique` distinct authors are skipped. Names are
/// normalised first; a pair seen on several papers keeps its earliest.
pub fn expand_coauthorship(papers: &[Paper], max_clique: usize) -> CoauthExpansion {
    let mut out = CoauthExpansion::default();
    for paper in papers {
        let mut authors: Vec<String> = Vec::with_capacity(paper.authors.len());
        for a in &paper.authors {
            let a = normalize_author(a);
            if !authors.contains(&a) {
                authors.push(a);
            }
        }
        if authors.len() > max_clique {
            log::info!("skipping paper {} with {} authors", paper.id, authors.len());
            out.skipped.push(paper.id.clone());
            continue;
        }
        let ids: Vec<usize> = authors.iter().map(|a| out.stream.intern(a)).collect();
        for (i, &x) in ids.iter().enumerate() {
            for &y in &ids[i + 1..] {
                out.stream.records.push(RawEdgeRecord {
                    src: x,
                    dst: y,
                    first_seen: Some(paper.timestamp),
                    last_seen: Some(paper.timestamp),
                    line: 0,
                });
                out.pairs += 1;
            }
        }
    }
    dedupe_records(&mut out.stream.records);
    out
}

/// Output of the full pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutput {
    pub file: EventFile,
    pub ordered: Ordered,
    pub warmup_events: usize,
    pub summary: IngestSummary,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestSummary {
    pub records: usize,
    pub removed_duplicates: usize,
    pub removed_by_cutoff: usize,
    pub skipped_papers: usize,
    pub residual: usize,
    pub events: usize,
    pub nodes: usize,
    pub edges: usize,
}

impl fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "records={} duplicates={} cutoff_removed={} skipped_papers={} residual={} events={} nodes={} edges={}",
            self.records,
            self.removed_duplicates,
            self.removed_by_cutoff,
            self.skipped_papers,
            self.residual,
            self.events,
            self.nodes,
            self.edges
        )
    }
}

/// Parses raw text and runs the whole pipeline, producing a canonical event
/// file whose header records the source digest, the settings and the
/// number of warm-up events.
pub fn ingest(text: &str, format: RawFormat, config: &IngestConfig) -> Result<IngestOutput> {
    config.validate()?;
    let mut summary = IngestSummary::default();
    let mut stream = match format {
        RawFormat::Coauth => {
            let exp = expand_coauthorship(&parse_coauth(text)?, config.max_clique);
            summary.records = exp.pairs;
            summary.removed_duplicates = exp.pairs - exp.stream.records.len();
            summary.skipped_papers = exp.skipped.len();
            exp.stream
        }
        _ => {
            let mut s = parse_edge_stream(text, format, false)?;
            summary.records = s.records.len();
            if config.dedupe {
                summary.removed_duplicates = dedupe_records(&mut s.records);
            }
            s
        }
    };
    if let Some(cutoff) = config.final_window_cutoff {
        summary.removed_by_cutoff = apply_cutoff(&mut stream.records, cutoff);
    }
    let ordered = order_and_delay(&stream, config);
    summary.removed_duplicates += ordered.duplicates;
    summary.residual = ordered.residual.len();
    summary.events = ordered.events.len();
    if ordered.events.is_empty() {
        return Err(Error::EmptyStream);
    }
    let g = build_graph(&ordered.events)?;
    summary.nodes = g.node_count();
    summary.edges = g.edge_count();
    let warmup_events = warmup_len(ordered.events.len(), config.warmup);
    if warmup_events >= ordered.events.len() {
        return Err(Error::WarmupTooLarge { warm: warmup_events, total: ordered.events.len() });
    }
    let digest = hex::encode(&Sha256::digest(text.as_bytes())[..8]);
    let cutoff = config.final_window_cutoff.map_or("none".to_string(), |c| c.to_string());
    let header = vec![
        "netevo events v1".to_string(),
        format!("source_sha256={digest} format={format}"),
        format!(
            "warmup={} cutoff={cutoff} delay={} dedupe={} max_clique={}",
            config.warmup, config.delay_disconnected, config.dedupe, config.max_clique
        ),
        format!("warmup_events={warmup_events}"),
        summary.to_string(),
    ];
    let file = EventFile::new(header, ordered.events.clone());
    Ok(IngestOutput { file, ordered, warmup_events, summary })
}
