//! Expand a paper list into a co-authorship stream and score it.
//!
//! ```text
//! cargo run --example coauthorship -- [path/to/papers.txt]
//! ```
//!
//! Input lines look like `id|year|Author One;Author Two`.

use netevo::events::build_graph;
use netevo::ingest::{expand_coauthorship, ingest, parse_coauth, IngestConfig, RawFormat};
use netevo::likelihood::{score_many, ScoreOptions, SpecPair};

fn main() -> netevo::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/coauth.txt").to_string());
    let text = std::fs::read_to_string(&path)?;
    let config = IngestConfig::default();

    let papers = parse_coauth(&text)?;
    let expansion = expand_coauthorship(&papers, config.max_clique);
    println!("{} papers, {} author pairs, skipped {:?}", papers.len(), expansion.pairs, expansion.skipped);

    let out = ingest(&text, RawFormat::Coauth, &config)?;
    let events = &out.file.events;
    let g0 = build_graph(&events[..out.warmup_events])?;
    let specs: Vec<SpecPair> = ["null", "degree", "0.5*degree + 0.5*null", "0.3*triangle + 0.3*recent(4) + 0.4*null"]
        .iter()
        .map(|s| s.parse().map(SpecPair::same))
        .collect::<netevo::Result<_>>()?;
    for r in score_many(&specs, &g0, &events[out.warmup_events..], ScoreOptions::default())? {
        println!("{:<40} c0 {:.4}", r.spec_new, r.c0);
    }
    Ok(())
}
