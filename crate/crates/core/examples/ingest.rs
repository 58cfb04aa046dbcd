//! Turn a raw timestamped edge list into a canonical event file.
//!
//! ```text
//! cargo run --example ingest -- [path/to/edges3.txt]
//! ```

use netevo::ingest::{ingest, IngestConfig, RawFormat};

fn main() -> netevo::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/delayed_edges3.txt").to_string());
    let text = std::fs::read_to_string(&path)?;
    let out = ingest(&text, RawFormat::Edges3, &IngestConfig::default())?;
    eprintln!("{}", out.summary);
    for r in &out.ordered.residual {
        eprintln!("never connected: line {}", r.line);
    }
    print!("{}", out.file.to_text());
    Ok(())
}
