use std::path::PathBuf;

use netevo::events::build_graph;
use netevo::ingest::{ingest, normalize_author, parse_coauth, IngestConfig, RawFormat};
use netevo::EventFile;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

fn position(labels: &[String], label: &str) -> usize {
    labels.iter().position(|l| l == label).unwrap_or_else(|| panic!("{label} missing"))
}

#[test]
fn every_record_is_accounted_for() {
    let cutoff = IngestConfig { final_window_cutoff: Some(5000.0), ..Default::default() };
    for (name, format, cfg) in [
        ("as_edges2.txt", RawFormat::Edges2, IngestConfig::default()),
        ("as_edges3.txt", RawFormat::Edges3, IngestConfig::default()),
        ("as_edges4.txt", RawFormat::Edges4, cutoff),
        ("delayed_edges3.txt", RawFormat::Edges3, IngestConfig::default()),
    ] {
        let s = ingest(&fixture(name), format, &cfg).unwrap().summary;
        assert_eq!(s.edges, s.records - s.removed_duplicates - s.removed_by_cutoff - s.residual, "{name}: {s}");
    }
}

#[test]
fn cutoff_drops_stale_records() {
    let text = fixture("as_edges4.txt");
    let all = ingest(&text, RawFormat::Edges4, &IngestConfig::default()).unwrap();
    let cut =
        ingest(&text, RawFormat::Edges4, &IngestConfig { final_window_cutoff: Some(5000.0), ..Default::default() })
            .unwrap();
    assert_eq!(all.summary.removed_by_cutoff, 0);
    assert!(cut.summary.removed_by_cutoff > 0);
    assert_eq!(cut.summary.edges + cut.summary.removed_by_cutoff, all.summary.edges);
}

#[test]
fn islands_wait_for_their_bridge() {
    let out = ingest(&fixture("delayed_edges3.txt"), RawFormat::Edges3, &IngestConfig::default()).unwrap();
    let labels = &out.ordered.node_labels;
    let bridge = position(labels, "R1020");
    for x in ["X1", "X2", "X3", "X4"] {
        assert!(position(labels, x) > bridge, "{x} introduced before R1020");
    }
    assert!(labels.iter().all(|l| !l.starts_with('Z')));
    let residual: Vec<usize> = out.ordered.residual.iter().map(|r| r.line).collect();
    assert_eq!(residual, vec![36, 37]);

    let strict = IngestConfig { delay_disconnected: false, ..Default::default() };
    let out = ingest(&fixture("delayed_edges3.txt"), RawFormat::Edges3, &strict).unwrap();
    assert!(out.ordered.residual.len() > 2);
    // only the bridge endpoint makes it in
    let xs: Vec<&String> = out.ordered.node_labels.iter().filter(|l| l.starts_with('X')).collect();
    assert_eq!(xs, vec!["X4"]);
}

#[test]
fn output_parses_back_with_its_header() {
    let out = ingest(&fixture("as_edges2.txt"), RawFormat::Edges2, &IngestConfig::default()).unwrap();
    let back = EventFile::parse(&out.file.to_text()).unwrap();
    assert_eq!(back, out.file);
    assert_eq!(back.header_value("format"), Some("edges2"));
    assert_eq!(back.header_value("warmup_events"), Some(out.warmup_events.to_string().as_str()));
    assert_eq!(out.warmup_events, (back.events.len() as f64 * 0.05).floor().max(1.0) as usize);
    assert_eq!(build_graph(&back.events).unwrap().node_count(), out.summary.nodes);
}

#[test]
fn author_name_styles_merge() {
    let papers = parse_coauth(&fixture("coauth.txt")).unwrap();
    assert_eq!(normalize_author("Adams, Alan"), normalize_author("A. Adams"));
    let out = ingest(&fixture("coauth.txt"), RawFormat::Coauth, &IngestConfig::default()).unwrap();
    let labels = &out.ordered.node_labels;
    let mut unique = labels.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), labels.len());
    assert!(labels.iter().all(|l| l.chars().all(|c| c.is_lowercase() || c == ' ')));
    assert_eq!(out.summary.skipped_papers, 1);
    assert!(papers.iter().any(|p| p.authors.len() == 60));
}
