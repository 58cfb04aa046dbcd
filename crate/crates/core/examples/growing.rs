//! Grow artificial networks from an observed one and compare statistics.
//!
//! The observed stream is itself synthetic here. Replaying its skeleton
//! under the fitted model and under plain degree attachment shows which one
//! tracks the observed clustering.
//!
//! ```text
//! cargo run --release --example growing
//! ```

use netevo::events::build_graph;
use netevo::generator::{grow, CountDistribution, OuterModel};
use netevo::likelihood::SpecPair;
use netevo::stats::{even_checkpoints, long_form, trajectory};
use netevo::EvolvingGraph;

fn main() -> netevo::Result<()> {
    let internal = CountDistribution::new([(0, 0.6), (1, 0.4)].into_iter().collect())?;
    let outer = OuterModel::empirical(CountDistribution::point(2), internal)?;
    let observed_spec = SpecPair::new("0.7*degree + 0.3*null".parse()?, "0.5*triangle + 0.5*degree".parse()?);
    let observed = grow(&EvolvingGraph::with_root(), &outer, &observed_spec, 5000, 11)?.events;

    let warm = observed.len() / 20;
    let g0 = build_graph(&observed[..warm])?;
    let replay = OuterModel::replay_from(&observed[warm..]);
    let checkpoints = even_checkpoints(g0.edge_count(), 5000, 5);

    let mut sources = vec![("observed".to_string(), trajectory(&EvolvingGraph::with_root(), &observed, &checkpoints)?)];
    for (label, specs) in [("same-model", observed_spec.clone()), ("degree-only", SpecPair::same("degree".parse()?))] {
        let grown = grow(&g0, &replay, &specs, 5000, 12)?;
        let mut events = observed[..warm].to_vec();
        events.extend(grown.events);
        sources.push((label.to_string(), trajectory(&EvolvingGraph::with_root(), &events, &checkpoints)?));
    }
    let sources: Vec<_> =
        sources.into_iter().map(|(l, rows)| (l, rows.into_iter().map(|(_, s)| s).collect())).collect();
    for line in long_form(&sources).lines().filter(|l| l.contains("clustering") || l.starts_with("source")) {
        println!("{line}");
    }
    Ok(())
}
