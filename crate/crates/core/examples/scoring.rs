//! Score a few candidate mixtures against one stream and rank them.
//!
//! ```text
//! cargo run --example scoring
//! ```

use netevo::generator::{grow, CountDistribution, OuterModel};
use netevo::likelihood::{compare, score_many, ScoreOptions, SpecPair};
use netevo::{EvolvingGraph, ModelSpec};

fn main() -> netevo::Result<()> {
    // A stream with a known answer: 2000 arrivals, each linking to one node
    // picked 80% by degree and 20% uniformly.
    let truth: ModelSpec = "0.8*degree + 0.2*null".parse()?;
    let outer = OuterModel::empirical(CountDistribution::point(1), CountDistribution::point(0))?;
    let g0 = EvolvingGraph::with_root();
    let events = grow(&g0, &outer, &SpecPair::same(truth), 2000, 1)?.events;

    let candidates: Vec<SpecPair> = ["null", "degree", "0.8*degree + 0.2*null", "pfp(0.1)", "recent(5)"]
        .iter()
        .map(|s| s.parse().map(SpecPair::same))
        .collect::<netevo::Result<_>>()?;
    let reports = score_many(&candidates, &g0, &events, ScoreOptions::default())?;
    for r in &reports {
        println!("{:<28} logL {:>12.3}  c0 {:.4}", r.spec_new, r.log_likelihood, r.c0);
    }
    let ranking = compare(&reports)?;
    println!("best: {}", reports[ranking.order[0]].spec_new);
    Ok(())
}
